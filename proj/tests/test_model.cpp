#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include "cbp/model.hpp"

using cbp::Vec;

TEST_CASE("rank_permutation on distinct values") {
    auto p = cbp::rank_permutation({3.0, 1.0, 2.0});
    CHECK(p.rank_to_name == std::vector<int>{2, 3, 1});
    CHECK(p.name_of_rank(1) == 2);
}

TEST_CASE("rank_permutation ties go to the lower name") {
    CHECK(cbp::rank_permutation({1.0, 1.0}).rank_to_name == std::vector<int>{1, 2});
    CHECK(cbp::rank_permutation({2.0, 1.0, 1.0}).rank_to_name == std::vector<int>{2, 3, 1});
}

TEST_CASE("rank_permutation rejects bad input") {
    CHECK_THROWS_AS(cbp::rank_permutation({}), std::invalid_argument);
    CHECK_THROWS_AS(cbp::rank_permutation({1.0, std::nan("")}), std::invalid_argument);
    CHECK_THROWS_AS(cbp::rank_permutation({1.0, std::numeric_limits<double>::infinity()}),
                    std::invalid_argument);
}

TEST_CASE("ranked_values") {
    auto state = cbp::ranked_values({3.0, 1.0, 2.0});
    CHECK(state.y == Vec{1.0, 2.0, 3.0});

    auto tied = cbp::ranked_values({0.0, 0.0, 0.0});
    CHECK(tied.y == Vec{0.0, 0.0, 0.0});
    CHECK(tied.perm.rank_to_name == std::vector<int>{1, 2, 3});

    CHECK(cbp::ranked_values({-1.5, 2.0}).y == Vec{-1.5, 2.0});
}

TEST_CASE("gaps") {
    CHECK(cbp::gaps(cbp::ranked_values({1.0, 2.0, 4.0})) == Vec{1.0, 2.0});
    CHECK(cbp::gaps(cbp::ranked_values({0.0, 0.0, 0.0})) == Vec{0.0, 0.0});
    CHECK(cbp::gaps(cbp::ranked_values({-1.0, -1.0, 5.0})) == Vec{0.0, 6.0});
    CHECK_THROWS_AS(cbp::gaps(cbp::ranked_values({1.0})), std::invalid_argument);
}

TEST_CASE("ranking agrees with a sort-by-(value,name) oracle, with ties") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> len(1, 8);
    std::uniform_int_distribution<int> coarse(-2, 2);  // forces ties
    std::uniform_real_distribution<double> fine(-10.0, 10.0);
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = len(rng);
        Vec x(n);
        const bool tie_heavy = trial % 2 == 0;
        for (auto& v : x) v = tie_heavy ? double(coarse(rng)) : fine(rng);

        std::vector<std::pair<double, int>> oracle;
        for (int i = 0; i < n; ++i) oracle.emplace_back(x[i], i + 1);
        std::sort(oracle.begin(), oracle.end());

        auto p = cbp::rank_permutation(x);
        for (int k = 0; k < n; ++k) REQUIRE(p.rank_to_name[k] == oracle[k].second);
    }
}

TEST_CASE("ranked values are invariant under input permutation; gaps nonnegative") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> fine(-5.0, 5.0);
    for (int trial = 0; trial < 500; ++trial) {
        Vec x(6);
        for (auto& v : x) v = fine(rng);
        Vec shuffled = x;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(cbp::ranked_values(x).y == cbp::ranked_values(shuffled).y);
        for (double z : cbp::gaps(cbp::ranked_values(x))) CHECK(z >= 0.0);
    }
}

TEST_CASE("validate_finite_spec") {
    cbp::FiniteSystemSpec good{2, {0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}};
    CHECK(cbp::validate_finite_spec(good).empty());

    cbp::FiniteSystemSpec bad_sigma{2, {0.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}};
    auto v = cbp::validate_finite_spec(bad_sigma);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == "sigma2[2] must be > 0");

    cbp::FiniteSystemSpec mismatch{2, {0.0, 0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}};
    CHECK_FALSE(cbp::validate_finite_spec(mismatch).empty());
}

static cbp::InfiniteSystemSpec tail_only_spec(cbp::InitFamily init) {
    cbp::InfiniteSystemSpec spec;
    spec.n0 = 1;
    spec.g_tail = 0.0;
    spec.sigma2_tail = 1.0;
    spec.init = std::move(init);
    return spec;
}

TEST_CASE("validate_infinite_spec: series condition per family") {
    cbp::InitFamily linear;  // x_i = i
    CHECK(cbp::validate_infinite_spec(tail_only_spec(linear)).empty());

    cbp::InitFamily slow;
    slow.kind = cbp::InitFamily::Kind::SqrtLog;  // x_i = sqrt(log(i+1))
    auto v = cbp::validate_infinite_spec(tail_only_spec(slow));
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("series condition") != std::string::npos);

    cbp::InitFamily power;
    power.kind = cbp::InitFamily::Kind::Power;
    power.c = 0.3;
    power.gamma = 0.5;
    CHECK(cbp::validate_infinite_spec(tail_only_spec(power)).empty());
}

TEST_CASE("validate_infinite_spec: tail structure and heads") {
    cbp::InfiniteSystemSpec spec = tail_only_spec(cbp::InitFamily{});
    spec.n0 = 3;
    spec.g_head = {0.5, 0.2};
    spec.sigma2_head = {1.2, 1.4};
    CHECK(cbp::validate_infinite_spec(spec).empty());

    spec.sigma2_head = {1.2};  // wrong length
    CHECK_FALSE(cbp::validate_infinite_spec(spec).empty());

    spec.sigma2_head = {1.2, -1.0};
    CHECK_FALSE(cbp::validate_infinite_spec(spec).empty());
}

TEST_CASE("explicit prefix family inherits the tail rule") {
    cbp::InitFamily fam;
    fam.kind = cbp::InitFamily::Kind::Explicit;
    fam.prefix = {0.0, 0.3, 0.9};
    auto tail = std::make_shared<cbp::InitFamily>();
    tail->a = 0.0;
    tail->b = 0.5;
    fam.tail = tail;
    CHECK(fam.series_condition_holds());
    CHECK(fam.position(2) == 0.3);
    CHECK(fam.position(10) == 5.0);

    cbp::InitFamily no_tail;
    no_tail.kind = cbp::InitFamily::Kind::Explicit;
    no_tail.prefix = {0.0};
    CHECK_FALSE(cbp::validate_infinite_spec(tail_only_spec(no_tail)).empty());
}

TEST_CASE("spec JSON round trip") {
    cbp::FiniteSystemSpec fin{3, {1.0, 0.0, -1.0}, {2.0, 1.0, 1.0}, {0.0, 0.5, 1.0}};
    nlohmann::json j = fin;
    auto back = j.get<cbp::FiniteSystemSpec>();
    CHECK(back.N == fin.N);
    CHECK(back.g == fin.g);
    CHECK(back.sigma2 == fin.sigma2);
    CHECK(back.x0 == fin.x0);

    cbp::InfiniteSystemSpec inf = tail_only_spec(cbp::InitFamily{});
    inf.n0 = 2;
    inf.g_head = {0.1};
    inf.sigma2_head = {1.5};
    nlohmann::json ji = inf;
    auto back_inf = ji.get<cbp::InfiniteSystemSpec>();
    CHECK(back_inf.n0 == 2);
    CHECK(back_inf.sigma2_head == Vec{1.5});
    CHECK(back_inf.init.kind == cbp::InitFamily::Kind::Linear);

    CHECK_THROWS(nlohmann::json{{"kind", "spiral"}}.get<cbp::InitFamily>());
}
