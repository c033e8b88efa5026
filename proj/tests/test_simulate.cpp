#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cbp/simulate.hpp"

using cbp::Vec;

namespace {

cbp::FiniteSystemSpec three_particle() {
    return {3, {1.0, 0.0, -1.0}, {2.0, 1.0, 1.0}, {-0.5, 0.0, 0.5}};
}

// two-sample Kolmogorov-Smirnov at the 1% level
bool ks_same_distribution(Vec a, Vec b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i; else ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    const double critical = 1.628 * std::sqrt((n + m) / (n * m));
    return d <= critical;
}

}  // namespace

TEST_CASE("step: zero noise moves each particle by its rank drift") {
    Vec x{0.0, 1.0, 2.0};  // already sorted, identity permutation
    Vec g{0.5, -0.25, 1.0};
    auto out = cbp::step(x, 0.1, {0, 0, 0}, g, {1, 1, 1});
    CHECK(out[0] == doctest::Approx(0.05));
    CHECK(out[1] == doctest::Approx(1.0 - 0.025));
    CHECK(out[2] == doctest::Approx(2.1));
}

TEST_CASE("step: tie gives the lower name the lower-rank coefficients") {
    Vec g{1.0, 2.0};
    Vec sigma2{4.0, 9.0};
    const double dt = 0.01;
    auto out = cbp::step({0.0, 0.0}, dt, {1.0, -1.0}, g, sigma2);
    CHECK(out[0] == doctest::Approx(g[0] * dt + 2.0 * std::sqrt(dt) * 1.0));
    CHECK(out[1] == doctest::Approx(g[1] * dt + 3.0 * std::sqrt(dt) * (-1.0)));
}

TEST_CASE("step: center-of-mass increment is dt*sum(g) + sqrt(dt)*sum(sigma_rank * z)") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    Vec x{0.3, -1.2, 0.7, 0.1};
    Vec g{1.0, -2.0, 0.5, 0.25};
    Vec sigma2{2.0, 1.0, 0.5, 3.0};
    const double dt = 0.05;
    Vec z(4);
    for (auto& v : z) v = normal(rng);

    auto out = cbp::step(x, dt, z, g, sigma2);
    const double delta = std::accumulate(out.begin(), out.end(), 0.0) -
                         std::accumulate(x.begin(), x.end(), 0.0);
    auto perm = cbp::rank_permutation(x);
    double expected = dt * std::accumulate(g.begin(), g.end(), 0.0);
    for (int k = 0; k < 4; ++k) {
        expected += std::sqrt(sigma2[k] * dt) * z[perm.rank_to_name[k] - 1];
    }
    CHECK(delta == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("step input validation") {
    CHECK_THROWS_AS(cbp::step({0.0}, 0.1, {0.0, 0.0}, {0.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(cbp::step({0.0}, -0.1, {0.0}, {0.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("simulate_path is deterministic in (seed, path_index)") {
    auto spec = three_particle();
    cbp::SimConfig config;
    config.T = 0.5;
    config.dt = 1e-2;
    config.seed = 42;
    config.track_windows = {{1, 3}, {1, 2}};

    auto a = cbp::simulate_path(spec, config, 7);
    auto b = cbp::simulate_path(spec, config, 7);
    CHECK(a.com_end == b.com_end);
    CHECK(a.min_spread == b.min_spread);
    CHECK(a.proximity_counts == b.proximity_counts);

    auto c = cbp::simulate_path(spec, config, 8);
    CHECK(a.com_end != c.com_end);
}

TEST_CASE("per-path spreads are nonnegative and proximity counts monotone in epsilon") {
    auto spec = three_particle();
    cbp::SimConfig config;
    config.T = 0.5;
    config.dt = 1e-2;
    config.seed = 9;
    config.epsilons = {1e-3, 1e-2, 1e-1, 1.0};  // ascending
    config.track_windows = {{1, 3}, {2, 2}};

    for (std::int64_t p = 0; p < 20; ++p) {
        auto stats = cbp::simulate_path(spec, config, p);
        for (double s : stats.min_spread) CHECK(s >= 0.0);
        for (const auto& counts : stats.proximity_counts) {
            for (std::size_t e = 1; e < counts.size(); ++e) CHECK(counts[e] >= counts[e - 1]);
            for (auto count : counts) CHECK(count <= 51);  // grid times
        }
    }
}

TEST_CASE("monte_carlo matches closed-form center-of-mass moments") {
    cbp::FiniteSystemSpec spec{2, {1.0, 2.0}, {1.0, 1.0}, {0.0, 0.0}};
    cbp::SimConfig config;
    config.T = 1.0;
    config.dt = 1e-2;
    config.paths = 4000;
    config.seed = 77;
    config.threads = 4;

    auto agg = cbp::monte_carlo(spec, config);
    CHECK(std::abs(agg.com_mean - 3.0) < 4.0 * agg.com_mean_stderr);
    CHECK(std::abs(agg.com_var - 2.0) < 4.0 * agg.com_var_stderr);
}

TEST_CASE("monte_carlo with one path equals the single PathStats") {
    auto spec = three_particle();
    cbp::SimConfig config;
    config.T = 0.2;
    config.dt = 1e-2;
    config.paths = 1;
    config.seed = 3;
    config.track_windows = {{1, 3}};

    auto agg = cbp::monte_carlo(spec, config);
    auto single = cbp::simulate_path(spec, config, 0);
    CHECK(agg.com_mean == single.com_end);
    CHECK(agg.windows[0].min_spread_mean == single.min_spread[0]);
    CHECK(agg.windows[0].min_spread_min == single.min_spread[0]);
}

TEST_CASE("aggregate output is identical for any worker count") {
    auto spec = three_particle();
    cbp::SimConfig config;
    config.T = 0.3;
    config.dt = 1e-2;
    config.paths = 64;
    config.seed = 1234;
    config.track_windows = {{1, 3}};

    config.threads = 1;
    auto serial = cbp::aggregate_to_json(cbp::monte_carlo(spec, config));
    config.threads = 7;
    auto parallel = cbp::aggregate_to_json(cbp::monte_carlo(spec, config));
    serial["config"]["threads"] = 0;  // thread count is allowed to differ
    parallel["config"]["threads"] = 0;
    CHECK(serial.dump() == parallel.dump());
}

TEST_CASE("derive_stream: reproducible, distinct across path indices") {
    auto a = cbp::derive_stream(99, 5);
    auto b = cbp::derive_stream(99, 5);
    for (int i = 0; i < 64; ++i) CHECK(a() == b());

    for (std::int64_t i : {0, 1, 2, 17}) {
        for (std::int64_t j : {3, 4, 1000000}) {
            auto s1 = cbp::derive_stream(99, i);
            auto s2 = cbp::derive_stream(99, j);
            bool differ = false;
            for (int t = 0; t < 128 && !differ; ++t) differ = s1() != s2();
            CHECK(differ);
        }
    }
}

TEST_CASE("derive_stream normal variates pass a desk-scale moment check") {
    auto engine = cbp::derive_stream(2024, 0);
    std::normal_distribution<double> normal;
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = normal(engine);
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / double(n)));
}

TEST_CASE("permuting x0 leaves ranked statistics distribution unchanged") {
    cbp::FiniteSystemSpec spec{3, {0.5, 0.0, -0.5}, {1.0, 0.8, 1.2}, {-0.4, 0.1, 0.6}};
    cbp::FiniteSystemSpec permuted = spec;
    permuted.x0 = {0.6, -0.4, 0.1};

    cbp::SimConfig config;
    config.T = 0.5;
    config.dt = 5e-3;
    config.seed = 11;
    config.track_windows = {{1, 3}};
    const int n_paths = 400;

    Vec a, b;
    for (int p = 0; p < n_paths; ++p) a.push_back(cbp::simulate_path(spec, config, p).min_spread[0]);
    config.seed = 12;
    for (int p = 0; p < n_paths; ++p)
        b.push_back(cbp::simulate_path(permuted, config, p).min_spread[0]);
    CHECK(ks_same_distribution(a, b));
}

TEST_CASE("config validation") {
    auto spec = three_particle();
    cbp::SimConfig config;
    config.T = 1.0;
    config.dt = 2.0;  // dt > T
    CHECK_THROWS_AS(cbp::monte_carlo(spec, config), std::invalid_argument);

    config.dt = 1e-2;
    config.track_windows = {{2, 3}};  // ranks 2..4 out of range
    CHECK_THROWS_AS(cbp::monte_carlo(spec, config), std::invalid_argument);

    config.track_windows.clear();
    config.epsilons = {0.0};
    CHECK_THROWS_AS(cbp::monte_carlo(spec, config), std::invalid_argument);

    config.epsilons = {0.1};
    config.dt = 1e-9;
    config.max_grid_steps = 1000;
    CHECK_THROWS_AS(cbp::monte_carlo(spec, config), std::runtime_error);
}

TEST_CASE("truncated infinite run: construction and diagnostics") {
    cbp::InfiniteSystemSpec spec;
    spec.n0 = 1;
    spec.g_tail = 0.0;
    spec.sigma2_tail = 1.0;
    spec.init.b = 0.5;  // x_i = i/2

    cbp::SimConfig config;
    config.T = 0.25;
    config.dt = 5e-3;
    config.paths = 50;
    config.seed = 21;
    config.truncation_M = 50;
    config.buffer_B = 10;
    config.track_windows = {{1, 4}};

    auto agg = cbp::simulate_infinite_truncated(spec, config);
    CHECK(agg.truncated_run);
    CHECK(agg.windows.size() == 1);
    // the four lowest particles start far below the rank-40 fence
    CHECK(agg.boundary_contact_fraction == 0.0);

    // window beyond the statistics range M - B
    config.track_windows = {{38, 4}};
    CHECK_THROWS_AS(cbp::simulate_infinite_truncated(spec, config), std::invalid_argument);

    config.track_windows = {{1, 4}};
    config.truncation_M = 5;
    CHECK_THROWS_AS(cbp::simulate_infinite_truncated(spec, config), std::invalid_argument);
}

TEST_CASE("truncated infinite run: precondition names the failed gate") {
    cbp::InfiniteSystemSpec spec;
    spec.init.kind = cbp::InitFamily::Kind::SqrtLog;
    cbp::SimConfig config;
    config.truncation_M = 20;
    CHECK_THROWS_WITH_AS(cbp::simulate_infinite_truncated(spec, config),
                         doctest::Contains("series condition"), std::invalid_argument);
}

TEST_CASE("trajectory covers the grid and ends at T") {
    auto spec = three_particle();
    cbp::SimConfig config;
    config.T = 0.1;
    config.dt = 0.03;  // ragged grid, shortened final step
    config.seed = 31;

    auto traj = cbp::trajectory(spec, config, 0);
    REQUIRE(traj.size() == 5);  // t = 0, .03, .06, .09, .1
    CHECK(traj.front().first == 0.0);
    CHECK(traj.back().first == doctest::Approx(0.1));

    // final positions match the stats path
    auto stats = cbp::simulate_path(spec, config, 0);
    const double com = std::accumulate(traj.back().second.begin(), traj.back().second.end(), 0.0) -
                       std::accumulate(spec.x0.begin(), spec.x0.end(), 0.0);
    CHECK(stats.com_end == doctest::Approx(com).epsilon(1e-12));
}
