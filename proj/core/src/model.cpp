#include "cbp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cbp {

namespace {

void require_finite(const Vec& x, const char* what) {
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string(what) + " contains a non-finite entry");
        }
    }
}

std::string index1(std::size_t i) { return std::to_string(i + 1); }

}  // namespace

RankingPermutation rank_permutation(const Vec& x) {
    if (x.empty()) throw std::invalid_argument("rank_permutation: empty input");
    require_finite(x, "rank_permutation: input");

    RankingPermutation perm;
    perm.rank_to_name.resize(x.size());
    std::iota(perm.rank_to_name.begin(), perm.rank_to_name.end(), 1);
    // stable sort by value; equal values keep name order, which is exactly
    // the lexicographic tie rule
    std::stable_sort(perm.rank_to_name.begin(), perm.rank_to_name.end(),
                     [&x](int a, int b) { return x[a - 1] < x[b - 1]; });
    return perm;
}

RankedState ranked_values(const Vec& x) {
    RankedState state;
    state.perm = rank_permutation(x);
    state.y.reserve(x.size());
    for (int name : state.perm.rank_to_name) state.y.push_back(x[name - 1]);
    return state;
}

Vec gaps(const RankedState& state) {
    if (state.y.size() < 2) throw std::invalid_argument("gaps: need at least 2 particles");
    Vec z(state.y.size() - 1);
    for (std::size_t k = 0; k + 1 < state.y.size(); ++k) z[k] = state.y[k + 1] - state.y[k];
    return z;
}

std::vector<std::string> validate_finite_spec(const FiniteSystemSpec& spec) {
    std::vector<std::string> out;
    if (spec.N < 2) out.push_back("N must be >= 2");
    auto check_len = [&](const Vec& v, const char* name) {
        if (static_cast<int>(v.size()) != spec.N) {
            out.push_back(std::string(name) + " has " + std::to_string(v.size()) +
                          " entries, expected N = " + std::to_string(spec.N));
        }
    };
    check_len(spec.g, "g");
    check_len(spec.sigma2, "sigma2");
    check_len(spec.x0, "x0");
    for (std::size_t k = 0; k < spec.sigma2.size(); ++k) {
        if (!(spec.sigma2[k] > 0.0) || !std::isfinite(spec.sigma2[k])) {
            out.push_back("sigma2[" + index1(k) + "] must be > 0");
        }
    }
    for (std::size_t k = 0; k < spec.g.size(); ++k) {
        if (!std::isfinite(spec.g[k])) out.push_back("g[" + index1(k) + "] must be finite");
    }
    for (std::size_t k = 0; k < spec.x0.size(); ++k) {
        if (!std::isfinite(spec.x0[k])) out.push_back("x0[" + index1(k) + "] must be finite");
    }
    return out;
}

double InitFamily::position(std::int64_t i) const {
    switch (kind) {
        case Kind::Linear:
            return a + b * static_cast<double>(i);
        case Kind::Power:
            return c * std::pow(static_cast<double>(i), gamma);
        case Kind::SqrtLog:
            return c * std::sqrt(std::log(static_cast<double>(i) + 1.0));
        case Kind::Explicit:
            if (i <= static_cast<std::int64_t>(prefix.size())) return prefix[static_cast<std::size_t>(i - 1)];
            if (!tail) throw std::invalid_argument("explicit init family has no tail rule");
            return tail->position(i);
    }
    throw std::logic_error("unreachable");
}

bool InitFamily::series_condition_holds() const {
    // Analytic per-family rules. Linear (b > 0) and power (c, gamma > 0)
    // grow fast enough that x_i^2 / log i diverges, so the Gaussian-tail
    // series converges for every alpha > 0. sqrt_log gives
    // exp(-alpha c^2 log(i+1)) = (i+1)^(-alpha c^2), a p-series that
    // diverges for alpha <= 1/c^2.
    switch (kind) {
        case Kind::Linear:
            return b > 0.0;
        case Kind::Power:
            return c > 0.0 && gamma > 0.0;
        case Kind::SqrtLog:
            return false;
        case Kind::Explicit:
            return tail && tail->series_condition_holds();
    }
    return false;
}

std::vector<std::string> InitFamily::parameter_violations() const {
    std::vector<std::string> out;
    switch (kind) {
        case Kind::Linear:
            if (!(b > 0.0) || !std::isfinite(b) || !std::isfinite(a)) out.push_back("init.b must be > 0 and parameters finite");
            break;
        case Kind::Power:
            if (!(c > 0.0) || !(gamma > 0.0) || !std::isfinite(c) || !std::isfinite(gamma))
                out.push_back("init.c and init.gamma must be > 0 and finite");
            break;
        case Kind::SqrtLog:
            if (!(c > 0.0) || !std::isfinite(c)) out.push_back("init.c must be > 0 and finite");
            break;
        case Kind::Explicit: {
            for (std::size_t i = 0; i < prefix.size(); ++i) {
                if (!std::isfinite(prefix[i])) out.push_back("init.prefix[" + index1(i) + "] must be finite");
            }
            if (!tail) {
                out.push_back("init.tail rule is required for explicit family");
            } else {
                if (tail->kind == Kind::Explicit) out.push_back("init.tail must be an analytic rule, not another explicit prefix");
                auto sub = tail->parameter_violations();
                out.insert(out.end(), sub.begin(), sub.end());
            }
            break;
        }
    }
    return out;
}

double InfiniteSystemSpec::g_at(std::int64_t k) const {
    if (k < 1) throw std::invalid_argument("rank must be >= 1");
    if (k < n0) return g_head.at(static_cast<std::size_t>(k - 1));
    return g_tail;
}

double InfiniteSystemSpec::sigma2_at(std::int64_t k) const {
    if (k < 1) throw std::invalid_argument("rank must be >= 1");
    if (k < n0) return sigma2_head.at(static_cast<std::size_t>(k - 1));
    return sigma2_tail;
}

std::vector<std::string> validate_infinite_spec(const InfiniteSystemSpec& spec) {
    std::vector<std::string> out;
    if (spec.n0 < 1) out.push_back("n0 must be >= 1");
    if (static_cast<int>(spec.g_head.size()) != spec.n0 - 1) {
        out.push_back("g_head must have n0 - 1 = " + std::to_string(spec.n0 - 1) + " entries");
    }
    if (static_cast<int>(spec.sigma2_head.size()) != spec.n0 - 1) {
        out.push_back("sigma2_head must have n0 - 1 = " + std::to_string(spec.n0 - 1) + " entries");
    }
    for (std::size_t k = 0; k < spec.sigma2_head.size(); ++k) {
        if (!(spec.sigma2_head[k] > 0.0) || !std::isfinite(spec.sigma2_head[k])) {
            out.push_back("sigma2_head[" + index1(k) + "] must be > 0");
        }
    }
    for (std::size_t k = 0; k < spec.g_head.size(); ++k) {
        if (!std::isfinite(spec.g_head[k])) out.push_back("g_head[" + index1(k) + "] must be finite");
    }
    if (!(spec.sigma2_tail > 0.0) || !std::isfinite(spec.sigma2_tail)) out.push_back("sigma2_tail must be > 0");
    if (!std::isfinite(spec.g_tail)) out.push_back("g_tail must be finite");

    auto init_bad = spec.init.parameter_violations();
    out.insert(out.end(), init_bad.begin(), init_bad.end());
    if (init_bad.empty() && !spec.init.series_condition_holds()) {
        out.push_back("initial configuration fails the series condition sum exp(-alpha x_i^2) < inf for all alpha > 0");
    }
    return out;
}

// --- JSON ---

void to_json(nlohmann::json& j, const FiniteSystemSpec& spec) {
    j = nlohmann::json{{"N", spec.N}, {"g", spec.g}, {"sigma2", spec.sigma2}, {"x0", spec.x0}};
}

void from_json(const nlohmann::json& j, FiniteSystemSpec& spec) {
    j.at("N").get_to(spec.N);
    j.at("g").get_to(spec.g);
    j.at("sigma2").get_to(spec.sigma2);
    j.at("x0").get_to(spec.x0);
}

void to_json(nlohmann::json& j, const InitFamily& fam) {
    switch (fam.kind) {
        case InitFamily::Kind::Linear:
            j = nlohmann::json{{"kind", "linear"}, {"a", fam.a}, {"b", fam.b}};
            break;
        case InitFamily::Kind::Power:
            j = nlohmann::json{{"kind", "power"}, {"c", fam.c}, {"gamma", fam.gamma}};
            break;
        case InitFamily::Kind::SqrtLog:
            j = nlohmann::json{{"kind", "sqrt_log"}, {"c", fam.c}};
            break;
        case InitFamily::Kind::Explicit:
            j = nlohmann::json{{"kind", "explicit"}, {"prefix", fam.prefix}};
            if (fam.tail) j["tail"] = *fam.tail;
            break;
    }
}

void from_json(const nlohmann::json& j, InitFamily& fam) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
        fam.kind = InitFamily::Kind::Linear;
        fam.a = j.value("a", 0.0);
        fam.b = j.value("b", 1.0);
    } else if (kind == "power") {
        fam.kind = InitFamily::Kind::Power;
        fam.c = j.value("c", 1.0);
        fam.gamma = j.value("gamma", 1.0);
    } else if (kind == "sqrt_log") {
        fam.kind = InitFamily::Kind::SqrtLog;
        fam.c = j.value("c", 1.0);
    } else if (kind == "explicit") {
        fam.kind = InitFamily::Kind::Explicit;
        j.at("prefix").get_to(fam.prefix);
        if (j.contains("tail")) {
            fam.tail = std::make_shared<InitFamily>(j.at("tail").get<InitFamily>());
        }
    } else {
        throw std::invalid_argument("unsupported init family kind: " + kind);
    }
}

void to_json(nlohmann::json& j, const InfiniteSystemSpec& spec) {
    j = nlohmann::json{{"n0", spec.n0},
                       {"g_head", spec.g_head},
                       {"sigma2_head", spec.sigma2_head},
                       {"g_tail", spec.g_tail},
                       {"sigma2_tail", spec.sigma2_tail},
                       {"init", spec.init}};
}

void from_json(const nlohmann::json& j, InfiniteSystemSpec& spec) {
    j.at("n0").get_to(spec.n0);
    j.at("g_head").get_to(spec.g_head);
    j.at("sigma2_head").get_to(spec.sigma2_head);
    j.at("g_tail").get_to(spec.g_tail);
    j.at("sigma2_tail").get_to(spec.sigma2_tail);
    j.at("init").get_to(spec.init);
}

}  // namespace cbp
