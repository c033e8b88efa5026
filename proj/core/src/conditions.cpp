#include "cbp/conditions.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cbp {

namespace {

void require_positive(const Vec& sigma2, int min_len, const char* who) {
    if (static_cast<int>(sigma2.size()) < min_len) {
        throw std::invalid_argument(std::string(who) + ": need at least " + std::to_string(min_len) +
                                    " diffusion coefficients, got " + std::to_string(sigma2.size()));
    }
    for (double s : sigma2) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw std::invalid_argument(std::string(who) + ": diffusion coefficients must be finite and > 0");
        }
    }
}

bool verdict(double margin, bool strict) { return strict ? margin > 0.0 : margin >= 0.0; }

ConditionReport simple_report(Criterion c, double margin, bool strict) {
    ConditionReport r;
    r.criterion = c;
    r.margin = margin;
    r.strict = strict;
    r.holds = verdict(margin, strict);
    return r;
}

// Conjunction of sub-reports: holds iff all hold, margin = min. The strict
// flag is taken from a minimum-margin sub-report, preferring a failing one
// so the holds/margin invariant survives boundary ties between strict and
// non-strict sub-checks.
ConditionReport combine(Criterion c, std::vector<ConditionReport> details) {
    ConditionReport r;
    r.criterion = c;
    r.holds = true;
    r.margin = std::numeric_limits<double>::infinity();
    r.strict = false;
    const ConditionReport* pick = nullptr;
    for (const auto& d : details) {
        r.holds = r.holds && d.holds;
        if (d.margin < r.margin) {
            r.margin = d.margin;
            pick = &d;
        } else if (d.margin == r.margin && pick && pick->holds && !d.holds) {
            pick = &d;
        }
    }
    if (pick) r.strict = pick->strict;
    r.details = std::move(details);
    return r;
}

}  // namespace

std::string to_string(Criterion c) {
    switch (c) {
        case Criterion::Concavity: return "CONCAVITY";
        case Criterion::Lemma21: return "LEMMA21";
        case Criterion::Cor22: return "COR22";
        case Criterion::EqTotal4: return "EQ_TOTAL4";
        case Criterion::Cor24: return "COR24";
        case Criterion::Thm11: return "THM11";
        case Criterion::Lemma31A: return "LEMMA31A";
        case Criterion::Lemma31B: return "LEMMA31B";
        case Criterion::Lemma31C: return "LEMMA31C";
        case Criterion::WindowReduction: return "WINDOW_REDUCTION";
        case Criterion::Thm42: return "THM42";
    }
    return "?";
}

Criterion criterion_from_string(const std::string& s) {
    static const std::pair<const char*, Criterion> table[] = {
        {"CONCAVITY", Criterion::Concavity}, {"LEMMA21", Criterion::Lemma21},
        {"COR22", Criterion::Cor22},         {"EQ_TOTAL4", Criterion::EqTotal4},
        {"COR24", Criterion::Cor24},         {"THM11", Criterion::Thm11},
        {"LEMMA31A", Criterion::Lemma31A},   {"LEMMA31B", Criterion::Lemma31B},
        {"LEMMA31C", Criterion::Lemma31C},   {"WINDOW_REDUCTION", Criterion::WindowReduction},
        {"THM42", Criterion::Thm42},
    };
    for (const auto& [name, c] : table) {
        if (s == name) return c;
    }
    throw std::invalid_argument("unknown criterion: " + s);
}

void to_json(nlohmann::json& j, const ConditionReport& r) {
    j = nlohmann::json{{"criterion", to_string(r.criterion)},
                       {"holds", r.holds},
                       {"margin", r.margin},
                       {"strict", r.strict},
                       {"details", nlohmann::json::array()}};
    if (!r.label.empty()) j["label"] = r.label;
    for (const auto& d : r.details) {
        nlohmann::json dj;
        to_json(dj, d);
        j["details"].push_back(std::move(dj));
    }
}

std::string reports_to_csv(const std::vector<ConditionReport>& reports) {
    std::ostringstream os;
    os << "criterion,holds,margin\n";
    os.precision(17);
    for (const auto& r : reports) {
        os << to_string(r.criterion);
        if (!r.label.empty()) os << ":" << r.label;
        os << "," << (r.holds ? "true" : "false") << "," << r.margin << "\n";
    }
    return os.str();
}

double pi_max(const Vec& sigma2) {
    require_positive(sigma2, 2, "pi_max");
    const int n = static_cast<int>(sigma2.size());

    // Householder reflector mapping ones/sqrt(N) to e1; columns 2..N form
    // an orthonormal basis of the zero-sum hyperplane.
    Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
    Eigen::VectorXd v = u - Eigen::VectorXd::Unit(n, 0);
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    const double vtv = v.squaredNorm();
    if (vtv > 0.0) h -= (2.0 / vtv) * (v * v.transpose());

    Eigen::MatrixXd basis = h.rightCols(n - 1);
    Eigen::MatrixXd projected =
        basis.transpose() * Eigen::Map<const Eigen::VectorXd>(sigma2.data(), n).asDiagonal() * basis;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(projected);
    if (solver.info() != Eigen::Success) throw std::runtime_error("pi_max: eigensolve failed");
    return solver.eigenvalues().maxCoeff();
}

ConditionReport concavity_check(const Vec& sigma2) {
    require_positive(sigma2, 3, "concavity_check");
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k + 1 < sigma2.size(); ++k) {
        margin = std::min(margin, sigma2[k] - 0.5 * (sigma2[k - 1] + sigma2[k + 1]));
    }
    return simple_report(Criterion::Concavity, margin, /*strict=*/false);
}

ConditionReport lemma21_check(const Vec& sigma2) {
    require_positive(sigma2, 2, "lemma21_check");
    const double n = static_cast<double>(sigma2.size());
    const double sum = std::accumulate(sigma2.begin(), sigma2.end(), 0.0);
    const double rhs = (n - 1.0) / (2.0 * n) * sum;
    return simple_report(Criterion::Lemma21, rhs - pi_max(sigma2), /*strict=*/true);
}

ConditionReport cor22_check(const Vec& sigma2, bool strict) {
    require_positive(sigma2, 2, "cor22_check");
    const double n = static_cast<double>(sigma2.size());
    const double sum = std::accumulate(sigma2.begin(), sigma2.end(), 0.0);
    const double rhs = (n - 1.0) / (2.0 * n) * sum;
    return simple_report(Criterion::Cor22, rhs - *std::max_element(sigma2.begin(), sigma2.end()), strict);
}

ConditionReport eq_total4_check(const Vec& sigma2) {
    if (sigma2.size() != 4) throw std::invalid_argument("eq_total4_check: needs exactly 4 coefficients");
    require_positive(sigma2, 4, "eq_total4_check");
    const double sum = std::accumulate(sigma2.begin(), sigma2.end(), 0.0);
    return simple_report(Criterion::EqTotal4,
                         0.375 * sum - *std::max_element(sigma2.begin(), sigma2.end()),
                         /*strict=*/true);
}

ConditionReport cor24_check(const Vec& sigma2) {
    require_positive(sigma2, 2, "cor24_check");
    const double n = static_cast<double>(sigma2.size());
    const auto [lo, hi] = std::minmax_element(sigma2.begin(), sigma2.end());
    return simple_report(Criterion::Cor24, (n - 1.0) / 2.0 * *lo - *hi, /*strict=*/false);
}

ConditionReport thm11_check(const Vec& sigma2, int n) {
    require_positive(sigma2, 2, "thm11_check");
    if (n < 4 || n > static_cast<int>(sigma2.size())) {
        throw std::invalid_argument("thm11_check: n must satisfy 4 <= n <= N");
    }
    const auto [lo, hi] = std::minmax_element(sigma2.begin(), sigma2.end());
    return simple_report(Criterion::Thm11, (n - 1.0) / 2.0 * *lo - *hi, /*strict=*/true);
}

ConditionReport window_total_check(const Vec& sigma2, const WindowPair& w, Criterion criterion) {
    const int n = static_cast<int>(sigma2.size());
    if (w.l_minus < 1 || w.l_plus > n || w.l_minus >= w.l_plus) {
        throw std::invalid_argument("window_total_check: need 1 <= l_minus < l_plus <= N");
    }
    Vec sub(sigma2.begin() + (w.l_minus - 1), sigma2.begin() + w.l_plus);
    ConditionReport r;
    switch (criterion) {
        case Criterion::Lemma21: r = lemma21_check(sub); break;
        case Criterion::Cor22: r = cor22_check(sub); break;
        case Criterion::Cor24: r = cor24_check(sub); break;
        default:
            throw std::invalid_argument("window_total_check: criterion must be LEMMA21, COR22 or COR24");
    }
    r.label = "window[" + std::to_string(w.l_minus) + "," + std::to_string(w.l_plus) + "]";
    return r;
}

ConditionReport no_rank_collision_check(const Vec& sigma2, int k_minus, int k_plus,
                                        Criterion criterion) {
    const int n = static_cast<int>(sigma2.size());
    if (k_minus < 1 || k_plus > n || k_minus >= k_plus) {
        throw std::invalid_argument("no_rank_collision_check: need 1 <= k_minus < k_plus <= N");
    }
    std::vector<ConditionReport> details;
    for (int lm = 1; lm <= k_minus; ++lm) {
        for (int lp = k_plus; lp <= n; ++lp) {
            details.push_back(window_total_check(sigma2, WindowPair{lm, lp}, criterion));
        }
    }
    ConditionReport r = combine(Criterion::WindowReduction, std::move(details));
    r.label = "ranks[" + std::to_string(k_minus) + "," + std::to_string(k_plus) + "]";
    return r;
}

ConditionReport no_ntuple_check(const Vec& sigma2, int n, Criterion criterion) {
    const int len = static_cast<int>(sigma2.size());
    if (n < 2 || n > len) throw std::invalid_argument("no_ntuple_check: need 2 <= n <= N");
    std::vector<ConditionReport> details;
    for (int km = 1; km + n - 1 <= len; ++km) {
        details.push_back(no_rank_collision_check(sigma2, km, km + n - 1, criterion));
    }
    ConditionReport r = combine(Criterion::WindowReduction, std::move(details));
    r.label = "ntuple[n=" + std::to_string(n) + "]";
    return r;
}

std::vector<ConditionReport> four_particle_report(const Vec& sigma2) {
    if (sigma2.size() != 4) throw std::invalid_argument("four_particle_report: needs exactly 4 coefficients");
    require_positive(sigma2, 4, "four_particle_report");

    const ConditionReport total4 = eq_total4_check(sigma2);

    ConditionReport total = total4;
    total.label = "TOTAL";

    auto triple = [&](Criterion c, const char* label, double mid, double left, double right) {
        ConditionReport extra = simple_report(c, mid - 0.5 * (left + right), /*strict=*/false);
        extra.label = "concavity_extra";
        ConditionReport base = total4;
        ConditionReport r = combine(c, {std::move(base), std::move(extra)});
        r.label = label;
        return r;
    };

    ConditionReport triple123 =
        triple(Criterion::Lemma31A, "TRIPLE_123", sigma2[1], sigma2[0], sigma2[2]);
    ConditionReport triple234 =
        triple(Criterion::Lemma31B, "TRIPLE_234", sigma2[2], sigma2[1], sigma2[3]);

    ConditionReport simult = total4;
    simult.criterion = Criterion::Lemma31C;
    simult.label = "SIMULT_12_34";

    return {total, triple123, triple234, simult};
}

ConditionReport infinite_ntuple_check(const InfiniteSystemSpec& spec, int n) {
    auto violations = validate_infinite_spec(spec);
    if (!violations.empty()) {
        throw std::invalid_argument("infinite_ntuple_check: spec fails validation gate: " + violations.front());
    }
    if (n < 4) throw std::invalid_argument("infinite_ntuple_check: n must be >= 4");

    double lo = spec.sigma2_tail, hi = spec.sigma2_tail;
    for (double s : spec.sigma2_head) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    ConditionReport r = simple_report(Criterion::Thm42, (n - 1.0) / 2.0 * lo - hi, /*strict=*/true);
    r.label = "ntuple[n=" + std::to_string(n) + "]";
    return r;
}

}  // namespace cbp
