#pragma once

// Collision-avoidance criteria for competing Brownian particles, each
// implemented as a checker that reports a verdict together with a numeric
// margin (RHS - LHS of the governing inequality; positive = satisfied with
// room). Margins compose by min across sub-checks.
//
// Strictness follows the printed inequality of each condition: strict (<)
// for the eigenvalue bound, the four-particle total-collision bound, the
// n-tuple max/min bound and its infinite-system analogue; non-strict (<=)
// for the max <= (N-1)/(2N) sum bound, the max <= (N-1)/2 min bound, the
// concavity test and the four-particle triple-collision extras. Where a
// checker takes a strictness override, the default is the printed sense.

#include <string>
#include <vector>

#include "cbp/model.hpp"
#include "json.hpp"

namespace cbp {

enum class Criterion {
    Concavity,
    Lemma21,
    Cor22,
    EqTotal4,
    Cor24,
    Thm11,
    Lemma31A,
    Lemma31B,
    Lemma31C,
    WindowReduction,
    Thm42,
};

std::string to_string(Criterion c);
Criterion criterion_from_string(const std::string& s);

/// A rank window [l_minus, l_plus], 1-based, l_minus < l_plus.
struct WindowPair {
    int l_minus = 0;
    int l_plus = 0;
};

struct ConditionReport {
    Criterion criterion = Criterion::Cor22;
    std::string label;  // collision type or window tag, empty when unused
    bool holds = false;
    double margin = 0.0;  // RHS - LHS
    bool strict = true;   // holds == (margin > 0) if strict else (margin >= 0)
    std::vector<ConditionReport> details;
};

void to_json(nlohmann::json& j, const ConditionReport& r);

/// One CSV line per report: criterion,holds,margin. Details are flattened
/// with their labels.
std::string reports_to_csv(const std::vector<ConditionReport>& reports);

/// max over the zero-sum unit sphere of sum sigma2_k x_k^2, computed as the
/// top eigenvalue of the quadratic form restricted to the hyperplane
/// {sum x = 0} via a Householder basis. Always in [min sigma2, max sigma2];
/// equals (sigma2_1 + sigma2_2)/2 for N = 2.
double pi_max(const Vec& sigma2);

/// Concave diffusion sequence: sigma2_k >= (sigma2_{k-1} + sigma2_{k+1})/2
/// for interior k. Needs N >= 3.
ConditionReport concavity_check(const Vec& sigma2);

/// No total collisions if pi_max(sigma2) < ((N-1)/(2N)) sum sigma2 (strict).
ConditionReport lemma21_check(const Vec& sigma2);

/// No total collisions if max sigma2 {<, <=} ((N-1)/(2N)) sum sigma2.
/// The source prints <= but its four-particle specialization prints <;
/// strict is the default and the flag records which sense was used.
ConditionReport cor22_check(const Vec& sigma2, bool strict = true);

/// Four-particle total-collision bound: max sigma2 < (3/8) sum sigma2.
ConditionReport eq_total4_check(const Vec& sigma2);

/// No total collisions if max sigma2 <= ((N-1)/2) min sigma2 (non-strict).
ConditionReport cor24_check(const Vec& sigma2);

/// No n-tuple collisions (n >= 4) if max sigma2 < ((n-1)/2) min sigma2,
/// max/min over all N entries.
ConditionReport thm11_check(const Vec& sigma2, int n);

/// Applies the chosen total-collision criterion (Lemma21, Cor22 or Cor24)
/// to the subvector sigma2[l_minus..l_plus].
ConditionReport window_total_check(const Vec& sigma2, const WindowPair& w, Criterion criterion);

/// No collisions between ranks k_minus..k_plus: conjunction of
/// window_total_check over every window l_minus <= k_minus < k_plus <= l_plus.
ConditionReport no_rank_collision_check(const Vec& sigma2, int k_minus, int k_plus,
                                        Criterion criterion);

/// No n-tuple collisions: conjunction of no_rank_collision_check over all
/// rank pairs with k_plus - k_minus = n - 1. n = 2, 3 are permitted here;
/// thm11_check itself enforces n >= 4.
ConditionReport no_ntuple_check(const Vec& sigma2, int n, Criterion criterion);

/// The four collision types of a four-particle system: TOTAL (the
/// four-particle bound), TRIPLE_123 and TRIPLE_234 (the bound plus the
/// one-sided concavity extra), SIMULT_12_34 (the bound alone).
std::vector<ConditionReport> four_particle_report(const Vec& sigma2);

/// n-tuple condition for a validated infinite system:
/// sup sigma2 < ((n-1)/2) inf sigma2, sup/inf exact over head entries and
/// the tail constant. Throws std::invalid_argument naming the failed gate
/// when the spec does not validate.
ConditionReport infinite_ntuple_check(const InfiniteSystemSpec& spec, int n);

}  // namespace cbp
