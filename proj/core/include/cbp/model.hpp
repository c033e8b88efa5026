#pragma once

// Finite and infinite systems of rank-based competing Brownian particles:
// system specifications, the ranking permutation, and structural validation.
//
// Ranks and names are 1-based in every serialized document and report,
// matching the usual k = 1..N convention. In-memory vectors are plain
// 0-based std::vector<double>.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace cbp {

using Vec = std::vector<double>;

/// Bijection from ranks to particle names. Ties are resolved
/// lexicographically: among equal positions, the lower name gets the
/// lower rank. This makes the permutation unique and deterministic.
struct RankingPermutation {
    /// rank_to_name[k] is the 1-based name of the particle with rank k+1.
    std::vector<int> rank_to_name;

    int size() const { return static_cast<int>(rank_to_name.size()); }

    /// Name of the particle occupying the given 1-based rank.
    int name_of_rank(int rank) const { return rank_to_name.at(static_cast<std::size_t>(rank) - 1); }
};

/// Positions sorted from bottom to top together with the permutation that
/// produced them: y[k] = x[perm.rank_to_name[k] - 1].
struct RankedState {
    Vec y;  // nondecreasing
    RankingPermutation perm;
};

/// The unique permutation sorting x nondecreasingly with the lexicographic
/// tie rule. Throws std::invalid_argument on empty input or non-finite
/// entries.
RankingPermutation rank_permutation(const Vec& x);

/// Ranked values Y_1 <= ... <= Y_N plus the ranking permutation.
RankedState ranked_values(const Vec& x);

/// Adjacent ranked spreads Z_k = Y_{k+1} - Y_k >= 0, length N-1.
/// Throws std::invalid_argument for N < 2.
Vec gaps(const RankedState& state);

/// A finite system of N competing Brownian particles: rank-indexed drifts
/// g_k, rank-indexed diffusions sigma_k^2 > 0, and initial positions.
struct FiniteSystemSpec {
    int N = 0;
    Vec g;       // drift of rank k, displacement/time
    Vec sigma2;  // diffusion of rank k, displacement^2/time, all > 0
    Vec x0;      // initial positions by name
};

/// Initial-configuration family for infinite systems. Supported rules:
///   linear    x_i = a + b*i           (b > 0)
///   power     x_i = c * i^gamma       (c > 0, gamma > 0)
///   sqrt_log  x_i = c * sqrt(log(i+1))  -- grows too slowly; the Gaussian
///             series sum_i exp(-alpha x_i^2) reduces to a divergent
///             p-series for small alpha, so this family never passes the
///             series gate. Kept as an explicit negative example.
///   explicit  finite prefix of positions, then an analytic tail rule
struct InitFamily {
    enum class Kind { Linear, Power, SqrtLog, Explicit };

    Kind kind = Kind::Linear;
    double a = 0.0, b = 1.0;      // linear parameters
    double c = 1.0, gamma = 1.0;  // power / sqrt_log scale and exponent
    Vec prefix;                   // explicit positions for i = 1..prefix.size()
    std::shared_ptr<const InitFamily> tail;  // explicit only

    /// Position of the i-th particle, i >= 1.
    double position(std::int64_t i) const;

    /// Analytic decision of the series condition
    /// sum_i exp(-alpha x_i^2) < infinity for all alpha > 0.
    bool series_condition_holds() const;

    /// Parameter violations ("init.b must be > 0", ...); empty means well formed.
    std::vector<std::string> parameter_violations() const;
};

/// An infinite system with eventually-constant coefficients: explicit head
/// arrays for ranks 1..n0-1, constant tail from rank n0 on. The constant
/// tail is exactly the uniqueness-in-law structure, and it makes
/// sup|g_n| and sup sigma_n^2 finite by construction.
struct InfiniteSystemSpec {
    int n0 = 1;
    Vec g_head;       // drifts of ranks 1..n0-1
    Vec sigma2_head;  // diffusions of ranks 1..n0-1
    double g_tail = 0.0;
    double sigma2_tail = 1.0;
    InitFamily init;

    /// Drift of rank k (1-based), head entry or tail constant.
    double g_at(std::int64_t k) const;
    /// Diffusion of rank k (1-based).
    double sigma2_at(std::int64_t k) const;
};

/// Structural validation. Each violated invariant yields one message;
/// an empty list means the spec is valid. Violations are data, not errors.
std::vector<std::string> validate_finite_spec(const FiniteSystemSpec& spec);

/// Checks coefficient positivity/finiteness, the tail structure, and the
/// series condition for the declared initial family (decided analytically
/// per family rule).
std::vector<std::string> validate_infinite_spec(const InfiniteSystemSpec& spec);

// JSON schema: finite  {"N", "g", "sigma2", "x0"}
//              infinite {"n0", "g_head", "sigma2_head", "g_tail",
//                        "sigma2_tail", "init": {"kind", ...params}}
void to_json(nlohmann::json& j, const FiniteSystemSpec& spec);
void from_json(const nlohmann::json& j, FiniteSystemSpec& spec);
void to_json(nlohmann::json& j, const InitFamily& fam);
void from_json(const nlohmann::json& j, InitFamily& fam);
void to_json(nlohmann::json& j, const InfiniteSystemSpec& spec);
void from_json(const nlohmann::json& j, InfiniteSystemSpec& spec);

}  // namespace cbp
