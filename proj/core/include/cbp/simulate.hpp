#pragma once

// Euler-Maruyama Monte Carlo for finite systems and truncated infinite
// systems of competing Brownian particles. The rank is frozen within each
// step: between rank changes the true dynamics are exactly Brownian with
// constant coefficients, so the only discretization bias sits at
// rank-change steps.
//
// Collision events are observed only through grid-time proximity
// (window spread < epsilon); a discrete path cannot witness a
// probability-zero exact collision.
//
// Reproducibility contract: each path gets its own random stream derived
// from (master seed, path index) by a split construction, and aggregation
// runs in path-index order, so output is byte-identical for any worker
// count.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "cbp/model.hpp"
#include "json.hpp"

namespace cbp {

/// Ranked window to monitor: ranks k..k+n-1, 1-based.
struct WindowSpec {
    int k = 1;
    int n = 2;
};

struct SimConfig {
    double T = 1.0;
    double dt = 1e-3;
    std::int64_t paths = 1;
    std::uint64_t seed = 0;
    Vec epsilons{1e-1, 1e-2, 1e-3};        // proximity thresholds
    std::vector<WindowSpec> track_windows;  // empty: no window statistics
    int truncation_M = 0;                   // infinite runs only
    int buffer_B = 0;                       // top particles excluded from stats
    int threads = 1;
    std::int64_t max_grid_steps = 100000000;  // resource cap on ceil(T/dt)
};

void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);

/// Per-path summaries, indexed parallel to config.track_windows and
/// config.epsilons.
struct PathStats {
    std::vector<double> min_spread;  // per window, min over the time grid
    std::vector<std::vector<std::int64_t>> proximity_counts;  // [window][epsilon]
    double com_end = 0.0;            // sum X_i(T) - sum X_i(0)
    bool boundary_contact = false;   // infinite runs only
};

struct WindowAggregate {
    int k = 0, n = 0;
    double min_spread_mean = 0.0;
    double min_spread_min = 0.0;
    std::vector<double> proximity_fraction;  // per epsilon: paths with any event
    std::vector<double> proximity_stderr;
};

struct Aggregate {
    SimConfig config;  // echo
    std::int64_t grid_times = 0;
    std::vector<WindowAggregate> windows;
    double com_mean = 0.0, com_mean_stderr = 0.0;
    double com_var = 0.0, com_var_stderr = 0.0;
    double boundary_contact_fraction = 0.0;
    bool truncated_run = false;
};

nlohmann::json aggregate_to_json(const Aggregate& agg);
std::string aggregate_to_csv(const Aggregate& agg);

/// Deterministic per-path stream: splitmix64 over (master_seed, path_index)
/// seeds an independent engine, so streams do not depend on worker count.
std::mt19937_64 derive_stream(std::uint64_t master_seed, std::int64_t path_index);

/// One Euler-Maruyama step. z holds one standard normal draw per particle,
/// indexed by name; each particle moves with the drift and diffusion of its
/// current rank.
Vec step(const Vec& x, double dt, const Vec& z, const Vec& g, const Vec& sigma2);

/// One path over ceil(T/dt) steps (the last step is shortened so the
/// horizon is exactly T). Deterministic given (config.seed, path_index).
PathStats simulate_path(const FiniteSystemSpec& spec, const SimConfig& config,
                        std::int64_t path_index);

/// config.paths independent paths, reduced in path-index order.
Aggregate monte_carlo(const FiniteSystemSpec& spec, const SimConfig& config);

/// Instantiates the finite system of the lowest truncation_M ranks and the
/// family initial positions, simulates it, and reports statistics over
/// ranks 1..truncation_M - buffer_B plus a boundary-contact diagnostic:
/// a path makes contact when a particle that started in a tracked window
/// climbs strictly above the (truncation_M - buffer_B)-th ranked value.
Aggregate simulate_infinite_truncated(const InfiniteSystemSpec& spec, const SimConfig& config);

/// Full trajectory of one path, for the optional per-path dump:
/// (t, positions by name) at every grid time.
std::vector<std::pair<double, Vec>> trajectory(const FiniteSystemSpec& spec,
                                               const SimConfig& config,
                                               std::int64_t path_index);

}  // namespace cbp
