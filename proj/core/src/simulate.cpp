#include "cbp/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cbp {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::int64_t grid_steps(const SimConfig& config) {
    const double q = config.T / config.dt;
    auto m = static_cast<std::int64_t>(std::ceil(q - 1e-9));
    return std::max<std::int64_t>(m, 1);
}

void validate_config(const FiniteSystemSpec& spec, const SimConfig& config, int stat_ranks) {
    auto spec_bad = validate_finite_spec(spec);
    if (!spec_bad.empty()) throw std::invalid_argument("invalid system spec: " + spec_bad.front());
    if (!(config.dt > 0.0) || !(config.T > 0.0)) throw std::invalid_argument("T and dt must be > 0");
    if (config.dt > config.T) throw std::invalid_argument("dt must be <= T");
    if (config.paths < 1) throw std::invalid_argument("paths must be >= 1");
    for (double eps : config.epsilons) {
        if (!(eps > 0.0)) throw std::invalid_argument("epsilons must be > 0");
    }
    for (const auto& w : config.track_windows) {
        if (w.k < 1 || w.n < 2 || w.k + w.n - 1 > stat_ranks) {
            throw std::invalid_argument("tracked window (" + std::to_string(w.k) + "," +
                                        std::to_string(w.n) + ") out of range 1.." +
                                        std::to_string(stat_ranks));
        }
    }
    if (grid_steps(config) > config.max_grid_steps) {
        throw std::runtime_error("grid size ceil(T/dt) exceeds the configured cap");
    }
}

struct BoundaryTracking {
    int boundary_rank = 0;            // 0: disabled
    std::vector<char> tracked_name;   // by 0-based name
};

PathStats run_path(const FiniteSystemSpec& spec, const SimConfig& config,
                   std::int64_t path_index, const BoundaryTracking& boundary) {
    const int n_particles = spec.N;
    const std::size_t n_windows = config.track_windows.size();
    const std::size_t n_eps = config.epsilons.size();
    const std::int64_t m = grid_steps(config);

    PathStats stats;
    stats.min_spread.assign(n_windows, std::numeric_limits<double>::infinity());
    stats.proximity_counts.assign(n_windows, std::vector<std::int64_t>(n_eps, 0));

    auto engine = derive_stream(config.seed, path_index);
    std::normal_distribution<double> normal(0.0, 1.0);

    Vec x = spec.x0;
    const double com0 = std::accumulate(x.begin(), x.end(), 0.0);
    Vec y(n_particles);

    for (std::int64_t t_idx = 0; t_idx <= m; ++t_idx) {
        RankingPermutation perm = rank_permutation(x);
        for (int k = 0; k < n_particles; ++k) y[k] = x[perm.rank_to_name[k] - 1];

        for (std::size_t w = 0; w < n_windows; ++w) {
            const auto& win = config.track_windows[w];
            const double spread = y[win.k + win.n - 2] - y[win.k - 1];
            stats.min_spread[w] = std::min(stats.min_spread[w], spread);
            for (std::size_t e = 0; e < n_eps; ++e) {
                if (spread < config.epsilons[e]) ++stats.proximity_counts[w][e];
            }
        }
        if (boundary.boundary_rank > 0 && !stats.boundary_contact) {
            const double fence = y[boundary.boundary_rank - 1];
            for (int i = 0; i < n_particles; ++i) {
                if (boundary.tracked_name[i] && x[i] > fence) {
                    stats.boundary_contact = true;
                    break;
                }
            }
        }

        if (t_idx == m) break;
        double dtk = (t_idx == m - 1) ? config.T - config.dt * static_cast<double>(m - 1)
                                      : config.dt;
        if (!(dtk > 0.0)) dtk = config.dt;  // T an exact multiple of dt
        const double sqdt = std::sqrt(dtk);
        // one draw per particle per step, in name order
        for (int k = 0; k < n_particles; ++k) {
            const int name = perm.rank_to_name[k] - 1;
            x[name] += spec.g[k] * dtk + std::sqrt(spec.sigma2[k]) * sqdt * normal(engine);
        }
        for (double v : x) {
            if (!std::isfinite(v)) {
                throw std::runtime_error("non-finite position at step " + std::to_string(t_idx + 1) +
                                         " of path " + std::to_string(path_index));
            }
        }
    }

    stats.com_end = std::accumulate(x.begin(), x.end(), 0.0) - com0;
    return stats;
}

Aggregate reduce(const FiniteSystemSpec& spec, const SimConfig& config,
                 const std::vector<PathStats>& per_path, bool truncated) {
    (void)spec;
    const auto n_paths = static_cast<double>(per_path.size());
    const std::size_t n_windows = config.track_windows.size();
    const std::size_t n_eps = config.epsilons.size();

    Aggregate agg;
    agg.config = config;
    agg.grid_times = grid_steps(config) + 1;
    agg.truncated_run = truncated;

    for (std::size_t w = 0; w < n_windows; ++w) {
        WindowAggregate wa;
        wa.k = config.track_windows[w].k;
        wa.n = config.track_windows[w].n;
        double sum = 0.0, lo = std::numeric_limits<double>::infinity();
        std::vector<std::int64_t> hits(n_eps, 0);
        for (const auto& p : per_path) {
            sum += p.min_spread[w];
            lo = std::min(lo, p.min_spread[w]);
            for (std::size_t e = 0; e < n_eps; ++e) {
                if (p.proximity_counts[w][e] > 0) ++hits[e];
            }
        }
        wa.min_spread_mean = sum / n_paths;
        wa.min_spread_min = lo;
        for (std::size_t e = 0; e < n_eps; ++e) {
            const double frac = static_cast<double>(hits[e]) / n_paths;
            wa.proximity_fraction.push_back(frac);
            wa.proximity_stderr.push_back(std::sqrt(frac * (1.0 - frac) / n_paths));
        }
        agg.windows.push_back(std::move(wa));
    }

    double mean = 0.0;
    for (const auto& p : per_path) mean += p.com_end;
    mean /= n_paths;
    double ss = 0.0;
    for (const auto& p : per_path) ss += (p.com_end - mean) * (p.com_end - mean);
    const double var = per_path.size() > 1 ? ss / (n_paths - 1.0) : 0.0;
    agg.com_mean = mean;
    agg.com_mean_stderr = std::sqrt(var / n_paths);
    agg.com_var = var;
    agg.com_var_stderr = per_path.size() > 1 ? var * std::sqrt(2.0 / (n_paths - 1.0)) : 0.0;

    std::int64_t contacts = 0;
    for (const auto& p : per_path) contacts += p.boundary_contact ? 1 : 0;
    agg.boundary_contact_fraction = static_cast<double>(contacts) / n_paths;
    return agg;
}

std::vector<PathStats> run_all_paths(const FiniteSystemSpec& spec, const SimConfig& config,
                                     const BoundaryTracking& boundary) {
    std::vector<PathStats> per_path(static_cast<std::size_t>(config.paths));
    const int n_workers = std::max(1, std::min<int>(config.threads,
                                                    static_cast<int>(config.paths)));
    if (n_workers == 1) {
        for (std::int64_t p = 0; p < config.paths; ++p) {
            per_path[static_cast<std::size_t>(p)] = run_path(spec, config, p, boundary);
        }
        return per_path;
    }
    std::vector<std::thread> workers;
    std::atomic<std::int64_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) {
        workers.emplace_back([&, t] {
            try {
                std::int64_t p;
                while ((p = next.fetch_add(1)) < config.paths) {
                    per_path[static_cast<std::size_t>(p)] = run_path(spec, config, p, boundary);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return per_path;
}

}  // namespace

std::mt19937_64 derive_stream(std::uint64_t master_seed, std::int64_t path_index) {
    std::uint64_t state = master_seed ^ (0xd1b54a32d192ed03ULL * static_cast<std::uint64_t>(path_index + 1));
    const std::uint64_t s0 = splitmix64(state);
    const std::uint64_t s1 = splitmix64(state);
    std::seed_seq seq{static_cast<std::uint32_t>(s0), static_cast<std::uint32_t>(s0 >> 32),
                      static_cast<std::uint32_t>(s1), static_cast<std::uint32_t>(s1 >> 32)};
    return std::mt19937_64(seq);
}

Vec step(const Vec& x, double dt, const Vec& z, const Vec& g, const Vec& sigma2) {
    if (x.size() != z.size() || x.size() != g.size() || x.size() != sigma2.size()) {
        throw std::invalid_argument("step: input lengths disagree");
    }
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
    RankingPermutation perm = rank_permutation(x);
    Vec out = x;
    const double sqdt = std::sqrt(dt);
    for (std::size_t k = 0; k < x.size(); ++k) {
        const int name = perm.rank_to_name[k] - 1;
        out[name] += g[k] * dt + std::sqrt(sigma2[k]) * sqdt * z[name];
    }
    for (double v : out) {
        if (!std::isfinite(v)) throw std::runtime_error("step: produced a non-finite position");
    }
    return out;
}

PathStats simulate_path(const FiniteSystemSpec& spec, const SimConfig& config,
                        std::int64_t path_index) {
    validate_config(spec, config, spec.N);
    return run_path(spec, config, path_index, BoundaryTracking{});
}

Aggregate monte_carlo(const FiniteSystemSpec& spec, const SimConfig& config) {
    validate_config(spec, config, spec.N);
    return reduce(spec, config, run_all_paths(spec, config, BoundaryTracking{}), false);
}

Aggregate simulate_infinite_truncated(const InfiniteSystemSpec& spec, const SimConfig& config) {
    auto bad = validate_infinite_spec(spec);
    if (!bad.empty()) throw std::invalid_argument("infinite spec precondition failed: " + bad.front());
    if (config.truncation_M < std::max(2, spec.n0 + config.buffer_B)) {
        throw std::invalid_argument("truncation_M must be >= n0 + buffer_B and >= 2");
    }
    if (config.buffer_B < 0 || config.buffer_B >= config.truncation_M - 1) {
        throw std::invalid_argument("buffer_B must be in [0, truncation_M - 2]");
    }

    const int m_total = config.truncation_M;
    const int stat_ranks = m_total - config.buffer_B;

    FiniteSystemSpec finite;
    finite.N = m_total;
    finite.g.resize(m_total);
    finite.sigma2.resize(m_total);
    finite.x0.resize(m_total);
    for (int k = 1; k <= m_total; ++k) {
        finite.g[k - 1] = spec.g_at(k);
        finite.sigma2[k - 1] = spec.sigma2_at(k);
        finite.x0[k - 1] = spec.init.position(k);
    }
    validate_config(finite, config, stat_ranks);

    BoundaryTracking boundary;
    boundary.boundary_rank = stat_ranks;
    boundary.tracked_name.assign(static_cast<std::size_t>(m_total), 0);
    RankingPermutation perm0 = rank_permutation(finite.x0);
    for (const auto& w : config.track_windows) {
        for (int r = w.k; r <= w.k + w.n - 1; ++r) {
            boundary.tracked_name[static_cast<std::size_t>(perm0.rank_to_name[r - 1] - 1)] = 1;
        }
    }

    return reduce(finite, config, run_all_paths(finite, config, boundary), true);
}

std::vector<std::pair<double, Vec>> trajectory(const FiniteSystemSpec& spec,
                                               const SimConfig& config,
                                               std::int64_t path_index) {
    validate_config(spec, config, spec.N);
    const std::int64_t m = grid_steps(config);
    auto engine = derive_stream(config.seed, path_index);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<std::pair<double, Vec>> out;
    out.reserve(static_cast<std::size_t>(m + 1));
    Vec x = spec.x0;
    double t = 0.0;
    out.emplace_back(t, x);
    for (std::int64_t t_idx = 0; t_idx < m; ++t_idx) {
        double dtk = (t_idx == m - 1) ? config.T - config.dt * static_cast<double>(m - 1)
                                      : config.dt;
        if (!(dtk > 0.0)) dtk = config.dt;
        RankingPermutation perm = rank_permutation(x);
        const double sqdt = std::sqrt(dtk);
        for (int k = 0; k < spec.N; ++k) {
            const int name = perm.rank_to_name[k] - 1;
            x[name] += spec.g[k] * dtk + std::sqrt(spec.sigma2[k]) * sqdt * normal(engine);
        }
        t = (t_idx == m - 1) ? config.T : t + dtk;
        out.emplace_back(t, x);
    }
    return out;
}

// --- serialization ---

void to_json(nlohmann::json& j, const SimConfig& c) {
    nlohmann::json windows = nlohmann::json::array();
    for (const auto& w : c.track_windows) windows.push_back({{"k", w.k}, {"n", w.n}});
    j = nlohmann::json{{"T", c.T},
                       {"dt", c.dt},
                       {"paths", c.paths},
                       {"seed", c.seed},
                       {"epsilons", c.epsilons},
                       {"track_windows", windows},
                       {"truncation_M", c.truncation_M},
                       {"buffer_B", c.buffer_B},
                       {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, SimConfig& c) {
    c.T = j.value("T", 1.0);
    c.dt = j.value("dt", 1e-3);
    c.paths = j.value("paths", std::int64_t{1});
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("epsilons")) j.at("epsilons").get_to(c.epsilons);
    c.track_windows.clear();
    if (j.contains("track_windows")) {
        for (const auto& w : j.at("track_windows")) {
            c.track_windows.push_back({w.at("k").get<int>(), w.at("n").get<int>()});
        }
    }
    c.truncation_M = j.value("truncation_M", 0);
    c.buffer_B = j.value("buffer_B", 0);
    c.threads = j.value("threads", 1);
}

nlohmann::json aggregate_to_json(const Aggregate& agg) {
    nlohmann::json j;
    to_json(j["config"], agg.config);
    j["grid_times"] = agg.grid_times;
    j["windows"] = nlohmann::json::array();
    for (const auto& w : agg.windows) {
        nlohmann::json wj{{"k", w.k},
                          {"n", w.n},
                          {"min_spread_mean", w.min_spread_mean},
                          {"min_spread_min", w.min_spread_min},
                          {"proximity", nlohmann::json::array()}};
        for (std::size_t e = 0; e < w.proximity_fraction.size(); ++e) {
            wj["proximity"].push_back({{"epsilon", agg.config.epsilons[e]},
                                       {"fraction", w.proximity_fraction[e]},
                                       {"stderr", w.proximity_stderr[e]}});
        }
        j["windows"].push_back(std::move(wj));
    }
    j["com"] = {{"mean", agg.com_mean},
                {"mean_stderr", agg.com_mean_stderr},
                {"var", agg.com_var},
                {"var_stderr", agg.com_var_stderr}};
    if (agg.truncated_run) {
        j["truncation"] = {{"boundary_contact_fraction", agg.boundary_contact_fraction}};
    }
    return j;
}

std::string aggregate_to_csv(const Aggregate& agg) {
    std::ostringstream os;
    os.precision(17);
    os << "window_k,window_n,epsilon,proximity_fraction,stderr,min_spread_mean,min_spread_min\n";
    for (const auto& w : agg.windows) {
        for (std::size_t e = 0; e < w.proximity_fraction.size(); ++e) {
            os << w.k << "," << w.n << "," << agg.config.epsilons[e] << ","
               << w.proximity_fraction[e] << "," << w.proximity_stderr[e] << ","
               << w.min_spread_mean << "," << w.min_spread_min << "\n";
        }
    }
    return os.str();
}

}  // namespace cbp
