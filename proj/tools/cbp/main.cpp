// cbp — certify absence of multiple collisions for competing Brownian
// particle systems and run Euler-Maruyama Monte Carlo experiments.
//
// Commands:
//   check     evaluate collision-avoidance criteria for a system spec
//   simulate  Monte Carlo run, writes aggregate JSON/CSV + manifest
//   sweep     grid of checker evaluations, plot-ready CSV
//   validate  structural validation of a spec file
//
// Exit codes: 0 success / all criteria hold, 2 a criterion fails or a
// spec is invalid, 1 input or usage error.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cbp/conditions.hpp"
#include "cbp/model.hpp"
#include "cbp/simulate.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitFailedCriterion = 2;

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const nlohmann::json& j) {
    // dump() emits keys in sorted order, so the digest is stable under
    // key reordering of the input document
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(j.dump());
    return os.str();
}

std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spec file: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

struct ManifestInfo {
    std::string command;
    std::string hash;
    std::uint64_t seed = 0;
    std::string started;
};

void write_manifest(const std::filesystem::path& dir, const ManifestInfo& info) {
    nlohmann::json j{{"command", info.command},
                     {"config_hash", info.hash},
                     {"seed", info.seed},
                     {"tool_version", kToolVersion},
                     {"started", info.started},
                     {"finished", iso_now()}};
    write_file(dir / "manifest.json", j.dump(2) + "\n");
}

std::string reports_to_table(const std::vector<cbp::ConditionReport>& reports) {
    std::ostringstream os;
    os << std::left << std::setw(28) << "criterion" << std::setw(8) << "holds"
       << std::setw(16) << "margin" << "strict\n";
    for (const auto& r : reports) {
        std::string name = to_string(r.criterion);
        if (!r.label.empty()) name += ":" + r.label;
        os << std::setw(28) << name << std::setw(8) << (r.holds ? "yes" : "NO")
           << std::setw(16) << std::setprecision(9) << r.margin
           << (r.strict ? "<" : "<=") << "\n";
    }
    return os.str();
}

void print_reports(const std::vector<cbp::ConditionReport>& reports, const std::string& format) {
    if (format == "table") {
        std::cout << reports_to_table(reports);
    } else if (format == "csv") {
        std::cout << cbp::reports_to_csv(reports);
    } else {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : reports) {
            nlohmann::json j;
            to_json(j, r);
            arr.push_back(std::move(j));
        }
        std::cout << arr.dump(2) << "\n";
    }
}

cbp::Vec sigma2_from_document(const nlohmann::json& doc) {
    if (!doc.contains("sigma2")) throw std::runtime_error("spec file has no \"sigma2\" field");
    auto sigma2 = doc.at("sigma2").get<cbp::Vec>();
    for (std::size_t k = 0; k < sigma2.size(); ++k) {
        if (!(sigma2[k] > 0.0)) {
            throw std::runtime_error("sigma2[" + std::to_string(k + 1) + "] must be > 0");
        }
    }
    return sigma2;
}

// Remark-2.3-style bridge family: first and last diffusion 1, middle 1/(N-2).
cbp::Vec bridge_family(int n) {
    if (n < 3) throw std::runtime_error("bridge family needs N >= 3");
    cbp::Vec sigma2(static_cast<std::size_t>(n), 1.0 / (n - 2));
    sigma2.front() = sigma2.back() = 1.0;
    return sigma2;
}

cbp::ConditionReport run_criterion(const cbp::Vec& sigma2, cbp::Criterion criterion,
                                   std::optional<int> n, std::optional<bool> strict_override) {
    using cbp::Criterion;
    switch (criterion) {
        case Criterion::Concavity: return cbp::concavity_check(sigma2);
        case Criterion::Lemma21: return cbp::lemma21_check(sigma2);
        case Criterion::Cor22: return cbp::cor22_check(sigma2, strict_override.value_or(true));
        case Criterion::EqTotal4: return cbp::eq_total4_check(sigma2);
        case Criterion::Cor24: return cbp::cor24_check(sigma2);
        case Criterion::Thm11:
            if (!n) throw std::runtime_error("criterion THM11 needs --n");
            return cbp::thm11_check(sigma2, *n);
        case Criterion::WindowReduction:
            if (!n) throw std::runtime_error("criterion WINDOW_REDUCTION needs --n");
            return cbp::no_ntuple_check(sigma2, *n, Criterion::Cor22);
        case Criterion::Lemma31A: return cbp::four_particle_report(sigma2)[1];
        case Criterion::Lemma31B: return cbp::four_particle_report(sigma2)[2];
        case Criterion::Lemma31C: return cbp::four_particle_report(sigma2)[3];
        case Criterion::Thm42: break;
    }
    throw std::runtime_error("criterion " + to_string(criterion) + " does not apply to a finite sigma2 vector");
}

// --- check ---

struct CheckArgs {
    std::string spec_file;
    std::optional<int> n;
    std::vector<std::string> criteria;
    std::optional<bool> strict_override;
    std::string format = "json";
};

int cmd_check(const CheckArgs& args) {
    nlohmann::json doc;
    std::vector<cbp::ConditionReport> reports;
    try {
        doc = load_json(args.spec_file);
        if (doc.contains("n0")) {
            auto spec = doc.get<cbp::InfiniteSystemSpec>();
            reports.push_back(cbp::infinite_ntuple_check(spec, args.n.value_or(4)));
        } else {
            const cbp::Vec sigma2 = sigma2_from_document(doc);
            const int n_particles = static_cast<int>(sigma2.size());
            if (!args.criteria.empty()) {
                for (const auto& name : args.criteria) {
                    reports.push_back(run_criterion(sigma2, cbp::criterion_from_string(name),
                                                    args.n, args.strict_override));
                }
            } else if (args.n) {
                auto r = cbp::no_ntuple_check(sigma2, *args.n, cbp::Criterion::Cor22);
                if (*args.n == n_particles) r.label = "TOTAL";
                reports.push_back(std::move(r));
            } else {
                if (n_particles >= 3) reports.push_back(cbp::concavity_check(sigma2));
                reports.push_back(cbp::lemma21_check(sigma2));
                reports.push_back(cbp::cor22_check(sigma2, args.strict_override.value_or(true)));
                reports.push_back(cbp::cor24_check(sigma2));
                if (n_particles == 4) {
                    for (auto& r : cbp::four_particle_report(sigma2)) reports.push_back(std::move(r));
                }
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    print_reports(reports, args.format);
    for (const auto& r : reports) {
        if (!r.holds) return kExitFailedCriterion;
    }
    return kExitOk;
}

// --- simulate ---

struct SimulateArgs {
    std::string spec_file;
    cbp::SimConfig config;
    bool seed_given = false;
    std::string out_dir;
    std::vector<std::string> windows;
    std::optional<int> default_window_width;  // track all (k, n) of this width
    bool dump_trajectories = false;
    bool check_convergence = false;  // rerun at dt/2 and report drift
};

int cmd_simulate(const SimulateArgs& args) {
    const std::string started = iso_now();
    nlohmann::json doc;
    cbp::Aggregate agg;
    try {
        if (!args.seed_given) throw std::runtime_error("--seed is required for reproducible runs");
        if (args.out_dir.empty()) throw std::runtime_error("--out is required");
        doc = load_json(args.spec_file);

        cbp::SimConfig config = args.config;
        for (const auto& w : args.windows) {
            const auto colon = w.find(':');
            if (colon == std::string::npos) throw std::runtime_error("--window expects k:n, got " + w);
            config.track_windows.push_back(
                {std::stoi(w.substr(0, colon)), std::stoi(w.substr(colon + 1))});
        }
        const bool infinite = doc.contains("n0");
        if (config.track_windows.empty() && args.default_window_width) {
            const int width = *args.default_window_width;
            const int stat_ranks = infinite ? config.truncation_M - config.buffer_B
                                            : doc.value("N", 0);
            if (width < 2 || width > stat_ranks) throw std::runtime_error("--n out of range");
            for (int k = 1; k + width - 1 <= stat_ranks; ++k) {
                config.track_windows.push_back({k, width});
            }
        }

        auto run = [&](const cbp::SimConfig& c) {
            if (infinite) {
                if (c.truncation_M <= 0) throw std::runtime_error("infinite spec needs --truncation-M");
                return cbp::simulate_infinite_truncated(doc.get<cbp::InfiniteSystemSpec>(), c);
            }
            return cbp::monte_carlo(doc.get<cbp::FiniteSystemSpec>(), c);
        };

        if (infinite) {
            agg = run(config);
        } else {
            auto spec = doc.get<cbp::FiniteSystemSpec>();
            agg = run(config);
            if (args.dump_trajectories) {
                std::filesystem::create_directories(args.out_dir);
                for (std::int64_t p = 0; p < config.paths; ++p) {
                    std::ostringstream os;
                    os.precision(17);
                    os << "t";
                    for (int i = 1; i <= spec.N; ++i) os << ",X_" << i;
                    os << "\n";
                    for (const auto& [t, x] : cbp::trajectory(spec, config, p)) {
                        os << t;
                        for (double v : x) os << "," << v;
                        os << "\n";
                    }
                    write_file(std::filesystem::path(args.out_dir) /
                                   ("trajectory_" + std::to_string(p) + ".csv"),
                               os.str());
                }
            }
        }

        nlohmann::json agg_json = cbp::aggregate_to_json(agg);
        if (args.check_convergence) {
            cbp::SimConfig halved = config;
            halved.dt = config.dt / 2.0;
            const cbp::Aggregate fine = run(halved);
            double proximity_drift = 0.0;
            for (std::size_t w = 0; w < agg.windows.size(); ++w) {
                for (std::size_t e = 0; e < agg.windows[w].proximity_fraction.size(); ++e) {
                    proximity_drift = std::max(proximity_drift,
                                               std::abs(agg.windows[w].proximity_fraction[e] -
                                                        fine.windows[w].proximity_fraction[e]));
                }
            }
            agg_json["convergence"] = {{"dt_half", halved.dt},
                                       {"com_mean_drift", std::abs(agg.com_mean - fine.com_mean)},
                                       {"com_var_drift", std::abs(agg.com_var - fine.com_var)},
                                       {"proximity_fraction_drift", proximity_drift}};
        }

        std::filesystem::create_directories(args.out_dir);
        const std::filesystem::path out(args.out_dir);
        write_file(out / "aggregate.json", agg_json.dump(2) + "\n");
        write_file(out / "aggregate.csv", cbp::aggregate_to_csv(agg));

        nlohmann::json hashed{{"spec", doc}};
        to_json(hashed["config"], agg.config);
        write_manifest(out, {"simulate", config_hash(hashed), agg.config.seed, started});
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}

// --- sweep ---

struct SweepAxis {
    std::string param;
    std::vector<double> values;
};

struct SweepArgs {
    std::string template_file;
    std::string out_dir;
    std::string format = "csv";
};

int cmd_sweep(const SweepArgs& args) {
    const std::string started = iso_now();
    try {
        const nlohmann::json doc = load_json(args.template_file);
        const auto criterion = cbp::criterion_from_string(doc.value("criterion", "COR22"));

        std::vector<SweepAxis> axes;
        for (const auto& a : doc.value("axes", nlohmann::json::array())) {
            axes.push_back({a.at("param").get<std::string>(), a.at("values").get<std::vector<double>>()});
        }
        std::size_t grid = axes.empty() ? 0 : 1;
        for (const auto& a : axes) grid *= a.values.size();
        if (grid == 0) {
            std::cerr << "error: sweep grid is empty\n";
            return kExitInput;
        }

        cbp::Vec base_sigma2;
        bool bridge = false;
        if (doc.contains("base")) {
            const auto& base = doc.at("base");
            if (base.contains("sigma2")) base_sigma2 = base.at("sigma2").get<cbp::Vec>();
            if (base.value("family", "") == "bridge") bridge = true;
        }
        std::optional<int> base_n;
        if (doc.contains("n")) base_n = doc.at("n").get<int>();

        std::ostringstream os;
        os.precision(17);
        for (const auto& a : axes) os << a.param << ",";
        os << "criterion,holds,margin\n";

        std::vector<std::size_t> idx(axes.size(), 0);
        for (std::size_t row = 0; row < grid; ++row) {
            cbp::Vec sigma2 = base_sigma2;
            std::optional<int> n = base_n;
            for (std::size_t ai = 0; ai < axes.size(); ++ai) {
                const double v = axes[ai].values[idx[ai]];
                const std::string& param = axes[ai].param;
                if (param == "N") {
                    if (!bridge) throw std::runtime_error("axis N needs base.family = \"bridge\"");
                    sigma2 = bridge_family(static_cast<int>(v));
                } else if (param == "n") {
                    n = static_cast<int>(v);
                } else if (param.rfind("sigma2[", 0) == 0 && param.back() == ']') {
                    const int k = std::stoi(param.substr(7, param.size() - 8));
                    if (k < 1 || k > static_cast<int>(sigma2.size())) {
                        throw std::runtime_error("axis " + param + " out of range");
                    }
                    sigma2[static_cast<std::size_t>(k - 1)] = v;
                } else {
                    throw std::runtime_error("unsupported sweep axis: " + param);
                }
            }

            const auto report = run_criterion(sigma2, criterion, n, std::nullopt);
            for (std::size_t ai = 0; ai < axes.size(); ++ai) os << axes[ai].values[idx[ai]] << ",";
            os << to_string(report.criterion) << "," << (report.holds ? "true" : "false") << ","
               << report.margin << "\n";

            for (std::size_t ai = axes.size(); ai-- > 0;) {
                if (++idx[ai] < axes[ai].values.size()) break;
                idx[ai] = 0;
            }
        }

        if (!args.out_dir.empty()) {
            std::filesystem::create_directories(args.out_dir);
            write_file(std::filesystem::path(args.out_dir) / "sweep.csv", os.str());
            write_manifest(args.out_dir, {"sweep", config_hash(doc), 0, started});
        } else {
            std::cout << os.str();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}

// --- validate ---

int cmd_validate(const std::string& spec_file, const std::string& format) {
    std::vector<std::string> violations;
    try {
        const nlohmann::json doc = load_json(spec_file);
        if (doc.contains("n0")) {
            violations = cbp::validate_infinite_spec(doc.get<cbp::InfiniteSystemSpec>());
        } else {
            violations = cbp::validate_finite_spec(doc.get<cbp::FiniteSystemSpec>());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    if (format == "json") {
        std::cout << nlohmann::json{{"valid", violations.empty()}, {"violations", violations}}.dump(2)
                  << "\n";
    } else {
        if (violations.empty()) {
            std::cout << "valid\n";
        } else {
            for (const auto& v : violations) std::cout << "violation: " << v << "\n";
        }
    }
    return violations.empty() ? kExitOk : kExitFailedCriterion;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"collision conditions and Monte Carlo for competing Brownian particles"};
    app.require_subcommand(1);

    std::string format = "json";
    app.add_option("--format", format, "output format")->check(CLI::IsMember({"json", "table", "csv"}));

    CheckArgs check_args;
    auto* check = app.add_subcommand("check", "evaluate collision-avoidance criteria");
    check->fallthrough();
    check->add_option("spec", check_args.spec_file, "system spec JSON file")->required();
    int check_n = 0;
    auto* check_n_opt = check->add_option("--n", check_n, "collision order n");
    std::vector<std::string> check_criteria;
    check->add_option("--criterion", check_criteria, "criterion id, repeatable");
    bool nonstrict = false;
    auto* nonstrict_flag = check->add_flag("--non-strict", nonstrict, "use <= where the default is <");

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Euler-Maruyama Monte Carlo run");
    simulate->fallthrough();
    simulate->add_option("spec", sim_args.spec_file, "system spec JSON file")->required();
    simulate->add_option("--T", sim_args.config.T, "time horizon");
    simulate->add_option("--dt", sim_args.config.dt, "step size");
    simulate->add_option("--paths", sim_args.config.paths, "Monte Carlo path count");
    auto* seed_opt = app.add_option("--seed", sim_args.config.seed, "master seed");
    simulate->add_option("--eps", sim_args.config.epsilons, "proximity thresholds");
    simulate->add_option("--window", sim_args.windows, "tracked rank window k:n, repeatable");
    simulate->add_option("--truncation-M", sim_args.config.truncation_M, "truncation particle count");
    simulate->add_option("--buffer-B", sim_args.config.buffer_B, "top buffer particles");
    simulate->add_flag("--dump-trajectories", sim_args.dump_trajectories, "write per-path CSV");
    int sim_n = 0;
    auto* sim_n_opt =
        simulate->add_option("--n", sim_n, "track every rank window of this width");
    simulate->add_flag("--check-convergence", sim_args.check_convergence,
                       "rerun at dt/2 and report statistic drift");
    std::string out_dir;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", sim_args.config.threads, "worker threads");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "grid of checker evaluations");
    sweep->fallthrough();
    sweep->add_option("template", sweep_args.template_file, "sweep template JSON file")->required();

    std::string validate_file;
    auto* validate = app.add_subcommand("validate", "validate a system spec file");
    validate->fallthrough();
    validate->add_option("spec", validate_file, "system spec JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    if (check->parsed()) {
        check_args.format = format;
        if (check_n_opt->count() > 0) check_args.n = check_n;
        check_args.criteria = check_criteria;
        if (nonstrict_flag->count() > 0) check_args.strict_override = false;
        return cmd_check(check_args);
    }
    if (simulate->parsed()) {
        sim_args.seed_given = seed_opt->count() > 0;
        sim_args.out_dir = out_dir;
        if (sim_n_opt->count() > 0) sim_args.default_window_width = sim_n;
        return cmd_simulate(sim_args);
    }
    if (sweep->parsed()) {
        sweep_args.out_dir = out_dir;
        sweep_args.format = format;
        return cmd_sweep(sweep_args);
    }
    if (validate->parsed()) {
        return cmd_validate(validate_file, format);
    }
    return kExitInput;
}
