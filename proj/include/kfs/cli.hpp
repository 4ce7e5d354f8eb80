#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kfs/kfs.hpp"

namespace kfs::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success; 1 runtime failure (infeasible scenario, I/O);
// 2 configuration/usage error; 4 bound-soundness failure on a verify-* run.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSoundness = 4;

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        out.push_back(s.substr(pos, comma - pos));
        pos = comma + 1;
        if (comma == s.size()) break;
    }
    return out;
}

inline std::vector<int> parse_int_list(const std::string& s, const char* what) {
    std::vector<int> out;
    for (const auto& item : split_list(s)) {
        int v = 0;
        const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || p != item.data() + item.size()) {
            throw std::invalid_argument(std::string(what) + ": bad integer '" + item + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
    return out;
}

inline std::vector<double> parse_double_list(const std::string& s, const char* what) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        double v = 0.0;
        const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || p != item.data() + item.size()) {
            throw std::invalid_argument(std::string(what) + ": bad number '" + item + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
    return out;
}

// One vector per line, decimal components separated by commas.
inline std::vector<std::vector<double>> read_vectors_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vectors file '" + path + "'");
    std::vector<std::vector<double>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto v = kfs::detail::parse_vector_line(line, path + ":" + std::to_string(lineno));
        if (!out.empty() && v.size() != out.front().size()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": inconsistent vector dimension");
        }
        out.push_back(std::move(v));
    }
    if (out.empty()) throw std::runtime_error("vectors file '" + path + "' is empty");
    return out;
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out << content;
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw std::runtime_error("failed writing '" + tmp + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

// Expand `--config <file>` into `--key=value` tokens inserted just after the
// subcommand, so command-line flags (parsed later, TakeLast) override file
// values. The file is flat key=value text; '#' starts a comment line.
inline std::vector<std::string> expand_config_args(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    if (path.empty()) return args;
    if (args.empty() || args.front().rfind("-", 0) == 0) return args;

    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::vector<std::string> injected;
    std::string line;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected key=value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty key");
        }
        if (key == "config") {
            throw std::invalid_argument(path + ": config files cannot nest");
        }
        injected.push_back("--" + key + "=" + value);
    }
    args.insert(args.begin() + 1, injected.begin(), injected.end());
    return args;
}

inline DimensionProfile resolve_profile(const std::string& beta_spec, int n) {
    if (beta_spec == "n") return DimensionProfile::identity_map(n);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(beta_spec.data(), beta_spec.data() + beta_spec.size(), v);
    if (ec != std::errc{} || p != beta_spec.data() + beta_spec.size()) {
        throw std::invalid_argument("--beta: expected a positive number or 'n', got '" + beta_spec +
                                    "'");
    }
    return DimensionProfile::constant(v);
}

inline double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

struct BoundsConfig {
    std::string kernels = "linear";
    std::string n_list;
    int k = 1;
    std::string deltas;
    double epsilon = 0.1;
    double r = 1.0;
    double A = 1.0;
    double C = 1.0;
    double C_star = 1.0;
    std::string beta = "n";
    double D = detail::nan_value();
    double theta = detail::nan_value();
    bool normalized = true;
    std::string out;
};

inline constexpr const char* kBoundsHeader =
    "kernel,n,k,delta,epsilon,theta,r,A,C,C_star,beta,D,Delta,"
    "quasi_orth_raw,quasi_orth_clamped,quasi_orth_norm_raw,quasi_orth_norm_clamped,"
    "lhd_u,lhd_l,lhd_upper_raw,lhd_upper_clamped,lhd_two_sided_raw,lhd_two_sided_clamped,"
    "p_n_raw,p_n_clamped,p_e_raw,p_e_clamped";

inline int run_bounds(const BoundsConfig& cfg) {
    const auto kernels = detail::split_list(cfg.kernels);
    for (const auto& spec : kernels) parse_kernel(spec);  // validate labels up front
    const auto ns = detail::parse_int_list(cfg.n_list, "--n");
    const auto deltas = detail::parse_double_list(cfg.deltas, "--delta");
    const bool have_d = std::isfinite(cfg.D);
    const bool have_theta = std::isfinite(cfg.theta);
    if (have_theta && cfg.theta < 0.0) throw std::invalid_argument("--theta must be >= 0");
    if (cfg.out.empty()) throw std::invalid_argument("--out is required");

    CsvTable table(kBoundsHeader);
    for (const auto& kernel_spec : kernels) {
        for (int n : ns) {
            const DimensionProfile profile = detail::resolve_profile(cfg.beta, n);
            for (double delta : deltas) {
                const BoundParams p(cfg.A, cfg.r, cfg.k, delta, cfg.epsilon, cfg.C, cfg.C_star,
                                    profile);
                const BoundValue qo = quasi_orth_bound(p);
                const BoundValue qon = quasi_orth_norm_bound(p);
                const double u = lhd_u(p);
                const double l = lhd_l(p);
                const BoundValue up = lhd_upper_prob(p);
                const BoundValue two = lhd_two_sided_prob(p);

                double separation = detail::nan_value();
                double theta = have_theta ? cfg.theta : detail::nan_value();
                if (have_d) {
                    separation = delta_feasible(cfg.D, cfg.r, cfg.k, delta);
                    if (!have_theta && separation > 0.0) {
                        theta = 0.5 * (std::max(separation - cfg.r, 0.0) + separation);
                    }
                }
                double pn_raw = detail::nan_value(), pn_clamped = detail::nan_value();
                if (have_d && separation > 0.0 && std::isfinite(theta) && theta >= 0.0 &&
                    theta <= separation && separation - theta <= cfg.r) {
                    const BoundValue pn = p_n_bound(p, separation, theta, cfg.normalized);
                    pn_raw = pn.raw;
                    pn_clamped = pn.clamped;
                }
                double pe_raw = detail::nan_value(), pe_clamped = detail::nan_value();
                if (std::isfinite(theta) && theta >= 0.0) {
                    const BoundValue pe = p_e_bound(p, theta);
                    pe_raw = pe.raw;
                    pe_clamped = pe.clamped;
                }
                table.row(kernel_spec, n, cfg.k, delta, cfg.epsilon, theta, cfg.r, cfg.A, cfg.C,
                          cfg.C_star, beta_at(profile, 0.0), cfg.D, separation, qo.raw, qo.clamped,
                          qon.raw, qon.clamped, u, l, up.raw, up.clamped, two.raw, two.clamped,
                          pn_raw, pn_clamped, pe_raw, pe_clamped);
            }
        }
    }
    detail::write_file_atomic(cfg.out, table.text());
    std::cout << "bounds: wrote " << table.rows() << " rows to " << cfg.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string name;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = 0;  // 0 -> default_workers()
    std::string out;

    std::string kernels = "linear";
    std::string n_list;
    double delta = 0.5;
    double epsilon = 0.1;
    int k = 1;
    std::uint64_t trials = 0;
    std::uint64_t set_size = 20000;

    double r_x = 1.0;
    double r_y = 1.0;
    double c_y_norm = 0.0;
    std::uint64_t fit_trials = 100;
    std::uint64_t eval_draws = 1000;
    double theta = detail::nan_value();  // NaN -> MidRange
    bool normalized = true;

    std::string radii;
    std::uint64_t samples = 0;
    std::string region = "ball";
    double region_radius = 1.0;
    double half_width = 1.0;
    std::string center;        // comma-separated; empty -> origin
    std::string anchors_file;  // vectors file; empty -> explicit center
    int bootstrap = 100;
};

inline constexpr const char* kQuasiOrthHeader = "kernel,n,delta,trials,frequency,ci_lo,ci_hi";
inline constexpr const char* kSeparabilityHeader =
    "kernel,n,set_size,trials,frequency,ci_lo,ci_hi";
inline constexpr const char* kVerifyHeader =
    "kernel,n,k,delta,epsilon,trials,event,frequency,ci_lo,ci_hi,bound_raw,bound_clamped,vacuous,"
    "pass";
inline constexpr const char* kVerifyFewshotHeader =
    "kernel,n,k,delta,theta,trials,event,frequency,ci_lo,ci_hi,bound_raw,bound_clamped,vacuous,"
    "pass";
inline constexpr const char* kBetaHeader =
    "kernel,n,radius,volume_est,beta_hat,beta_ci_lo,beta_ci_hi";

namespace detail {

enum class ExperimentKind : std::uint64_t {
    quasi_orth = 1,
    separability = 2,
    verify_quasi_orth = 3,
    verify_lhd = 4,
    verify_fewshot = 5,
    estimate_beta = 6,
};

inline RngStream config_stream(std::uint64_t seed, ExperimentKind kind, std::uint64_t row) {
    return RngStream(seed, (static_cast<std::uint64_t>(kind) << 32) | row);
}

}  // namespace detail

inline int run_experiment(const ExperimentConfig& cfg) {
    using detail::ExperimentKind;
    if (!cfg.seed_set) throw std::invalid_argument("--seed is required (no silent time-based seeding)");
    if (cfg.out.empty()) throw std::invalid_argument("--out is required");
    const int workers = cfg.workers > 0 ? cfg.workers : default_workers();

    nlohmann::ordered_json manifest;
    manifest["command"] = "experiment";
    manifest["name"] = cfg.name;
    manifest["seed"] = cfg.seed;
    manifest["workers"] = workers;
    manifest["versions"] = {{"kfs", kVersion},
                            {"cli11", CLI11_VERSION},
                            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    nlohmann::ordered_json config_json;
    nlohmann::ordered_json results_json = nlohmann::ordered_json::array();
    detail::Timer timer;
    bool sound = true;

    std::optional<CsvTable> table;

    if (cfg.name == "quasi-orth") {
        if (cfg.trials < 1) throw std::invalid_argument("--trials must be >= 1");
        const auto kernels = detail::split_list(cfg.kernels);
        const auto ns = detail::parse_int_list(cfg.n_list, "--n");
        config_json = {{"kernel", cfg.kernels}, {"n", cfg.n_list}, {"delta", cfg.delta},
                       {"trials", cfg.trials}};
        table.emplace(kQuasiOrthHeader);
        std::uint64_t row = 0;
        for (const auto& spec : kernels) {
            const Kernel kernel = parse_kernel(spec);
            for (int n : ns) {
                const auto stream =
                    detail::config_stream(cfg.seed, ExperimentKind::quasi_orth, row++);
                const auto est = estimate_pairwise_quasi_orth(kernel, static_cast<std::size_t>(n),
                                                              cfg.delta, cfg.trials, stream,
                                                              workers);
                table->row(spec, n, cfg.delta, est.aggregate.trials, est.aggregate.frequency,
                           est.aggregate.ci_lo, est.aggregate.ci_hi);
                if (est.degenerate_resamples > 0) {
                    results_json.push_back({{"kernel", spec},
                                            {"n", n},
                                            {"degenerate_resamples", est.degenerate_resamples}});
                }
                std::cout << "quasi-orth kernel=" << spec << " n=" << n
                          << " frequency=" << format_value(est.aggregate.frequency) << "\n";
            }
        }
    } else if (cfg.name == "separability") {
        if (cfg.trials < 1) throw std::invalid_argument("--trials must be >= 1");
        if (cfg.set_size < 1) throw std::invalid_argument("--set-size must be >= 1");
        const auto kernels = detail::split_list(cfg.kernels);
        const auto ns = detail::parse_int_list(cfg.n_list, "--n");
        config_json = {{"kernel", cfg.kernels}, {"n", cfg.n_list}, {"set_size", cfg.set_size},
                       {"trials", cfg.trials}};
        table.emplace(kSeparabilityHeader);
        std::uint64_t row = 0;
        for (const auto& spec : kernels) {
            const Kernel kernel = parse_kernel(spec);
            for (int n : ns) {
                const auto stream =
                    detail::config_stream(cfg.seed, ExperimentKind::separability, row++);
                const Aggregate agg = estimate_separability(kernel, static_cast<std::size_t>(n),
                                                            cfg.set_size, cfg.trials, stream,
                                                            workers);
                table->row(spec, n, cfg.set_size, agg.trials, agg.frequency, agg.ci_lo, agg.ci_hi);
                std::cout << "separability kernel=" << spec << " n=" << n
                          << " frequency=" << format_value(agg.frequency) << "\n";
            }
        }
    } else if (cfg.name == "verify-quasi-orth" || cfg.name == "verify-lhd") {
        if (cfg.trials < 1) throw std::invalid_argument("--trials must be >= 1");
        if (cfg.kernels != "linear") {
            throw unsupported_regime("verify-* experiments run with --kernel linear only");
        }
        const auto ns = detail::parse_int_list(cfg.n_list, "--n");
        config_json = {{"kernel", "linear"}, {"n", cfg.n_list},   {"k", cfg.k},
                       {"delta", cfg.delta}, {"epsilon", cfg.epsilon}, {"r_y", cfg.r_y},
                       {"trials", cfg.trials}};
        table.emplace(kVerifyHeader);
        const bool lhd = cfg.name == "verify-lhd";
        std::uint64_t row = 0;
        for (int n : ns) {
            const auto scenario = identity_ball_scenario(
                static_cast<std::size_t>(n), cfg.r_x,
                std::vector<double>(static_cast<std::size_t>(n), 0.0), cfg.r_y);
            const auto stream = detail::config_stream(
                cfg.seed, lhd ? ExperimentKind::verify_lhd : ExperimentKind::verify_quasi_orth,
                row++);
            auto emit = [&](const char* event, const VerifiedAggregate& va) {
                table->row("linear", n, cfg.k, cfg.delta, cfg.epsilon, va.empirical.trials, event,
                           va.empirical.frequency, va.empirical.ci_lo, va.empirical.ci_hi,
                           va.bound.raw, va.bound.clamped, va.bound.vacuous, va.pass);
                sound = sound && va.pass;
                std::cout << cfg.name << " n=" << n << " event=" << event
                          << " frequency=" << format_value(va.empirical.frequency)
                          << " bound=" << format_value(va.bound.clamped)
                          << (va.pass ? " pass" : " FAIL") << "\n";
            };
            if (lhd) {
                const auto v =
                    verify_lhd(scenario, cfg.k, cfg.delta, cfg.epsilon, cfg.trials, stream, workers);
                emit("upper", v.upper);
                emit("two_sided", v.two_sided);
                results_json.push_back({{"n", n}, {"u", v.u}, {"l", v.l}});
            } else {
                const auto v = verify_quasi_orth(scenario, cfg.k, cfg.delta, cfg.epsilon,
                                                 cfg.trials, stream, workers);
                emit("a1", v.pairwise);
                emit("a1_and_a2", v.pairwise_norms);
            }
        }
    } else if (cfg.name == "verify-fewshot") {
        if (cfg.kernels != "linear") {
            throw unsupported_regime("verify-* experiments run with --kernel linear only");
        }
        const auto ns = detail::parse_int_list(cfg.n_list, "--n");
        config_json = {{"kernel", "linear"},       {"n", cfg.n_list},
                       {"k", cfg.k},               {"delta", cfg.delta},
                       {"r_x", cfg.r_x},           {"r_y", cfg.r_y},
                       {"c_y_norm", cfg.c_y_norm}, {"fit_trials", cfg.fit_trials},
                       {"eval_draws", cfg.eval_draws},
                       {"theta", std::isfinite(cfg.theta) ? format_value(cfg.theta)
                                                          : std::string("midrange")},
                       {"normalized", cfg.normalized}};
        table.emplace(kVerifyFewshotHeader);
        std::uint64_t row = 0;
        for (int n : ns) {
            std::vector<double> c_y(static_cast<std::size_t>(n), 0.0);
            c_y[0] = cfg.c_y_norm;
            const auto scenario =
                identity_ball_scenario(static_cast<std::size_t>(n), cfg.r_x, c_y, cfg.r_y);
            const auto stream =
                detail::config_stream(cfg.seed, ExperimentKind::verify_fewshot, row++);
            const ThetaPolicy policy = std::isfinite(cfg.theta)
                                           ? ThetaPolicy(ThetaFixed{cfg.theta})
                                           : ThetaPolicy(ThetaMidRange{});
            const auto v = verify_fewshot(scenario, cfg.k, cfg.delta, policy, cfg.fit_trials,
                                          cfg.eval_draws, stream, workers, cfg.normalized);
            auto emit = [&](const char* event, const VerifiedAggregate& va) {
                table->row("linear", n, cfg.k, cfg.delta, v.mean_theta, va.empirical.trials, event,
                           va.empirical.frequency, va.empirical.ci_lo, va.empirical.ci_hi,
                           va.bound.raw, va.bound.clamped, va.bound.vacuous, va.pass);
                sound = sound && va.pass;
                std::cout << "verify-fewshot n=" << n << " event=" << event
                          << " frequency=" << format_value(va.empirical.frequency)
                          << " bound=" << format_value(va.bound.clamped)
                          << (va.pass ? " pass" : " FAIL") << "\n";
            };
            emit("p_n", v.p_n);
            emit("p_e", v.p_e);
            if (v.infeasible_flagged) {
                std::cerr << "warning: verify-fewshot n=" << n << ": " << v.infeasible_trials
                          << "/" << v.fit_trials << " fits infeasible (>1%)\n";
            }
            results_json.push_back({{"n", n},
                                    {"infeasible_trials", v.infeasible_trials},
                                    {"infeasible_flagged", v.infeasible_flagged},
                                    {"mean_theta", v.mean_theta},
                                    {"mean_separation", v.mean_separation},
                                    {"mean_d", v.mean_d}});
        }
    } else if (cfg.name == "estimate-beta") {
        if (cfg.samples < 2) throw std::invalid_argument("--samples must be >= 2");
        const auto kernels = detail::split_list(cfg.kernels);
        if (kernels.size() != 1) throw std::invalid_argument("estimate-beta takes one kernel");
        const Kernel kernel = parse_kernel(kernels.front());
        const auto ns = detail::parse_int_list(cfg.n_list, "--n");
        const auto radii = detail::parse_double_list(cfg.radii, "--radii");
        config_json = {{"kernel", cfg.kernels}, {"n", cfg.n_list},
                       {"radii", cfg.radii},    {"samples", cfg.samples},
                       {"region", cfg.region},  {"bootstrap", cfg.bootstrap}};
        table.emplace(kBetaHeader);
        std::uint64_t row = 0;
        for (int n : ns) {
            const std::size_t nn = static_cast<std::size_t>(n);
            SamplingRegion region;
            if (cfg.region == "ball") {
                region = BallRegion{std::vector<double>(nn, 0.0), cfg.region_radius};
            } else if (cfg.region == "cube") {
                region = CubeRegion{cfg.half_width};
            } else {
                throw std::invalid_argument("--region must be ball or cube");
            }
            FeatureCenter center;
            if (!cfg.anchors_file.empty()) {
                center = AnchorCenter{detail::read_vectors_file(cfg.anchors_file)};
            } else if (!cfg.center.empty()) {
                center = ExplicitCenter{detail::parse_double_list(cfg.center, "--center")};
            } else {
                center = ExplicitCenter{std::vector<double>(nn, 0.0)};
            }
            const auto stream =
                detail::config_stream(cfg.seed, ExperimentKind::estimate_beta, row++);
            const BetaEstimate est = estimate_beta(kernel, nn, region, center, radii, cfg.samples,
                                                   stream, workers, cfg.bootstrap);
            for (const auto& r : est.rows) {
                table->row(kernels.front(), n, r.radius, r.volume_est, r.beta_hat, r.ci_lo,
                           r.ci_hi);
            }
            results_json.push_back({{"n", n},
                                    {"alpha_hat", est.alpha_hat},
                                    {"alpha_ci_lo", est.alpha_ci_lo},
                                    {"alpha_ci_hi", est.alpha_ci_hi},
                                    {"degenerate", est.degenerate}});
            std::cout << "estimate-beta kernel=" << kernels.front() << " n=" << n
                      << " alpha_hat=" << format_value(est.alpha_hat)
                      << (est.degenerate ? " (degenerate)" : "") << "\n";
        }
    } else {
        throw std::invalid_argument(
            "--name must be one of quasi-orth|separability|verify-quasi-orth|verify-lhd|"
            "verify-fewshot|estimate-beta");
    }

    manifest["config"] = config_json;
    if (!results_json.empty()) manifest["results"] = results_json;
    manifest["rows"] = table->rows();
    manifest["soundness_pass"] = sound;
    manifest["wall_time_seconds"] = timer.seconds();
    manifest["outputs"] = {{"csv", cfg.out}};

    detail::write_file_atomic(cfg.out, table->text());
    detail::write_file_atomic(cfg.out + ".manifest.json", manifest.dump(2) + "\n");

    if (!sound) {
        std::cerr << "error: bound-soundness check failed on at least one row\n";
        return kExitSoundness;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// fit / classify
// ---------------------------------------------------------------------------

struct FitConfig {
    std::string kernel;
    std::string support_file;
    std::string label = "new";
    double r_y = 0.0;
    double delta = detail::nan_value();
    bool optimize_delta = false;
    double theta = detail::nan_value();
    std::string theta_policy = "midrange";  // midrange | optimize
    double A = 1.0;
    double C = 1.0;
    double C_star = 1.0;
    std::string beta = "n";
    double r_x = 1.0;
    int grid = 256;
    bool normalized = true;
    std::string out;
};

inline int run_fit(const FitConfig& cfg) {
    if (cfg.out.empty()) throw std::invalid_argument("--out is required");
    if (!(cfg.r_y > 0.0)) throw std::invalid_argument("--r-y must be positive");
    const Kernel kernel = parse_kernel(cfg.kernel);
    auto points = detail::read_vectors_file(cfg.support_file);
    const int n = static_cast<int>(points.front().size());
    const int k = static_cast<int>(points.size());
    SupportSample support(kernel, std::move(points), cfg.label);

    const bool needs_bounds = cfg.optimize_delta || cfg.theta_policy == "optimize";
    std::optional<BoundParams> y_params;
    std::optional<BoundParams> x_params;
    if (needs_bounds) {
        const DimensionProfile profile = detail::resolve_profile(cfg.beta, n);
        y_params.emplace(cfg.A, cfg.r_y, k, 0.5, 0.5, cfg.C, cfg.C_star, profile);
        x_params.emplace(cfg.A, cfg.r_x, k, 0.5, 0.5, cfg.C, cfg.C_star, profile);
    }

    DeltaPolicy delta_policy = DeltaFixed{0.5};
    if (cfg.optimize_delta) {
        if (std::isfinite(cfg.delta)) {
            throw std::invalid_argument("--delta and --optimize-delta are mutually exclusive");
        }
        delta_policy = DeltaOptimize{*y_params, *x_params, GridSpec{cfg.grid}, cfg.normalized};
    } else {
        if (!std::isfinite(cfg.delta)) {
            throw std::invalid_argument("either --delta or --optimize-delta is required");
        }
        delta_policy = DeltaFixed{cfg.delta};
    }

    ThetaPolicy theta_policy = ThetaMidRange{};
    if (std::isfinite(cfg.theta)) {
        theta_policy = ThetaFixed{cfg.theta};
    } else if (cfg.theta_policy == "optimize") {
        theta_policy = ThetaOptimize{*y_params, *x_params, GridSpec{cfg.grid}, cfg.normalized};
    } else if (cfg.theta_policy != "midrange") {
        throw std::invalid_argument("--theta-policy must be midrange or optimize");
    }

    const FewShotModel model = fit(kernel, std::move(support), cfg.r_y, delta_policy, theta_policy);
    detail::write_file_atomic(cfg.out, serialize_model(model));
    std::cout << "fit: k=" << k << " n=" << n << " D=" << format_value(model.mean_norm())
              << " delta=" << format_value(model.delta())
              << " Delta=" << format_value(model.separation())
              << " theta=" << format_value(model.theta()) << " -> " << cfg.out << "\n";
    return kExitOk;
}

struct ClassifyConfig {
    std::string model_file;
    std::string vectors_file;
    std::string base_label = "base";
    std::string out;
};

inline int run_classify(const ClassifyConfig& cfg) {
    if (cfg.out.empty()) throw std::invalid_argument("--out is required");
    const FewShotModel model = load_model(cfg.model_file);
    const auto vectors = detail::read_vectors_file(cfg.vectors_file);
    if (vectors.front().size() != model.support().dim()) {
        throw dimension_mismatch(model.support().dim(), vectors.front().size());
    }
    const ConstantPredictor base(cfg.base_label);
    std::string out_text;
    for (const auto& v : vectors) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out_text += ',';
            out_text += kfs::detail::full_precision(v[i]);
        }
        out_text += ',';
        out_text += classify(model, v, base);
        out_text += '\n';
    }
    detail::write_file_atomic(cfg.out, out_text);
    std::cout << "classify: labeled " << vectors.size() << " vectors -> " << cfg.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// argument wiring
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
    CLI::App app{"kernel few-shot classifier, bound evaluation and Monte Carlo verification"};
    app.require_subcommand(1);
    std::string config_path;  // shared --config slot; expanded before parsing
    std::uint64_t unused_seed = 0;
    int unused_workers = 0;
    auto add_config_flag = [&](CLI::App* sub, bool randomized = false) {
        sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_option("--config", config_path, "flat key=value config file (flags override)");
        if (!randomized) {
            sub->add_option("--seed", unused_seed, "accepted for grammar uniformity; unused here");
            sub->add_option("--workers", unused_workers,
                            "accepted for grammar uniformity; unused here");
        }
    };

    BoundsConfig bounds_cfg;
    auto* bounds = app.add_subcommand("bounds", "evaluate closed-form bounds over a grid");
    add_config_flag(bounds);
    bounds->add_option("--kernel", bounds_cfg.kernels, "kernel spec list (labels for the rows)");
    bounds->add_option("--n", bounds_cfg.n_list, "dimension list")->required();
    bounds->add_option("--k", bounds_cfg.k, "sample size")->required();
    bounds->add_option("--delta", bounds_cfg.deltas, "delta list")->required();
    bounds->add_option("--epsilon", bounds_cfg.epsilon, "norm slack in (0,1)");
    bounds->add_option("--r", bounds_cfg.r, "support radius");
    bounds->add_option("--A", bounds_cfg.A, "growth constant");
    bounds->add_option("--C", bounds_cfg.C, "volume-ratio constant");
    bounds->add_option("--C-star", bounds_cfg.C_star, "neighborhood volume-ratio constant");
    bounds->add_option("--beta", bounds_cfg.beta, "effective dimension: number or 'n'");
    bounds->add_option("--D", bounds_cfg.D, "support-mean norm D(Z), enables Delta/p_n columns");
    bounds->add_option("--theta", bounds_cfg.theta, "threshold for p_n/p_e columns");
    bounds->add_flag("--normalized,!--as-printed", bounds_cfg.normalized,
                     "normalize p_n bases by r_Y (default on)");
    bounds->add_option("--out", bounds_cfg.out, "output CSV path")->required();

    ExperimentConfig exp_cfg;
    auto* experiment = app.add_subcommand("experiment", "run a seeded Monte Carlo experiment");
    add_config_flag(experiment, /*randomized=*/true);
    experiment->add_option("--name", exp_cfg.name, "experiment name")->required();
    auto* seed_opt = experiment->add_option("--seed", exp_cfg.seed, "master seed (required)");
    experiment->add_option("--workers", exp_cfg.workers, "worker threads (default: hardware)");
    experiment->add_option("--out", exp_cfg.out, "output CSV path")->required();
    experiment->add_option("--kernel", exp_cfg.kernels, "kernel spec list");
    experiment->add_option("--n", exp_cfg.n_list, "dimension list");
    experiment->add_option("--delta", exp_cfg.delta, "quasi-orthogonality level");
    experiment->add_option("--epsilon", exp_cfg.epsilon, "norm slack");
    experiment->add_option("--k", exp_cfg.k, "support sample size");
    experiment->add_option("--trials", exp_cfg.trials, "Monte Carlo trials");
    experiment->add_option("--set-size", exp_cfg.set_size, "separability set size");
    experiment->add_option("--r-x", exp_cfg.r_x, "X-class ball radius");
    experiment->add_option("--r-y", exp_cfg.r_y, "Y-class ball radius");
    experiment->add_option("--c-y-norm", exp_cfg.c_y_norm, "norm of c_Y (along first axis)");
    experiment->add_option("--fit-trials", exp_cfg.fit_trials, "verify-fewshot fit trials");
    experiment->add_option("--eval-draws", exp_cfg.eval_draws, "eval draws per fit");
    experiment->add_option("--theta", exp_cfg.theta, "fixed theta (default: midrange)");
    experiment->add_flag("--normalized,!--as-printed", exp_cfg.normalized,
                         "normalize p_n bases by r_Y (default on)");
    experiment->add_option("--radii", exp_cfg.radii, "estimate-beta radii list");
    experiment->add_option("--samples", exp_cfg.samples, "estimate-beta sample count");
    experiment->add_option("--region", exp_cfg.region, "estimate-beta region: ball|cube");
    experiment->add_option("--region-radius", exp_cfg.region_radius, "ball region radius");
    experiment->add_option("--half-width", exp_cfg.half_width, "cube region half width");
    experiment->add_option("--center", exp_cfg.center, "explicit feature center (linear kernel)");
    experiment->add_option("--anchors", exp_cfg.anchors_file, "anchor-set vectors file");
    experiment->add_option("--bootstrap", exp_cfg.bootstrap, "bootstrap resamples");

    FitConfig fit_cfg;
    auto* fit_cmd = app.add_subcommand("fit", "fit a few-shot model from support vectors");
    add_config_flag(fit_cmd);
    fit_cmd->add_option("--kernel", fit_cfg.kernel, "kernel spec")->required();
    fit_cmd->add_option("--support", fit_cfg.support_file, "support vectors file")->required();
    fit_cmd->add_option("--label", fit_cfg.label, "new-class label");
    fit_cmd->add_option("--r-y", fit_cfg.r_y, "Y-class support radius")->required();
    fit_cmd->add_option("--delta", fit_cfg.delta, "fixed delta in (0,1)");
    fit_cmd->add_flag("--optimize-delta", fit_cfg.optimize_delta, "grid-search delta and theta");
    fit_cmd->add_option("--theta", fit_cfg.theta, "fixed theta");
    fit_cmd->add_option("--theta-policy", fit_cfg.theta_policy, "midrange|optimize");
    fit_cmd->add_option("--A", fit_cfg.A, "growth constant (optimize)");
    fit_cmd->add_option("--C", fit_cfg.C, "volume-ratio constant (optimize)");
    fit_cmd->add_option("--C-star", fit_cfg.C_star, "neighborhood constant (optimize)");
    fit_cmd->add_option("--beta", fit_cfg.beta, "effective dimension: number or 'n' (optimize)");
    fit_cmd->add_option("--r-x", fit_cfg.r_x, "X-class radius (optimize)");
    fit_cmd->add_option("--grid", fit_cfg.grid, "grid resolution per axis");
    fit_cmd->add_flag("--normalized,!--as-printed", fit_cfg.normalized,
                      "normalize p_n bases by r_Y (default on)");
    fit_cmd->add_option("--out", fit_cfg.out, "output model path")->required();

    ClassifyConfig classify_cfg;
    auto* classify_cmd = app.add_subcommand("classify", "label vectors with a fitted model");
    add_config_flag(classify_cmd);
    classify_cmd->add_option("--model", classify_cfg.model_file, "model file")->required();
    classify_cmd->add_option("--vectors", classify_cfg.vectors_file, "vectors file")->required();
    classify_cmd->add_option("--base-label", classify_cfg.base_label,
                             "label the constant base predictor returns");
    classify_cmd->add_option("--out", classify_cfg.out, "output path")->required();

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = detail::expand_config_args(std::move(args));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*bounds) return run_bounds(bounds_cfg);
        if (*experiment) {
            exp_cfg.seed_set = seed_opt->count() > 0;
            return run_experiment(exp_cfg);
        }
        if (*fit_cmd) return run_fit(fit_cfg);
        return run_classify(classify_cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace kfs::cli
