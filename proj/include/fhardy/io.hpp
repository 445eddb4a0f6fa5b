#pragma once

// File formats and configuration plumbing for the CLI:
//   config   flat "key = value" text, '#' comments, CLI flags override
//   profile  delimited text, columns (r, u, v_gamma), '# cfg:' header lines
//            carrying the full effective configuration
//   report   JSON document with a fixed schema version
//   table    one row per sweep point, tab separated
// Every output embeds the effective configuration and the artifact version;
// re-running from an embedded config reproduces the numbers bit for bit.
// All files are written atomically (temp file + rename).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhardy/constants.hpp"
#include "fhardy/grid.hpp"
#include "fhardy/solver.hpp"
#include "fhardy/verify.hpp"

namespace fhardy {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr int kProfileFormatVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

/// Process exit codes shared by all CLI commands.
enum ExitCode {
    kExitOk = 0,
    kExitParseError = 2,
    kExitDomainError = 3,
    kExitNoConvergence = 4,
    kExitVerificationFailure = 5,
};

struct GridSpec {
    double r_min = 1e-3;
    double r_max = 1e2;
    int nodes = 512;
};

struct RunConfig {
    ProblemParams params{3, 0.5, 0.3183098861837907, 3.0, 6.0};
    GridSpec grid;
    MinimizerConfig minimizer;
    VerifyThresholds thresholds;
    std::vector<double> theta_values;               ///< sweep: explicit theta list
    std::vector<std::pair<double, double>> pq_values;  ///< sweep: explicit (p,q) list
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_pq_list(const std::vector<std::pair<double, double>>& pq) {
    std::string out;
    for (std::size_t i = 0; i < pq.size(); ++i) {
        if (i) out += ";";
        out += fmt_double(pq[i].first) + ":" + fmt_double(pq[i].second);
    }
    return out;
}

inline std::string fmt_list(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += fmt_double(xs[i]);
    }
    return out;
}

inline std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

inline std::vector<std::pair<double, double>> parse_pq_list(const std::string& text) {
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("pq_values: expected 'p:q' pairs separated by ';'");
        out.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    }
    return out;
}

inline std::string init_shape_name(InitShape s) {
    switch (s) {
        case InitShape::AlgebraicBump: return "algebraic_bump";
        case InitShape::Gaussian: return "gaussian";
        case InitShape::UserProfile: return "user_profile";
    }
    return "algebraic_bump";
}

inline InitShape parse_init_shape(const std::string& name) {
    if (name == "algebraic_bump") return InitShape::AlgebraicBump;
    if (name == "gaussian") return InitShape::Gaussian;
    if (name == "user_profile") return InitShape::UserProfile;
    throw std::invalid_argument("init_shape: unknown value '" + name + "'");
}

}  // namespace detail

/// The full effective configuration as ordered key/value pairs; this list is
/// what every output file embeds.
inline std::vector<std::pair<std::string, std::string>> config_to_pairs(const RunConfig& c) {
    using detail::fmt_double;
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("dim", std::to_string(c.params.dim));
    kv.emplace_back("s", fmt_double(c.params.s));
    kv.emplace_back("theta", fmt_double(c.params.theta));
    kv.emplace_back("p", fmt_double(c.params.p));
    kv.emplace_back("q", fmt_double(c.params.q));
    kv.emplace_back("r_min", fmt_double(c.grid.r_min));
    kv.emplace_back("r_max", fmt_double(c.grid.r_max));
    kv.emplace_back("nodes", std::to_string(c.grid.nodes));
    kv.emplace_back("max_iters", std::to_string(c.minimizer.max_iters));
    kv.emplace_back("step_init", fmt_double(c.minimizer.step_init));
    kv.emplace_back("backtrack_factor", fmt_double(c.minimizer.backtrack_factor));
    kv.emplace_back("tol_rel_f", fmt_double(c.minimizer.tol_rel_F));
    kv.emplace_back("tol_constraint", fmt_double(c.minimizer.tol_constraint));
    kv.emplace_back("grad_tol", fmt_double(c.minimizer.grad_tol));
    kv.emplace_back("init_shape", detail::init_shape_name(c.minimizer.init_shape));
    kv.emplace_back("weak_residual_tol", fmt_double(c.thresholds.weak_residual_tol));
    kv.emplace_back("pohozaev_ratio_tol", fmt_double(c.thresholds.pohozaev_ratio_tol));
    kv.emplace_back("tail_margin", fmt_double(c.thresholds.tail_margin));
    kv.emplace_back("origin_trend_tol", fmt_double(c.thresholds.origin_trend_tol));
    kv.emplace_back("tail_window_lo", fmt_double(c.thresholds.tail_window_lo));
    kv.emplace_back("tail_window_hi", fmt_double(c.thresholds.tail_window_hi));
    kv.emplace_back("origin_r0", fmt_double(c.thresholds.origin_r0));
    if (!c.theta_values.empty()) kv.emplace_back("theta_values", detail::fmt_list(c.theta_values));
    if (!c.pq_values.empty()) kv.emplace_back("pq_values", detail::fmt_pq_list(c.pq_values));
    return kv;
}

/// Applies one key; returns false for unknown keys.
inline bool config_apply(RunConfig& c, const std::string& key, const std::string& value) {
    try {
        if (key == "dim") c.params.dim = std::stoi(value);
        else if (key == "s") c.params.s = std::stod(value);
        else if (key == "theta") c.params.theta = std::stod(value);
        else if (key == "p") c.params.p = std::stod(value);
        else if (key == "q") c.params.q = std::stod(value);
        else if (key == "r_min") c.grid.r_min = std::stod(value);
        else if (key == "r_max") c.grid.r_max = std::stod(value);
        else if (key == "nodes") c.grid.nodes = std::stoi(value);
        else if (key == "max_iters") c.minimizer.max_iters = std::stoi(value);
        else if (key == "step_init") c.minimizer.step_init = std::stod(value);
        else if (key == "backtrack_factor") c.minimizer.backtrack_factor = std::stod(value);
        else if (key == "tol_rel_f") c.minimizer.tol_rel_F = std::stod(value);
        else if (key == "tol_constraint") c.minimizer.tol_constraint = std::stod(value);
        else if (key == "grad_tol") c.minimizer.grad_tol = std::stod(value);
        else if (key == "init_shape") c.minimizer.init_shape = detail::parse_init_shape(value);
        else if (key == "weak_residual_tol") c.thresholds.weak_residual_tol = std::stod(value);
        else if (key == "pohozaev_ratio_tol") c.thresholds.pohozaev_ratio_tol = std::stod(value);
        else if (key == "tail_margin") c.thresholds.tail_margin = std::stod(value);
        else if (key == "origin_trend_tol") c.thresholds.origin_trend_tol = std::stod(value);
        else if (key == "tail_window_lo") c.thresholds.tail_window_lo = std::stod(value);
        else if (key == "tail_window_hi") c.thresholds.tail_window_hi = std::stod(value);
        else if (key == "origin_r0") c.thresholds.origin_r0 = std::stod(value);
        else if (key == "theta_values") c.theta_values = detail::parse_list(value);
        else if (key == "pq_values") c.pq_values = detail::parse_pq_list(value);
        else return false;
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad value '" + value + "' for key '" + key + "'");
    }
    return true;
}

/// Parses config text: "key = value" lines, '#' comments.  Lines prefixed
/// "# cfg:" are accepted too, so a profile file doubles as a config file.
inline RunConfig parse_config_text(const std::string& text, const RunConfig& base = {}) {
    RunConfig cfg = base;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::string body = line;
        const auto cfgmark = body.find("# cfg:");
        if (cfgmark != std::string::npos) {
            body = body.substr(cfgmark + 6);
        } else {
            const auto hash = body.find('#');
            if (hash != std::string::npos) body = body.substr(0, hash);
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string t) {
            const auto b = t.find_first_not_of(" \t\r");
            const auto e = t.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
        };
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) continue;
        if (!config_apply(cfg, key, value))
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
    }
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path, const RunConfig& base = {}) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), base);
}

/// Writes content to path via a temp file and an atomic rename.
inline void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out << content;
        if (!out) throw std::runtime_error("short write to '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// profile files

struct ProfileData {
    RunConfig config;
    double lambda = 0;
    double F_min = 0;
    int iterations = 0;
    bool converged = false;
    double gamma_theta = 0;
    std::vector<double> r, u, v_gamma;
};

inline std::string profile_to_text(const RadialSolution& sol, const RunConfig& cfg) {
    const double gth = gamma_theta(sol.params.dim, sol.params.s, sol.params.theta);
    std::string out;
    out += "# fhardy profile format " + std::to_string(kProfileFormatVersion) + "\n";
    out += "# version = ";
    out += kArtifactVersion;
    out += "\n";
    for (const auto& [k, v] : config_to_pairs(cfg)) out += "# cfg: " + k + " = " + v + "\n";
    out += "# lambda = " + detail::fmt_double(sol.lambda) + "\n";
    out += "# F_min = " + detail::fmt_double(sol.F_min) + "\n";
    out += "# iterations = " + std::to_string(sol.iterations) + "\n";
    out += "# converged = " + std::string(sol.converged ? "1" : "0") + "\n";
    out += "# gamma_theta = " + detail::fmt_double(gth) + "\n";
    out += "# columns: r u v_gamma\n";
    for (int i = 0; i < sol.grid.size(); ++i) {
        out += detail::fmt_double(sol.grid.nodes[i]) + " " + detail::fmt_double(sol.u[i]) + " " +
               detail::fmt_double(std::pow(sol.grid.nodes[i], gth) * sol.u[i]) + "\n";
    }
    return out;
}

inline void write_profile(const std::string& path, const RadialSolution& sol,
                          const RunConfig& cfg) {
    atomic_write(path, profile_to_text(sol, cfg));
}

inline ProfileData read_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("profile: cannot open '" + path + "'");
    ProfileData pd;
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    pd.config = parse_config_text(text);
    std::stringstream ss(text);
    std::string line;
    bool saw_header = false;
    while (std::getline(ss, line)) {
        if (line.rfind("# fhardy profile", 0) == 0) saw_header = true;
        if (line.rfind("# lambda =", 0) == 0) pd.lambda = std::stod(line.substr(10));
        else if (line.rfind("# F_min =", 0) == 0) pd.F_min = std::stod(line.substr(9));
        else if (line.rfind("# iterations =", 0) == 0) pd.iterations = std::stoi(line.substr(14));
        else if (line.rfind("# converged =", 0) == 0) pd.converged = std::stoi(line.substr(13)) != 0;
        else if (line.rfind("# gamma_theta =", 0) == 0) pd.gamma_theta = std::stod(line.substr(15));
        else if (!line.empty() && line[0] != '#') {
            std::stringstream row(line);
            double r = 0, u = 0, vg = 0;
            if (!(row >> r >> u >> vg))
                throw std::invalid_argument("profile: malformed data row '" + line + "'");
            pd.r.push_back(r);
            pd.u.push_back(u);
            pd.v_gamma.push_back(vg);
        }
    }
    if (!saw_header) throw std::invalid_argument("profile: missing format header");
    if (static_cast<int>(pd.r.size()) != pd.config.grid.nodes)
        throw std::invalid_argument("profile: row count does not match nodes");
    return pd;
}

/// Rebuilds the grid named by a profile's config and checks the stored radii
/// against it (structural error on mismatch).
inline RadialGrid grid_from_profile(const ProfileData& pd) {
    RadialGrid g = build_log_grid(pd.config.params.dim, pd.config.grid.r_min,
                                  pd.config.grid.r_max, pd.config.grid.nodes);
    for (int i = 0; i < g.size(); ++i) {
        const double ref = g.nodes[i];
        if (std::abs(pd.r[i] - ref) > 1e-12 * ref)
            throw std::invalid_argument("profile: stored radii do not match the grid spec");
    }
    return g;
}

// ---------------------------------------------------------------------------
// report files

inline nlohmann::json report_to_json(const VerificationReport& rep, const RunConfig& cfg,
                                     const RadialSolution* sol = nullptr) {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["version"] = kArtifactVersion;
    nlohmann::json jc;
    for (const auto& [k, v] : config_to_pairs(cfg)) jc[k] = v;
    j["config"] = jc;
    if (sol) {
        j["solve"] = {{"lambda", sol->lambda},
                      {"F_min", sol->F_min},
                      {"iterations", sol->iterations},
                      {"converged", sol->converged}};
    }
    j["checks"] = {
        {"regime", regime_name(rep.regime)},
        {"gamma_theta", rep.gamma_theta},
        {"pohozaev_residual", rep.pohozaev_residual},
        {"pohozaev_ratio", rep.pohozaev_ratio},
        {"pohozaev_ratio_expected", rep.pohozaev_ratio_expected},
        {"tail_slope", rep.tail_slope},
        {"tail_slope_bound", rep.tail_slope_bound},
        {"origin_ratio_trend", rep.origin_ratio_trend},
        {"monotone_violations", rep.monotone_violations},
        {"weak_residual", rep.weak_residual},
    };
    j["passed"] = {
        {"regime", rep.pass_regime},   {"pohozaev", rep.pass_pohozaev},
        {"tail", rep.pass_tail},       {"origin", rep.pass_origin},
        {"monotone", rep.pass_monotone}, {"weak_residual", rep.pass_weak},
        {"all", rep.all_passed},
    };
    if (!rep.notes.empty()) j["notes"] = rep.notes;
    return j;
}

inline void write_report(const std::string& path, const nlohmann::json& j) {
    atomic_write(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// sweep tables

struct SweepRow {
    double theta = 0, p = 0, q = 0;
    std::string status;  // "OK", "FAIL", "SKIPPED"
    std::string reason;
    double gamma_theta = 0, lambda = 0, F_min = 0;
    double weak_residual = 0, pohozaev_ratio = 0, tail_slope = 0;
    int monotone_violations = 0;
    bool passed = false;
};

inline std::string sweep_table_to_text(const std::vector<SweepRow>& rows, const RunConfig& cfg) {
    std::string out;
    out += "# fhardy sweep table format 1\n";
    out += "# version = ";
    out += kArtifactVersion;
    out += "\n";
    for (const auto& [k, v] : config_to_pairs(cfg)) out += "# cfg: " + k + " = " + v + "\n";
    out += "# columns: theta\tp\tq\tstatus\tgamma_theta\tlambda\tF_min\tweak_residual\t"
           "pohozaev_ratio\ttail_slope\tmonotone_violations\tpassed\treason\n";
    for (const auto& r : rows) {
        out += detail::fmt_double(r.theta) + "\t" + detail::fmt_double(r.p) + "\t" +
               detail::fmt_double(r.q) + "\t" + r.status + "\t";
        if (r.status == "SKIPPED") {
            out += "-\t-\t-\t-\t-\t-\t-\t0\t" + r.reason + "\n";
        } else {
            out += detail::fmt_double(r.gamma_theta) + "\t" + detail::fmt_double(r.lambda) + "\t" +
                   detail::fmt_double(r.F_min) + "\t" + detail::fmt_double(r.weak_residual) +
                   "\t" + detail::fmt_double(r.pohozaev_ratio) + "\t" +
                   detail::fmt_double(r.tail_slope) + "\t" +
                   std::to_string(r.monotone_violations) + "\t" + (r.passed ? "1" : "0") + "\t" +
                   (r.reason.empty() ? "-" : r.reason) + "\n";
        }
    }
    return out;
}

}  // namespace fhardy
