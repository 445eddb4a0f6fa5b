// fhardy: radial solver and solution checker for the singular equation
//   (-Delta)^s u - theta u/|x|^{2s} = u^p - u^q   on R^N.
//
// Subcommands:
//   constants   sharp constants and the exponent map for (N, s[, theta|gamma])
//   solve       constrained minimization + rescaling; writes profile + report
//   verify      re-checks a stored profile; writes a report
//   sweep       solve+verify over parameter lists; writes a table
//
// The worker count for form assembly comes from FHARDY_WORKERS (default: all
// hardware threads).  Exit codes: 0 ok, 2 parse error, 3 domain error,
// 4 non-convergence, 5 verification failure.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fhardy/constants.hpp"
#include "fhardy/forms.hpp"
#include "fhardy/grid.hpp"
#include "fhardy/io.hpp"
#include "fhardy/solver.hpp"
#include "fhardy/verify.hpp"

namespace {

using namespace fhardy;

struct FlagOverrides {
    std::optional<int> dim, nodes, max_iters;
    std::optional<double> s, theta, p, q, r_min, r_max;
    std::optional<std::string> init_shape, theta_values, pq_values;
    std::optional<double> weak_residual_tol, pohozaev_ratio_tol, tail_margin, origin_trend_tol;
    std::optional<double> tail_window_lo, tail_window_hi, origin_r0;

    void apply(RunConfig& cfg) const {
        auto set = [&cfg](const char* key, const auto& opt) {
            if (opt) config_apply(cfg, key, to_string_any(*opt));
        };
        set("dim", dim);
        set("nodes", nodes);
        set("max_iters", max_iters);
        set("s", s);
        set("theta", theta);
        set("p", p);
        set("q", q);
        set("r_min", r_min);
        set("r_max", r_max);
        set("init_shape", init_shape);
        set("theta_values", theta_values);
        set("pq_values", pq_values);
        set("weak_residual_tol", weak_residual_tol);
        set("pohozaev_ratio_tol", pohozaev_ratio_tol);
        set("tail_margin", tail_margin);
        set("origin_trend_tol", origin_trend_tol);
        set("tail_window_lo", tail_window_lo);
        set("tail_window_hi", tail_window_hi);
        set("origin_r0", origin_r0);
    }

    template <typename T>
    static std::string to_string_any(const T& v) {
        if constexpr (std::is_same_v<T, std::string>) return v;
        else if constexpr (std::is_same_v<T, int>) return std::to_string(v);
        else return fhardy::detail::fmt_double(v);
    }
};

void add_override_flags(CLI::App* cmd, FlagOverrides& fo, bool with_sweep_lists) {
    cmd->add_option("--dim", fo.dim, "space dimension N (>= 2)");
    cmd->add_option("--s", fo.s, "fractional order s in (0,1)");
    cmd->add_option("--theta", fo.theta, "Hardy coupling, 0 < theta < Lambda_{N,s}");
    cmd->add_option("--p", fo.p, "focusing exponent");
    cmd->add_option("--q", fo.q, "defocusing exponent, q > p");
    cmd->add_option("--r-min", fo.r_min, "inner grid radius");
    cmd->add_option("--r-max", fo.r_max, "outer grid radius");
    cmd->add_option("--nodes", fo.nodes, "number of radial nodes (>= 16)");
    cmd->add_option("--max-iters", fo.max_iters, "minimizer iteration cap");
    cmd->add_option("--init", fo.init_shape, "initial shape: algebraic_bump | gaussian");
    cmd->add_option("--weak-residual-tol", fo.weak_residual_tol, "verification threshold");
    cmd->add_option("--pohozaev-ratio-tol", fo.pohozaev_ratio_tol, "verification threshold");
    cmd->add_option("--tail-margin", fo.tail_margin, "slack added to the decay slope bound");
    cmd->add_option("--origin-trend-tol", fo.origin_trend_tol, "verification threshold");
    cmd->add_option("--tail-window-lo", fo.tail_window_lo, "tail fit window start (0 = auto)");
    cmd->add_option("--tail-window-hi", fo.tail_window_hi, "tail fit window end (0 = auto)");
    cmd->add_option("--origin-r0", fo.origin_r0, "origin check radius (0 = auto)");
    if (with_sweep_lists) {
        cmd->add_option("--theta-values", fo.theta_values, "comma list of theta values");
        cmd->add_option("--pq-values", fo.pq_values, "semicolon list of p:q pairs");
    }
}

int cmd_constants(int dim, double s, std::optional<double> theta, std::optional<double> gamma,
                  bool as_json) {
    const double lambda = lambda_ns(dim, s);
    const double a = a_ns(dim, s);
    const double ks = extension_constant(s);
    const double crit = critical_exponent(dim, s);
    std::optional<double> gamma_out, psi_out;
    if (theta) gamma_out = gamma_theta(dim, s, *theta);
    if (gamma) psi_out = psi_ns(dim, s, *gamma);

    if (as_json) {
        nlohmann::json j{{"dim", dim},           {"s", s},
                         {"lambda_ns", lambda},  {"a_ns", a},
                         {"k_s", ks},            {"crit_exp", crit},
                         {"version", kArtifactVersion}};
        if (theta) j["theta"] = *theta;
        if (gamma_out) j["gamma_theta"] = *gamma_out;
        if (gamma) j["gamma"] = *gamma;
        if (psi_out) j["psi"] = *psi_out;
        std::printf("%s\n", j.dump(2).c_str());
    } else {
        std::printf("dim        = %d\n", dim);
        std::printf("s          = %.17g\n", s);
        std::printf("lambda_ns  = %.17g\n", lambda);
        std::printf("a_ns       = %.17g\n", a);
        std::printf("k_s        = %.17g\n", ks);
        std::printf("crit_exp   = %.17g   (critical p = %.17g)\n", crit, crit - 1.0);
        if (theta) std::printf("gamma_theta(%.17g) = %.17g\n", *theta, *gamma_out);
        if (gamma) std::printf("psi(%.17g) = %.17g\n", *gamma, *psi_out);
    }
    return kExitOk;
}

struct SolveOutput {
    RadialSolution sol;
    VerificationReport report;
    std::vector<double> trace;
};

SolveOutput run_solve(const RunConfig& cfg) {
    validate_params(cfg.params);
    const Regime regime = regime_classify(cfg.params);
    if (regime == Regime::CriticalNonexistent)
        throw std::domain_error(
            "solve refused: p equals the critical exponent 2N/(N-2s) - 1; in that regime the "
            "problem admits no nontrivial solution (the Pohozaev coefficient of the focusing "
            "term vanishes, forcing u = 0)");
    if (regime == Regime::Invalid)
        throw std::domain_error("solve refused: parameters are outside the admissible region");

    SolveOutput out;
    RadialGrid grid = build_log_grid(cfg.params.dim, cfg.grid.r_min, cfg.grid.r_max,
                                     cfg.grid.nodes);
    FormSet forms = assemble_forms(grid, cfg.params.s);
    MinimizeResult min = minimize_on_manifold(forms, cfg.params, cfg.minimizer);
    out.sol.params = cfg.params;
    out.sol.grid = grid;
    out.sol.lambda = min.lambda;
    out.sol.F_min = min.F_min;
    out.sol.iterations = min.iterations;
    out.sol.converged = min.converged;
    out.sol.u = rescale_to_solution(grid, cfg.params, min.u, min.lambda);
    out.sol.u = newton_polish(forms, cfg.params, out.sol.u);
    continue_past_inner_layer(grid, out.sol.u);
    out.trace = std::move(min.trace);
    out.report = verify_all(forms, grid, cfg.params, out.sol.u, cfg.thresholds);
    return out;
}

int cmd_solve(const RunConfig& cfg, const std::string& out_profile,
              const std::string& out_report, const std::string& trace_path) {
    SolveOutput out = run_solve(cfg);
    write_profile(out_profile, out.sol, cfg);
    write_report(out_report, report_to_json(out.report, cfg, &out.sol));
    if (!trace_path.empty()) {
        std::string tr = "# iter F\n";
        for (std::size_t i = 0; i < out.trace.size(); ++i)
            tr += std::to_string(i) + " " + fhardy::detail::fmt_double(out.trace[i]) + "\n";
        atomic_write(trace_path, tr);
    }
    std::printf("regime      = %s\n", regime_name(out.report.regime));
    std::printf("iterations  = %d (converged = %d)\n", out.sol.iterations,
                static_cast<int>(out.sol.converged));
    std::printf("lambda      = %.12g\n", out.sol.lambda);
    std::printf("F_min       = %.12g\n", out.sol.F_min);
    std::printf("weak_resid  = %.6g\n", out.report.weak_residual);
    std::printf("profile     -> %s\n", out_profile.c_str());
    std::printf("report      -> %s\n", out_report.c_str());
    if (!out.sol.converged) {
        std::fprintf(stderr, "solve: minimizer did not converge\n");
        return kExitNoConvergence;
    }
    return kExitOk;
}

int cmd_verify(const std::string& profile_path, const FlagOverrides& fo,
               const std::string& out_report, const std::string& refined_path) {
    ProfileData pd = read_profile(profile_path);
    RunConfig cfg = pd.config;
    fo.apply(cfg);
    RadialGrid grid = grid_from_profile(pd);
    validate_params(cfg.params);

    std::optional<std::pair<RadialGrid, std::vector<double>>> refined;
    if (!refined_path.empty()) {
        ProfileData rf = read_profile(refined_path);
        const auto& a = cfg.params;
        const auto& b = rf.config.params;
        if (a.dim != b.dim || a.s != b.s || a.theta != b.theta || a.p != b.p || a.q != b.q)
            throw std::invalid_argument(
                "verify: refined profile was solved with different problem parameters");
        refined = std::make_pair(grid_from_profile(rf), rf.u);
    }

    FormSet forms = assemble_forms(grid, cfg.params.s);
    VerificationReport rep = verify_all(forms, grid, cfg.params, pd.u, cfg.thresholds, refined);
    write_report(out_report, report_to_json(rep, cfg));

    std::printf("regime              = %s\n", regime_name(rep.regime));
    std::printf("weak_residual       = %.6g (pass=%d)\n", rep.weak_residual, (int)rep.pass_weak);
    std::printf("pohozaev_ratio      = %.6g expected %.6g (pass=%d)\n", rep.pohozaev_ratio,
                rep.pohozaev_ratio_expected, (int)rep.pass_pohozaev);
    std::printf("tail_slope          = %.6g bound %.6g (pass=%d)\n", rep.tail_slope,
                rep.tail_slope_bound, (int)rep.pass_tail);
    std::printf("monotone_violations = %d (pass=%d)\n", rep.monotone_violations,
                (int)rep.pass_monotone);
    if (refined)
        std::printf("origin_trend        = %.6g (pass=%d)\n", rep.origin_ratio_trend,
                    (int)rep.pass_origin);
    std::printf("report              -> %s\n", out_report.c_str());
    std::printf("all_passed          = %d\n", (int)rep.all_passed);
    return rep.all_passed ? kExitOk : kExitVerificationFailure;
}

int cmd_sweep(const RunConfig& cfg, const std::string& out_table) {
    if (cfg.theta_values.empty() && cfg.pq_values.empty())
        throw std::domain_error("sweep: empty range (set theta_values and/or pq_values)");
    std::vector<double> thetas =
        cfg.theta_values.empty() ? std::vector<double>{cfg.params.theta} : cfg.theta_values;
    std::vector<std::pair<double, double>> pqs =
        cfg.pq_values.empty() ? std::vector<std::pair<double, double>>{{cfg.params.p, cfg.params.q}}
                              : cfg.pq_values;

    RadialGrid grid = build_log_grid(cfg.params.dim, cfg.grid.r_min, cfg.grid.r_max,
                                     cfg.grid.nodes);
    FormSet forms = assemble_forms(grid, cfg.params.s);  // shared across points

    std::vector<SweepRow> rows;
    int successes = 0;
    for (const double theta : thetas) {
        for (const auto& [p, q] : pqs) {
            ProblemParams pp = cfg.params;
            pp.theta = theta;
            pp.p = p;
            pp.q = q;
            SweepRow row;
            row.theta = theta;
            row.p = p;
            row.q = q;
            const Regime regime = regime_classify(pp);
            if (regime == Regime::CriticalNonexistent || regime == Regime::Invalid) {
                row.status = "SKIPPED";
                row.reason = regime_name(regime);
                rows.push_back(row);
                std::printf("theta=%-10.6g p=%-8g q=%-8g SKIPPED (%s)\n", theta, p, q,
                            row.reason.c_str());
                continue;
            }
            try {
                RadialSolution sol = solve_problem(forms, pp, cfg.minimizer);
                VerificationReport rep = verify_all(forms, grid, pp, sol.u, cfg.thresholds);
                row.gamma_theta = rep.gamma_theta;
                row.lambda = sol.lambda;
                row.F_min = sol.F_min;
                row.weak_residual = rep.weak_residual;
                row.pohozaev_ratio = rep.pohozaev_ratio;
                row.tail_slope = rep.tail_slope;
                row.monotone_violations = rep.monotone_violations;
                row.passed = sol.converged && rep.all_passed;
                row.status = row.passed ? "OK" : "FAIL";
                if (!sol.converged) row.reason = "no_convergence";
                else if (!rep.all_passed) row.reason = "verification";
                if (row.passed) ++successes;
            } catch (const std::exception& e) {
                row.status = "FAIL";
                row.reason = e.what();
            }
            rows.push_back(row);
            std::printf("theta=%-10.6g p=%-8g q=%-8g %s gamma=%.6g lambda=%.6g\n", theta, p, q,
                        row.status.c_str(), row.gamma_theta, row.lambda);
        }
    }
    atomic_write(out_table, sweep_table_to_text(rows, cfg));
    std::printf("table -> %s (%d/%zu points passed)\n", out_table.c_str(), successes,
                rows.size());
    return successes > 0 ? kExitOk : kExitNoConvergence;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radial solver and solution checker for the fractional Hardy equation "
                 "(-Delta)^s u - theta u/|x|^{2s} = u^p - u^q"};
    app.require_subcommand(1);

    // constants
    auto* c_const = app.add_subcommand("constants", "print sharp constants and the exponent map");
    int cdim = 3;
    double cs = 0.5;
    std::optional<double> ctheta, cgamma;
    bool cjson = false;
    c_const->add_option("--dim", cdim, "space dimension N")->required();
    c_const->add_option("--s", cs, "fractional order s")->required();
    c_const->add_option("--theta", ctheta, "invert the exponent map at theta");
    c_const->add_option("--gamma", cgamma, "evaluate the exponent map at gamma");
    c_const->add_flag("--json", cjson, "machine readable output");

    // solve
    auto* c_solve = app.add_subcommand("solve", "solve the equation on a radial grid");
    std::string s_config, s_profile = "fhardy_profile.txt", s_report = "fhardy_report.json",
                s_trace;
    FlagOverrides s_fo;
    c_solve->add_option("--config", s_config, "config file (flags override its keys)");
    c_solve->add_option("--out-profile", s_profile, "profile output path");
    c_solve->add_option("--out-report", s_report, "report output path");
    c_solve->add_option("--trace", s_trace, "write the F iteration trace here");
    add_override_flags(c_solve, s_fo, false);

    // verify
    auto* c_verify = app.add_subcommand("verify", "verify a stored profile");
    std::string v_profile, v_report = "fhardy_report.json", v_refined;
    FlagOverrides v_fo;
    c_verify->add_option("profile", v_profile, "profile file to verify")->required();
    c_verify->add_option("--out-report", v_report, "report output path");
    c_verify->add_option("--refined-profile", v_refined,
                         "profile from a refined solve (enables the origin trend check)");
    add_override_flags(c_verify, v_fo, false);

    // sweep
    auto* c_sweep = app.add_subcommand("sweep", "solve+verify over parameter lists");
    std::string w_config, w_table = "fhardy_sweep.tsv";
    FlagOverrides w_fo;
    c_sweep->add_option("--config", w_config, "config file (flags override its keys)");
    c_sweep->add_option("--out-table", w_table, "table output path");
    add_override_flags(c_sweep, w_fo, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : fhardy::kExitParseError;
    }

    try {
        if (*c_const) return cmd_constants(cdim, cs, ctheta, cgamma, cjson);
        if (*c_solve) {
            RunConfig cfg;
            if (!s_config.empty()) cfg = parse_config_file(s_config);
            s_fo.apply(cfg);
            return cmd_solve(cfg, s_profile, s_report, s_trace);
        }
        if (*c_verify) {
            return cmd_verify(v_profile, v_fo, v_report, v_refined);
        }
        if (*c_sweep) {
            RunConfig cfg;
            if (!w_config.empty()) cfg = parse_config_file(w_config);
            w_fo.apply(cfg);
            return cmd_sweep(cfg, w_table);
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return fhardy::kExitParseError;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return fhardy::kExitDomainError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return fhardy::kExitNoConvergence;
    }
    return fhardy::kExitParseError;
}
