#pragma once

// Numerical pass/fail checks on a computed radial profile: the scalar
// Pohozaev balance, the critical-exponent nonexistence guard, the fitted
// decay slope against the radial a-priori bound, boundedness of r^gamma u at
// the origin under grid refinement, and radial monotonicity.  Check failures
// are data, never exceptions.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fhardy/constants.hpp"
#include "fhardy/forms.hpp"
#include "fhardy/grid.hpp"
#include "fhardy/solver.hpp"

namespace fhardy {

/// Pohozaev coefficient c_m = (N-2s)/2 - N/(m+1); c_p vanishes exactly at
/// the critical exponent p = 2N/(N-2s) - 1.
inline double pohozaev_coefficient(int dim, double s, double m) {
    return 0.5 * (dim - 2.0 * s) - dim / (m + 1.0);
}

struct PohozaevResult {
    double residual = 0;  ///< |c_p I_{p+1} - c_q I_{q+1}| / (|c_p| I_{p+1} + |c_q| I_{q+1})
    double ratio = 0;     ///< I_{q+1} / I_{p+1}; equals c_p/c_q for exact solutions
};

/// Scalar Pohozaev balance c_p I_{p+1} = c_q I_{q+1} for solutions of the
/// full equation (the Hardy contributions cancel identically).
inline PohozaevResult pohozaev_check(const RadialGrid& grid, const ProblemParams& pp,
                                     std::span<const double> u) {
    const double ip = detail::lp_mass(grid, u, pp.p + 1.0);
    const double iq = detail::lp_mass(grid, u, pp.q + 1.0);
    if (!(ip > 0.0) && !(iq > 0.0))
        throw std::domain_error("pohozaev_check: both masses vanish (degenerate profile)");
    const double cp = pohozaev_coefficient(pp.dim, pp.s, pp.p);
    const double cq = pohozaev_coefficient(pp.dim, pp.s, pp.q);
    PohozaevResult out;
    const double denom = std::abs(cp) * ip + std::abs(cq) * iq;
    out.residual = denom > 0.0 ? std::abs(cp * ip - cq * iq) / denom : 0.0;
    out.ratio = ip > 0.0 ? iq / ip : std::numeric_limits<double>::infinity();
    return out;
}

/// True exactly in the nonexistence regime p = 2*_s - 1: solve and verify
/// pipelines refuse to certify any profile there.
inline bool criticality_guard(const ProblemParams& pp) {
    return is_critical_p(pp.dim, pp.s, pp.p);
}

/// Least-squares slope of log u against log r over the window.  Solutions
/// must decay at least like the radial bound r^{-(N-2s)/2}.
inline double tail_slope(const RadialGrid& grid, std::span<const double> u,
                         std::pair<double, double> window) {
    if (static_cast<int>(u.size()) != grid.size())
        throw std::invalid_argument("tail_slope: length mismatch");
    if (!(window.first > grid.r_min && window.second < grid.r_max && window.first < window.second))
        throw std::invalid_argument("tail_slope: window must sit strictly inside (r_min, r_max)");
    double st = 0, su = 0, stt = 0, stu = 0;
    int count = 0;
    for (int i = 0; i < grid.size(); ++i) {
        const double r = grid.nodes[i];
        if (r < window.first || r > window.second) continue;
        if (!(u[i] > 0.0))
            throw std::domain_error("tail_slope: non-positive profile value inside the window");
        const double t = std::log(r), y = std::log(u[i]);
        st += t; su += y; stt += t * t; stu += t * y;
        ++count;
    }
    if (count < 8) throw std::invalid_argument("tail_slope: window contains fewer than 8 nodes");
    return (count * stu - st * su) / (count * stt - st * st);
}

/// sup of r^gamma u over the nodes below r0; bounded behavior at the origin
/// is tested through the growth of this sup under grid refinement.
inline double origin_boundedness(const RadialGrid& grid, std::span<const double> u, double gamma,
                                 double r0) {
    if (static_cast<int>(u.size()) != grid.size())
        throw std::invalid_argument("origin_boundedness: length mismatch");
    if (!(r0 > grid.r_min)) throw std::invalid_argument("origin_boundedness: r0 below the grid");
    double sup = -std::numeric_limits<double>::infinity();
    int count = 0;
    for (int i = 0; i < grid.size() && grid.nodes[i] < r0; ++i) {
        sup = std::max(sup, std::pow(grid.nodes[i], gamma) * u[i]);
        ++count;
    }
    if (count == 0) throw std::invalid_argument("origin_boundedness: no nodes below r0");
    return sup;
}

/// Number of radial ascents u_{i+1} > u_i + 1e-10 max(u); certified
/// solutions must be radially nonincreasing (zero ascents).
inline int monotonicity_check(std::span<const double> u) {
    if (u.empty()) return 0;
    double peak = 0.0;
    for (double v : u) peak = std::max(peak, std::abs(v));
    const double tol = 1e-10 * peak;
    int violations = 0;
    for (std::size_t i = 0; i + 1 < u.size(); ++i)
        if (u[i + 1] > u[i] + tol) ++violations;
    return violations;
}

struct VerifyThresholds {
    double weak_residual_tol = 0.02;
    double pohozaev_ratio_tol = 0.05;  ///< relative deviation of I_{q+1}/I_{p+1} from c_p/c_q
    double tail_margin = 0.1;          ///< pass when slope <= -(N-2s)/2 + margin
    double origin_trend_tol = 0.10;    ///< relative sup growth allowed under refinement
    double tail_window_lo = 0;         ///< 0 = auto (r_max/10)
    double tail_window_hi = 0;         ///< 0 = auto (r_max/2)
    double origin_r0 = 0;              ///< 0 = auto (100 r_min)
};

struct VerificationReport {
    double pohozaev_residual = 1;
    double pohozaev_ratio = 0;
    double pohozaev_ratio_expected = 0;
    double tail_slope = 0;
    double tail_slope_bound = 0;                                      ///< -(N-2s)/2 + margin
    double origin_ratio_trend = std::numeric_limits<double>::quiet_NaN();  ///< NaN when refinement absent
    int monotone_violations = 0;
    double weak_residual = 1;
    Regime regime = Regime::Invalid;
    double gamma_theta = 0;

    bool pass_pohozaev = false;
    bool pass_tail = false;
    bool pass_origin = true;  ///< vacuous when no refined profile was supplied
    bool pass_monotone = false;
    bool pass_weak = false;
    bool pass_regime = false;  ///< false in the nonexistence or invalid regimes
    bool all_passed = false;
    std::string notes;
};

/// Runs every check and fills the report; check failures never throw.
/// The origin trend needs a second solve on a refined grid (doubled M,
/// r_min/10); pass std::nullopt to skip that check.
inline VerificationReport verify_all(
    const FormSet& forms, const RadialGrid& grid, const ProblemParams& pp,
    std::span<const double> u, const VerifyThresholds& thr = {},
    const std::optional<std::pair<RadialGrid, std::vector<double>>>& refined = std::nullopt) {
    if (static_cast<int>(u.size()) != grid.size())
        throw std::invalid_argument("verify_all: length mismatch");

    VerificationReport rep;
    rep.regime = regime_classify(pp);
    rep.pass_regime = (rep.regime == Regime::SupercriticalQualitative ||
                       rep.regime == Regime::SupercriticalExistenceOnly);
    if (rep.regime == Regime::CriticalNonexistent)
        rep.notes += "nonexistence regime: certification refused; ";

    try {
        rep.gamma_theta = gamma_theta(pp.dim, pp.s, pp.theta);
    } catch (const std::exception&) {
        rep.gamma_theta = std::numeric_limits<double>::quiet_NaN();
    }

    // Pohozaev balance
    try {
        const auto pz = pohozaev_check(grid, pp, u);
        rep.pohozaev_residual = pz.residual;
        rep.pohozaev_ratio = pz.ratio;
        const double cp = pohozaev_coefficient(pp.dim, pp.s, pp.p);
        const double cq = pohozaev_coefficient(pp.dim, pp.s, pp.q);
        rep.pohozaev_ratio_expected = cq != 0.0 ? cp / cq : 0.0;
        rep.pass_pohozaev =
            rep.pohozaev_ratio_expected > 0.0 &&
            std::abs(pz.ratio - rep.pohozaev_ratio_expected) <=
                thr.pohozaev_ratio_tol * rep.pohozaev_ratio_expected;
    } catch (const std::exception& e) {
        rep.notes += std::string("pohozaev: ") + e.what() + "; ";
        rep.pass_pohozaev = false;
    }

    // tail decay
    const double wlo = thr.tail_window_lo > 0 ? thr.tail_window_lo : grid.r_max / 10.0;
    const double whi = thr.tail_window_hi > 0 ? thr.tail_window_hi : grid.r_max / 2.0;
    rep.tail_slope_bound = -0.5 * (pp.dim - 2.0 * pp.s) + thr.tail_margin;
    try {
        rep.tail_slope = tail_slope(grid, u, {wlo, whi});
        rep.pass_tail = rep.tail_slope <= rep.tail_slope_bound;
    } catch (const std::exception& e) {
        rep.notes += std::string("tail: ") + e.what() + "; ";
        rep.tail_slope = std::numeric_limits<double>::quiet_NaN();
        rep.pass_tail = false;
    }

    // origin boundedness trend under refinement
    if (refined) {
        const double r0 = thr.origin_r0 > 0 ? thr.origin_r0 : 100.0 * grid.r_min;
        try {
            const double base = origin_boundedness(grid, u, rep.gamma_theta, r0);
            const double fine =
                origin_boundedness(refined->first, refined->second, rep.gamma_theta, r0);
            rep.origin_ratio_trend = (fine - base) / std::max(base, 1e-300);
            rep.pass_origin = rep.origin_ratio_trend < thr.origin_trend_tol;
        } catch (const std::exception& e) {
            rep.notes += std::string("origin: ") + e.what() + "; ";
            rep.pass_origin = false;
        }
    }

    // monotonicity
    rep.monotone_violations = monotonicity_check(u);
    rep.pass_monotone = (rep.monotone_violations == 0);

    // weak residual
    try {
        rep.weak_residual = weak_residual(forms, grid, pp, u);
        rep.pass_weak = rep.weak_residual <= thr.weak_residual_tol;
    } catch (const std::exception& e) {
        rep.notes += std::string("weak: ") + e.what() + "; ";
        rep.pass_weak = false;
    }

    rep.all_passed = rep.pass_regime && rep.pass_pohozaev && rep.pass_tail && rep.pass_origin &&
                     rep.pass_monotone && rep.pass_weak;
    return rep;
}

}  // namespace fhardy
