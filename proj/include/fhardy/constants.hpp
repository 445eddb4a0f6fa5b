#pragma once

// Sharp constants of the fractional Hardy operator, the exponent map
// Psi_{N,s} with its inversion, and admissibility classification of the
// problem parameters (N, s, theta, p, q).
//
// All Gamma-function ratios are evaluated in log space and exponentiated
// once, so large arguments (N up to a few tens) do not overflow.

#include <cmath>
#include <stdexcept>
#include <string>

namespace fhardy {

namespace detail {

inline double log_gamma(double x) {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);  // thread-safe, sign discarded (we only need |Gamma|)
#else
    return std::lgamma(x);
#endif
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::domain_error(msg);
}

}  // namespace detail

/// Absolute tolerance used to detect the critical exponent p = 2N/(N-2s) - 1.
inline constexpr double kCriticalExponentTol = 1e-12;

/// Problem data for (-Delta)^s u - theta*u/|x|^{2s} = u^p - u^q on R^N.
struct ProblemParams {
    int dim = 3;       ///< space dimension N >= 2, N > 2s
    double s = 0.5;    ///< fractional order, s in (0,1)
    double theta = 0;  ///< Hardy coupling, 0 < theta < Lambda_{N,s}
    double p = 0;      ///< focusing power
    double q = 0;      ///< defocusing power, q > p
};

/// Regime of (N, s, theta, p, q).
enum class Regime {
    CriticalNonexistent,         ///< p = 2*_s - 1: no nontrivial solution exists
    SupercriticalQualitative,    ///< p > 2*_s - 1 and q+1 > (p-1)N/(2s): existence + symmetry/decay
    SupercriticalExistenceOnly,  ///< p > 2*_s - 1 but q+1 <= (p-1)N/(2s): existence only
    Invalid,                     ///< parameters violate the structural constraints
};

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::CriticalNonexistent: return "CRITICAL_NONEXISTENT";
        case Regime::SupercriticalQualitative: return "SUPERCRITICAL_QUALITATIVE";
        case Regime::SupercriticalExistenceOnly: return "SUPERCRITICAL_EXISTENCE_ONLY";
        case Regime::Invalid: return "INVALID";
    }
    return "INVALID";
}

/// Critical Sobolev exponent 2*_s = 2N/(N - 2s).
inline double critical_exponent(int dim, double s) {
    detail::require(s > 0.0 && s < 1.0, "critical_exponent: s must lie in (0,1)");
    detail::require(dim > 2.0 * s, "critical_exponent: need N > 2s");
    return 2.0 * dim / (dim - 2.0 * s);
}

/// Sharp constant of the fractional Hardy inequality,
/// Lambda_{N,s} = 2^{2s} Gamma^2((N+2s)/4) / Gamma^2((N-2s)/4).
inline double lambda_ns(int dim, double s) {
    detail::require(s > 0.0 && s < 1.0, "lambda_ns: s must lie in (0,1)");
    detail::require(dim > 2.0 * s, "lambda_ns: need N > 2s");
    const double lg = 2.0 * s * std::log(2.0)
                    + 2.0 * detail::log_gamma((dim + 2.0 * s) / 4.0)
                    - 2.0 * detail::log_gamma((dim - 2.0 * s) / 4.0);
    return std::exp(lg);
}

/// Normalization of the singular-integral fractional Laplacian,
/// a_{N,s} = 4^s Gamma(N/2 + s) / (pi^{N/2} |Gamma(-s)|).
inline double a_ns(int dim, double s) {
    detail::require(s > 0.0 && s < 1.0, "a_ns: s must lie strictly inside (0,1)");
    detail::require(dim >= 1, "a_ns: need N >= 1");
    const double lg = s * std::log(4.0)
                    + detail::log_gamma(dim / 2.0 + s)
                    - 0.5 * dim * std::log(M_PI)
                    - detail::log_gamma(-s);  // log|Gamma(-s)|
    return std::exp(lg);
}

/// Constant relating the extension's conormal derivative to (-Delta)^s,
/// k_s = 2^{1-2s} Gamma(1-s) / Gamma(s).
inline double extension_constant(double s) {
    detail::require(s > 0.0 && s < 1.0, "extension_constant: s must lie in (0,1)");
    const double lg = (1.0 - 2.0 * s) * std::log(2.0)
                    + detail::log_gamma(1.0 - s)
                    - detail::log_gamma(s);
    return std::exp(lg);
}

/// Exponent map Psi_{N,s}(gamma) on [0, (N-2s)/2]:
///   Psi = 2^{2s} Gamma((gamma+2s)/2) Gamma((N-gamma)/2)
///       / (Gamma((N-gamma-2s)/2) Gamma(gamma/2)),
/// strictly increasing from Psi(0) = 0 (pole of Gamma(gamma/2) kills the
/// ratio; defined by continuity) to Psi((N-2s)/2) = Lambda_{N,s}.
inline double psi_ns(int dim, double s, double gamma) {
    detail::require(s > 0.0 && s < 1.0, "psi_ns: s must lie in (0,1)");
    detail::require(dim > 2.0 * s, "psi_ns: need N > 2s");
    const double gmax = 0.5 * (dim - 2.0 * s);
    detail::require(gamma >= 0.0 && gamma <= gmax, "psi_ns: gamma outside [0, (N-2s)/2]");
    if (gamma == 0.0) return 0.0;
    const double lg = 2.0 * s * std::log(2.0)
                    + detail::log_gamma((gamma + 2.0 * s) / 2.0)
                    + detail::log_gamma((dim - gamma) / 2.0)
                    - detail::log_gamma((dim - gamma - 2.0 * s) / 2.0)
                    - detail::log_gamma(gamma / 2.0);
    return std::exp(lg);
}

/// Inverts Psi_{N,s}: the unique gamma in (0, (N-2s)/2) with Psi(gamma) = theta.
/// Bisection on the monotone map; residual |Psi(gamma) - theta| <= 1e-12 * Lambda_{N,s}.
inline double gamma_theta(int dim, double s, double theta) {
    const double lambda = lambda_ns(dim, s);
    detail::require(theta > 0.0 && theta < lambda,
                    "gamma_theta: theta must lie strictly inside (0, Lambda_{N,s})");
    const double gmax = 0.5 * (dim - 2.0 * s);
    const double tol = 1e-12 * lambda;
    double lo = 0.0, hi = gmax;
    double mid = 0.5 * gmax;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double val = psi_ns(dim, s, mid);
        if (std::abs(val - theta) <= tol) return mid;
        (val < theta ? lo : hi) = mid;
        if (hi - lo <= 1e-17 * gmax) {
            // interval exhausted at double precision; accept if the residual is close
            if (std::abs(psi_ns(dim, s, mid) - theta) <= 10.0 * tol) return mid;
            break;
        }
    }
    throw std::runtime_error("gamma_theta: bisection did not converge");
}

/// Classifies (N, s, theta, p, q); INVALID is a return value, never a throw.
inline Regime regime_classify(const ProblemParams& pp) {
    if (!(pp.dim >= 2) || !(pp.s > 0.0 && pp.s < 1.0) || !(pp.dim > 2.0 * pp.s))
        return Regime::Invalid;
    double lambda = 0;
    try {
        lambda = lambda_ns(pp.dim, pp.s);
    } catch (const std::exception&) {
        return Regime::Invalid;
    }
    if (!(pp.theta > 0.0 && pp.theta < lambda)) return Regime::Invalid;
    if (!(pp.q > pp.p)) return Regime::Invalid;
    const double pc = critical_exponent(pp.dim, pp.s) - 1.0;
    if (std::abs(pp.p - pc) <= kCriticalExponentTol) return Regime::CriticalNonexistent;
    if (pp.p < pc) return Regime::Invalid;
    const double slope_bound = (pp.p - 1.0) * pp.dim / (2.0 * pp.s);
    return (pp.q + 1.0 > slope_bound) ? Regime::SupercriticalQualitative
                                      : Regime::SupercriticalExistenceOnly;
}

/// True when p sits on the critical exponent 2*_s - 1 (within kCriticalExponentTol).
inline bool is_critical_p(int dim, double s, double p) {
    return std::abs(p - (critical_exponent(dim, s) - 1.0)) <= kCriticalExponentTol;
}

/// The sharp constants attached to a parameter set, gamma_theta included.
struct SpectralConstants {
    double lambda_ns = 0;    ///< sharp Hardy constant
    double a_ns = 0;         ///< fractional-Laplacian normalization
    double k_s = 0;          ///< extension constant
    double crit_exp = 0;     ///< 2*_s = 2N/(N-2s)
    double gamma_theta = 0;  ///< unique gamma with Psi(gamma) = theta
};

inline SpectralConstants spectral_constants(const ProblemParams& pp) {
    SpectralConstants c;
    c.lambda_ns = lambda_ns(pp.dim, pp.s);
    c.a_ns = a_ns(pp.dim, pp.s);
    c.k_s = extension_constant(pp.s);
    c.crit_exp = critical_exponent(pp.dim, pp.s);
    c.gamma_theta = gamma_theta(pp.dim, pp.s, pp.theta);
    return c;
}

/// Throws std::domain_error when the parameter set is structurally unusable.
inline void validate_params(const ProblemParams& pp) {
    detail::require(pp.dim >= 2, "params: need N >= 2");
    detail::require(pp.s > 0.0 && pp.s < 1.0, "params: s must lie in (0,1)");
    detail::require(pp.dim > 2.0 * pp.s, "params: need N > 2s");
    const double lambda = lambda_ns(pp.dim, pp.s);
    detail::require(pp.theta > 0.0 && pp.theta < lambda,
                    "params: theta must lie strictly inside (0, Lambda_{N,s})");
    detail::require(pp.q > pp.p, "params: need q > p");
    detail::require(pp.p >= critical_exponent(pp.dim, pp.s) - 1.0 - kCriticalExponentTol,
                    "params: need p >= 2*_s - 1");
}

}  // namespace fhardy
