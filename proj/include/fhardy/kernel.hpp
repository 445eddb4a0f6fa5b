#pragma once

// Angular reduction of the hypersingular kernel |x - y|^{-(N+2s)} for radial
// functions:
//   J(r, rho) = int_0^pi sin^{N-2}(phi) (r^2 + rho^2 - 2 r rho cos phi)^{-(N+2s)/2} dphi.
//
// J is homogeneous of degree -(N+2s) and factors as
//   J(r, rho) = max^{1-N} g(tau) |r - rho|^{-(1+2s)},   tau = min/max,
// with g smooth and bounded on [0,1].  angular_kernel evaluates J by adaptive
// Gauss-Kronrod quadrature; assembly uses a dense tabulation of g instead.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "fhardy/constants.hpp"

namespace fhardy {
namespace detail {

// 15-point Kronrod rule with embedded 7-point Gauss rule on [-1,1].
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

/// Gauss-Legendre nodes/weights on [0,1] by Newton iteration on P_n.
inline void gauss_legendre_01(int n, double* x, double* w) {
    for (int i = 0; i < n; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / pp;
            t -= dt;
            if (std::abs(dt) < 1e-16) break;
        }
        x[n - 1 - i] = 0.5 * (1.0 + t);
        w[n - 1 - i] = 1.0 / ((1.0 - t * t) * pp * pp);
    }
}

/// Cached Gauss-Legendre rule on [0,1].
inline const std::pair<std::vector<double>, std::vector<double>>& gauss_rule01(int n) {
    static std::mutex mu;
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<double> x(n), w(n);
    gauss_legendre_01(n, x.data(), w.data());
    return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

template <typename F>
inline void gk15(const F& f, double a, double b, double& result, double& err) {
    const double c = 0.5 * (a + b), hl = 0.5 * (b - a);
    double resk = 0.0, resg = 0.0;
    for (int j = 0; j < 7; ++j) {
        const double fv = f(c - hl * kXgk[j]) + f(c + hl * kXgk[j]);
        resk += kWgk[j] * fv;
        if (j % 2 == 1) resg += kWg[j / 2] * fv;
    }
    const double f0 = f(c);
    resk += kWgk[7] * f0;
    resg += kWg[3] * f0;
    result = resk * hl;
    err = std::abs((resk - resg) * hl);
}

/// Adaptive Gauss-Kronrod on [a,b]; bisects the interval with the largest
/// error estimate until rel_tol (or abs_tol) is met.
template <typename F>
inline double adaptive_integrate(const F& f, double a, double b, double rel_tol,
                                 double abs_tol = 0.0, int max_intervals = 4000) {
    struct Seg { double a, b, val, err; };
    std::vector<Seg> segs;
    Seg s0{a, b, 0, 0};
    gk15(f, a, b, s0.val, s0.err);
    segs.push_back(s0);
    double total = s0.val, total_err = s0.err;
    while (static_cast<int>(segs.size()) < max_intervals) {
        if (total_err <= rel_tol * std::abs(total) + abs_tol) return total;
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].err > segs[worst].err) worst = i;
        Seg cur = segs[worst];
        const double mid = 0.5 * (cur.a + cur.b);
        if (mid <= cur.a || mid >= cur.b) return total;  // subdivision exhausted in double precision
        Seg l{cur.a, mid, 0, 0}, r{mid, cur.b, 0, 0};
        gk15(f, l.a, l.b, l.val, l.err);
        gk15(f, r.a, r.b, r.val, r.err);
        total += l.val + r.val - cur.val;
        total_err += l.err + r.err - cur.err;
        segs[worst] = l;
        segs.push_back(r);
    }
    if (total_err > 1e3 * (rel_tol * std::abs(total) + abs_tol))
        throw std::runtime_error("adaptive_integrate: failed to reach tolerance");
    return total;
}

}  // namespace detail

/// J(r, rho) by adaptive quadrature.  Homogeneous: J(t r, t rho) = t^{-(N+2s)} J(r, rho).
/// Throws near the diagonal (|r-rho|/max < 1e-12): the assembler treats that
/// region with the factored singular form, not with this direct evaluation.
inline double angular_kernel(int dim, double s, double r, double rho) {
    detail::require(dim >= 2, "angular_kernel: need N >= 2");
    detail::require(s > 0.0 && s < 1.0, "angular_kernel: s must lie in (0,1)");
    if (!(r > 0.0 && rho > 0.0)) throw std::domain_error("angular_kernel: radii must be positive");
    const double mx = std::max(r, rho);
    if (std::abs(r - rho) < 1e-12 * mx)
        throw std::domain_error("angular_kernel: r and rho coincide to within 1e-12 relative");
    const double expo = -0.5 * (dim + 2.0 * s);
    const double d2 = (r - rho) * (r - rho);
    const double c = 4.0 * r * rho;
    auto f = [&](double phi) {
        const double sh = std::sin(0.5 * phi);
        const double base = d2 + c * sh * sh;  // r^2 + rho^2 - 2 r rho cos(phi), cancellation-free
        const double ang = (dim == 2) ? 1.0 : std::pow(std::sin(phi), dim - 2);
        return ang * std::pow(base, expo);
    };
    return detail::adaptive_integrate(f, 0.0, M_PI, 1e-11, 0.0, 20000);
}

namespace detail {

/// Dense tabulation of g(tau) = (1-tau)^{1+2s} J(1, tau) on tau in [0,1].
/// Each entry integrates the phi peak (width ~ 1-tau) over dyadic panels
/// graded toward phi = 0, Gauss-16 per panel: deterministic, ~1e-12 relative.
class KernelTable {
  public:
    KernelTable(int dim, double s) : dim_(dim), s_(s), n_(8192), g_(n_ + 1) {
        const double expo = -0.5 * (dim + 2.0 * s);
        constexpr int ng = 16;
        double gx[ng], gw[ng];
        gauss_legendre_01(ng, gx, gw);
        for (int i = 0; i < n_; ++i) {
            const double tau = static_cast<double>(i) / n_;
            const double eps = 1.0 - tau;
            const double pre = std::pow(eps, 1.0 + 2.0 * s);
            auto f = [&](double phi) {
                const double sh = std::sin(0.5 * phi);
                const double base = eps * eps + 4.0 * tau * sh * sh;
                const double ang = (dim == 2) ? 1.0 : std::pow(std::sin(phi), dim - 2);
                return pre * ang * std::pow(base, expo);
            };
            double acc = 0.0;
            double hi = M_PI;
            while (hi > eps) {
                const double lo = std::max(eps, 0.5 * hi);
                for (int k = 0; k < ng; ++k) acc += gw[k] * (hi - lo) * f(lo + (hi - lo) * gx[k]);
                hi = lo;
            }
            for (int k = 0; k < ng; ++k) acc += gw[k] * hi * f(hi * gx[k]);
            g_[i] = acc;
        }
        // tau = 1 endpoint: g(1) = (1/2) B((N-1)/2, s + 1/2)
        g_[n_] = 0.5 * std::exp(log_gamma(0.5 * (dim - 1)) + log_gamma(s + 0.5) -
                                log_gamma(0.5 * dim + s));
    }

    int dim() const { return dim_; }
    double s() const { return s_; }

    /// 4-point Lagrange interpolation of g.
    double g(double tau) const {
        if (tau <= 0.0) return g_.front();
        if (tau >= 1.0) return g_.back();
        const double x = tau * n_;
        int j = static_cast<int>(x);
        int j0 = std::clamp(j - 1, 0, n_ - 3);
        const double t = x - j0;
        const double t1 = t - 1.0, t2 = t - 2.0, t3 = t - 3.0;
        return (-t1 * t2 * t3 / 6.0) * g_[j0] + (t * t2 * t3 / 2.0) * g_[j0 + 1] +
               (-t * t1 * t3 / 2.0) * g_[j0 + 2] + (t * t1 * t2 / 6.0) * g_[j0 + 3];
    }

    /// Full kernel J(r, rho).
    double eval(double r, double rho) const {
        const double mx = std::max(r, rho), mn = std::min(r, rho);
        const double tau = mn / mx;
        return std::pow(mx, -(dim_ + 2.0 * s_)) * std::pow(1.0 - tau, -(1.0 + 2.0 * s_)) * g(tau);
    }

    /// J(r, rho) * |r - rho|^{1+2s} = max^{1-N} g(tau): bounded through the diagonal.
    double eval_desingularized(double r, double rho) const {
        const double mx = std::max(r, rho), mn = std::min(r, rho);
        return std::pow(mx, 1.0 - dim_) * g(mn / mx);
    }

  private:
    int dim_;
    double s_;
    int n_;
    std::vector<double> g_;
};

/// Process-wide cache of kernel tables keyed by (N, bits of s).
inline const KernelTable& kernel_table(int dim, double s) {
    static std::mutex mu;
    static std::map<std::pair<int, long long>, std::unique_ptr<KernelTable>> cache;
    long long bits;
    static_assert(sizeof(bits) == sizeof(s));
    std::memcpy(&bits, &s, sizeof(bits));
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{dim, bits}];
    if (!slot) slot = std::make_unique<KernelTable>(dim, s);
    return *slot;
}

}  // namespace detail
}  // namespace fhardy
