#pragma once

// Discrete quadratic forms on the radial grid:
//   A        Gagliardo form with the a_{N,s}/2 normalization, so u^T A u
//            approximates the squared homogeneous H^s norm,
//   H        Hardy form (diagonal), u^T H u ~ int u^2 / |x|^{2s} dV,
//   A_gamma  gamma-weighted Gagliardo form of the ground-state representation.
//
// Trial space: piecewise-linear hats in r on the grid nodes.  Profiles are
// truncated to zero outside the grid; the transition happens over one extra
// log-spaced ghost panel at each end, which keeps the nonlocal energy of the
// truncation finite for every s in (0,1) and makes A strictly positive
// definite.  Interactions with the exterior region enter through a diagonal-
// band tail term.
//
// Panel pairs are integrated with tensor Gauss rules (4x4 default, doubled
// until 1e-8 relative).  Touching and identical panels factor the kernel as
// J = Jsing * |r-rho|^{-(1+2s)} with Jsing bounded, and integrate the
// remaining weak singularity with Duffy coordinates / diagonal substitution
// under adaptive Gauss-Kronrod.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fhardy/constants.hpp"
#include "fhardy/grid.hpp"
#include "fhardy/kernel.hpp"
#include "fhardy/linalg.hpp"

namespace fhardy {
namespace detail {

inline int worker_count() {
    if (const char* env = std::getenv("FHARDY_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return std::min(n, 64);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(std::min(hc, 64u)) : 1;
}

/// Runs fn(i) for i in [0, n) across workers; results must go to disjoint slots.
template <typename Fn>
inline void parallel_for(int n, const Fn& fn) {
    const int workers = std::min(worker_count(), n > 0 ? n : 1);
    if (workers <= 1 || n < 4) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::mutex err_mu;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!error) error = std::current_exception();
                next.store(n);
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Integrates an array-valued f over [0, L] with dyadic panels graded toward
/// the (integrable) singularity at 0: Gauss `ng` per panel, halving down to
/// L * 2^{-levels}; the final sliver carries a relative mass ~ 2^{-0.7*levels}
/// for the x^{1-2s}-type integrands this is used on.
template <std::size_t K, typename F>
inline std::array<double, K> graded_integrate_left(const F& f, double L, int ng = 8,
                                                   int levels = 48) {
    const auto& [gx, gw] = gauss_rule01(ng);
    std::array<double, K> acc{};
    double hi = L;
    for (int lev = 0; lev < levels; ++lev) {
        const double lo = (lev + 1 == levels) ? 0.0 : 0.5 * hi;
        const double w = hi - lo;
        for (int k = 0; k < ng; ++k) {
            const auto fv = f(lo + w * gx[k]);
            for (std::size_t j = 0; j < K; ++j) acc[j] += gw[k] * w * fv[j];
        }
        hi = lo;
    }
    return acc;
}

}  // namespace detail

/// Assembled forms bound to one grid and one fractional order.
struct FormSet {
    RadialGrid grid;
    double s = 0;
    double gamma = 0;                  ///< weight exponent of A_gamma (0 when absent)
    double a_ns = 0;                   ///< normalization carried by A and A_gamma
    SymMatrix A;                       ///< Gagliardo form, includes a_{N,s}/2
    std::vector<double> hardy_diag;    ///< H_ii = vol_weights_i * r_i^{-2s}
    std::optional<SymMatrix> A_gamma;  ///< weighted form, includes a_{N,s}/2

    double hardy_form(std::span<const double> u) const {
        double t = 0.0;
        for (int i = 0; i < grid.size(); ++i) t += hardy_diag[i] * u[i] * u[i];
        return t;
    }
};

namespace detail {

/// Assembly works in t = log r.  The trial hats are linear in t between the
/// nodes, and the double integral transforms to
///   (u(x)-u(y))^2 S(x,y) |x-y|^{-(1+2s)} dx dy,
///   S(x,y) = exp((beta+1)(x+y) - (N+2s) max(x,y)) sigma(|x-y|) g(e^{-|x-y|}),
/// where sigma(d) = (d / (1-e^{-d}))^{1+2s} is analytic and sigma(0) = 1.
struct AssemblyContext {
    const RadialGrid* grid = nullptr;
    const KernelTable* table = nullptr;
    int dim = 0;
    double s = 0;
    double beta = 0;          // N - 1 - gamma
    std::vector<double> ext;  // t-coordinates of extended nodes (ghosts at both ends)
    double prefactor = 0;     // (a_{N,s}/2) |S^{N-1}| |S^{N-2}|

    int panels() const { return static_cast<int>(ext.size()) - 1; }
    double panel_lo(int t) const { return ext[t]; }
    double panel_hi(int t) const { return ext[t + 1]; }
    double width(int t) const { return ext[t + 1] - ext[t]; }

    double sigma(double d) const {
        if (d < 1e-8) return std::pow(1.0 + 0.5 * d + d * d / 12.0, 1.0 + 2.0 * s);
        return std::pow(d / (-std::expm1(-d)), 1.0 + 2.0 * s);
    }
    /// Smooth factor S(x,y) of the t-space kernel.
    double smooth_kernel(double x, double y) const {
        const double d = std::abs(x - y);
        return std::exp((beta + 1.0) * (x + y) - (dim + 2.0 * s) * std::max(x, y)) * sigma(d) *
               table->g(std::exp(-d));
    }
};

inline double exprel(double z) { return std::abs(z) < 1e-12 ? 1.0 + 0.5 * z : std::expm1(z) / z; }

inline AssemblyContext make_context(const RadialGrid& grid, double s, double gamma) {
    AssemblyContext ctx;
    ctx.grid = &grid;
    ctx.dim = grid.dim;
    ctx.s = s;
    ctx.beta = grid.dim - 1.0 - gamma;
    ctx.table = &kernel_table(grid.dim, s);
    const int m = grid.size();
    ctx.ext.resize(m + 2);
    // the run-down to zero outside [r_min, r_max] spans a fixed fraction of the
    // window in log r, independent of M, so grid refinement sharpens the
    // interior resolution without changing the truncated continuum functional
    const double ghost_w = std::log(grid.r_max / grid.r_min) / 512.0;
    for (int i = 0; i < m; ++i) ctx.ext[i + 1] = std::log(grid.nodes[i]);
    ctx.ext[0] = ctx.ext[1] - ghost_w;
    ctx.ext[m + 1] = ctx.ext[m] + ghost_w;
    ctx.prefactor = 0.5 * a_ns(grid.dim, s) * unit_sphere_area(grid.dim) *
                    unit_sphere_area(grid.dim - 1);
    return ctx;
}

/// Separated pair (u >= t+2): tensor Gauss with doubling, 4x4 block over
/// extended nodes {t, t+1, u, u+1}.
inline std::array<double, 16> pair_block_separated(const AssemblyContext& ctx, int t, int u) {
    const double xa = ctx.panel_lo(t), xb = ctx.panel_hi(t);
    const double ya = ctx.panel_lo(u), yb = ctx.panel_hi(u);
    const double ht = xb - xa, hu = yb - ya;
    const double expo_sing = -(1.0 + 2.0 * ctx.s);

    std::array<double, 16> prev{};
    for (int order = 4; order <= 64; order *= 2) {
        const auto& [gx, gw] = gauss_rule01(order);
        std::array<double, 16> blk{};
        for (int i = 0; i < order; ++i) {
            const double x = xa + ht * gx[i];
            const double wx = gw[i] * ht;
            const double phi_t = (xb - x) / ht, phi_t1 = (x - xa) / ht;
            for (int j = 0; j < order; ++j) {
                const double y = ya + hu * gx[j];  // y > x always here
                const double kw = wx * gw[j] * hu * ctx.smooth_kernel(x, y) *
                                  std::pow(y - x, expo_sing);
                const double d[4] = {phi_t, phi_t1, -(yb - y) / hu, -(y - ya) / hu};
                for (int a = 0; a < 4; ++a)
                    for (int b = a; b < 4; ++b) blk[4 * a + b] += kw * d[a] * d[b];
            }
        }
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < a; ++b) blk[4 * a + b] = blk[4 * b + a];
        if (order > 4) {
            double diff = 0.0, scale = 0.0;
            for (int k = 0; k < 16; ++k) {
                diff = std::max(diff, std::abs(blk[k] - prev[k]));
                scale = std::max(scale, std::abs(blk[k]));
            }
            if (diff <= 1e-8 * scale + 1e-300) return blk;
            if (order == 64) {
                if (diff <= 1e-5 * scale) return blk;
                throw std::runtime_error("assemble: separated panel pair did not converge");
            }
        }
        prev = blk;
    }
    return prev;
}

/// Touching pair (u = t+1): Duffy split around the shared corner; 3x3 block
/// over extended nodes {t, t+1, t+2}.  The hat differences vanish linearly at
/// the corner, so the integrand carries w^{2-2s} toward the singular vertex.
inline std::array<double, 9> pair_block_touching(const AssemblyContext& ctx, int t) {
    const double xc = ctx.panel_hi(t);  // shared node: x = xc - xi, y = xc + eta
    const double hl = ctx.width(t), hr = ctx.width(t + 1);
    const int nz = 16;
    const auto& [gz, wz] = gauss_rule01(nz);

    // triangle 0: xi = hl w, eta = hr w z; triangle 1: xi = hl w z, eta = hr w;
    // hat differences are exactly w * lambda(z)
    auto slice = [&](int triangle, double w) {
        std::array<double, 9> acc{};
        for (int iz = 0; iz < nz; ++iz) {
            const double z = gz[iz];
            double xi, eta, lam[3], singlen;
            if (triangle == 0) {
                xi = hl * w;
                eta = hr * w * z;
                lam[0] = 1.0; lam[1] = z - 1.0; lam[2] = -z;
                singlen = hl + hr * z;
            } else {
                xi = hl * w * z;
                eta = hr * w;
                lam[0] = z; lam[1] = 1.0 - z; lam[2] = -1.0;
                singlen = hl * z + hr;
            }
            const double val = wz[iz] * hl * hr * std::pow(singlen, -(1.0 + 2.0 * ctx.s)) *
                               ctx.smooth_kernel(xc - xi, xc + eta);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) acc[3 * a + b] += val * lam[a] * lam[b];
        }
        return acc;
    };
    auto integrand = [&](double w) {
        std::array<double, 9> out{};
        if (w <= 0.0 || w > 1.0) return out;
        const double ws = std::pow(w, 2.0 - 2.0 * ctx.s);
        const auto s0 = slice(0, w);
        const auto s1 = slice(1, w);
        for (int k = 0; k < 9; ++k) out[k] = ws * (s0[k] + s1[k]);
        return out;
    };
    return graded_integrate_left<9>(integrand, 1.0, 12);
}

/// Identical panel: hats differ by a constant slope, so the block is
/// m_a m_b * S with one scalar singular integral S per panel.  The inner
/// x-integral of exp(kappa x) is analytic, leaving one graded delta-integral.
inline double panel_self_integral(const AssemblyContext& ctx, int t) {
    const double x0 = ctx.panel_lo(t), x1 = ctx.panel_hi(t);
    const double h = x1 - x0;
    const double kappa = 2.0 * (ctx.beta + 1.0) - (ctx.dim + 2.0 * ctx.s);  // N - 2s - 2 gamma
    auto integrand = [&](double delta) {
        std::array<double, 1> out{};
        if (delta <= 0.0 || delta >= h) return out;
        const double len = h - delta;
        // int_{x0+delta}^{x1} exp(kappa x) dx = exp(kappa (x0+delta)) len exprel(kappa len)
        const double inner = std::exp(kappa * (x0 + delta)) * len * exprel(kappa * len);
        out[0] = std::pow(delta, 1.0 - 2.0 * ctx.s) * ctx.sigma(delta) *
                 ctx.table->g(std::exp(-delta)) * std::exp(-(ctx.beta + 1.0) * delta) * inner;
        return out;
    };
    const auto val = graded_integrate_left<1>(integrand, h, 10);
    return 2.0 * val[0];
}

/// Interaction of a mesh point x (in t-coordinates) with the exterior region
/// {y < ext_lo} u {y > ext_hi}.
inline double exterior_tail(const AssemblyContext& ctx, double x) {
    const double lo = ctx.ext.front(), hi = ctx.ext.back();
    const double expo_sing = -(1.0 + 2.0 * ctx.s);
    const int ng = 8;
    const auto& [gx, gw] = gauss_rule01(ng);
    auto f = [&](double y) {
        return ctx.smooth_kernel(x, y) * std::pow(std::abs(x - y), expo_sing);
    };

    // left: integrand decays like exp((beta+1)(y-lo)); graded panels toward lo
    double left = 0.0;
    {
        const double rate = ctx.beta + 1.0;  // = N - gamma > 0
        double b = lo;
        double w = std::max(x - lo, 1e-14);
        const double y_stop = lo - 36.0 / rate;
        for (int lev = 0; lev < 200 && b > y_stop; ++lev) {
            const double a = std::max(b - w, y_stop);
            for (int k = 0; k < ng; ++k) left += gw[k] * (b - a) * f(a + (b - a) * gx[k]);
            b = a;
            w = std::min(2.0 * w, 1.0);
        }
    }

    // right: decay rate 2s + gamma; graded panels then analytic remainder
    double right = 0.0;
    {
        const double rate = 2.0 * ctx.s + (ctx.dim - 1.0 - ctx.beta);  // = 2s + gamma > 0
        double a = hi;
        double w = std::max(hi - x, 1e-14);
        const double y_stop = hi + 36.0 / rate;
        for (int lev = 0; lev < 200 && a < y_stop; ++lev) {
            const double b = std::min(a + w, y_stop);
            for (int k = 0; k < ng; ++k) right += gw[k] * (b - a) * f(a + (b - a) * gx[k]);
            a = b;
            w = std::min(2.0 * w, 1.0);
        }
        right += ctx.table->g(0.0) * std::exp((ctx.beta + 1.0) * x - rate * y_stop) / rate;
    }
    return left + right;
}

/// Tail mass block on panel t: int phi_a phi_b T(x) dx (3 products).
/// On the two ghost panels T blows up like dist^{-2s} at the outer edge while
/// the hats vanish linearly there, so those panels get graded integration.
inline std::array<double, 3> tail_block(const AssemblyContext& ctx, int t) {
    const double x0 = ctx.panel_lo(t), x1 = ctx.panel_hi(t);
    const double h = x1 - x0;
    auto values = [&](double x) {
        std::array<double, 3> out{};
        if (x <= x0 || x >= x1) return out;
        const double tv = exterior_tail(ctx, x);
        const double pl = (x1 - x) / h, pr = (x - x0) / h;
        out[0] = tv * pl * pl;
        out[1] = tv * pl * pr;
        out[2] = tv * pr * pr;
        return out;
    };
    if (t == 0) {  // singular toward x0
        return graded_integrate_left<3>([&](double x) { return values(x0 + x); }, h, 8, 40);
    }
    if (t + 1 == ctx.panels()) {  // singular toward x1
        return graded_integrate_left<3>([&](double x) { return values(x1 - x); }, h, 8, 40);
    }
    std::array<double, 3> acc{};
    const int ng = 16;
    const auto& [gx, gw] = gauss_rule01(ng);
    for (int k = 0; k < ng; ++k) {
        const auto fv = values(x0 + h * gx[k]);
        for (int j = 0; j < 3; ++j) acc[j] += gw[k] * h * fv[j];
    }
    return acc;
}

}  // namespace detail

/// Matrix of the (optionally gamma-weighted) Gagliardo bilinear form on
/// piecewise-linear radial profiles, including the a_{N,s}/2 factor.
/// gamma = 0 gives the plain form whose quadratic form approximates the
/// squared homogeneous H^s norm.
inline SymMatrix assemble_gagliardo(const RadialGrid& grid, double s, double gamma) {
    detail::require(grid.dim >= 2, "assemble_gagliardo: need N >= 2");
    detail::require(s > 0.0 && s < 1.0, "assemble_gagliardo: s must lie in (0,1)");
    const double gmax = 0.5 * (grid.dim - 2.0 * s);
    detail::require(gamma >= 0.0 && gamma < gmax,
                    "assemble_gagliardo: gamma outside [0, (N-2s)/2)");

    const auto ctx = detail::make_context(grid, s, gamma);
    const int m = grid.size();
    const int npanels = ctx.panels();  // m + 1

    // job list: identical panels, touching pairs, tail blocks, separated pairs
    struct SepJob { int t, u; };
    std::vector<SepJob> sep;
    sep.reserve(static_cast<std::size_t>(npanels) * (npanels - 1) / 2);
    for (int t = 0; t < npanels; ++t)
        for (int u = t + 2; u < npanels; ++u) sep.push_back({t, u});

    std::vector<double> self_vals(npanels);
    std::vector<std::array<double, 9>> touch_vals(npanels - 1);
    std::vector<std::array<double, 3>> tail_vals(npanels);
    std::vector<std::array<double, 16>> sep_vals(sep.size());

    const int n_special = npanels + (npanels - 1) + npanels;
    detail::parallel_for(n_special + static_cast<int>(sep.size()), [&](int idx) {
        if (idx < npanels) {
            self_vals[idx] = detail::panel_self_integral(ctx, idx);
        } else if (idx < npanels + (npanels - 1)) {
            touch_vals[idx - npanels] = detail::pair_block_touching(ctx, idx - npanels);
        } else if (idx < n_special) {
            tail_vals[idx - npanels - (npanels - 1)] = detail::tail_block(ctx, idx - npanels - (npanels - 1));
        } else {
            const auto& job = sep[idx - n_special];
            sep_vals[idx - n_special] = detail::pair_block_separated(ctx, job.t, job.u);
        }
    });

    // sequential fold in fixed order: result independent of worker count
    SymMatrix A(m);
    const double c = ctx.prefactor;
    auto dof = [&](int ext_node) { return ext_node - 1; };  // ghost ends map to -1 / m
    auto add = [&](int ea, int eb, double v) {
        const int ka = dof(ea), kb = dof(eb);
        if (ka < 0 || ka >= m || kb < 0 || kb >= m) return;
        A.at(ka, kb) += v;
    };

    for (int t = 0; t < npanels; ++t) {
        const double mslope = 1.0 / ctx.width(t);
        const double sv = c * self_vals[t];
        add(t, t, sv * mslope * mslope);
        add(t, t + 1, -sv * mslope * mslope);
        add(t + 1, t, -sv * mslope * mslope);
        add(t + 1, t + 1, sv * mslope * mslope);
    }
    for (int t = 0; t + 1 < npanels; ++t) {
        const auto& blk = touch_vals[t];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) add(t + a, t + b, 2.0 * c * blk[3 * a + b]);
    }
    for (int t = 0; t < npanels; ++t) {
        const auto& blk = tail_vals[t];
        add(t, t, 2.0 * c * blk[0]);
        add(t, t + 1, 2.0 * c * blk[1]);
        add(t + 1, t, 2.0 * c * blk[1]);
        add(t + 1, t + 1, 2.0 * c * blk[2]);
    }
    for (std::size_t k = 0; k < sep.size(); ++k) {
        const auto& blk = sep_vals[k];
        const int nodes[4] = {sep[k].t, sep[k].t + 1, sep[k].u, sep[k].u + 1};
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) add(nodes[a], nodes[b], 2.0 * c * blk[4 * a + b]);
    }
    return A;
}

/// Assembles A, H and (optionally) A_gamma for one grid.
inline FormSet assemble_forms(const RadialGrid& grid, double s,
                              std::optional<double> gamma = std::nullopt) {
    FormSet f;
    f.grid = grid;
    f.s = s;
    f.a_ns = a_ns(grid.dim, s);
    f.A = assemble_gagliardo(grid, s, 0.0);
    f.hardy_diag.resize(grid.size());
    for (int i = 0; i < grid.size(); ++i)
        f.hardy_diag[i] = grid.vol_weights[i] * std::pow(grid.nodes[i], -2.0 * s);
    if (gamma && *gamma > 0.0) {
        f.gamma = *gamma;
        f.A_gamma = assemble_gagliardo(grid, s, *gamma);
    }
    return f;
}

/// Smallest generalized Rayleigh quotient of the pencil (A, H) by inverse
/// power iteration; the discrete sharp Hardy constant.
inline double hardy_rayleigh_min(const FormSet& forms, double rel_tol = 1e-8,
                                 int max_iters = 1000) {
    const int m = forms.A.n;
    detail::Cholesky chol(forms.A);
    std::vector<double> x(m, 1.0), hx(m), ax(m);
    for (int i = 0; i < m; ++i) x[i] = 1.0 / std::sqrt(forms.hardy_diag[i]);
    double mu_prev = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        for (int i = 0; i < m; ++i) hx[i] = forms.hardy_diag[i] * x[i];
        x = chol.solve(hx);
        const double nrm = detail::norm2(x);
        for (auto& v : x) v /= nrm;
        detail::matvec(forms.A, x, ax);
        double num = detail::dot(x, ax), den = 0.0;
        for (int i = 0; i < m; ++i) den += forms.hardy_diag[i] * x[i] * x[i];
        const double mu = num / den;
        if (it > 0 && std::abs(mu - mu_prev) <= rel_tol * std::abs(mu)) return mu;
        mu_prev = mu;
    }
    throw std::runtime_error("hardy_rayleigh_min: inverse iteration did not converge");
}

/// Relative defect of the ground-state representation
///   u^T A u - Psi(gamma) u^T H u  =  v^T A_gamma v,   v = r^gamma u,
/// returned as |LHS - RHS| / (|LHS| + |RHS|).
inline double groundstate_residual(const FormSet& forms, std::span<const double> u) {
    if (static_cast<int>(u.size()) != forms.grid.size())
        throw std::invalid_argument("groundstate_residual: length mismatch");
    const double gamma = forms.gamma;
    const double lhs = detail::quad_form(forms.A, u) -
                       psi_ns(forms.grid.dim, forms.s, gamma) * forms.hardy_form(u);
    double rhs;
    if (gamma == 0.0) {
        rhs = detail::quad_form(forms.A, u);  // A_0 = A and Psi(0) = 0
    } else if (forms.A_gamma) {
        std::vector<double> v(u.size());
        for (std::size_t i = 0; i < u.size(); ++i)
            v[i] = std::pow(forms.grid.nodes[i], gamma) * u[i];
        rhs = detail::quad_form(*forms.A_gamma, v);
    } else {
        throw std::invalid_argument("groundstate_residual: FormSet lacks A_gamma");
    }
    const double denom = std::abs(lhs) + std::abs(rhs);
    return denom > 0.0 ? std::abs(lhs - rhs) / denom : 0.0;
}

/// Convenience overload assembling the needed forms on the fly.
inline double groundstate_residual(const RadialGrid& grid, std::span<const double> u, int dim,
                                   double s, double gamma) {
    detail::require(dim == grid.dim, "groundstate_residual: dimension mismatch");
    detail::require(gamma >= 0.0 && gamma < 0.5 * (dim - 2.0 * s),
                    "groundstate_residual: gamma outside [0, (N-2s)/2)");
    FormSet f = assemble_forms(grid, s, gamma > 0.0 ? std::optional<double>(gamma) : std::nullopt);
    return groundstate_residual(f, u);
}

}  // namespace fhardy
