#pragma once

// Logarithmic radial mesh with quadrature weights for volume integrals
//   |S^{N-1}| * int f(r) r^{N-1} dr   over [r_min, r_max],
// plus resampling of nodal profiles under coordinate/amplitude scaling.
//
// The weights integrate the piecewise log-linear interpolant of f exactly
// against r^N dlog(r), so constants reproduce the shell volume to roundoff
// and smooth integrands converge at second order in the log spacing.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "fhardy/constants.hpp"

namespace fhardy {

/// Surface area of the unit sphere S^{N-1}, |S^{N-1}| = 2 pi^{N/2} / Gamma(N/2).
inline double unit_sphere_area(int dim) {
    detail::require(dim >= 1, "unit_sphere_area: need N >= 1");
    return 2.0 * std::exp(0.5 * dim * std::log(M_PI) - detail::log_gamma(0.5 * dim));
}

struct RadialGrid {
    int dim = 0;
    std::vector<double> nodes;        ///< strictly increasing, positive
    std::vector<double> vol_weights;  ///< all positive; sum ~ shell volume
    double r_min = 0;
    double r_max = 0;

    int size() const { return static_cast<int>(nodes.size()); }
    /// Uniform spacing in log r.
    double log_step() const { return std::log(r_max / r_min) / (size() - 1); }
};

/// Log-spaced grid r_i = r_min (r_max/r_min)^{(i-1)/(M-1)} with volume weights.
inline RadialGrid build_log_grid(int dim, double r_min, double r_max, int m) {
    detail::require(dim >= 1, "build_log_grid: need N >= 1");
    if (!(r_min > 0.0 && r_min < r_max)) throw std::invalid_argument("build_log_grid: need 0 < r_min < r_max");
    if (m < 16) throw std::invalid_argument("build_log_grid: need M >= 16");

    RadialGrid g;
    g.dim = dim;
    g.r_min = r_min;
    g.r_max = r_max;
    g.nodes.resize(m);
    g.vol_weights.assign(m, 0.0);

    const double h = std::log(r_max / r_min) / (m - 1);
    for (int i = 0; i < m; ++i) g.nodes[i] = r_min * std::exp(h * i);
    g.nodes.front() = r_min;
    g.nodes.back() = r_max;

    // Exact panel integrals of the log-hat functions against |S^{N-1}| e^{Nt} dt.
    const double area = unit_sphere_area(dim);
    const double nn = static_cast<double>(dim);
    const double e_nh = std::exp(nn * h);
    const double int_all = (e_nh - 1.0) / nn;                       // int_0^h e^{N tau} dtau
    const double int_rise = e_nh / nn - (e_nh - 1.0) / (nn * nn * h);  // int (tau/h) e^{N tau}
    const double int_fall = int_all - int_rise;
    for (int i = 0; i + 1 < m; ++i) {
        const double scale = area * std::pow(g.nodes[i], nn);
        g.vol_weights[i] += scale * int_fall;
        g.vol_weights[i + 1] += scale * int_rise;
    }
    return g;
}

/// Sum_i vol_weights_i * values_i * r_i^{extra_power}; evaluates volume
/// integrals of f(r) r^{extra_power} (e.g. extra_power = -2s for the Hardy term).
inline double integrate_radial(const RadialGrid& grid, std::span<const double> values,
                               double extra_power) {
    if (static_cast<int>(values.size()) != grid.size())
        throw std::invalid_argument("integrate_radial: values length != grid size");
    double sum = 0.0, comp = 0.0;  // Kahan compensation
    for (int i = 0; i < grid.size(); ++i) {
        const double term = grid.vol_weights[i] * values[i] *
                            (extra_power == 0.0 ? 1.0 : std::pow(grid.nodes[i], extra_power));
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

struct ResampleResult {
    std::vector<double> values;
    bool log_interp = true;  ///< false when the linear/zero-extension fallback was used
};

/// Values of r -> amp_scale * u(coord_scale * r) at the original nodes.
/// Positive profiles are interpolated linearly in (log r, log u) with
/// power-law extrapolation fitted to the outer/inner 10% of nodes; profiles
/// with non-positive entries fall back to linear interpolation with zero
/// extension, flagged in the result.
inline ResampleResult resample_scaled(const RadialGrid& grid, std::span<const double> values,
                                      double coord_scale, double amp_scale) {
    if (static_cast<int>(values.size()) != grid.size())
        throw std::invalid_argument("resample_scaled: values length != grid size");
    if (!(coord_scale > 0.0)) throw std::invalid_argument("resample_scaled: coord_scale must be positive");

    const int m = grid.size();
    ResampleResult out;
    out.values.resize(m);

    const bool positive = std::all_of(values.begin(), values.end(), [](double v) { return v > 0.0; });
    const double t0 = std::log(grid.nodes.front());
    const double h = grid.log_step();
    const double shift = std::log(coord_scale);

    if (positive) {
        std::vector<double> logu(m);
        for (int i = 0; i < m; ++i) logu[i] = std::log(values[i]);

        // power-law slopes d(log u)/d(log r) fitted on the inner/outer windows
        const int k = std::max(2, m / 10);
        auto fit_slope = [&](int begin, int count) {
            double st = 0, su = 0, stt = 0, stu = 0;
            for (int j = begin; j < begin + count; ++j) {
                const double t = t0 + h * j;
                st += t; su += logu[j]; stt += t * t; stu += t * logu[j];
            }
            const double denom = count * stt - st * st;
            return (count * stu - st * su) / denom;
        };
        const double slope_in = fit_slope(0, k);
        const double slope_out = fit_slope(m - k, k);

        for (int i = 0; i < m; ++i) {
            const double t = t0 + h * i + shift;  // log of the sample point coord_scale * r_i
            const double pos = (t - t0) / h;
            double lu;
            if (pos <= 0.0) {
                lu = logu.front() + slope_in * (t - t0);
            } else if (pos >= m - 1) {
                lu = logu.back() + slope_out * (t - (t0 + h * (m - 1)));
            } else {
                const int j = static_cast<int>(pos);
                const double w = pos - j;
                lu = (1.0 - w) * logu[j] + w * logu[j + 1];
            }
            out.values[i] = amp_scale * std::exp(lu);
        }
        out.log_interp = true;
    } else {
        // log fit undefined: linear interpolation in (log r, u), zero outside
        for (int i = 0; i < m; ++i) {
            const double pos = (std::log(coord_scale) / h) + i;
            double v = 0.0;
            if (pos >= 0.0 && pos <= m - 1) {
                const int j = std::min(static_cast<int>(pos), m - 2);
                const double w = pos - j;
                v = (1.0 - w) * values[j] + w * values[j + 1];
            }
            out.values[i] = amp_scale * v;
        }
        out.log_interp = false;
    }
    return out;
}

}  // namespace fhardy
