#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fhardy/grid.hpp"

using namespace fhardy;

namespace {

double shell_volume(int dim, double r0, double r1) {
    return unit_sphere_area(dim) * (std::pow(r1, dim) - std::pow(r0, dim)) / dim;
}

}  // namespace

TEST_SUITE("radial_grid") {

TEST_CASE("construction and preconditions") {
    const RadialGrid g = build_log_grid(3, 1e-3, 1e2, 64);
    CHECK(g.size() == 64);
    CHECK(g.nodes.front() == doctest::Approx(1e-3));
    CHECK(g.nodes.back() == doctest::Approx(1e2));
    for (int i = 0; i + 1 < g.size(); ++i) CHECK(g.nodes[i] < g.nodes[i + 1]);
    for (double w : g.vol_weights) CHECK(w > 0.0);

    CHECK_NOTHROW(build_log_grid(3, 1.0, 2.0, 16));  // minimal size
    CHECK_THROWS_AS(build_log_grid(3, 1.0, 2.0, 15), std::invalid_argument);
    CHECK_THROWS_AS(build_log_grid(3, 2.0, 1.0, 64), std::invalid_argument);
    CHECK_THROWS_AS(build_log_grid(3, 0.0, 1.0, 64), std::invalid_argument);
}

TEST_CASE("shell volume is reproduced to roundoff at any size") {
    for (int dim : {2, 3, 4}) {
        for (int m : {16, 64, 512, 4096}) {
            const RadialGrid g = build_log_grid(dim, 1.0, 2.0, m);
            const std::vector<double> ones(g.size(), 1.0);
            const double vol = integrate_radial(g, ones, 0.0);
            CHECK(vol == doctest::Approx(shell_volume(dim, 1.0, 2.0)).epsilon(1e-10));
        }
    }
    // a hand-checkable shell volume
    const RadialGrid g = build_log_grid(3, 1.0, 2.0, 4096);
    const std::vector<double> ones(g.size(), 1.0);
    CHECK(integrate_radial(g, ones, 0.0) ==
          doctest::Approx(4.0 * M_PI / 3.0 * 7.0).epsilon(1e-6));
}

TEST_CASE("gaussian volume integral") {
    // int e^{-r^2} dV over R^3 = pi^{3/2}; truncation + interpolation floor of
    // the product-trapezoid rule keeps this to ~2e-5 at M = 2048
    const RadialGrid g = build_log_grid(3, 1e-3, 1e2, 2048);
    std::vector<double> vals(g.size());
    for (int i = 0; i < g.size(); ++i) vals[i] = std::exp(-g.nodes[i] * g.nodes[i]);
    CHECK(integrate_radial(g, vals, 0.0) ==
          doctest::Approx(std::pow(M_PI, 1.5)).epsilon(1e-4));
}

TEST_CASE("hardy-weighted gaussian integral") {
    // u = e^{-r^2/2}, N = 3, extra power -1 (2s = 1):
    // int u^2 r^{-1} dV = |S^2| * (1/2) Gamma(1) = 2 pi
    const RadialGrid g = build_log_grid(3, 1e-3, 1e2, 512);
    std::vector<double> u2(g.size());
    for (int i = 0; i < g.size(); ++i) u2[i] = std::exp(-g.nodes[i] * g.nodes[i]);
    CHECK(integrate_radial(g, u2, -1.0) == doctest::Approx(2.0 * M_PI).epsilon(5e-3));
}

TEST_CASE("integrate_radial basics") {
    const RadialGrid g = build_log_grid(3, 1.0, 2.0, 128);
    const std::vector<double> ones(g.size(), 1.0);
    CHECK(integrate_radial(g, ones, 0.0) ==
          doctest::Approx(shell_volume(3, 1.0, 2.0)).epsilon(1e-10));

    std::vector<double> short_vec(g.size() - 1, 1.0);
    CHECK_THROWS_AS(integrate_radial(g, short_vec, 0.0), std::invalid_argument);

    SUBCASE("matches direct summation") {
        std::vector<double> v(g.size());
        for (int i = 0; i < g.size(); ++i) v[i] = std::pow(1.0 + g.nodes[i], 4.0);
        double direct = 0.0;
        for (int i = g.size() - 1; i >= 0; --i)
            direct += g.vol_weights[i] * v[i] * std::pow(g.nodes[i], -0.5);
        CHECK(integrate_radial(g, v, -0.5) == doctest::Approx(direct).epsilon(1e-12));
    }
    SUBCASE("linearity and homogeneity") {
        std::vector<double> a(g.size()), b(g.size()), ab(g.size());
        for (int i = 0; i < g.size(); ++i) {
            a[i] = std::sin(g.nodes[i]) + 2.0;
            b[i] = std::cos(g.nodes[i]) + 2.0;
            ab[i] = a[i] + 3.0 * b[i];
        }
        const double ia = integrate_radial(g, a, 0.0), ib = integrate_radial(g, b, 0.0);
        CHECK(integrate_radial(g, ab, 0.0) == doctest::Approx(ia + 3.0 * ib).epsilon(1e-12));
    }
}

TEST_CASE("quadrature error halves (at least) when doubling M") {
    // smooth non-constant integrand with an exact value
    const double exact = unit_sphere_area(3) * (std::pow(10.0, 5.5) - 1.0) / 5.5;  // r^{2.5}
    auto err = [&](int m) {
        const RadialGrid g = build_log_grid(3, 1.0, 10.0, m);
        std::vector<double> v(g.size());
        for (int i = 0; i < g.size(); ++i) v[i] = std::pow(g.nodes[i], 2.5);
        return std::abs(integrate_radial(g, v, 0.0) - exact) / exact;
    };
    const double e1 = err(256), e2 = err(512);
    CHECK(e2 <= 0.5 * e1);
}

TEST_CASE("resampling") {
    const RadialGrid g = build_log_grid(3, 1e-3, 1e2, 256);

    SUBCASE("identity") {
        std::vector<double> v(g.size());
        for (int i = 0; i < g.size(); ++i) v[i] = std::exp(-0.5 * g.nodes[i] * g.nodes[i]) + 0.1;
        const auto out = resample_scaled(g, v, 1.0, 1.0);
        CHECK(out.log_interp);
        for (int i = 0; i < g.size(); ++i) CHECK(out.values[i] == doctest::Approx(v[i]).epsilon(1e-13));
    }
    SUBCASE("power laws are exact under any scaling") {
        for (double alpha : {-2.0, -1.0, 0.5}) {
            for (double c : {2.0, 0.5}) {
                std::vector<double> v(g.size());
                for (int i = 0; i < g.size(); ++i) v[i] = std::pow(g.nodes[i], alpha);
                const auto out = resample_scaled(g, v, c, 1.0);
                for (int i = 2; i + 2 < g.size(); ++i) {
                    const double expect = std::pow(c * g.nodes[i], alpha);
                    CHECK(out.values[i] == doctest::Approx(expect).epsilon(1e-12));
                }
            }
        }
    }
    SUBCASE("gaussian at half scale matches the analytic profile") {
        // the interpolation error grows with the log-curvature ~ r^2 h^2, so
        // the 1e-3 comparison runs where the profile is non-negligible
        const RadialGrid gf = build_log_grid(3, 1e-3, 1e2, 1024);
        std::vector<double> v(gf.size());
        for (int i = 0; i < gf.size(); ++i) v[i] = std::exp(-0.5 * gf.nodes[i] * gf.nodes[i]);
        const auto out = resample_scaled(gf, v, 0.5, 1.0);
        for (int i = 0; i < gf.size(); ++i) {
            const double r = 0.5 * gf.nodes[i];
            if (r < gf.r_min || r > gf.r_max) continue;  // interior points only
            const double expect = std::exp(-0.5 * r * r);
            if (expect < 1e-6) continue;
            CHECK(out.values[i] == doctest::Approx(expect).epsilon(1e-3));
        }
    }
    SUBCASE("amplitude scaling") {
        std::vector<double> v(g.size());
        for (int i = 0; i < g.size(); ++i) v[i] = std::pow(g.nodes[i], -2.0);
        const auto once = resample_scaled(g, v, 2.0, 1.0);
        const auto twice = resample_scaled(g, v, 2.0, 3.0);
        for (int i = 0; i < g.size(); ++i)
            CHECK(twice.values[i] == doctest::Approx(3.0 * once.values[i]).epsilon(1e-14));
    }
    SUBCASE("non-positive values fall back to linear interpolation, flagged") {
        std::vector<double> v(g.size(), 1.0);
        v[10] = -0.5;
        const auto out = resample_scaled(g, v, 1.5, 1.0);
        CHECK_FALSE(out.log_interp);
        // zero extension outside the sampled range
        CHECK(out.values.back() == 0.0);
    }
    SUBCASE("bad arguments") {
        std::vector<double> v(g.size(), 1.0);
        CHECK_THROWS_AS(resample_scaled(g, v, 0.0, 1.0), std::invalid_argument);
        std::vector<double> short_vec(3, 1.0);
        CHECK_THROWS_AS(resample_scaled(g, short_vec, 1.0, 1.0), std::invalid_argument);
    }
}

}  // TEST_SUITE
