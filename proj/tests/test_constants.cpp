#include <doctest.h>

#include <cmath>

#include "fhardy/constants.hpp"
#include "oracles.hpp"

using namespace fhardy;

TEST_SUITE("constants") {

TEST_CASE("critical exponent") {
    CHECK(critical_exponent(3, 0.5) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(critical_exponent(3, 1.0 - 1e-9) == doctest::Approx(6.0).epsilon(1e-6));
    CHECK(critical_exponent(4, 0.75) == doctest::Approx(3.2).epsilon(1e-14));
    CHECK_THROWS_AS(critical_exponent(1, 0.9), std::domain_error);  // N <= 2s
}

TEST_CASE("sharp Hardy constant") {
    CHECK(lambda_ns(3, 0.5) == doctest::Approx(2.0 / M_PI).epsilon(1e-13));
    // s -> 1 limit is ((N-2)/2)^2
    CHECK(std::abs(lambda_ns(3, 0.999) - 0.25) < 5e-3);
    // independent log-gamma oracle at (2, 0.5)
    const double oracle = std::exp(std::log(2.0) + 2.0 * oracles::log_gamma(0.75) -
                                   2.0 * oracles::log_gamma(0.25));
    CHECK(lambda_ns(2, 0.5) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK_THROWS_AS(lambda_ns(1, 0.5), std::domain_error);
}

TEST_CASE("hardy constant limit s->1 for several N") {
    for (int dim : {3, 4, 5}) {
        const double lim = 0.25 * (dim - 2.0) * (dim - 2.0);
        for (double s : {0.99, 0.999}) {
            CHECK(std::abs(lambda_ns(dim, s) - lim) <= 10.0 * (1.0 - s));
        }
    }
}

TEST_CASE("fractional Laplacian normalization") {
    CHECK(a_ns(2, 0.5) == doctest::Approx(0.5 / M_PI).epsilon(1e-13));
    // direct oracle at (3, 0.5): 4^s Gamma(N/2+s) / (pi^{N/2} |Gamma(-s)|)
    const double oracle = 2.0 * std::exp(oracles::log_gamma(2.0)) /
                          (std::pow(M_PI, 1.5) * std::abs(oracles::gamma_fn(-0.5)));
    CHECK(a_ns(3, 0.5) == doctest::Approx(oracle).epsilon(1e-12));
    for (int dim : {2, 3, 4, 5})
        for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) CHECK(a_ns(dim, s) > 0.0);
    CHECK_THROWS_AS(a_ns(3, 0.0), std::domain_error);
    CHECK_THROWS_AS(a_ns(3, 1.0), std::domain_error);
}

TEST_CASE("extension constant") {
    CHECK(extension_constant(0.5) == doctest::Approx(1.0).epsilon(1e-14));
    const double o25 = std::exp(0.5 * std::log(2.0) + oracles::log_gamma(0.75) -
                                oracles::log_gamma(0.25));
    const double o75 = std::exp(-0.5 * std::log(2.0) + oracles::log_gamma(0.25) -
                                oracles::log_gamma(0.75));
    CHECK(extension_constant(0.25) == doctest::Approx(o25).epsilon(1e-12));
    CHECK(extension_constant(0.75) == doctest::Approx(o75).epsilon(1e-12));
    CHECK_THROWS_AS(extension_constant(0.0), std::domain_error);
    CHECK_THROWS_AS(extension_constant(1.0), std::domain_error);
}

TEST_CASE("exponent map endpoints and interior") {
    CHECK(psi_ns(3, 0.5, 0.0) == 0.0);
    CHECK(psi_ns(3, 0.5, 1.0) ==
          doctest::Approx(lambda_ns(3, 0.5)).epsilon(1e-12));
    // reflection: the extended formula is invariant under gamma -> N-2s-gamma
    for (double g : {0.1, 0.3, 0.5, 0.8, 0.95}) {
        const double direct = psi_ns(3, 0.5, g);
        const double reflected = oracles::psi_formula(3, 0.5, 3.0 - 1.0 - g);
        CHECK(direct == doctest::Approx(reflected).epsilon(1e-11));
    }
    CHECK_THROWS_AS(psi_ns(3, 0.5, -0.1), std::domain_error);
    CHECK_THROWS_AS(psi_ns(3, 0.5, 1.1), std::domain_error);
}

TEST_CASE("exponent map strict monotonicity") {
    const std::pair<int, double> cases[] = {{2, 0.3}, {3, 0.5}, {4, 0.75}};
    for (const auto& [dim, s] : cases) {
        const double gmax = 0.5 * (dim - 2.0 * s);
        double prev = psi_ns(dim, s, 0.0);
        for (int i = 1; i <= 1000; ++i) {
            const double cur = psi_ns(dim, s, gmax * i / 1000.0);
            CHECK(cur > prev);
            prev = cur;
        }
        CHECK(prev == doctest::Approx(lambda_ns(dim, s)).epsilon(1e-12));
    }
}

TEST_CASE("exponent map inversion") {
    const double lambda = lambda_ns(3, 0.5);

    SUBCASE("limits") {
        CHECK(gamma_theta(3, 0.5, 1e-8 * lambda) < 1e-4);
        CHECK(gamma_theta(3, 0.5, lambda * (1.0 - 1e-10)) > 1.0 - 1e-3);
    }
    SUBCASE("reference value against a dense-sampling bracket") {
        const double theta = 1.0 / M_PI;  // Lambda/2
        const double g = gamma_theta(3, 0.5, theta);
        CHECK(std::abs(psi_ns(3, 0.5, g) - theta) <= 1e-12 * lambda);
        const auto [lo, hi] = oracles::gamma_root_bracket(3, 0.5, theta);
        CHECK(g >= lo);
        CHECK(g <= hi);
    }
    SUBCASE("round trip at 100 points") {
        for (const auto& [dim, s] :
             std::initializer_list<std::pair<int, double>>{{2, 0.3}, {3, 0.5}, {4, 0.75}}) {
            const double gmax = 0.5 * (dim - 2.0 * s);
            for (int i = 1; i <= 100; ++i) {
                const double g = gmax * (1.0 - 1e-6) * i / 101.0;
                const double theta = psi_ns(dim, s, g);
                CHECK(gamma_theta(dim, s, theta) == doctest::Approx(g).epsilon(1e-10));
            }
        }
    }
    SUBCASE("domain errors") {
        CHECK_THROWS_AS(gamma_theta(3, 0.5, 0.0), std::domain_error);
        CHECK_THROWS_AS(gamma_theta(3, 0.5, lambda), std::domain_error);
        CHECK_THROWS_AS(gamma_theta(3, 0.5, 0.7), std::domain_error);  // above Lambda
    }
}

TEST_CASE("regime classification") {
    CHECK(regime_classify({3, 0.5, 0.3, 2.0, 6.0}) == Regime::CriticalNonexistent);
    CHECK(regime_classify({3, 0.5, 0.3, 3.0, 6.0}) == Regime::SupercriticalQualitative);
    CHECK(regime_classify({3, 0.5, 0.3, 3.0, 4.5}) == Regime::SupercriticalExistenceOnly);
    // q+1 exactly on the boundary counts as existence-only
    CHECK(regime_classify({3, 0.5, 0.3, 3.0, 5.0}) == Regime::SupercriticalExistenceOnly);
    // perturbed off the critical exponent by more than the tolerance
    CHECK(regime_classify({3, 0.5, 0.3, 2.0 + 1e-6, 6.0}) != Regime::CriticalNonexistent);
    // structural violations return INVALID rather than throwing
    CHECK(regime_classify({3, 0.5, 0.7, 3.0, 6.0}) == Regime::Invalid);   // theta >= Lambda
    CHECK(regime_classify({3, 0.5, 0.3, 6.0, 3.0}) == Regime::Invalid);   // q < p
    CHECK(regime_classify({3, 0.5, 0.3, 1.5, 6.0}) == Regime::Invalid);   // p below critical
    CHECK(regime_classify({1, 0.5, 0.3, 3.0, 6.0}) == Regime::Invalid);   // N < 2
}

TEST_CASE("criticality detection for other (N, s)") {
    CHECK(is_critical_p(4, 0.75, (4.0 + 1.5) / (4.0 - 1.5)));
    CHECK_FALSE(is_critical_p(3, 0.5, 2.0 + 1e-6));
}

TEST_CASE("spectral constants bundle") {
    const ProblemParams pp{3, 0.5, 1.0 / M_PI, 3.0, 6.0};
    const SpectralConstants c = spectral_constants(pp);
    CHECK(c.lambda_ns == doctest::Approx(2.0 / M_PI));
    CHECK(c.crit_exp == doctest::Approx(3.0));
    CHECK(c.k_s == doctest::Approx(1.0));
    CHECK(c.gamma_theta > 0.0);
    CHECK(c.gamma_theta < 1.0);
    CHECK(std::abs(psi_ns(3, 0.5, c.gamma_theta) - pp.theta) <= 1e-12 * c.lambda_ns);
}

}  // TEST_SUITE
