#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "specflow/errors.hpp"
#include "specflow/normfun.hpp"

using namespace specflow;

namespace {

// Maclaurin series of erf, independent of std::erf
double erf_series(double x) {
    double term = x;
    double sum = x;
    for (int n = 1; n < 60; ++n) {
        term *= -x * x / n;
        sum += term / (2 * n + 1);
    }
    return 2.0 / std::sqrt(M_PI) * sum;
}

// direct Simpson evaluation of the raw defining integral int_0^x (1+z^2)^{-(p+1)/2} dz
double chi_p_direct(double x, double p, double c_p) {
    const int n = 20000;
    const double h = x / n;
    double sum = std::pow(1.0 + 0.0, -0.5 * (p + 1.0)) + std::pow(1.0 + x * x, -0.5 * (p + 1.0));
    for (int i = 1; i < n; ++i) {
        const double z = i * h;
        sum += (i % 2 ? 4.0 : 2.0) * std::pow(1.0 + z * z, -0.5 * (p + 1.0));
    }
    return (2.0 / c_p) * sum * h / 3.0;
}

}  // namespace

TEST_CASE("chi_1 is the normalized arctangent") {
    const NormalizingFunction chi = make_chi_p(1.0);
    CHECK(chi.chi(1.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(chi.chi(0.0) == 0.0);
    // C_1 = pi shows up in chi'(0) = 2 / C_1
    CHECK(chi.chi_prime(0.0) * M_PI == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("chi_2 is the bounded transform x / sqrt(1 + x^2)") {
    const NormalizingFunction chi = make_chi_p(2.0);
    CHECK(chi.chi_prime(0.0) == doctest::Approx(1.0).epsilon(1e-14));  // 2 / C_2, C_2 = 2
    for (int i = 0; i <= 10000; ++i) {
        const double x = -50.0 + 0.01 * i;
        const double expected = x / std::sqrt(1.0 + x * x);
        if (std::abs(chi.chi(x) - expected) > 1e-12) {
            CHECK(chi.chi(x) == doctest::Approx(expected).epsilon(1e-12));
            break;
        }
    }
}

TEST_CASE("generic-p chi matches the raw defining integral") {
    for (double p : {1.5, 3.0}) {
        const NormalizingFunction chi = make_chi_p(p);
        const double c_p = 2.0 / chi.chi_prime(0.0);
        for (double x : {0.3, 1.0, 2.5, -4.0}) {
            CHECK(chi.chi(x) == doctest::Approx(chi_p_direct(x, p, c_p)).epsilon(1e-9));
        }
        CHECK(chi.chi(0.0) == 0.0);
    }
}

TEST_CASE("chi_p rejects p < 1") {
    CHECK_THROWS_AS(make_chi_p(0.9), std::invalid_argument);
}

TEST_CASE("chi_theta is the rescaled error function") {
    const NormalizingFunction chi = make_chi_theta(1.0);
    CHECK(chi.chi(0.0) == 0.0);
    CHECK(chi.chi(1.0) == doctest::Approx(erf_series(1.0)).epsilon(1e-14));
    CHECK(chi.chi(1.0) == doctest::Approx(0.84270079294971487).epsilon(1e-10));
    CHECK(std::abs(chi.chi(6.0) - 1.0) < 1e-15);  // Gaussian tail
    CHECK(chi.chi_prime(0.0) == doctest::Approx(2.0 / std::sqrt(M_PI)).epsilon(1e-14));

    const NormalizingFunction half = make_chi_theta(0.5);
    CHECK(half.chi(2.0) == doctest::Approx(erf_series(std::sqrt(0.5) * 2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(make_chi_theta(0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_chi_theta(-1.0), std::invalid_argument);
}

TEST_CASE("involutive spline: flat region, oddness, C1 join") {
    const double delta = 0.25;
    const NormalizingFunction chi = make_involutive_spline(delta);
    CHECK(chi.chi(2.0 * delta) == 1.0);
    CHECK(chi.chi(-3.0 * delta) == -1.0);
    CHECK(chi.chi(0.0) == 0.0);
    CHECK(chi.chi_prime(0.0) > 0.0);
    CHECK(chi.chi_prime(0.0) == doctest::Approx(15.0 / (8.0 * delta)));

    // oddness inside the ramp
    for (double x : {0.05, 0.1, 0.2, 0.24}) {
        CHECK(chi.chi(x) == doctest::Approx(-chi.chi(-x)).epsilon(1e-15));
    }

    // the derivative is continuous across the joins (finite differences of chi)
    const double h = 1e-6;
    for (double x : {delta - 2.0 * h, delta, delta + 2.0 * h, -delta}) {
        const double fd = (chi.chi(x + h) - chi.chi(x - h)) / (2.0 * h);
        CHECK(std::abs(fd - chi.chi_prime(x)) < 1e-6);
    }

    CHECK_THROWS_AS(make_involutive_spline(0.0), std::invalid_argument);
}

TEST_CASE("validator accepts the constructed families") {
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
        const ValidationReport r = validate_normalizing(make_chi_p(p));
        INFO("chi_p p=", p, "\n", r.summary());
        CHECK(r.passed());
    }
    for (double s : {0.5, 1.0, 2.0}) {
        const ValidationReport r = validate_normalizing(make_chi_theta(s));
        INFO("chi_theta s=", s, "\n", r.summary());
        CHECK(r.passed());
    }
    for (double d : {0.1, 0.25, 1.0}) {
        const ValidationReport r = validate_normalizing(make_involutive_spline(d));
        INFO("involutive delta=", d, "\n", r.summary());
        CHECK(r.passed());
    }
}

TEST_CASE("validator accepts x / (1 + |x|) with its derivative") {
    const NormalizingFunction f(
        "rational_ramp", [](double x) { return x / (1.0 + std::abs(x)); },
        [](double x) {
            const double d = 1.0 + std::abs(x);
            return 1.0 / (d * d);
        },
        DecayClass::polynomial(1.0, 1.0), DecayClass::polynomial(2.0, 1.0));
    const ValidationReport r = validate_normalizing(f);
    INFO(r.summary());
    CHECK(r.passed());
}

TEST_CASE("validator rejects sine on the zero-set and limit bullets") {
    const NormalizingFunction f("sine", [](double x) { return std::sin(x); },
                                [](double x) { return std::cos(x); },
                                DecayClass::polynomial(1.0, 1.0),
                                DecayClass::polynomial(1.0, 1.0));
    const ValidationReport r = validate_normalizing(f);
    CHECK_FALSE(r.passed());
    bool zero_failed = false, limits_failed = false;
    for (const BulletCheck& c : r.checks) {
        if (c.name == "zero_set") zero_failed = !c.passed;
        if (c.name == "limits") limits_failed = !c.passed;
    }
    CHECK(zero_failed);
    CHECK(limits_failed);
}

TEST_CASE("validator requires the grid to cover [-50, 50]") {
    CHECK_THROWS_AS(validate_normalizing(make_chi_p(2.0), Grid{-10.0, 10.0, 0.1}),
                    std::invalid_argument);
}

TEST_CASE("decay envelopes of the chi_p family hold with fitted constants") {
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
        const NormalizingFunction chi = make_chi_p(p);

        // fit the constants on a coarse grid, verify on a fine one
        double c_sq = 0.0, c_prime = 0.0;
        for (double x = -50.0; x <= 50.0; x += 0.5) {
            const double env = std::pow(1.0 + x * x, -0.5 * p);
            c_sq = std::max(c_sq, std::abs(chi.chi(x) * chi.chi(x) - 1.0) / env);
            c_prime = std::max(c_prime, (std::abs(x) + 1.0) * chi.chi_prime(x) / env);
        }
        for (double x = -50.0; x <= 50.0; x += 0.037) {
            const double env = std::pow(1.0 + x * x, -0.5 * p);
            CHECK(std::abs(chi.chi(x) * chi.chi(x) - 1.0) <= 1.05 * c_sq * env + 1e-14);
            CHECK((std::abs(x) + 1.0) * chi.chi_prime(x) <= 1.05 * c_prime * env + 1e-14);
        }
    }
}
