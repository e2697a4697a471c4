#include "specflow/normfun.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <stdexcept>

#include "specflow/errors.hpp"

namespace specflow {

NormalizingFunction::NormalizingFunction(std::string label, Fn chi, Fn chi_prime,
                                         DecayClass gap_decay, DecayClass prime_decay)
    : label_(std::move(label)),
      chi_(std::move(chi)),
      chi_prime_(std::move(chi_prime)),
      gap_decay_(gap_decay),
      prime_decay_(prime_decay) {
    if (!chi_ || !chi_prime_) {
        throw std::invalid_argument("NormalizingFunction: chi and chi_prime are required");
    }
}

bool ValidationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const BulletCheck& c) { return c.passed; });
}

std::string ValidationReport::summary() const {
    std::string out;
    for (const BulletCheck& c : checks) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s: %s (worst at x=%.6g, value %.6g) %s\n",
                      c.name.c_str(), c.passed ? "pass" : "FAIL", c.worst_x, c.worst_value,
                      c.note.c_str());
        out += buf;
    }
    return out;
}

ValidationReport validate_normalizing(const NormalizingFunction& f, const Grid& grid) {
    if (!(grid.step > 0.0) || !(grid.lo < grid.hi)) {
        throw std::invalid_argument("validate_normalizing: malformed grid");
    }
    if (grid.lo > -50.0 + 1e-9 || grid.hi < 50.0 - 1e-9) {
        throw std::invalid_argument("validate_normalizing: grid must cover at least [-50, 50]");
    }

    const long n = std::lround(std::floor((grid.hi - grid.lo) / grid.step)) + 1;
    std::vector<double> xs(n);
    for (long i = 0; i < n; ++i) xs[i] = grid.lo + static_cast<double>(i) * grid.step;

    ValidationReport report;

    // chi(0) = 0 and no other zeros: chi must be strictly sign-correct away from 0.
    {
        BulletCheck c{"zero_set", true, 0.0, 0.0, ""};
        const double at0 = std::abs(f.chi(0.0));
        if (at0 > 1e-12) {
            c.passed = false;
            c.worst_x = 0.0;
            c.worst_value = at0;
            c.note = "chi(0) != 0";
        }
        double worst = 1e300;
        for (double x : xs) {
            if (std::abs(x) <= 0.5 * grid.step) continue;
            const double signed_value = (x > 0 ? 1.0 : -1.0) * f.chi(x);
            if (signed_value < worst) {
                worst = signed_value;
                c.worst_x = x;
                c.worst_value = signed_value;
            }
        }
        if (worst <= 0.0) {
            c.passed = false;
            c.note = "chi vanishes or has the wrong sign away from 0";
        }
        report.checks.push_back(c);
    }

    // limits +-1, decaying at least like the declared envelope
    {
        BulletCheck c{"limits", true, 0.0, 0.0, "envelope " + f.decay().describe()};
        const double slack = 4.0;
        for (double x : xs) {
            if (std::abs(x) < 1.0) continue;
            const double gap = std::abs(f.chi(x) - (x > 0 ? 1.0 : -1.0));
            const double allowed = slack * f.decay().envelope(x);
            if (gap > allowed && gap > c.worst_value) {
                c.passed = false;
                c.worst_x = x;
                c.worst_value = gap;
            }
        }
        const double end_gap = std::max(std::abs(f.chi(grid.hi) - 1.0),
                                        std::abs(f.chi(grid.lo) + 1.0));
        if (end_gap > 0.05) {
            c.passed = false;
            c.worst_x = grid.hi;
            c.worst_value = end_gap;
            c.note = "chi is not close to +-1 at the grid ends";
        }
        report.checks.push_back(c);
    }

    // chi' >= 0, chi'(0) > 0, chi' vanishing at infinity
    {
        BulletCheck c{"derivative", true, 0.0, f.chi_prime(0.0), ""};
        if (!(f.chi_prime(0.0) > 0.0)) {
            c.passed = false;
            c.note = "chi'(0) <= 0";
        }
        for (double x : xs) {
            const double d = f.chi_prime(x);
            if (d < -1e-12 && d < c.worst_value) {
                c.passed = false;
                c.worst_x = x;
                c.worst_value = d;
                c.note = "chi' negative";
            }
        }
        const double at_ends = std::max(f.chi_prime(grid.lo), f.chi_prime(grid.hi));
        if (at_ends > 1e-2) {
            c.passed = false;
            c.worst_x = grid.hi;
            c.worst_value = at_ends;
            c.note = "chi' does not vanish at the grid ends";
        }
        report.checks.push_back(c);
    }

    // finite differences of chi reproduce chi'. Two step sizes: the small one
    // rescues C^1-only functions at second-derivative kinks, the large one
    // rescues quadrature-backed chi whose evaluation noise amplifies as 1/h.
    {
        BulletCheck c{"derivative_consistency", true, 0.0, 0.0, ""};
        const long stride = std::max<long>(1, n / 200);
        for (long i = 0; i < n; i += stride) {
            const double x = xs[i];
            double err = std::numeric_limits<double>::infinity();
            for (double h : {1e-5, 1e-7}) {
                const double fd = (f.chi(x + h) - f.chi(x - h)) / (2.0 * h);
                err = std::min(err, std::abs(fd - f.chi_prime(x))
                                        / (1.0 + std::abs(f.chi_prime(x))));
            }
            if (err > c.worst_value) {
                c.worst_x = x;
                c.worst_value = err;
            }
        }
        if (c.worst_value > 1e-6) {
            c.passed = false;
            c.note = "finite differences disagree with chi_prime";
        }
        report.checks.push_back(c);
    }

    return report;
}

namespace {

// int_0^{atan(x)} cos(theta)^{p-1} dtheta == int_0^x (1+z^2)^{-(p+1)/2} dz,
// which keeps the quadrature on a bounded interval for every x.
double incomplete_chi_integral(double x, double p, const QuadratureOptions& opts) {
    const double upper = std::atan(std::abs(x));
    if (upper == 0.0) return 0.0;
    const auto integrand = [p](double theta) {
        return std::pow(std::cos(theta), p - 1.0);
    };
    const double v = integrate_adaptive(integrand, 0.0, upper, 1e-12, opts).value;
    return x >= 0 ? v : -v;
}

}  // namespace

NormalizingFunction make_chi_p(double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("make_chi_p: requires p >= 1");

    char label[32];
    std::snprintf(label, sizeof(label), "chi_p(%g)", p);

    NormalizingFunction::Fn chi;
    double c_p = 0.0;
    if (p == 1.0) {
        c_p = M_PI;
        chi = [](double x) { return 2.0 * M_1_PI * std::atan(x); };
    } else if (p == 2.0) {
        c_p = 2.0;
        chi = [](double x) { return x / std::hypot(1.0, x); };
    } else {
        const QuadratureOptions opts;
        c_p = 2.0 * incomplete_chi_integral(std::numeric_limits<double>::infinity(), p, opts);
        const double scale = 2.0 / c_p;
        chi = [p, scale, opts](double x) {
            return scale * incomplete_chi_integral(x, p, opts);
        };
    }

    const double prime_scale = 2.0 / c_p;
    auto chi_prime = [p, prime_scale](double x) {
        return prime_scale * std::pow(1.0 + x * x, -0.5 * (p + 1.0));
    };

    // 1 - chi_p(x) = (2/C_p) int_x^inf (1+z^2)^{-(p+1)/2} dz
    //             <= (2/C_p) x^{-p}/p <= (2/C_p) (2^{p/2}/p) (1+x^2)^{-p/2}  for x >= 1
    const double gap_amp = prime_scale * std::pow(2.0, 0.5 * p) / p;
    return NormalizingFunction(label, std::move(chi), std::move(chi_prime),
                               DecayClass::polynomial(p, gap_amp),
                               DecayClass::polynomial(p + 1.0, prime_scale));
}

NormalizingFunction make_chi_theta(double s) {
    if (!(s > 0.0)) throw std::invalid_argument("make_chi_theta: requires s > 0");

    char label[32];
    std::snprintf(label, sizeof(label), "chi_theta(%g)", s);

    const double root_s = std::sqrt(s);
    auto chi = [root_s](double x) { return std::erf(root_s * x); };
    const double prime_scale = 2.0 * std::sqrt(s / M_PI);
    auto chi_prime = [s, prime_scale](double x) { return prime_scale * std::exp(-s * x * x); };

    // erfc(sqrt(s) x) <= exp(-s x^2) / (sqrt(pi s) x) <= exp(-s x^2)/sqrt(pi s) for x >= 1
    const double gap_amp = std::max(1.0, 1.0 / std::sqrt(M_PI * s));
    return NormalizingFunction(label, std::move(chi), std::move(chi_prime),
                               DecayClass::gaussian(s, gap_amp),
                               DecayClass::gaussian(s, prime_scale));
}

NormalizingFunction make_involutive_spline(double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("make_involutive_spline: requires delta > 0");

    char label[32];
    std::snprintf(label, sizeof(label), "involutive(%g)", delta);

    auto chi = [delta](double x) {
        if (x >= delta) return 1.0;
        if (x <= -delta) return -1.0;
        const double u = x / delta;
        const double u2 = u * u;
        return u * (15.0 - u2 * (10.0 - 3.0 * u2)) / 8.0;
    };
    auto chi_prime = [delta](double x) {
        if (std::abs(x) >= delta) return 0.0;
        const double w = 1.0 - (x / delta) * (x / delta);
        return 15.0 / (8.0 * delta) * w * w;
    };

    return NormalizingFunction(label, std::move(chi), std::move(chi_prime),
                               DecayClass::compact_support(delta, 1.0),
                               DecayClass::compact_support(delta, 15.0 / (8.0 * delta)));
}

}  // namespace specflow
