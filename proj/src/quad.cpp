#include "specflow/quad.hpp"

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <set>
#include <stdexcept>
#include <vector>

#include "specflow/errors.hpp"
#include "specflow/flowcore.hpp"
#include "specflow/funcalc.hpp"

namespace specflow {

namespace {

struct Evals {
    const std::function<double(double)>& f;
    long count = 0;

    double operator()(double x) {
        ++count;
        const double v = f(x);
        if (!std::isfinite(v)) {
            throw DomainError("integrand returned a non-finite value at x = " + std::to_string(x));
        }
        return v;
    }
};

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

// Simpson pair over [a, b]: value is the extrapolated fine estimate, error the
// usual |fine - coarse| / 15 indicator. The quarter-point values are kept so a
// split reuses them.
struct Segment {
    double a, b;
    double fa, fm, fb;
    double flm, frm;
    double value, error;
    int depth;
};

Segment make_segment(Evals& eval, double a, double b, double fa, double fm, double fb,
                     int depth) {
    Segment s{a, b, fa, fm, fb, 0.0, 0.0, 0.0, 0.0, depth};
    const double m = 0.5 * (a + b);
    s.flm = eval(0.5 * (a + m));
    s.frm = eval(0.5 * (m + b));
    const double coarse = simpson(a, b, fa, fm, fb);
    const double fine = simpson(a, m, fa, s.flm, fm) + simpson(m, b, fm, s.frm, fb);
    s.value = fine + (fine - coarse) / 15.0;
    s.error = std::abs(fine - coarse) / 15.0;
    return s;
}

// orders the live set with the largest error first; ties resolve by position
// for determinism
struct WorstFirst {
    bool operator()(const Segment& x, const Segment& y) const {
        if (x.error != y.error) return x.error > y.error;
        return x.a < y.a;
    }
};

using SegmentSet = std::multiset<Segment, WorstFirst>;

// exact re-summation in position order; the incremental running sums drift
// when early indicators are many orders larger than the target
double sum_errors(const SegmentSet& segs) {
    double e = 0.0;
    for (const Segment& s : segs) e += s.error;
    return e;
}

double sum_values(const SegmentSet& segs) {
    std::vector<const Segment*> ordered;
    ordered.reserve(segs.size());
    for (const Segment& s : segs) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const Segment* x, const Segment* y) { return x->a < y->a; });
    double v = 0.0;
    for (const Segment* s : ordered) v += s->value;
    return v;
}

QuadratureResult integrate_partition(const std::function<double(double)>& f,
                                     const std::vector<double>& breakpoints, double tol,
                                     const QuadratureOptions& options) {
    Evals eval{f, 0};
    SegmentSet live;
    for (size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        const double a = breakpoints[i], b = breakpoints[i + 1];
        live.insert(make_segment(eval, a, b, eval(a), eval(0.5 * (a + b)), eval(b),
                                 options.max_depth));
    }

    double error = sum_errors(live);
    double running = error;
    int since_resum = 0;
    bool exhausted = false;
    while (running > tol) {
        if (++since_resum >= 64) {
            running = error = sum_errors(live);
            since_resum = 0;
            if (running <= tol) break;
        }
        const Segment worst = *live.begin();
        if (worst.depth <= 0 || eval.count >= options.max_evaluations) {
            // confirm against an exact re-sum before giving up
            running = error = sum_errors(live);
            if (running <= tol) break;
            exhausted = true;
            break;
        }
        live.erase(live.begin());
        const double m = 0.5 * (worst.a + worst.b);
        const Segment left =
            make_segment(eval, worst.a, m, worst.fa, worst.flm, worst.fm, worst.depth - 1);
        const Segment right =
            make_segment(eval, m, worst.b, worst.fm, worst.frm, worst.fb, worst.depth - 1);
        running += left.error + right.error - worst.error;
        live.insert(left);
        live.insert(right);
    }

    error = sum_errors(live);
    const double value = sum_values(live);
    if (exhausted && error > tol) {
        throw ConvergenceError("integrate_adaptive: subdivision budget exhausted before tolerance "
                               + std::to_string(tol),
                               value, error);
    }
    return {value, error, eval.count};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double a, double b, double tol,
                                    const QuadratureOptions& options) {
    if (!(tol > 0.0)) throw std::invalid_argument("integrate_adaptive: tol must be positive");
    if (a == b) return {0.0, 0.0, 0};
    return integrate_partition(f, {a, b}, tol, options);
}

double DecayClass::envelope(double x) const {
    const double ax = std::abs(x);
    switch (kind) {
        case Kind::Polynomial: return amplitude * std::pow(1.0 + ax * ax, -0.5 * parameter);
        case Kind::Gaussian: return amplitude * std::exp(-parameter * ax * ax);
        case Kind::CompactSupport: return ax >= parameter ? 0.0 : amplitude;
    }
    return 0.0;
}

bool DecayClass::integrable() const {
    switch (kind) {
        case Kind::Polynomial: return parameter > 1.0;
        case Kind::Gaussian: return parameter > 0.0;
        case Kind::CompactSupport: return true;
    }
    return false;
}

std::string DecayClass::describe() const {
    char buf[96];
    switch (kind) {
        case Kind::Polynomial:
            std::snprintf(buf, sizeof(buf), "polynomial(p=%g, C=%g)", parameter, amplitude);
            break;
        case Kind::Gaussian:
            std::snprintf(buf, sizeof(buf), "gaussian(s=%g, C=%g)", parameter, amplitude);
            break;
        case Kind::CompactSupport:
            std::snprintf(buf, sizeof(buf), "compact(delta=%g)", parameter);
            break;
    }
    return buf;
}

DecayClass DecayClass::polynomial(double exponent, double amplitude) {
    return {Kind::Polynomial, exponent, amplitude};
}
DecayClass DecayClass::gaussian(double rate, double amplitude) {
    return {Kind::Gaussian, rate, amplitude};
}
DecayClass DecayClass::compact_support(double half_width, double amplitude) {
    return {Kind::CompactSupport, half_width, amplitude};
}

namespace {

// int_X^inf of the envelope, for X >= 1.
double tail_bound(const DecayClass& d, double X) {
    switch (d.kind) {
        case DecayClass::Kind::Polynomial:
            // (1+z^2)^{-p/2} <= z^{-p} for z >= 1
            return d.amplitude * std::pow(X, 1.0 - d.parameter) / (d.parameter - 1.0);
        case DecayClass::Kind::Gaussian:
            return d.amplitude * std::exp(-d.parameter * X * X) / (2.0 * d.parameter * X);
        case DecayClass::Kind::CompactSupport:
            return X >= d.parameter ? 0.0 : d.amplitude * (d.parameter - X);
    }
    return 0.0;
}

}  // namespace

QuadratureResult improper_integral(const std::function<double(double)>& f,
                                   const DecayClass& decay, double tol,
                                   const QuadratureOptions& options) {
    if (!(tol > 0.0)) throw std::invalid_argument("improper_integral: tol must be positive");
    if (!decay.integrable()) {
        throw std::invalid_argument("improper_integral: divergent tail (" + decay.describe() + ")");
    }

    // window solving tail_bound(X) = tol/4, so both tails stay below tol/2
    double window = 1.0;
    const double target = 0.25 * tol;
    switch (decay.kind) {
        case DecayClass::Kind::Polynomial: {
            const double p = decay.parameter;
            window = std::max(1.0, std::pow(decay.amplitude / (target * (p - 1.0)),
                                            1.0 / (p - 1.0)));
            break;
        }
        case DecayClass::Kind::Gaussian: {
            double hi = 1.0;
            while (tail_bound(decay, hi) > target && hi < 1e4) hi *= 2.0;
            double lo = 1e-3;
            for (int i = 0; i < 80; ++i) {
                const double mid = 0.5 * (lo + hi);
                (tail_bound(decay, mid) > target ? lo : hi) = mid;
            }
            window = std::max(1.0, hi);
            break;
        }
        case DecayClass::Kind::CompactSupport:
            window = decay.parameter;
            break;
    }

    // dyadic warm-start partition keeps the initial error indicators sane when
    // the certified window is many orders wider than the integrand's features
    std::vector<double> shells;
    for (double x = 1.0; x < window; x *= 2.0) shells.push_back(x);
    std::vector<double> breakpoints;
    breakpoints.push_back(-window);
    for (auto it = shells.rbegin(); it != shells.rend(); ++it) breakpoints.push_back(-*it);
    breakpoints.push_back(0.0);
    for (double x : shells) breakpoints.push_back(x);
    breakpoints.push_back(window);

    const double tails = 2.0 * tail_bound(decay, window);
    QuadratureResult inner = integrate_partition(f, breakpoints, 0.125 * tol, options);
    return {inner.value, inner.error_estimate + tails, inner.evaluations};
}

HermitianMatrix central_difference(const OperatorPath& path, double t, double h) {
    if (!(h >= 1e-12)) {
        throw std::invalid_argument("central_difference: h below 1e-12 loses all significant digits");
    }
    const Interval iv = path.interval();
    if (t - h < iv.a - 1e-12 || t + h > iv.b + 1e-12) {
        throw PreconditionError("central_difference: stencil [t-h, t+h] leaves the path interval");
    }
    Eigen::MatrixXcd diff =
        (path.at(t + h).matrix() - path.at(t - h).matrix()) / (2.0 * h);
    diff = 0.5 * (diff + diff.adjoint().eval());
    return HermitianMatrix(std::move(diff));
}

}  // namespace specflow
