#pragma once

#include <functional>
#include <string>
#include <vector>

#include "specflow/quad.hpp"

namespace specflow {

/// A normalizing function: chi in C^1 with chi^{-1}(0) = {0}, limits -1/+1 at
/// -inf/+inf, chi' >= 0 vanishing at infinity and chi'(0) > 0. Carries decay
/// metadata for the gap |chi(x) - sign(x)| and for chi'. Immutable; evaluation
/// is pure and thread-safe.
class NormalizingFunction {
public:
    using Fn = std::function<double(double)>;

    NormalizingFunction(std::string label, Fn chi, Fn chi_prime,
                        DecayClass gap_decay, DecayClass prime_decay);

    double chi(double x) const { return chi_(x); }
    double chi_prime(double x) const { return chi_prime_(x); }

    const std::string& label() const { return label_; }
    /// Envelope for |chi(x) - sign(x)| (the family's decay tag).
    const DecayClass& decay() const { return gap_decay_; }
    /// Envelope for chi'(x), suitable for improper integrals of chi'.
    const DecayClass& chi_prime_decay() const { return prime_decay_; }

private:
    std::string label_;
    Fn chi_;
    Fn chi_prime_;
    DecayClass gap_decay_;
    DecayClass prime_decay_;
};

/// Uniform evaluation grid lo, lo+step, ..., hi.
struct Grid {
    double lo = -50.0;
    double hi = 50.0;
    double step = 0.05;
};

struct BulletCheck {
    std::string name;
    bool passed = false;
    double worst_x = 0.0;
    double worst_value = 0.0;
    std::string note;
};

struct ValidationReport {
    std::vector<BulletCheck> checks;
    bool passed() const;
    std::string summary() const;
};

/// Checks the definition bullet by bullet on the grid (which must cover at
/// least [-50, 50]): zero set, limits against the decay envelope, derivative
/// sign/decay, and finite-difference consistency of chi' with chi.
/// Report-only; never throws on a failing function.
ValidationReport validate_normalizing(const NormalizingFunction& f, const Grid& grid = {});

/// chi_p(x) = (2/C_p) * int_0^x (1+z^2)^{-(p+1)/2} dz with
/// C_p = int_R (1+z^2)^{-(p+1)/2} dz. Closed forms for p = 1 (arctan) and
/// p = 2 (x / sqrt(1+x^2)); otherwise adaptive quadrature after the z = tan
/// substitution, with C_p computed once. Requires p >= 1.
NormalizingFunction make_chi_p(double p);

/// chi^s(x) = erf(sqrt(s) x), chi' = 2 sqrt(s/pi) exp(-s x^2). Requires s > 0.
/// (Normalized so the limits are -1/+1.)
NormalizingFunction make_chi_theta(double s);

/// Odd C^2 quintic ramp: chi(x) = sign(x) for |x| >= delta, and
/// (15u - 10u^3 + 3u^5)/8 with u = x/delta inside, so chi' = (15/(8 delta))
/// (1 - u^2)^2 >= 0 vanishes at the join. chi(D) is an involution for any D
/// whose spectrum avoids (-delta, delta).
NormalizingFunction make_involutive_spline(double delta);

}  // namespace specflow
