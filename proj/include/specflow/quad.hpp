#pragma once

#include <functional>
#include <string>

namespace specflow {

class HermitianMatrix;
class OperatorPath;

/// Outcome of a 1-D quadrature: value, a-posteriori error estimate, and the
/// number of integrand evaluations spent.
struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    long evaluations = 0;
};

struct QuadratureOptions {
    int max_depth = 60;
    long max_evaluations = 4000000;
};

/// Adaptive Simpson quadrature over [a, b] with error control by interval
/// halving (the local error indicator is the usual |S_half - S_whole| / 15).
/// Deterministic for fixed inputs. Throws ConvergenceError carrying the
/// partial value when the subdivision budget runs out, DomainError when the
/// integrand returns a non-finite value.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double a, double b, double tol,
                                    const QuadratureOptions& options = {});

/// Certified decay envelope for a function on the real line.
///
/// Polynomial:     |f(x)| <= amplitude * (1 + x^2)^(-parameter/2)   (|x| >= 1)
/// Gaussian:       |f(x)| <= amplitude * exp(-parameter * x^2)
/// CompactSupport: f(x) = 0 for |x| >= parameter
struct DecayClass {
    enum class Kind { Polynomial, Gaussian, CompactSupport };

    Kind kind = Kind::Polynomial;
    double parameter = 2.0;
    double amplitude = 1.0;

    double envelope(double x) const;
    /// Whether the envelope has a finite integral over the real line.
    bool integrable() const;
    std::string describe() const;

    static DecayClass polynomial(double exponent, double amplitude = 1.0);
    static DecayClass gaussian(double rate, double amplitude = 1.0);
    static DecayClass compact_support(double half_width, double amplitude = 1.0);
};

/// Integral of f over the whole real line. A window [-X, X] is chosen so the
/// analytic tail bound of the decay class stays below tol/2, then the window
/// integral is computed to tol/2; the tail bound is folded into the error
/// estimate. Rejects non-integrable decay (polynomial exponent <= 1).
QuadratureResult improper_integral(const std::function<double(double)>& f,
                                   const DecayClass& decay, double tol,
                                   const QuadratureOptions& options = {});

/// Symmetric difference quotient (D(t+h) - D(t-h)) / 2h of an operator path,
/// symmetrized to absorb roundoff from the quotient. Rejects h < 1e-12 and
/// stencils leaving the path interval.
HermitianMatrix central_difference(const OperatorPath& path, double t, double h);

}  // namespace specflow
