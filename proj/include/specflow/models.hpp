#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "specflow/flowcore.hpp"

namespace specflow {

struct Summability {
    enum class Kind { Finite, PSummable, ThetaSummable };
    Kind kind = Kind::Finite;
    double parameter = 0.0;

    static Summability finite() { return {Kind::Finite, 0.0}; }
    static Summability p_summable(double p) { return {Kind::PSummable, p}; }
    static Summability theta_summable(double s) { return {Kind::ThetaSummable, s}; }
};

/// A generated path plus ground truth where the construction provides one.
struct Scenario {
    OperatorPath path;
    std::optional<long> expected_flow;
    std::string provenance;  ///< where expected_flow comes from
    std::optional<int> truncation_dim;
    Summability summability = Summability::finite();
};

/// Trigonometric random path D_t = sum_{k<=degree} cos(k pi t) A_k +
/// sin(k pi t) B_k with seeded Hermitian coefficients, shifted by a scalar
/// multiple of the identity so both endpoints are comfortably invertible.
/// Analytic derivative attached. Deterministic in (dim, seed, degree).
Scenario make_random_path(int dim, std::uint64_t seed, int degree);

/// Diagonal path on [0,1] with one affine branch per requested crossing
/// (t_i interior, distinct; direction +1/-1) plus two inert branches.
/// expected_flow = sum of directions, exact by construction.
Scenario make_crossing_path(const std::vector<std::pair<double, int>>& crossings);

/// Fourier truncation of the circle Dirac operator: D = diag(n), n = -N..N,
/// path D + t I on the window. Endpoints must avoid integers. For windows of
/// length 1 the metadata carries the cyclic shift unitary realizing the
/// endpoint equivalence on all but the two boundary modes.
Scenario make_circle_dirac(int N, Interval window);

/// Harmonic-oscillator-like symmetric spectrum D = diag(+-(k+1/2)),
/// k = 0..N-1, path D + t I on the window. Gaussian heat traces of D are
/// summable uniformly in N (theta-summability exhibit).
Scenario make_theta_model(int N, Interval window);

/// Conjugates the scenario path by U_t = exp(t K) for a seeded skew-Hermitian
/// K scaled by `scale`; the flow is unchanged. scale = 0 reproduces the input.
Scenario conjugate_scenario(const Scenario& s, std::uint64_t seed, double scale = 1.0);

}  // namespace specflow
