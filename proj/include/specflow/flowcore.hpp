#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "specflow/funcalc.hpp"
#include "specflow/normfun.hpp"
#include "specflow/quad.hpp"

namespace specflow {

struct Interval {
    double a = 0.0;
    double b = 1.0;
    double length() const { return b - a; }
};

struct PathMetadata {
    std::string label;
    /// Unitary with U D_a U* ~ D_b, when the endpoints are (approximately)
    /// unitarily equivalent.
    std::optional<Eigen::MatrixXcd> endpoint_unitary;
    /// Coordinates on which the equivalence is checked; empty means all.
    /// Spectral truncations use this to exclude boundary modes.
    std::vector<Eigen::Index> equivalence_modes;
};

/// A C^1 family t -> D_t of Hermitian matrices on an interval, with optional
/// analytic derivative. Evaluation must be reentrant and side-effect-free;
/// the quadratures and the crossing oracle may probe many t.
class OperatorPath {
public:
    using Evaluator = std::function<HermitianMatrix(double)>;

    OperatorPath(Eigen::Index dim, Interval interval, Evaluator evaluate,
                 Evaluator derivative = nullptr, PathMetadata metadata = {});

    Eigen::Index dim() const { return dim_; }
    const Interval& interval() const { return interval_; }
    const PathMetadata& metadata() const { return metadata_; }
    bool has_analytic_derivative() const { return static_cast<bool>(derivative_); }

    /// D_t; t is range-checked against the interval (with a small slack).
    HermitianMatrix at(double t) const;

    /// Analytic derivative when present, otherwise a central difference with
    /// h = 1e-5 * interval length (stencil shifted inward near the ends).
    HermitianMatrix derivative_at(double t) const;

private:
    Eigen::Index dim_;
    Interval interval_;
    Evaluator evaluate_;
    Evaluator derivative_;
    PathMetadata metadata_;
};

/// Central-difference check of the analytic derivative at random interior t.
struct C1CheckResult {
    bool passed = true;
    double worst_defect = 0.0;
    double worst_t = 0.0;
};
C1CheckResult check_c1(const OperatorPath& path, int trials = 10, double h = 1e-4,
                       std::uint64_t seed = 20240901);

/// A periodic family x in [0,1] -> s(x) of unitaries with s(0) = s(1).
/// Evaluation wraps x periodically, so difference stencils may cross the seam.
class UnitaryLoop {
public:
    using Evaluator = std::function<Eigen::MatrixXcd(double)>;

    UnitaryLoop(Eigen::Index dim, Evaluator evaluate, Evaluator derivative = nullptr);

    Eigen::Index dim() const { return dim_; }
    bool has_analytic_derivative() const { return static_cast<bool>(derivative_); }

    Eigen::MatrixXcd at(double x) const;
    Eigen::MatrixXcd derivative_at(double x, double h) const;

    /// Max of ||s(x)* s(x) - I|| over a small sample of x.
    double unitarity_defect(int samples = 17) const;
    /// ||s(0) - s(1)|| (evaluated without wrapping).
    double periodicity_defect() const;

private:
    double wrap(double x) const;

    Eigen::Index dim_;
    Evaluator evaluate_;
    Evaluator derivative_;
};

/// Two orthogonal projections on the same space.
struct ProjectionPair {
    Projection p;
    Projection q;

    ProjectionPair(Projection p_, Projection q_);
};

struct FlowTerms {
    double integral = 0.0;
    double endpoint_b = 0.0;
    double endpoint_a = 0.0;
};

struct CrossingRecord {
    double t = 0.0;
    int branch = 0;     ///< index of the sorted eigenvalue branch
    int direction = 0;  ///< +1 upward, -1 downward
};

struct FlowDiagnostics {
    double quadrature_error = 0.0;
    std::vector<CrossingRecord> crossings;
    int refinement_depth = 0;
    long evaluations = 0;
    std::vector<std::string> warnings;
};

/// Result of one spectral-flow computation. The value is provably an integer;
/// residual >= fail_residual marks the report as not trustworthy (flagged)
/// rather than silently rounding.
struct FlowReport {
    std::string method;
    double value = 0.0;
    long integer = 0;
    double residual = 0.0;
    FlowTerms terms;
    FlowDiagnostics diagnostics;
    bool flagged = false;

    bool ok() const { return !flagged; }
};

struct FlowOptions {
    double gap_tolerance = 1e-8;
    double warn_residual = 1e-4;
    double fail_residual = 0.25;
    double zero_eigenvalue_tol = 1e-10;
    double equivalence_tolerance = 1e-8;
    double loop_tolerance = 1e-9;

    int winding_start_points = 32;
    int winding_max_points = 16384;
    double winding_stop_tolerance = 1e-6;
    bool winding_refine = true;
    /// Step for the numerical loop derivative; 0 ties it to the point count.
    /// spectral_flow_via_winding sets it from the loop's phase speed so that
    /// steep involutive ramps (small delta) keep the O(h^2) bias negligible.
    double winding_cd_step = 0.0;
};

struct CrossingOptions {
    int initial_samples = 33;
    double gap_tolerance = 1e-8;
    int max_depth = 48;
    long max_evaluations = 400000;
    /// Width (relative to the interval) to which crossing locations are bisected.
    double location_resolution = 1e-10;
    /// Width (relative to the interval) below which simultaneous sign changes
    /// of several branches are accepted as one crossing cluster. Projection
    /// segments legitimately cross with multiplicity at a single t.
    double cluster_resolution = 1e-9;
};

/// Crossing oracle: tracks the sorted eigenvalue branches over an adaptively
/// refined grid, bisecting until every sign change is isolated in an interval
/// where exactly one branch changes sign and the count survives one further
/// global refinement. Exact integer output; the crossing list is recorded.
/// Endpoints must be invertible (use endpoint_regularize otherwise); throws
/// ConvergenceError when the refinement budget is exhausted.
FlowReport spectral_flow_crossings(const OperatorPath& path, const CrossingOptions& options = {});

/// Winding number w(s) = (1/2 pi i) int_0^1 Tr(s(x)^{-1} s'(x)) dx by
/// composite Simpson quadrature, s' analytic when the loop carries one and a
/// central difference with step tied to the point count otherwise. The point
/// count starts at quad_points and doubles until the rounded integer is
/// stable twice and the last refinement moved the value by less than the stop
/// tolerance; hitting the point cap first flags the report.
FlowReport winding_number(const UnitaryLoop& loop, int quad_points = 32,
                          const FlowOptions& options = {});

/// Spectral flow as the winding number of the loop x -> exp(i pi (chi(D_x)+1))
/// with chi the involutive spline of half-width delta (delta <= 0 selects half
/// the smaller endpoint gap). Both endpoint unitaries equal the identity, so
/// the path of unitaries closes through 1.
FlowReport spectral_flow_via_winding(const OperatorPath& path, double delta = 0.0,
                                     const FlowOptions& options = {});

/// Integral formula: value = 1/2 int_a^b Tr(dD/dt chi'(D_t)) dt
///   + 1/2 Tr(2 P_b - 1 - chi(D_b)) - 1/2 Tr(2 P_a - 1 - chi(D_a))
/// with P = 1_{>=0}(D). The three terms are recorded separately. chi must
/// pass validate_normalizing; endpoints must be invertible.
FlowReport spectral_flow_integral(const OperatorPath& path, const NormalizingFunction& chi,
                                  double tol = 1e-8, const FlowOptions& options = {});

/// Even nonnegative weight psi with certified decay, for the endpoint-free
/// formula below.
struct EvenWeight {
    std::string label;
    std::function<double(double)> value;
    DecayClass decay;
};

/// Endpoint-free formula for unitarily equivalent endpoints:
/// value = (1/C) int_a^b Tr(dD/dt psi(D_t)) dt, C = int_R psi. Requires path
/// metadata with a verified endpoint unitary, and psi even, nonnegative,
/// integrable with psi(0) > 0.
FlowReport spectral_flow_corollary(const OperatorPath& path, const EvenWeight& psi,
                                   double tol = 1e-8, const FlowOptions& options = {});

/// Extends the path by one-unit flaps D_a + phi(.) I and D_b + phi(.) I where
/// phi is a C^2 bump that vanishes near the junctions and reaches epsilon at
/// the outer ends, making the new endpoints invertible. Requires that no
/// endpoint eigenvalue other than exact kernel modes lies within epsilon of
/// zero; the flaps then add no crossings.
OperatorPath endpoint_regularize(const OperatorPath& path, double epsilon);

/// Scans for a usable epsilon (half the smallest nonzero endpoint eigenvalue
/// magnitude). Throws when every candidate collides with the spectrum.
double choose_regularization_epsilon(const OperatorPath& path);

/// Relative index of a projection pair, computed two ways and cross-checked:
/// round(Tr(P - Q)), and ind(QP: ran P -> ran Q) via numerical ranks with the
/// given singular-value threshold. Throws IndexMismatchError exposing both
/// values when they disagree.
long relative_index(const ProjectionPair& pair, double sv_threshold = 1e-10);

/// Linear segment t (2P-1) + (1-t) (2Q-1) on [0,1]; endpoints are symmetries.
/// Its spectral flow equals the relative index of (P, Q).
OperatorPath segment_path(const ProjectionPair& pair);

/// Path algebra. Concatenation requires matching junction values (within
/// 1e-10 in Frobenius norm); the result runs on [a1, b1 + len2].
OperatorPath concatenate(const OperatorPath& first, const OperatorPath& second);
OperatorPath reverse(const OperatorPath& path);
/// Precomposition with a monotone increasing C^1 map sigma: new_interval ->
/// path interval. sigma is spot-checked for monotonicity and endpoint match.
OperatorPath reparametrize(const OperatorPath& path, std::function<double(double)> sigma,
                           Interval new_interval,
                           std::function<double(double)> sigma_derivative = nullptr);

/// exp(i pi (chi(D) + 1)) assembled from a spectral decomposition.
Eigen::MatrixXcd unitary_phase(const SpectralDecomposition& decomp,
                               const NormalizingFunction& chi);

/// The loop x -> exp(i pi (chi(D_{a + x len}) + 1)) of a path, without an
/// analytic derivative (the winding quadrature differentiates it numerically).
UnitaryLoop exponential_loop(const OperatorPath& path, const NormalizingFunction& chi);

}  // namespace specflow
