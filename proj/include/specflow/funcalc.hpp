#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "specflow/errors.hpp"

namespace specflow {

/// Default tolerances for the numerical substrate. All are relative to the
/// scale max(1, ||A||) of the matrix at hand.
struct FuncalcTolerances {
    double hermiticity = 1e-12;
    double reconstruction = 1e-10;
    double unitarity = 1e-10;
    double idempotency = 1e-10;
    double rank_residual = 1e-8;
    double zero_eigenvalue = 1e-10;
};

/// Square complex matrix validated to be conjugate-symmetric on construction.
/// Immutable; safe to share across threads.
class HermitianMatrix {
public:
    explicit HermitianMatrix(Eigen::MatrixXcd entries,
                             double hermiticity_tol = FuncalcTolerances{}.hermiticity);

    Eigen::Index dim() const { return entries_.rows(); }
    const Eigen::MatrixXcd& matrix() const { return entries_; }

    /// Max-norm of A - A* measured at construction.
    double asymmetry() const { return asymmetry_; }

    double max_abs() const { return entries_.cwiseAbs().maxCoeff(); }
    double frobenius_norm() const { return entries_.norm(); }

    /// A + c * identity.
    HermitianMatrix shifted(double c) const;

    static HermitianMatrix zero(Eigen::Index n);
    static HermitianMatrix identity(Eigen::Index n);
    static HermitianMatrix diagonal(const Eigen::VectorXd& d);

private:
    Eigen::MatrixXcd entries_;
    double asymmetry_ = 0.0;
};

/// Eigendecomposition A = U diag(eigenvalues) U* with eigenvalues ascending
/// and U unitary.
struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXcd eigenvectors;

    double reconstruction_error(const HermitianMatrix& a) const;
    double unitarity_defect() const;
    /// Smallest |eigenvalue| (the spectral gap around zero).
    double gap() const { return eigenvalues.cwiseAbs().minCoeff(); }
};

/// Orthogonal projection with its rank. Validates ||P^2 - P|| and the
/// integrality of the trace on construction.
class Projection {
public:
    explicit Projection(HermitianMatrix matrix,
                        const FuncalcTolerances& tol = FuncalcTolerances{});

    Eigen::Index dim() const { return matrix_.dim(); }
    const HermitianMatrix& matrix() const { return matrix_; }
    long rank() const { return rank_; }
    /// |trace - rank| measured at construction.
    double trace_residual() const { return trace_residual_; }

private:
    HermitianMatrix matrix_;
    long rank_;
    double trace_residual_;
};

/// Eigendecomposition via a dense Hermitian solver. Verifies the
/// reconstruction and unitarity invariants before returning.
SpectralDecomposition eigh(const HermitianMatrix& a,
                           const FuncalcTolerances& tol = FuncalcTolerances{});

/// Functional calculus f(A) = U f(Lambda) U*. The function must be finite at
/// every eigenvalue; otherwise DomainError.
HermitianMatrix apply_function(const HermitianMatrix& a,
                               const std::function<double(double)>& f);
HermitianMatrix apply_function(const SpectralDecomposition& decomp,
                               const std::function<double(double)>& f);

/// Tr f(A) = sum_i f(lambda_i).
double trace_function(const SpectralDecomposition& decomp,
                      const std::function<double(double)>& f);

/// Schatten p-norm (sum of sigma_i^p)^(1/p) over singular values. p >= 1.
double schatten_norm(const Eigen::MatrixXcd& a, double p);
double schatten_norm(const HermitianMatrix& a, double p);

/// Spectral projection 1_{>= 0}(A). Zero eigenvalues are included in the
/// range (they count as nonnegative).
Projection spectral_projection_nonneg(const HermitianMatrix& a,
                                      const FuncalcTolerances& tol = FuncalcTolerances{});

/// Same, plus the list of eigenvalues within tol.zero_eigenvalue of zero,
/// whose side of the split is numerically fragile.
struct NonnegativeProjection {
    Projection projection;
    std::vector<double> marginal_eigenvalues;
};
NonnegativeProjection spectral_projection_nonneg_detailed(
    const HermitianMatrix& a, const FuncalcTolerances& tol = FuncalcTolerances{});

}  // namespace specflow
