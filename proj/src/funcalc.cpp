#include "specflow/funcalc.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace specflow {

namespace {

double scale_of(const Eigen::MatrixXcd& a) {
    return std::max(1.0, a.cwiseAbs().maxCoeff());
}

}  // namespace

HermitianMatrix::HermitianMatrix(Eigen::MatrixXcd entries, double hermiticity_tol)
    : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
        throw Error("HermitianMatrix: matrix must be square and non-empty");
    }
    asymmetry_ = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
    const double limit = hermiticity_tol * scale_of(entries_);
    if (asymmetry_ > limit) {
        throw NonHermitianError("matrix is not Hermitian: max |A - A*| = "
                                + std::to_string(asymmetry_) + " exceeds "
                                + std::to_string(limit),
                                asymmetry_);
    }
}

HermitianMatrix HermitianMatrix::shifted(double c) const {
    Eigen::MatrixXcd m = entries_;
    m += c * Eigen::MatrixXcd::Identity(dim(), dim());
    return HermitianMatrix(std::move(m));
}

HermitianMatrix HermitianMatrix::zero(Eigen::Index n) {
    return HermitianMatrix(Eigen::MatrixXcd::Zero(n, n));
}

HermitianMatrix HermitianMatrix::identity(Eigen::Index n) {
    return HermitianMatrix(Eigen::MatrixXcd::Identity(n, n));
}

HermitianMatrix HermitianMatrix::diagonal(const Eigen::VectorXd& d) {
    return HermitianMatrix(d.cast<std::complex<double>>().asDiagonal());
}

double SpectralDecomposition::reconstruction_error(const HermitianMatrix& a) const {
    const Eigen::MatrixXcd rebuilt =
        eigenvectors * eigenvalues.asDiagonal() * eigenvectors.adjoint();
    return (rebuilt - a.matrix()).norm();
}

double SpectralDecomposition::unitarity_defect() const {
    const Eigen::Index n = eigenvectors.cols();
    return (eigenvectors.adjoint() * eigenvectors - Eigen::MatrixXcd::Identity(n, n))
        .cwiseAbs()
        .maxCoeff();
}

namespace {

// exactly diagonal input (spectral truncations walk diagonal paths): sort the
// diagonal and permute, skipping the dense solve
bool diagonal_eigh(const Eigen::MatrixXcd& m, SpectralDecomposition& out) {
    const Eigen::Index n = m.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i != j && m(i, j) != 0.0) return false;
        }
    }
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
        const double dx = m(x, x).real(), dy = m(y, y).real();
        return dx != dy ? dx < dy : x < y;
    });
    out.eigenvalues.resize(n);
    out.eigenvectors = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.eigenvalues[k] = m(order[k], order[k]).real();
        out.eigenvectors(order[k], k) = 1.0;
    }
    return true;
}

}  // namespace

SpectralDecomposition eigh(const HermitianMatrix& a, const FuncalcTolerances& tol) {
    SpectralDecomposition d;
    if (!diagonal_eigh(a.matrix(), d)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a.matrix());
        if (solver.info() != Eigen::Success) {
            throw Error("eigh: eigensolver failed to converge");
        }
        d = SpectralDecomposition{solver.eigenvalues(), solver.eigenvectors()};
    }
    if (d.unitarity_defect() > tol.unitarity) {
        throw Error("eigh: eigenvector matrix failed the unitarity check");
    }
    const double scale = std::max(1.0, a.frobenius_norm());
    if (d.reconstruction_error(a) > tol.reconstruction * scale) {
        throw Error("eigh: reconstruction error exceeds tolerance");
    }
    return d;
}

HermitianMatrix apply_function(const SpectralDecomposition& decomp,
                               const std::function<double(double)>& f) {
    const Eigen::Index n = decomp.eigenvalues.size();
    Eigen::VectorXd mapped(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = f(decomp.eigenvalues[i]);
        if (!std::isfinite(v)) {
            throw DomainError("apply_function: function undefined at eigenvalue "
                              + std::to_string(decomp.eigenvalues[i]));
        }
        mapped[i] = v;
    }
    Eigen::MatrixXcd m =
        decomp.eigenvectors * mapped.asDiagonal() * decomp.eigenvectors.adjoint();
    m = 0.5 * (m + m.adjoint().eval());
    return HermitianMatrix(std::move(m));
}

HermitianMatrix apply_function(const HermitianMatrix& a,
                               const std::function<double(double)>& f) {
    return apply_function(eigh(a), f);
}

double trace_function(const SpectralDecomposition& decomp,
                      const std::function<double(double)>& f) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < decomp.eigenvalues.size(); ++i) {
        const double v = f(decomp.eigenvalues[i]);
        if (!std::isfinite(v)) {
            throw DomainError("trace_function: function undefined at eigenvalue "
                              + std::to_string(decomp.eigenvalues[i]));
        }
        sum += v;
    }
    return sum;
}

double schatten_norm(const Eigen::MatrixXcd& a, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("schatten_norm: requires p >= 1");
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
    const Eigen::VectorXd sigma = svd.singularValues();
    const double top = sigma.size() ? sigma.maxCoeff() : 0.0;
    if (top <= 0.0) return 0.0;
    // factor out the largest singular value to dodge overflow for large p
    double sum = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) sum += std::pow(sigma[i] / top, p);
    return top * std::pow(sum, 1.0 / p);
}

double schatten_norm(const HermitianMatrix& a, double p) {
    return schatten_norm(a.matrix(), p);
}

Projection::Projection(HermitianMatrix matrix, const FuncalcTolerances& tol)
    : matrix_(std::move(matrix)), rank_(0), trace_residual_(0.0) {
    const Eigen::MatrixXcd& p = matrix_.matrix();
    const double idem = (p * p - p).cwiseAbs().maxCoeff();
    if (idem > tol.idempotency * scale_of(p)) {
        throw Error("Projection: ||P^2 - P|| = " + std::to_string(idem)
                    + " exceeds the idempotency tolerance");
    }
    const double tr = p.trace().real();
    rank_ = std::lround(tr);
    trace_residual_ = std::abs(tr - static_cast<double>(rank_));
    if (trace_residual_ > tol.rank_residual) {
        throw Error("Projection: trace " + std::to_string(tr) + " is not close to an integer");
    }
    if (rank_ < 0 || rank_ > matrix_.dim()) {
        throw Error("Projection: rank out of range");
    }
}

NonnegativeProjection spectral_projection_nonneg_detailed(const HermitianMatrix& a,
                                                          const FuncalcTolerances& tol) {
    const SpectralDecomposition d = eigh(a, tol);
    const Eigen::Index n = a.dim();
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(n, n);
    std::vector<double> marginal;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lambda = d.eigenvalues[i];
        if (std::abs(lambda) <= tol.zero_eigenvalue) marginal.push_back(lambda);
        if (lambda >= 0.0) {
            p.noalias() += d.eigenvectors.col(i) * d.eigenvectors.col(i).adjoint();
        }
    }
    p = 0.5 * (p + p.adjoint().eval());
    return {Projection(HermitianMatrix(std::move(p)), tol), std::move(marginal)};
}

Projection spectral_projection_nonneg(const HermitianMatrix& a, const FuncalcTolerances& tol) {
    return spectral_projection_nonneg_detailed(a, tol).projection;
}

}  // namespace specflow
