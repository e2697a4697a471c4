#include "specflow/flowcore.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

#include "specflow/errors.hpp"
#include "specflow/rng.hpp"

namespace specflow {

namespace {

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

FlowReport finalize_report(std::string method, double value, FlowTerms terms,
                           FlowDiagnostics diag, const FlowOptions& opts) {
    FlowReport r;
    r.method = std::move(method);
    r.value = value;
    r.integer = std::lround(value);
    r.residual = std::abs(value - static_cast<double>(r.integer));
    r.terms = terms;
    r.diagnostics = std::move(diag);
    if (r.residual >= opts.fail_residual) {
        r.flagged = true;
        r.diagnostics.warnings.push_back("residual " + fmt("%.3g", r.residual)
                                         + " is too large to trust the rounded integer");
    } else if (r.residual >= opts.warn_residual) {
        r.diagnostics.warnings.push_back("residual " + fmt("%.3g", r.residual)
                                         + " above the warning threshold");
    }
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// OperatorPath

OperatorPath::OperatorPath(Eigen::Index dim, Interval interval, Evaluator evaluate,
                           Evaluator derivative, PathMetadata metadata)
    : dim_(dim),
      interval_(interval),
      evaluate_(std::move(evaluate)),
      derivative_(std::move(derivative)),
      metadata_(std::move(metadata)) {
    if (dim_ < 1) throw std::invalid_argument("OperatorPath: dim must be positive");
    if (!(interval_.a < interval_.b)) {
        throw std::invalid_argument("OperatorPath: interval must have positive length");
    }
    if (!evaluate_) throw std::invalid_argument("OperatorPath: evaluator is required");
}

HermitianMatrix OperatorPath::at(double t) const {
    const double slack = 1e-9 * std::max(1.0, interval_.length());
    if (t < interval_.a - slack || t > interval_.b + slack) {
        throw PreconditionError("OperatorPath: t = " + std::to_string(t)
                                + " outside [" + std::to_string(interval_.a) + ", "
                                + std::to_string(interval_.b) + "]");
    }
    HermitianMatrix m = evaluate_(t);
    if (m.dim() != dim_) throw Error("OperatorPath: evaluator returned a wrong dimension");
    return m;
}

HermitianMatrix OperatorPath::derivative_at(double t) const {
    if (derivative_) return derivative_(t);
    const double h = 1e-5 * interval_.length();
    const double tc = std::clamp(t, interval_.a + h, interval_.b - h);
    return central_difference(*this, tc, h);
}

C1CheckResult check_c1(const OperatorPath& path, int trials, double h, std::uint64_t seed) {
    if (!path.has_analytic_derivative()) return {true, 0.0, 0.0};
    Rng rng(seed);
    const Interval iv = path.interval();
    C1CheckResult result;
    for (int i = 0; i < trials; ++i) {
        const double t = rng.uniform(iv.a + h, iv.b - h);
        const Eigen::MatrixXcd cd = central_difference(path, t, h).matrix();
        const Eigen::MatrixXcd an = path.derivative_at(t).matrix();
        const double defect =
            (cd - an).cwiseAbs().maxCoeff() / (1.0 + an.cwiseAbs().maxCoeff());
        if (defect > result.worst_defect) {
            result.worst_defect = defect;
            result.worst_t = t;
        }
    }
    result.passed = result.worst_defect <= 1e-5;
    return result;
}

// ---------------------------------------------------------------------------
// UnitaryLoop

UnitaryLoop::UnitaryLoop(Eigen::Index dim, Evaluator evaluate, Evaluator derivative)
    : dim_(dim), evaluate_(std::move(evaluate)), derivative_(std::move(derivative)) {
    if (dim_ < 1) throw std::invalid_argument("UnitaryLoop: dim must be positive");
    if (!evaluate_) throw std::invalid_argument("UnitaryLoop: evaluator is required");
}

double UnitaryLoop::wrap(double x) const {
    double w = x - std::floor(x);
    if (w < 0.0) w += 1.0;
    return w;
}

Eigen::MatrixXcd UnitaryLoop::at(double x) const {
    Eigen::MatrixXcd s = evaluate_(wrap(x));
    if (s.rows() != dim_ || s.cols() != dim_) {
        throw Error("UnitaryLoop: evaluator returned a wrong dimension");
    }
    return s;
}

Eigen::MatrixXcd UnitaryLoop::derivative_at(double x, double h) const {
    if (derivative_) return derivative_(wrap(x));
    return (at(x + h) - at(x - h)) / (2.0 * h);
}

double UnitaryLoop::unitarity_defect(int samples) const {
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double x = static_cast<double>(i) / samples;
        const Eigen::MatrixXcd s = at(x);
        const double defect =
            (s.adjoint() * s - Eigen::MatrixXcd::Identity(dim_, dim_)).cwiseAbs().maxCoeff();
        worst = std::max(worst, defect);
    }
    return worst;
}

double UnitaryLoop::periodicity_defect() const {
    return (evaluate_(0.0) - evaluate_(1.0)).cwiseAbs().maxCoeff();
}

ProjectionPair::ProjectionPair(Projection p_, Projection q_)
    : p(std::move(p_)), q(std::move(q_)) {
    if (p.dim() != q.dim()) {
        throw PreconditionError("ProjectionPair: projections act on different spaces");
    }
}

// ---------------------------------------------------------------------------
// Crossing oracle

namespace {

bool nonneg(double x) { return x >= 0.0; }  // 1_{>=0} convention: 0 counts as +

int branch_sign_changes(const Eigen::VectorXd& left, const Eigen::VectorXd& right) {
    int count = 0;
    for (Eigen::Index k = 0; k < left.size(); ++k) {
        if (nonneg(left[k]) != nonneg(right[k])) ++count;
    }
    return count;
}

long count_nonneg(const Eigen::VectorXd& v) {
    long c = 0;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (nonneg(v[k])) ++c;
    }
    return c;
}

}  // namespace

FlowReport spectral_flow_crossings(const OperatorPath& path, const CrossingOptions& options) {
    const Interval iv = path.interval();
    long evals = 0;
    auto eigenvalues_at = [&](double t) -> Eigen::VectorXd {
        if (++evals > options.max_evaluations) {
            throw ConvergenceError("spectral_flow_crossings: evaluation budget exhausted "
                                   "(path too wild for the refinement budget)",
                                   0.0, 1.0);
        }
        return eigh(path.at(t)).eigenvalues;
    };

    std::map<double, Eigen::VectorXd> nodes;
    const int samples = std::max(2, options.initial_samples);
    for (int i = 0; i < samples; ++i) {
        const double t = iv.a + iv.length() * static_cast<double>(i) / (samples - 1);
        nodes.emplace(t, eigenvalues_at(t));
    }

    const double gap_a = nodes.begin()->second.cwiseAbs().minCoeff();
    const double gap_b = nodes.rbegin()->second.cwiseAbs().minCoeff();
    if (gap_a <= options.gap_tolerance || gap_b <= options.gap_tolerance) {
        throw PreconditionError(
            "spectral_flow_crossings: endpoint not invertible (min |eigenvalue| = "
            + fmt("%.3g", std::min(gap_a, gap_b))
            + "); extend the path with endpoint_regularize first");
    }

    const double width_floor = iv.length() * std::ldexp(1.0, -options.max_depth);
    const double cluster_floor =
        std::max(iv.length() * options.cluster_resolution, 2.0 * width_floor);

    // subdivide until every interval carries at most one branch sign change or
    // is narrow enough to count as a simultaneous crossing cluster
    auto isolate = [&]() {
        bool again = true;
        while (again) {
            again = false;
            auto it = nodes.begin();
            auto next = std::next(it);
            std::vector<double> midpoints;
            for (; next != nodes.end(); ++it, ++next) {
                if (branch_sign_changes(it->second, next->second) >= 2
                    && next->first - it->first > cluster_floor) {
                    midpoints.push_back(0.5 * (it->first + next->first));
                }
            }
            for (double m : midpoints) nodes.emplace(m, eigenvalues_at(m));
            again = !midpoints.empty();
        }
    };

    auto signed_count = [&]() {
        long total = 0;
        auto it = nodes.begin();
        for (auto next = std::next(it); next != nodes.end(); ++it, ++next) {
            for (Eigen::Index k = 0; k < it->second.size(); ++k) {
                const bool was = nonneg(it->second[k]);
                const bool is = nonneg(next->second[k]);
                if (was != is) total += is ? 1 : -1;
            }
        }
        return total;
    };

    isolate();
    long count = signed_count();

    // one further global refinement must leave the count unchanged
    const int max_stability_rounds = 8;
    int round = 0;
    for (; round < max_stability_rounds; ++round) {
        std::vector<double> midpoints;
        auto it = nodes.begin();
        for (auto next = std::next(it); next != nodes.end(); ++it, ++next) {
            if (next->first - it->first >= width_floor) {
                midpoints.push_back(0.5 * (it->first + next->first));
            }
        }
        for (double m : midpoints) nodes.emplace(m, eigenvalues_at(m));
        isolate();
        const long refined = signed_count();
        if (refined == count) break;
        count = refined;
    }
    if (round == max_stability_rounds) {
        throw ConvergenceError("spectral_flow_crossings: crossing count failed to stabilize",
                               static_cast<double>(count), 1.0);
    }

    FlowDiagnostics diag;

    // localize each isolated crossing by bisection on its branch
    auto it = nodes.begin();
    for (auto next = std::next(it); next != nodes.end(); ++it, ++next) {
        for (Eigen::Index k = 0; k < it->second.size(); ++k) {
            const bool was = nonneg(it->second[k]);
            const bool is = nonneg(next->second[k]);
            if (was == is) continue;
            double lo = it->first, hi = next->first;
            const double target = std::max(options.location_resolution * iv.length(), 1e-14);
            for (int iter = 0; iter < 64 && hi - lo > target; ++iter) {
                const double mid = 0.5 * (lo + hi);
                const Eigen::VectorXd em = eigenvalues_at(mid);
                if (nonneg(em[k]) == was) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            diag.crossings.push_back({0.5 * (lo + hi), static_cast<int>(k), is ? 1 : -1});
        }
    }
    std::sort(diag.crossings.begin(), diag.crossings.end(),
              [](const CrossingRecord& a, const CrossingRecord& b) { return a.t < b.t; });

    double min_width = iv.length();
    {
        auto a_it = nodes.begin();
        for (auto b_it = std::next(a_it); b_it != nodes.end(); ++a_it, ++b_it) {
            min_width = std::min(min_width, b_it->first - a_it->first);
        }
    }
    diag.refinement_depth =
        static_cast<int>(std::lround(std::log2(iv.length() / min_width)));
    diag.evaluations = evals;

    FlowOptions report_opts;
    report_opts.gap_tolerance = options.gap_tolerance;
    FlowReport r = finalize_report("crossings", static_cast<double>(count), FlowTerms{},
                                   std::move(diag), report_opts);

    // cross-check against the endpoint signature difference
    const long np_a = count_nonneg(nodes.begin()->second);
    const long np_b = count_nonneg(nodes.rbegin()->second);
    if (np_b - np_a != count) {
        r.flagged = true;
        r.diagnostics.warnings.push_back(
            "crossing count disagrees with the endpoint signature difference "
            + std::to_string(np_b - np_a));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Winding number

FlowReport winding_number(const UnitaryLoop& loop, int quad_points, const FlowOptions& options) {
    const double u_defect = loop.unitarity_defect();
    if (u_defect > options.loop_tolerance) {
        throw PreconditionError("winding_number: loop is not unitary (defect "
                                + fmt("%.3g", u_defect) + ")");
    }
    const double p_defect = loop.periodicity_defect();
    if (p_defect > options.loop_tolerance) {
        throw PreconditionError("winding_number: loop is not closed (||s(0)-s(1)|| = "
                                + fmt("%.3g", p_defect) + ")");
    }

    long evals = 0;
    auto integrand = [&](double x, double h) {
        const Eigen::MatrixXcd s = loop.at(x);
        const Eigen::MatrixXcd sp = loop.derivative_at(x, h);
        evals += loop.has_analytic_derivative() ? 2 : 3;
        return (s.adjoint() * sp).trace().imag() / (2.0 * M_PI);
    };

    int n = std::max(4, quad_points);
    if (n % 2) ++n;

    double w = 0.0;
    double prev = std::numeric_limits<double>::quiet_NaN();
    double quad_err = std::numeric_limits<double>::infinity();
    int doublings = 0;
    long last_int = std::numeric_limits<long>::min();
    int stable_run = -1;
    bool converged = false;

    for (;;) {
        // difference step tied to the point count, clamped against roundoff
        const double h = options.winding_cd_step > 0.0
                             ? options.winding_cd_step
                             : std::clamp(1.0 / (256.0 * n), 1e-8, 2e-7);
        double sum = integrand(0.0, h) + integrand(1.0, h);
        for (int j = 1; j < n; ++j) {
            sum += (j % 2 ? 4.0 : 2.0) * integrand(static_cast<double>(j) / n, h);
        }
        w = sum / (3.0 * n);

        if (!std::isnan(prev)) quad_err = std::abs(w - prev);
        const long rounded = std::lround(w);
        if (rounded == last_int) {
            ++stable_run;
        } else {
            stable_run = 0;
            last_int = rounded;
        }

        if (!options.winding_refine) {
            converged = true;
            quad_err = 0.0;
            break;
        }
        if (stable_run >= 2 && quad_err <= options.winding_stop_tolerance) {
            converged = true;
            break;
        }
        if (2 * n + 1 > options.winding_max_points) break;
        prev = w;
        n *= 2;
        ++doublings;
    }

    // a stable integer at the point cap is acceptable (narrow integrand
    // features refine slowly on a uniform grid); an unstable one is not
    const bool integer_stable = converged || stable_run >= 2;

    FlowDiagnostics diag;
    diag.quadrature_error = std::isfinite(quad_err) ? quad_err : 0.0;
    diag.refinement_depth = doublings;
    diag.evaluations = evals;
    if (!options.winding_refine) {
        diag.warnings.push_back("single-shot quadrature (refinement disabled)");
    }

    FlowReport r = finalize_report("winding", w, FlowTerms{w, 0.0, 0.0}, std::move(diag), options);
    if (!integer_stable) {
        r.flagged = true;
        r.diagnostics.warnings.push_back(
            "winding quadrature hit the point cap before the integer stabilized "
            "(loop undersampled or not differentiable)");
    } else if (!converged) {
        r.diagnostics.warnings.push_back(
            "stabilization target not reached at the point cap; quadrature error "
            + fmt("%.3g", diag.quadrature_error));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Spectral flow via the exponential loop

Eigen::MatrixXcd unitary_phase(const SpectralDecomposition& decomp,
                               const NormalizingFunction& chi) {
    const Eigen::Index n = decomp.eigenvalues.size();
    Eigen::VectorXcd phases(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double angle = M_PI * (chi.chi(decomp.eigenvalues[i]) + 1.0);
        phases[i] = std::complex<double>(std::cos(angle), std::sin(angle));
    }
    return decomp.eigenvectors * phases.asDiagonal() * decomp.eigenvectors.adjoint();
}

UnitaryLoop exponential_loop(const OperatorPath& path, const NormalizingFunction& chi) {
    const Interval iv = path.interval();
    return UnitaryLoop(path.dim(), [path, chi, iv](double x) {
        const double t = iv.a + iv.length() * x;
        return unitary_phase(eigh(path.at(t)), chi);
    });
}

FlowReport spectral_flow_via_winding(const OperatorPath& path, double delta,
                                     const FlowOptions& options) {
    const Interval iv = path.interval();
    const SpectralDecomposition da = eigh(path.at(iv.a));
    const SpectralDecomposition db = eigh(path.at(iv.b));
    const double gap = std::min(da.gap(), db.gap());
    if (gap <= options.gap_tolerance) {
        throw PreconditionError("spectral_flow_via_winding: endpoint not invertible "
                                "(gap " + fmt("%.3g", gap)
                                + "); extend the path with endpoint_regularize first");
    }
    if (delta <= 0.0) delta = 0.5 * gap;
    if (!(delta < gap)) {
        throw PreconditionError("spectral_flow_via_winding: delta = " + fmt("%.6g", delta)
                                + " must stay below the endpoint spectral gap "
                                + fmt("%.6g", gap));
    }

    const NormalizingFunction chi = make_involutive_spline(delta);
    const UnitaryLoop loop = exponential_loop(path, chi);

    FlowOptions tuned = options;
    if (tuned.winding_cd_step <= 0.0) {
        // phase speed of the loop ~ pi * max chi' * max ||dD/dt||; keep the
        // O(omega^3 h^2) difference bias below ~1e-7 even for steep ramps
        double speed = 0.0;
        for (int i = 0; i <= 8; ++i) {
            const double t = iv.a + iv.length() * i / 8.0;
            speed = std::max(speed, path.derivative_at(t).max_abs());
        }
        const double omega =
            M_PI * (15.0 / (8.0 * delta)) * std::max(speed * iv.length(), 1e-3);
        tuned.winding_cd_step = std::clamp(7.7e-4 / (omega * std::sqrt(omega)), 1e-10, 2e-7);
    }

    FlowReport r = winding_number(loop, tuned.winding_start_points, tuned);
    r.method = "winding";
    return r;
}

// ---------------------------------------------------------------------------
// Integral formula with endpoint corrections

namespace {

// 1/2 Tr(2 P - 1 - chi(D)) evaluated on the spectrum
double endpoint_term(const SpectralDecomposition& d, const NormalizingFunction& chi) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i) {
        const double lambda = d.eigenvalues[i];
        sum += (nonneg(lambda) ? 1.0 : -1.0) - chi.chi(lambda);
    }
    return 0.5 * sum;
}

double trace_weighted_derivative(const OperatorPath& path, double t,
                                 const std::function<double(double)>& weight) {
    const SpectralDecomposition d = eigh(path.at(t));
    const HermitianMatrix dot = path.derivative_at(t);
    const Eigen::VectorXd diag =
        (d.eigenvectors.adjoint() * dot.matrix() * d.eigenvectors).diagonal().real();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i) {
        sum += weight(d.eigenvalues[i]) * diag[i];
    }
    return sum;
}

}  // namespace

FlowReport spectral_flow_integral(const OperatorPath& path, const NormalizingFunction& chi,
                                  double tol, const FlowOptions& options) {
    const Interval iv = path.interval();
    const SpectralDecomposition da = eigh(path.at(iv.a));
    const SpectralDecomposition db = eigh(path.at(iv.b));
    if (std::min(da.gap(), db.gap()) <= options.gap_tolerance) {
        throw PreconditionError("spectral_flow_integral: endpoint not invertible; "
                                "extend the path with endpoint_regularize first");
    }
    const ValidationReport validation = validate_normalizing(chi);
    if (!validation.passed()) {
        throw std::invalid_argument("spectral_flow_integral: chi is not a normalizing function\n"
                                    + validation.summary());
    }

    long evals = 0;
    auto integrand = [&](double t) {
        ++evals;
        return trace_weighted_derivative(path, t,
                                         [&](double x) { return chi.chi_prime(x); });
    };

    FlowDiagnostics diag;
    bool quad_failed = false;
    QuadratureResult q;
    try {
        q = integrate_adaptive(integrand, iv.a, iv.b, 2.0 * tol);
    } catch (const ConvergenceError& e) {
        q = {e.partial_value(), e.error_estimate(), 0};
        quad_failed = true;
    }

    FlowTerms terms;
    terms.integral = 0.5 * q.value;
    terms.endpoint_b = endpoint_term(db, chi);
    terms.endpoint_a = endpoint_term(da, chi);

    diag.quadrature_error = 0.5 * q.error_estimate;
    diag.evaluations = evals;

    const double value = terms.integral + terms.endpoint_b - terms.endpoint_a;
    FlowReport r = finalize_report("integral", value, terms, std::move(diag), options);
    if (quad_failed) {
        r.flagged = true;
        r.diagnostics.warnings.push_back("t-quadrature failed to reach tolerance "
                                         + fmt("%.3g", tol));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Endpoint-free formula for unitarily equivalent endpoints

FlowReport spectral_flow_corollary(const OperatorPath& path, const EvenWeight& psi,
                                   double tol, const FlowOptions& options) {
    const PathMetadata& meta = path.metadata();
    if (!meta.endpoint_unitary) {
        throw PreconditionError("spectral_flow_corollary: path metadata carries no endpoint "
                                "unitary; the formula's hypothesis cannot be verified");
    }
    const Eigen::MatrixXcd& u = *meta.endpoint_unitary;
    const Eigen::Index n = path.dim();
    if (u.rows() != n || u.cols() != n) {
        throw PreconditionError("spectral_flow_corollary: endpoint unitary has wrong dimensions");
    }
    if ((u.adjoint() * u - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-9) {
        throw PreconditionError("spectral_flow_corollary: endpoint map is not unitary");
    }

    const Interval iv = path.interval();
    const Eigen::MatrixXcd defect_matrix =
        u * path.at(iv.a).matrix() * u.adjoint() - path.at(iv.b).matrix();

    FlowDiagnostics diag;
    double defect = 0.0;
    if (meta.equivalence_modes.empty()) {
        defect = defect_matrix.cwiseAbs().maxCoeff();
    } else {
        for (Eigen::Index i : meta.equivalence_modes) {
            for (Eigen::Index j : meta.equivalence_modes) {
                defect = std::max(defect, std::abs(defect_matrix(i, j)));
            }
        }
        diag.warnings.push_back("endpoint equivalence verified on "
                                + std::to_string(meta.equivalence_modes.size()) + " of "
                                + std::to_string(n) + " modes (truncation boundary excluded)");
    }
    if (defect > options.equivalence_tolerance) {
        throw PreconditionError("spectral_flow_corollary: ||U D_a U* - D_b|| = "
                                + fmt("%.3g", defect) + " exceeds the equivalence tolerance");
    }

    // psi spot checks: even, nonnegative, positive at 0
    if (!(psi.value(0.0) > 0.0)) {
        throw std::invalid_argument("spectral_flow_corollary: psi(0) must be positive");
    }
    for (double x : {0.25, 0.7, 1.3, 2.5, 5.0, 11.0, 23.0, 47.0}) {
        const double plus = psi.value(x);
        const double minus = psi.value(-x);
        if (plus < -1e-12 || minus < -1e-12) {
            throw std::invalid_argument("spectral_flow_corollary: psi is negative at x = "
                                        + std::to_string(x));
        }
        if (std::abs(plus - minus) > 1e-10 * (1.0 + std::abs(plus))) {
            throw std::invalid_argument("spectral_flow_corollary: psi is not even at x = "
                                        + std::to_string(x));
        }
    }

    const QuadratureResult normalization =
        improper_integral(psi.value, psi.decay, std::min(tol, 1e-10));
    if (!(normalization.value > 0.0)) {
        throw std::invalid_argument("spectral_flow_corollary: int psi must be positive");
    }

    long evals = 0;
    auto integrand = [&](double t) {
        ++evals;
        return trace_weighted_derivative(path, t, psi.value);
    };

    bool quad_failed = false;
    QuadratureResult q;
    try {
        q = integrate_adaptive(integrand, iv.a, iv.b, tol * normalization.value);
    } catch (const ConvergenceError& e) {
        q = {e.partial_value(), e.error_estimate(), 0};
        quad_failed = true;
    }

    const double value = q.value / normalization.value;
    FlowTerms terms;
    terms.integral = value;
    diag.quadrature_error = q.error_estimate / normalization.value
                            + std::abs(value) * normalization.error_estimate / normalization.value;
    diag.evaluations = evals + normalization.evaluations;

    FlowReport r = finalize_report("corollary", value, terms, std::move(diag), options);
    if (quad_failed) {
        r.flagged = true;
        r.diagnostics.warnings.push_back("t-quadrature failed to reach tolerance");
    }
    return r;
}

// ---------------------------------------------------------------------------
// Endpoint regularization

namespace {

// C^2 ramp: 0 on [0, 1/2], 1 at 1, monotone (quintic smoothstep in between).
double ramp(double u) {
    if (u <= 0.5) return 0.0;
    if (u >= 1.0) return 1.0;
    const double v = 4.0 * u - 3.0;  // [-1, 1]
    const double v2 = v * v;
    return (v * (15.0 - v2 * (10.0 - 3.0 * v2)) / 8.0 + 1.0) * 0.5;
}

double ramp_prime(double u) {
    if (u <= 0.5 || u >= 1.0) return 0.0;
    const double v = 4.0 * u - 3.0;
    const double w = 1.0 - v * v;
    return 2.0 * (15.0 / 8.0) * w * w;
}

}  // namespace

OperatorPath endpoint_regularize(const OperatorPath& path, double epsilon) {
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("endpoint_regularize: epsilon must be positive");
    }
    const Interval iv = path.interval();
    const HermitianMatrix da = path.at(iv.a);
    const HermitianMatrix db = path.at(iv.b);
    const Eigen::VectorXd ea = eigh(da).eigenvalues;
    const Eigen::VectorXd eb = eigh(db).eigenvalues;

    const double scale = std::max({1.0, ea.cwiseAbs().maxCoeff(), eb.cwiseAbs().maxCoeff()});
    const double kernel_tol = 1e-10 * scale;
    for (const Eigen::VectorXd* spectrum : {&ea, &eb}) {
        for (Eigen::Index i = 0; i < spectrum->size(); ++i) {
            const double lambda = (*spectrum)[i];
            if (std::abs(lambda) <= kernel_tol) continue;  // kernel modes ride the flap
            if (std::abs(lambda) <= epsilon + 1e-9 * scale) {
                throw PreconditionError(
                    "endpoint_regularize: endpoint eigenvalue " + fmt("%.6g", lambda)
                    + " lies within epsilon = " + fmt("%.6g", epsilon)
                    + " of zero; choose a smaller epsilon");
            }
        }
    }

    PathMetadata meta;
    meta.label = path.metadata().label + "+flaps(" + fmt("%.3g", epsilon) + ")";

    const double a = iv.a, b = iv.b;
    auto evaluate = [path, da, db, a, b, epsilon](double t) {
        if (t < a) return da.shifted(epsilon * ramp(a - t));
        if (t > b) return db.shifted(epsilon * ramp(t - b));
        return path.at(t);
    };
    auto derivative = [path, a, b, epsilon](double t) {
        const Eigen::Index n = path.dim();
        if (t < a) {
            return HermitianMatrix(Eigen::MatrixXcd::Identity(n, n)
                                   * (-epsilon * ramp_prime(a - t)));
        }
        if (t > b) {
            return HermitianMatrix(Eigen::MatrixXcd::Identity(n, n)
                                   * (epsilon * ramp_prime(t - b)));
        }
        return path.derivative_at(t);
    };
    return OperatorPath(path.dim(), Interval{a - 1.0, b + 1.0}, std::move(evaluate),
                        std::move(derivative), std::move(meta));
}

double choose_regularization_epsilon(const OperatorPath& path) {
    const Interval iv = path.interval();
    const Eigen::VectorXd ea = eigh(path.at(iv.a)).eigenvalues;
    const Eigen::VectorXd eb = eigh(path.at(iv.b)).eigenvalues;
    const double scale = std::max({1.0, ea.cwiseAbs().maxCoeff(), eb.cwiseAbs().maxCoeff()});
    const double kernel_tol = 1e-10 * scale;

    double smallest = std::numeric_limits<double>::infinity();
    for (const Eigen::VectorXd* spectrum : {&ea, &eb}) {
        for (Eigen::Index i = 0; i < spectrum->size(); ++i) {
            const double mag = std::abs((*spectrum)[i]);
            if (mag > kernel_tol) smallest = std::min(smallest, mag);
        }
    }
    if (!std::isfinite(smallest)) return 0.5;  // endpoints are pure kernel
    const double epsilon = 0.5 * smallest;
    if (epsilon <= 2e-9 * scale) {
        throw PreconditionError("choose_regularization_epsilon: endpoint spectrum crowds zero "
                                "(smallest nonzero |eigenvalue| = " + fmt("%.3g", smallest)
                                + "); supply epsilon explicitly");
    }
    return epsilon;
}

// ---------------------------------------------------------------------------
// Relative index and the projection segment

namespace {

Eigen::MatrixXcd range_basis(const Projection& p) {
    const SpectralDecomposition d = eigh(p.matrix());
    Eigen::MatrixXcd basis(p.dim(), p.rank());
    Eigen::Index col = 0;
    for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i) {
        if (d.eigenvalues[i] > 0.5) {
            if (col >= p.rank()) throw Error("relative_index: projection rank inconsistent");
            basis.col(col++) = d.eigenvectors.col(i);
        }
    }
    if (col != p.rank()) throw Error("relative_index: projection rank inconsistent");
    return basis;
}

}  // namespace

long relative_index(const ProjectionPair& pair, double sv_threshold) {
    const double tr =
        (pair.p.matrix().matrix() - pair.q.matrix().matrix()).trace().real();
    const long trace_route = std::lround(tr);

    const Eigen::MatrixXcd up = range_basis(pair.p);
    const Eigen::MatrixXcd uq = range_basis(pair.q);
    long overlap_rank = 0;
    if (up.cols() > 0 && uq.cols() > 0) {
        const Eigen::MatrixXcd m = uq.adjoint() * up;  // QP: ran P -> ran Q in bases
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
        const Eigen::VectorXd sigma = svd.singularValues();
        for (Eigen::Index i = 0; i < sigma.size(); ++i) {
            if (sigma[i] > sv_threshold) ++overlap_rank;
        }
    }
    const long kernel_dim = pair.p.rank() - overlap_rank;
    const long cokernel_dim = pair.q.rank() - overlap_rank;
    const long kernel_route = kernel_dim - cokernel_dim;

    if (kernel_route != trace_route) {
        throw IndexMismatchError("relative_index: trace route " + std::to_string(trace_route)
                                 + " disagrees with kernel/cokernel route "
                                 + std::to_string(kernel_route)
                                 + " (numerical rank ambiguity)",
                                 trace_route, kernel_route);
    }
    return trace_route;
}

OperatorPath segment_path(const ProjectionPair& pair) {
    const Eigen::Index n = pair.p.dim();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    const Eigen::MatrixXcd sp = 2.0 * pair.p.matrix().matrix() - id;
    const Eigen::MatrixXcd sq = 2.0 * pair.q.matrix().matrix() - id;

    PathMetadata meta;
    meta.label = "segment";
    auto evaluate = [sp, sq](double t) {
        return HermitianMatrix(t * sp + (1.0 - t) * sq);
    };
    auto derivative = [diff = Eigen::MatrixXcd(sp - sq)](double) {
        return HermitianMatrix(diff);
    };
    return OperatorPath(n, Interval{0.0, 1.0}, std::move(evaluate), std::move(derivative),
                        std::move(meta));
}

// ---------------------------------------------------------------------------
// Path algebra

OperatorPath concatenate(const OperatorPath& first, const OperatorPath& second) {
    if (first.dim() != second.dim()) {
        throw PreconditionError("concatenate: paths act on different spaces");
    }
    const Interval i1 = first.interval();
    const Interval i2 = second.interval();
    const double junction =
        (first.at(i1.b).matrix() - second.at(i2.a).matrix()).norm();
    if (junction > 1e-10) {
        throw PreconditionError("concatenate: junction mismatch ||end - start|| = "
                                + fmt("%.3g", junction));
    }

    PathMetadata meta;
    meta.label = first.metadata().label + "*" + second.metadata().label;
    const Interval iv{i1.a, i1.b + i2.length()};
    auto evaluate = [first, second, i1, i2](double t) {
        if (t <= i1.b) return first.at(t);
        return second.at(i2.a + (t - i1.b));
    };
    OperatorPath::Evaluator derivative;
    if (first.has_analytic_derivative() && second.has_analytic_derivative()) {
        derivative = [first, second, i1, i2](double t) {
            if (t <= i1.b) return first.derivative_at(t);
            return second.derivative_at(i2.a + (t - i1.b));
        };
    }
    return OperatorPath(first.dim(), iv, std::move(evaluate), std::move(derivative),
                        std::move(meta));
}

OperatorPath reverse(const OperatorPath& path) {
    const Interval iv = path.interval();
    PathMetadata meta;
    meta.label = path.metadata().label + "~";
    if (path.metadata().endpoint_unitary) {
        meta.endpoint_unitary = path.metadata().endpoint_unitary->adjoint();
        meta.equivalence_modes = path.metadata().equivalence_modes;
    }
    auto evaluate = [path, iv](double t) { return path.at(iv.a + iv.b - t); };
    OperatorPath::Evaluator derivative;
    if (path.has_analytic_derivative()) {
        derivative = [path, iv](double t) {
            const Eigen::MatrixXcd d = path.derivative_at(iv.a + iv.b - t).matrix();
            return HermitianMatrix(-d);
        };
    }
    return OperatorPath(path.dim(), iv, std::move(evaluate), std::move(derivative),
                        std::move(meta));
}

OperatorPath reparametrize(const OperatorPath& path, std::function<double(double)> sigma,
                           Interval new_interval, std::function<double(double)> sigma_derivative) {
    if (!(new_interval.a < new_interval.b)) {
        throw std::invalid_argument("reparametrize: malformed target interval");
    }
    const Interval iv = path.interval();
    const double tol = 1e-9 * std::max(1.0, std::abs(iv.a) + std::abs(iv.b));
    if (std::abs(sigma(new_interval.a) - iv.a) > tol
        || std::abs(sigma(new_interval.b) - iv.b) > tol) {
        throw PreconditionError("reparametrize: sigma does not map the new interval "
                                "onto the path interval");
    }
    double prev = sigma(new_interval.a);
    for (int i = 1; i <= 64; ++i) {
        const double t = new_interval.a + new_interval.length() * i / 64.0;
        const double s = sigma(t);
        if (!(s > prev)) {
            throw PreconditionError("reparametrize: sigma is not strictly increasing");
        }
        prev = s;
    }

    PathMetadata meta = path.metadata();
    meta.label += "@sigma";
    auto evaluate = [path, sigma, iv](double t) {
        return path.at(std::clamp(sigma(t), iv.a, iv.b));
    };
    OperatorPath::Evaluator derivative;
    if (path.has_analytic_derivative() && sigma_derivative) {
        derivative = [path, sigma, sigma_derivative, iv](double t) {
            const double s = std::clamp(sigma(t), iv.a, iv.b);
            const Eigen::MatrixXcd d = path.derivative_at(s).matrix() * sigma_derivative(t);
            return HermitianMatrix(d);
        };
    }
    return OperatorPath(path.dim(), new_interval, std::move(evaluate), std::move(derivative),
                        std::move(meta));
}

}  // namespace specflow
