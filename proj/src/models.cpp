#include "specflow/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "specflow/errors.hpp"
#include "specflow/rng.hpp"

namespace specflow {

namespace {

Eigen::MatrixXcd random_hermitian(Eigen::Index n, Rng& rng) {
    Eigen::MatrixXcd m(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) = rng.normal() * scale;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const std::complex<double> z = rng.complex_normal() * scale;
            m(i, j) = z;
            m(j, i) = std::conj(z);
        }
    }
    return m;
}

// best constant shift c maximizing min |lambda + c| over both endpoint spectra
double best_shift(const Eigen::VectorXd& ea, const Eigen::VectorXd& eb) {
    auto gap = [&](double c) {
        double g = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < ea.size(); ++i) g = std::min(g, std::abs(ea[i] + c));
        for (Eigen::Index i = 0; i < eb.size(); ++i) g = std::min(g, std::abs(eb[i] + c));
        return g;
    };
    double best_c = 0.0;
    double best_gap = gap(0.0);
    for (int k = -1536; k <= 1536; ++k) {
        const double c = k / 256.0;
        const double g = gap(c);
        // strict improvement only, so ties resolve deterministically
        if (g > best_gap + 1e-15) {
            best_gap = g;
            best_c = c;
        }
    }
    return best_c;
}

}  // namespace

Scenario make_random_path(int dim, std::uint64_t seed, int degree) {
    if (dim < 1) throw std::invalid_argument("make_random_path: dim must be >= 1");
    if (degree < 1) throw std::invalid_argument("make_random_path: degree must be >= 1");

    Rng rng(seed ^ 0x5f3759df9e3779b9ull);
    std::vector<Eigen::MatrixXcd> cos_coeff, sin_coeff;
    for (int k = 0; k < degree; ++k) {
        cos_coeff.push_back(random_hermitian(dim, rng));
        sin_coeff.push_back(random_hermitian(dim, rng));
    }

    auto raw_at = [cos_coeff, sin_coeff, degree](double t) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(cos_coeff[0].rows(), cos_coeff[0].cols());
        for (int k = 1; k <= degree; ++k) {
            m += std::cos(k * M_PI * t) * cos_coeff[k - 1]
                 + std::sin(k * M_PI * t) * sin_coeff[k - 1];
        }
        return m;
    };

    // nudge the endpoint spectra away from zero with a constant shift
    const Eigen::VectorXd ea = eigh(HermitianMatrix(raw_at(0.0))).eigenvalues;
    const Eigen::VectorXd eb = eigh(HermitianMatrix(raw_at(1.0))).eigenvalues;
    const double shift = best_shift(ea, eb);

    PathMetadata meta;
    meta.label = "random(dim=" + std::to_string(dim) + ",seed=" + std::to_string(seed)
                 + ",deg=" + std::to_string(degree) + ")";

    auto evaluate = [raw_at, shift, dim](double t) {
        Eigen::MatrixXcd m = raw_at(t);
        m += shift * Eigen::MatrixXcd::Identity(dim, dim);
        return HermitianMatrix(std::move(m));
    };
    auto derivative = [cos_coeff, sin_coeff, degree](double t) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(cos_coeff[0].rows(), cos_coeff[0].cols());
        for (int k = 1; k <= degree; ++k) {
            m += k * M_PI
                 * (-std::sin(k * M_PI * t) * cos_coeff[k - 1]
                    + std::cos(k * M_PI * t) * sin_coeff[k - 1]);
        }
        return HermitianMatrix(std::move(m));
    };

    Scenario s{OperatorPath(dim, Interval{0.0, 1.0}, std::move(evaluate), std::move(derivative),
                            std::move(meta)),
               std::nullopt, "", std::nullopt, Summability::finite()};
    return s;
}

Scenario make_crossing_path(const std::vector<std::pair<double, int>>& crossings) {
    std::set<double> seen;
    for (const auto& [t, dir] : crossings) {
        if (!(t > 0.0 && t < 1.0)) {
            throw std::invalid_argument("make_crossing_path: crossing times must be interior");
        }
        if (dir != 1 && dir != -1) {
            throw std::invalid_argument("make_crossing_path: direction must be +1 or -1");
        }
        if (!seen.insert(t).second) {
            throw std::invalid_argument("make_crossing_path: crossing times must be distinct");
        }
    }

    const Eigen::Index n = static_cast<Eigen::Index>(crossings.size()) + 2;
    long expected = 0;
    for (const auto& [t, dir] : crossings) expected += dir;

    PathMetadata meta;
    meta.label = "crossing_path(" + std::to_string(crossings.size()) + ")";

    auto evaluate = [crossings, n](double t) {
        Eigen::VectorXd d(n);
        for (size_t j = 0; j < crossings.size(); ++j) {
            d[static_cast<Eigen::Index>(j)] = crossings[j].second * (t - crossings[j].first);
        }
        d[n - 2] = 1.5;   // inert invertible branches
        d[n - 1] = -1.5;
        return HermitianMatrix::diagonal(d);
    };
    auto derivative = [crossings, n](double) {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        for (size_t j = 0; j < crossings.size(); ++j) {
            d[static_cast<Eigen::Index>(j)] = crossings[j].second;
        }
        return HermitianMatrix::diagonal(d);
    };

    return {OperatorPath(n, Interval{0.0, 1.0}, std::move(evaluate), std::move(derivative),
                         std::move(meta)),
            expected, "sum of requested crossing directions", std::nullopt,
            Summability::finite()};
}

Scenario make_circle_dirac(int N, Interval window) {
    if (N < 1) throw std::invalid_argument("make_circle_dirac: N must be >= 1");
    if (!(window.a < window.b)) throw std::invalid_argument("make_circle_dirac: empty window");

    const Eigen::Index dim = 2 * static_cast<Eigen::Index>(N) + 1;
    Eigen::VectorXd modes(dim);
    for (Eigen::Index i = 0; i < dim; ++i) modes[i] = static_cast<double>(i) - N;

    for (double end : {window.a, window.b}) {
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (std::abs(modes[i] + end) < 1e-9) {
                throw std::invalid_argument("make_circle_dirac: window endpoint "
                                            + std::to_string(end)
                                            + " collides with mode " + std::to_string(modes[i]));
            }
        }
    }

    // branch n + t crosses zero at t = -n, upward
    long expected = 0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double t_cross = -modes[i];
        if (t_cross > window.a && t_cross < window.b) ++expected;
    }

    PathMetadata meta;
    meta.label = "circle_dirac(N=" + std::to_string(N) + ")";
    if (std::abs(window.length() - 1.0) < 1e-12) {
        // cyclic shift e_n -> e_{n-1}: exact equivalence except at the wrapped mode
        Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(dim, dim);
        for (Eigen::Index i = 1; i < dim; ++i) u(i - 1, i) = 1.0;
        u(dim - 1, 0) = 1.0;
        meta.endpoint_unitary = u;
        meta.equivalence_modes.reserve(dim - 2);
        for (Eigen::Index i = 1; i + 1 < dim; ++i) meta.equivalence_modes.push_back(i);
    }

    auto evaluate = [modes](double t) {
        return HermitianMatrix::diagonal(modes.array() + t);
    };
    auto derivative = [dim](double) { return HermitianMatrix::identity(dim); };

    return {OperatorPath(dim, window, std::move(evaluate), std::move(derivative),
                         std::move(meta)),
            expected, "integer modes crossing inside the window", static_cast<int>(dim),
            Summability::p_summable(2.0)};
}

Scenario make_theta_model(int N, Interval window) {
    if (N < 1) throw std::invalid_argument("make_theta_model: N must be >= 1");
    if (!(window.a < window.b)) throw std::invalid_argument("make_theta_model: empty window");

    const Eigen::Index dim = 2 * static_cast<Eigen::Index>(N);
    Eigen::VectorXd modes(dim);
    for (int k = 0; k < N; ++k) {
        modes[N - 1 - k] = -(k + 0.5);
        modes[N + k] = k + 0.5;
    }
    std::sort(modes.data(), modes.data() + dim);

    for (double end : {window.a, window.b}) {
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (std::abs(modes[i] + end) < 1e-9) {
                throw std::invalid_argument("make_theta_model: window endpoint degenerates mode "
                                            + std::to_string(modes[i]));
            }
        }
    }

    long expected = 0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double t_cross = -modes[i];
        if (t_cross > window.a && t_cross < window.b) ++expected;
    }

    PathMetadata meta;
    meta.label = "theta_model(N=" + std::to_string(N) + ")";

    auto evaluate = [modes](double t) {
        return HermitianMatrix::diagonal(modes.array() + t);
    };
    auto derivative = [dim](double) { return HermitianMatrix::identity(dim); };

    return {OperatorPath(dim, window, std::move(evaluate), std::move(derivative),
                         std::move(meta)),
            expected, "half-integer modes crossing inside the window", static_cast<int>(dim),
            Summability::theta_summable(1.0)};
}

Scenario conjugate_scenario(const Scenario& s, std::uint64_t seed, double scale) {
    const Eigen::Index n = s.path.dim();
    Rng rng(seed ^ 0xa0761d6478bd642full);
    const Eigen::MatrixXcd h = random_hermitian(n, rng) * scale;  // K = iH is skew-Hermitian
    const SpectralDecomposition hd = eigh(HermitianMatrix(h));

    auto conjugator = [hd, n](double t) {
        // exp(t K) = V exp(i t Lambda) V*
        Eigen::VectorXcd phases(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double angle = t * hd.eigenvalues[i];
            phases[i] = std::complex<double>(std::cos(angle), std::sin(angle));
        }
        return Eigen::MatrixXcd(hd.eigenvectors * phases.asDiagonal()
                                * hd.eigenvectors.adjoint());
    };

    PathMetadata meta;
    meta.label = s.path.metadata().label + "+conj(seed=" + std::to_string(seed) + ")";

    const OperatorPath base = s.path;
    auto evaluate = [base, conjugator](double t) {
        const Eigen::MatrixXcd u = conjugator(t);
        Eigen::MatrixXcd m = u * base.at(t).matrix() * u.adjoint();
        m = 0.5 * (m + m.adjoint().eval());
        return HermitianMatrix(std::move(m));
    };

    OperatorPath::Evaluator derivative;
    if (base.has_analytic_derivative()) {
        const Eigen::MatrixXcd k = std::complex<double>(0.0, 1.0) * h;
        derivative = [base, conjugator, k](double t) {
            const Eigen::MatrixXcd u = conjugator(t);
            const Eigen::MatrixXcd d = base.at(t).matrix();
            // d/dt (U D U*) = U ([K, D] + dD/dt) U*
            Eigen::MatrixXcd inner = k * d - d * k + base.derivative_at(t).matrix();
            Eigen::MatrixXcd m = u * inner * u.adjoint();
            m = 0.5 * (m + m.adjoint().eval());
            return HermitianMatrix(std::move(m));
        };
    }

    Scenario out{OperatorPath(n, base.interval(), std::move(evaluate), std::move(derivative),
                              std::move(meta)),
                 s.expected_flow,
                 s.expected_flow ? s.provenance + " (conjugation invariant)" : "",
                 s.truncation_dim, s.summability};
    return out;
}

}  // namespace specflow
