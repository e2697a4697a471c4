#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "specflow/errors.hpp"
#include "specflow/flowcore.hpp"
#include "specflow/models.hpp"

using namespace specflow;

namespace {

const std::complex<double> I_unit(0.0, 1.0);

OperatorPath scalar_path(std::function<double(double)> f, std::function<double(double)> fdot,
                         Interval iv = {0.0, 1.0}) {
    OperatorPath::Evaluator deriv;
    if (fdot) {
        deriv = [fdot](double t) {
            return HermitianMatrix(Eigen::MatrixXcd::Constant(1, 1, fdot(t)));
        };
    }
    return OperatorPath(1, iv,
                        [f](double t) {
                            return HermitianMatrix(Eigen::MatrixXcd::Constant(1, 1, f(t)));
                        },
                        deriv);
}

OperatorPath ramp_path() {
    return scalar_path([](double t) { return t - 0.25; }, [](double) { return 1.0; });
}

UnitaryLoop diag_phase_loop(int k1, int k2, bool analytic) {
    auto eval = [k1, k2](double x) {
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(2, 2);
        s(0, 0) = std::exp(2.0 * M_PI * I_unit * (k1 * x));
        s(1, 1) = std::exp(2.0 * M_PI * I_unit * (k2 * x));
        return s;
    };
    UnitaryLoop::Evaluator deriv;
    if (analytic) {
        deriv = [k1, k2](double x) {
            Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(2, 2);
            s(0, 0) = 2.0 * M_PI * I_unit * double(k1) * std::exp(2.0 * M_PI * I_unit * (k1 * x));
            s(1, 1) = 2.0 * M_PI * I_unit * double(k2) * std::exp(2.0 * M_PI * I_unit * (k2 * x));
            return s;
        };
    }
    return UnitaryLoop(2, eval, deriv);
}

}  // namespace

// ---------------------------------------------------------------------------
// crossing oracle

TEST_CASE("oracle: single upward crossing of t - 1/4") {
    const FlowReport r = spectral_flow_crossings(ramp_path());
    CHECK(r.integer == 1);
    CHECK(r.residual == 0.0);
    CHECK(r.ok());
    REQUIRE(r.diagnostics.crossings.size() == 1);
    CHECK(r.diagnostics.crossings[0].t == doctest::Approx(0.25).epsilon(1e-8));
    CHECK(r.diagnostics.crossings[0].direction == 1);
}

TEST_CASE("oracle: constant invertible path has flow zero") {
    Eigen::VectorXd d(3);
    d << 0.4, -1.0, 2.0;
    OperatorPath path(3, {0.0, 1.0},
                      [d](double) { return HermitianMatrix::diagonal(d); });
    const FlowReport r = spectral_flow_crossings(path);
    CHECK(r.integer == 0);
    CHECK(r.diagnostics.crossings.empty());
}

TEST_CASE("oracle: opposite crossings cancel") {
    OperatorPath path(2, {0.0, 1.0}, [](double t) {
        Eigen::VectorXd d(2);
        d << t - 0.25, 0.25 - t;
        return HermitianMatrix::diagonal(d);
    });
    const FlowReport r = spectral_flow_crossings(path);
    CHECK(r.integer == 0);
    CHECK(r.diagnostics.crossings.size() == 2);
}

TEST_CASE("oracle rejects non-invertible endpoints") {
    CHECK_THROWS_AS(
        spectral_flow_crossings(scalar_path([](double t) { return t; }, nullptr)),
        PreconditionError);
}

TEST_CASE("oracle separates nearby opposite crossings") {
    // parabola lifted just above zero: no crossing at all
    OperatorPath lifted(1, {0.0, 1.0}, [](double t) {
        return HermitianMatrix(Eigen::MatrixXcd::Constant(1, 1, (t - 0.5) * (t - 0.51) + 1e-4));
    });
    const FlowReport none = spectral_flow_crossings(lifted);
    CHECK(none.integer == 0);
    CHECK(none.diagnostics.crossings.empty());

    // dipping 1e-6 below zero over ~0.01 of the interval: a cancelling pair
    OperatorPath dipped(1, {0.0, 1.0}, [](double t) {
        return HermitianMatrix(Eigen::MatrixXcd::Constant(1, 1, (t - 0.5) * (t - 0.51) - 1e-6));
    });
    const FlowReport two = spectral_flow_crossings(dipped);
    CHECK(two.integer == 0);
    CHECK(two.diagnostics.crossings.size() == 2);
}

// ---------------------------------------------------------------------------
// winding numbers

TEST_CASE("winding of the scalar unit loop is 1") {
    UnitaryLoop loop(1, [](double x) {
        return Eigen::MatrixXcd::Constant(1, 1, std::exp(2.0 * M_PI * I_unit * x));
    });
    const FlowReport r = winding_number(loop);
    CHECK(r.integer == 1);
    CHECK(r.residual < 1e-8);
}

TEST_CASE("winding of a constant loop is 0") {
    Eigen::MatrixXcd u(2, 2);
    u << I_unit, 0.0, 0.0, -1.0;
    UnitaryLoop loop(2, [u](double) { return u; });
    const FlowReport r = winding_number(loop);
    CHECK(r.integer == 0);
    CHECK(r.residual < 1e-12);
}

TEST_CASE("winding of diagonal phase loops adds the exponents") {
    for (int k1 : {-3, -1, 0, 2}) {
        for (int k2 : {-2, 0, 1, 3}) {
            const FlowReport r = winding_number(diag_phase_loop(k1, k2, false));
            CHECK(r.integer == k1 + k2);
            CHECK(r.residual < 1e-8);
            CHECK(r.diagnostics.evaluations <= 3 * 4097);
        }
    }
}

TEST_CASE("winding uses the analytic loop derivative when supplied") {
    const FlowReport r = winding_number(diag_phase_loop(2, -3, true));
    CHECK(r.integer == -1);
    CHECK(r.residual < 1e-12);
}

TEST_CASE("winding additivity on commuting diagonal loops") {
    auto product = [](double x) {
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(2, 2);
        s(0, 0) = std::exp(2.0 * M_PI * I_unit * (2.0 * x)) * std::exp(2.0 * M_PI * I_unit * x);
        s(1, 1) = std::exp(2.0 * M_PI * I_unit * (-1.0 * x))
                  * std::exp(2.0 * M_PI * I_unit * (3.0 * x));
        return s;
    };
    const FlowReport ws = winding_number(diag_phase_loop(2, -1, false));
    const FlowReport wt = winding_number(diag_phase_loop(1, 3, false));
    const FlowReport wst = winding_number(UnitaryLoop(2, product));
    CHECK(wst.integer == ws.integer + wt.integer);
}

TEST_CASE("winding rejects non-unitary and non-closed families") {
    UnitaryLoop stretched(1, [](double) { return Eigen::MatrixXcd::Constant(1, 1, 2.0); });
    CHECK_THROWS_AS(winding_number(stretched), PreconditionError);

    UnitaryLoop open_arc(1, [](double x) {
        return Eigen::MatrixXcd::Constant(1, 1, std::exp(2.0 * M_PI * I_unit * (0.5 * x)));
    });
    CHECK_THROWS_AS(winding_number(open_arc), PreconditionError);
}

TEST_CASE("a starved point cap flags the winding report") {
    FlowOptions opts;
    opts.winding_start_points = 4;
    opts.winding_max_points = 8;
    const FlowReport r = spectral_flow_via_winding(ramp_path(), 0.2, opts);
    CHECK(r.flagged);
    CHECK_FALSE(r.diagnostics.warnings.empty());
}

// ---------------------------------------------------------------------------
// spectral flow via the exponential loop

TEST_CASE("via_winding matches the oracle on the ramp") {
    const FlowReport r = spectral_flow_via_winding(ramp_path(), 0.2);
    CHECK(r.integer == 1);
    CHECK(r.residual < 1e-4);
    CHECK(r.ok());
}

TEST_CASE("via_winding on a constant path is 0") {
    Eigen::VectorXd d(2);
    d << 0.9, -0.6;
    OperatorPath path(2, {0.0, 1.0},
                      [d](double) { return HermitianMatrix::diagonal(d); });
    const FlowReport r = spectral_flow_via_winding(path);
    CHECK(r.integer == 0);
    CHECK(r.residual < 1e-8);
}

TEST_CASE("via_winding negates under orientation reversal") {
    const FlowReport fwd = spectral_flow_via_winding(ramp_path(), 0.2);
    const FlowReport bwd = spectral_flow_via_winding(reverse(ramp_path()), 0.2);
    CHECK(fwd.integer == 1);
    CHECK(bwd.integer == -1);
}

TEST_CASE("via_winding validates delta against the endpoint gap") {
    CHECK_THROWS_AS(spectral_flow_via_winding(ramp_path(), 0.3), PreconditionError);
}

TEST_CASE("via_winding stays accurate for steep involutive ramps") {
    // small delta makes the loop's phase speed large; the difference step must
    // shrink with it or the O(h^2) bias dominates the residual
    const OperatorPath fast =
        scalar_path([](double t) { return 3.0 * (t - 0.25); }, [](double) { return 3.0; });
    for (double delta : {0.02, 0.005}) {
        const FlowReport r = spectral_flow_via_winding(fast, delta);
        INFO("delta ", delta, " residual ", r.residual);
        CHECK(r.integer == 1);
        CHECK(r.residual < 1e-4);
        CHECK(r.ok());
    }
}

// ---------------------------------------------------------------------------
// integral formula

TEST_CASE("integral formula telescopes exactly on the ramp") {
    const OperatorPath path = ramp_path();
    const std::vector<NormalizingFunction> chis = {
        make_chi_p(1.0), make_chi_p(2.0), make_chi_theta(1.0), make_involutive_spline(0.2)};
    for (const NormalizingFunction& chi : chis) {
        const FlowReport r = spectral_flow_integral(path, chi, 1e-12);
        INFO(chi.label());
        CHECK(std::abs(r.value - 1.0) < 1e-10);
        CHECK(r.integer == 1);
        // the term split depends on chi, only the sum is pinned
        CHECK(r.terms.integral + r.terms.endpoint_b - r.terms.endpoint_a
              == doctest::Approx(r.value));
    }
}

TEST_CASE("integral formula on a constant path is 0 with cancelling endpoints") {
    Eigen::VectorXd d(3);
    d << 1.2, -0.4, 0.8;
    OperatorPath path(3, {0.0, 1.0},
                      [d](double) { return HermitianMatrix::diagonal(d); });
    const FlowReport r = spectral_flow_integral(path, make_chi_p(2.0), 1e-10);
    CHECK(r.integer == 0);
    CHECK(std::abs(r.value) < 1e-9);
    CHECK(r.terms.endpoint_b == doctest::Approx(r.terms.endpoint_a));
}

TEST_CASE("integral formula matches the oracle on a random 8-dim path") {
    const Scenario s = make_random_path(8, 71, 2);
    const FlowReport oracle = spectral_flow_crossings(s.path);
    const FlowReport integral = spectral_flow_integral(s.path, make_chi_p(2.0), 1e-8);
    CHECK(integral.integer == oracle.integer);
    CHECK(integral.residual < 1e-6);
}

TEST_CASE("integral formula rejects a non-normalizing chi") {
    const NormalizingFunction bogus("sine", [](double x) { return std::sin(x); },
                                    [](double x) { return std::cos(x); },
                                    DecayClass::polynomial(1.0, 1.0),
                                    DecayClass::polynomial(1.0, 1.0));
    CHECK_THROWS_AS(spectral_flow_integral(ramp_path(), bogus), std::invalid_argument);
}

TEST_CASE("integral formula directs non-invertible endpoints to regularization") {
    try {
        spectral_flow_integral(scalar_path([](double t) { return t; }, nullptr),
                               make_chi_p(2.0));
        FAIL("expected PreconditionError");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("endpoint_regularize") != std::string::npos);
    }
}

// ---------------------------------------------------------------------------
// endpoint-free formula

TEST_CASE("endpoint-free formula on the truncated circle operator") {
    const Scenario s = make_circle_dirac(32, {0.5, 1.5});
    const EvenWeight psi{"cauchy", [](double x) { return 1.0 / (1.0 + x * x); },
                         DecayClass::polynomial(2.0, 1.0)};
    const FlowReport r = spectral_flow_corollary(s.path, psi, 1e-8);
    CHECK(r.integer == 1);
    CHECK(std::abs(r.value - 1.0) < 0.05);  // truncation tail of the mode sum
    CHECK(spectral_flow_crossings(s.path).integer == 1);
}

TEST_CASE("endpoint-free formula on a constant path with identity metadata") {
    Eigen::VectorXd d(2);
    d << 0.7, -0.3;
    PathMetadata meta;
    meta.label = "constant";
    meta.endpoint_unitary = Eigen::MatrixXcd::Identity(2, 2);
    OperatorPath path(2, {0.0, 1.0}, [d](double) { return HermitianMatrix::diagonal(d); },
                      nullptr, meta);
    const EvenWeight psi{"cauchy", [](double x) { return 1.0 / (1.0 + x * x); },
                         DecayClass::polynomial(2.0, 1.0)};
    const FlowReport r = spectral_flow_corollary(path, psi);
    CHECK(r.integer == 0);
    CHECK(std::abs(r.value) < 1e-10);
}

TEST_CASE("endpoint-free formula agrees with the oracle on a matrix loop") {
    // branches swap: lambda_1 rises through zero, lambda_2 falls; the swap
    // unitary realizes exact endpoint equivalence and the net flow is zero
    PathMetadata meta;
    meta.label = "swap loop";
    Eigen::MatrixXcd swap = Eigen::MatrixXcd::Zero(4, 4);
    swap(1, 0) = 1.0;
    swap(0, 1) = 1.0;
    swap(2, 2) = 1.0;
    swap(3, 3) = 1.0;
    meta.endpoint_unitary = swap;
    OperatorPath path(4, {0.0, 1.0},
                      [](double t) {
                          Eigen::VectorXd d(4);
                          d << t - 0.25, 0.75 - t, 1.5, -1.5;
                          return HermitianMatrix::diagonal(d);
                      },
                      nullptr, meta);

    const NormalizingFunction chi2 = make_chi_p(2.0);
    const EvenWeight psi{"chi_2_prime", [chi2](double x) { return chi2.chi_prime(x); },
                         chi2.chi_prime_decay()};
    const FlowReport oracle = spectral_flow_crossings(path);
    const FlowReport r = spectral_flow_corollary(path, psi, 1e-9);
    CHECK(oracle.integer == 0);
    CHECK(r.integer == oracle.integer);
    CHECK(std::abs(r.value) < 1e-7);
}

TEST_CASE("endpoint-free formula validates its hypotheses") {
    const EvenWeight psi{"cauchy", [](double x) { return 1.0 / (1.0 + x * x); },
                         DecayClass::polynomial(2.0, 1.0)};
    // no metadata
    CHECK_THROWS_AS(spectral_flow_corollary(ramp_path(), psi), PreconditionError);

    // endpoints not equivalent
    PathMetadata meta;
    meta.endpoint_unitary = Eigen::MatrixXcd::Identity(1, 1);
    OperatorPath ramp(1, {0.0, 1.0},
                      [](double t) {
                          return HermitianMatrix(Eigen::MatrixXcd::Constant(1, 1, t - 0.25));
                      },
                      nullptr, meta);
    CHECK_THROWS_AS(spectral_flow_corollary(ramp, psi), PreconditionError);

    // odd weight is rejected
    Eigen::VectorXd d(1);
    d << 0.5;
    PathMetadata cmeta;
    cmeta.endpoint_unitary = Eigen::MatrixXcd::Identity(1, 1);
    OperatorPath constant(1, {0.0, 1.0},
                          [d](double) { return HermitianMatrix::diagonal(d); }, nullptr, cmeta);
    const EvenWeight odd{"odd", [](double x) { return x * std::exp(-x * x) + 0.1; },
                         DecayClass::gaussian(0.5, 1.0)};
    CHECK_THROWS_AS(spectral_flow_corollary(constant, odd), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// endpoint regularization

TEST_CASE("regularized constant-zero path has flow zero") {
    OperatorPath zero(1, {0.0, 1.0},
                      [](double) { return HermitianMatrix::zero(1); });
    const OperatorPath ext = endpoint_regularize(zero, 0.5);
    CHECK(ext.interval().a == doctest::Approx(-1.0));
    CHECK(ext.interval().b == doctest::Approx(2.0));
    CHECK(eigh(ext.at(-1.0)).gap() == doctest::Approx(0.5));
    CHECK(eigh(ext.at(2.0)).gap() == doctest::Approx(0.5));
    const FlowReport r = spectral_flow_crossings(ext);
    CHECK(r.integer == 0);
}

TEST_CASE("regularization leaves invertible-endpoint flows unchanged") {
    const Scenario s = make_crossing_path({{0.25, 1}});
    const OperatorPath ext = endpoint_regularize(s.path, 0.1);
    CHECK(spectral_flow_crossings(ext).integer == 1);
    CHECK(spectral_flow_crossings(s.path).integer == 1);
}

TEST_CASE("regularization rejects epsilon reaching into the spectrum") {
    const Scenario s = make_crossing_path({{0.25, 1}});
    CHECK_THROWS_AS(endpoint_regularize(s.path, 0.3), PreconditionError);

    // conservative also about eigenvalues approached from the positive side
    Eigen::VectorXd d(2);
    d << 0.2, 1.0;
    OperatorPath positive(2, {0.0, 1.0},
                          [d](double) { return HermitianMatrix::diagonal(d); });
    CHECK_THROWS_AS(endpoint_regularize(positive, 0.5), PreconditionError);
}

TEST_CASE("automatic epsilon choice halves the smallest nonzero gap") {
    const Scenario s = make_crossing_path({{0.25, 1}});
    CHECK(choose_regularization_epsilon(s.path) == doctest::Approx(0.125));
}

// ---------------------------------------------------------------------------
// relative index and segments

TEST_CASE("relative index of diagonal projections") {
    Eigen::VectorXd p(3), q(3);
    p << 1.0, 1.0, 0.0;
    q << 1.0, 0.0, 0.0;
    const ProjectionPair pair{Projection(HermitianMatrix::diagonal(p)),
                              Projection(HermitianMatrix::diagonal(q))};
    CHECK(relative_index(pair) == 1);
}

TEST_CASE("relative index vanishes for equal and for conjugated projections") {
    Eigen::VectorXd p(3);
    p << 1.0, 0.0, 1.0;
    const Projection proj(HermitianMatrix::diagonal(p));
    CHECK(relative_index({proj, proj}) == 0);

    // Q = R P R* with R a small rotation: equal ranks force index 0
    const Scenario s = make_random_path(8, 5, 1);
    const Projection big = spectral_projection_nonneg(s.path.at(0.0));
    Eigen::VectorXd diag8 = Eigen::VectorXd::Zero(8);
    diag8.head(3).setOnes();
    const Projection p3(HermitianMatrix::diagonal(diag8));
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(8, 8);
    h(0, 4) = std::complex<double>(0.1, 0.05);
    h(4, 0) = std::conj(h(0, 4));
    h(2, 6) = 0.2;
    h(6, 2) = 0.2;
    const SpectralDecomposition hd = eigh(HermitianMatrix(h));
    Eigen::VectorXcd phases(8);
    for (int i = 0; i < 8; ++i) {
        phases[i] = std::exp(I_unit * hd.eigenvalues[i]);
    }
    const Eigen::MatrixXcd r = hd.eigenvectors * phases.asDiagonal() * hd.eigenvectors.adjoint();
    Eigen::MatrixXcd qm = r * p3.matrix().matrix() * r.adjoint();
    qm = 0.5 * (qm + qm.adjoint().eval());
    const Projection q3{HermitianMatrix(qm)};
    CHECK(relative_index({p3, q3}) == 0);
}

TEST_CASE("segment path realizes the relative index as spectral flow") {
    Eigen::VectorXd p(3), q(3);
    p << 1.0, 1.0, 0.0;
    q << 1.0, 0.0, 0.0;
    const ProjectionPair pair{Projection(HermitianMatrix::diagonal(p)),
                              Projection(HermitianMatrix::diagonal(q))};
    const OperatorPath seg = segment_path(pair);
    CHECK(spectral_flow_crossings(seg).integer == 1);
    CHECK(relative_index(pair) == 1);

    // equal projections give a constant symmetry
    const ProjectionPair same{Projection(HermitianMatrix::diagonal(p)),
                              Projection(HermitianMatrix::diagonal(p))};
    const OperatorPath flat = segment_path(same);
    CHECK((flat.at(0.3).matrix() - flat.at(0.9).matrix()).cwiseAbs().maxCoeff() < 1e-14);

    // orthogonal rank-1 projections in dim 2: trace difference zero, flow zero
    Eigen::VectorXd e1(2), e2(2);
    e1 << 1.0, 0.0;
    e2 << 0.0, 1.0;
    const ProjectionPair ortho{Projection(HermitianMatrix::diagonal(e1)),
                               Projection(HermitianMatrix::diagonal(e2))};
    CHECK(relative_index(ortho) == 0);
    CHECK(spectral_flow_crossings(segment_path(ortho)).integer == 0);
}

// ---------------------------------------------------------------------------
// path algebra

TEST_CASE("concatenation with reversal closes to flow zero") {
    const OperatorPath path = ramp_path();
    const OperatorPath loop = concatenate(path, reverse(path));
    CHECK(spectral_flow_crossings(loop).integer == 0);
}

TEST_CASE("concatenation validates the junction") {
    const OperatorPath a = ramp_path();
    const OperatorPath b = scalar_path([](double t) { return t + 0.5; },
                                       [](double) { return 1.0; });
    CHECK_THROWS_AS(concatenate(a, b), PreconditionError);
}

TEST_CASE("additivity under concatenation") {
    const OperatorPath a =
        scalar_path([](double t) { return t - 0.25; }, [](double) { return 1.0; });
    const OperatorPath b = scalar_path([](double t) { return 0.75 + std::sin(M_PI * t) - 2.2 * t; },
                                       nullptr);
    // b starts where a ends
    REQUIRE((a.at(1.0).matrix() - b.at(0.0).matrix()).cwiseAbs().maxCoeff() < 1e-12);
    const long fa = spectral_flow_crossings(a).integer;
    const long fb = spectral_flow_crossings(b).integer;
    const long fab = spectral_flow_crossings(concatenate(a, b)).integer;
    CHECK(fab == fa + fb);
}

TEST_CASE("reparametrization by t^2 preserves the flow") {
    const OperatorPath path = ramp_path();
    const OperatorPath warped = reparametrize(
        path, [](double t) { return t * t; }, {0.0, 1.0}, [](double t) { return 2.0 * t; });
    const FlowReport r = spectral_flow_crossings(warped);
    CHECK(r.integer == 1);
    REQUIRE(r.diagnostics.crossings.size() == 1);
    CHECK(r.diagnostics.crossings[0].t == doctest::Approx(0.5).epsilon(1e-7));

    CHECK_THROWS_AS(reparametrize(path, [](double t) { return std::cos(t); }, {0.0, 1.0}),
                    PreconditionError);
}

TEST_CASE("reversal of the ramp flips the flow sign") {
    CHECK(spectral_flow_crossings(reverse(ramp_path())).integer == -1);
}

TEST_CASE("the C1 invariant check accepts true derivatives and rejects wrong ones") {
    const Scenario s = make_random_path(4, 37, 3);
    CHECK(check_c1(s.path).passed);

    OperatorPath wrong(1, {0.0, 1.0},
                       [](double t) {
                           return HermitianMatrix(
                               Eigen::MatrixXcd::Constant(1, 1, std::sin(3.0 * t)));
                       },
                       [](double) {
                           return HermitianMatrix(Eigen::MatrixXcd::Constant(1, 1, 1.0));
                       });
    CHECK_FALSE(check_c1(wrong).passed);
}

// ---------------------------------------------------------------------------
// seeded property batch (small scale; the acceptance suite runs the long one)

TEST_CASE("three methods agree on a small seeded batch") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        const Scenario s = make_random_path(1 + seed % 6, 1000 + seed, 1 + seed % 3);
        const FlowReport oracle = spectral_flow_crossings(s.path);
        const FlowReport winding = spectral_flow_via_winding(s.path);
        const FlowReport integral = spectral_flow_integral(s.path, make_chi_p(2.0), 1e-8);
        INFO("seed ", seed, " label ", s.path.metadata().label);
        CHECK(oracle.integer == winding.integer);
        CHECK(oracle.integer == integral.integer);
        CHECK(winding.residual < 1e-4);
        CHECK(integral.residual < 1e-4);
    }
}

TEST_CASE("the integral method is chi-independent") {
    const Scenario s = make_random_path(6, 2024, 2);
    const std::vector<NormalizingFunction> chis = {
        make_chi_p(1.0), make_chi_p(2.0), make_chi_theta(1.0), make_involutive_spline(0.05)};
    const long reference = spectral_flow_crossings(s.path).integer;
    for (const NormalizingFunction& chi : chis) {
        const FlowReport r = spectral_flow_integral(s.path, chi, 1e-8);
        INFO(chi.label());
        CHECK(r.integer == reference);
    }
}

TEST_CASE("interior bumps leave the flow invariant") {
    for (std::uint64_t seed : {3u, 14u, 15u}) {
        const Scenario s = make_random_path(5, seed, 2);
        const long base = spectral_flow_crossings(s.path).integer;

        const Scenario bump_source = make_random_path(5, seed + 1000, 1);
        const OperatorPath original = s.path;
        const HermitianMatrix b = bump_source.path.at(0.5);
        OperatorPath bumped(5, original.interval(), [original, b](double t) {
            const double envelope = std::sin(M_PI * t);
            return HermitianMatrix(original.at(t).matrix() + 0.4 * envelope * b.matrix());
        });
        CHECK(spectral_flow_crossings(bumped).integer == base);
    }
}

TEST_CASE("conjugation leaves the trace integrand's integral invariant") {
    const Scenario s = make_random_path(5, 77, 2);
    const Scenario conj = conjugate_scenario(s, 78);
    const NormalizingFunction chi = make_chi_p(2.0);

    auto weighted = [&chi](const OperatorPath& path) {
        return integrate_adaptive(
                   [&](double t) {
                       const SpectralDecomposition d = eigh(path.at(t));
                       const Eigen::VectorXd diag = (d.eigenvectors.adjoint()
                                                     * path.derivative_at(t).matrix()
                                                     * d.eigenvectors)
                                                        .diagonal()
                                                        .real();
                       double sum = 0.0;
                       for (Eigen::Index i = 0; i < diag.size(); ++i) {
                           sum += chi.chi_prime(d.eigenvalues[i]) * diag[i];
                       }
                       return sum;
                   },
                   path.interval().a, path.interval().b, 1e-9)
            .value;
    };
    CHECK(std::abs(weighted(s.path) - weighted(conj.path)) < 1e-8);
}
