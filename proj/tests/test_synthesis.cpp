#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "rdcert/placement.hpp"
#include "rdcert/synthesis.hpp"

using namespace rdcert;

namespace {

// Independent check: general eigen-solve of the closed loop.
double placement_error(const Eigen::MatrixXd& m, const PoleList& targets) {
    const Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    PoleList got(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return spectrum_distance(got, targets);
}

Eigen::VectorXd sorted(Eigen::VectorXd v) {
    std::sort(v.data(), v.data() + v.size());
    return v;
}

Eigen::VectorXd real_spectrum(const Eigen::MatrixXd& m) {
    const Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    EXPECT_LT(es.eigenvalues().imag().cwiseAbs().maxCoeff(), 1e-9);
    return sorted(es.eigenvalues().real());
}

double min_eig(const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

}  // namespace

TEST(Placement, ScalarExamples) {
    Eigen::VectorXd a(1), b(1);
    a << 0.4;
    b << 0.9;
    EXPECT_NEAR(place_single_input(a, b, {-3.0})[0], -(3.0 + 0.4) / 0.9, 1e-12);
    Eigen::RowVectorXd c(1);
    c << 1.2;
    EXPECT_NEAR(place_observer(a, c, {-3.0})[0], 3.4 / 1.2, 1e-12);
    EXPECT_NEAR(place_observer(a, c, {-3.0})[0], 2.8333, 1e-4);
}

TEST(Placement, TwoModesCheckedByEigenSolve) {
    Eigen::VectorXd a(2), b(2);
    a << 1.0, -2.0;
    b << 1.0, 1.0;
    const PoleList targets{-2.0, -3.0};
    const Eigen::RowVectorXd k = place_single_input(a, b, targets);
    const Eigen::MatrixXd cl = Eigen::MatrixXd(a.asDiagonal()) + b * k;
    // 2x2 characteristic polynomial by hand: s^2 - tr s + det
    const double tr = cl.trace();
    const double det = cl.determinant();
    EXPECT_NEAR(tr, -5.0, 1e-12);
    EXPECT_NEAR(det, 6.0, 1e-12);
    EXPECT_LT(placement_error(cl, targets), 1e-8);
}

TEST(Placement, OpenLoopTargetsGiveZeroGain) {
    Eigen::VectorXd a(3), b(3);
    a << -1.0, 0.5, 2.0;
    b << 0.3, -1.0, 2.0;
    const Eigen::RowVectorXd k = place_single_input(a, b, {2.0, -1.0, 0.5});
    EXPECT_LT(k.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Placement, RandomInstancesUpToFourModes) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n0 = 1; n0 <= 4; ++n0) {
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::VectorXd a(n0), b(n0);
            Eigen::RowVectorXd c(n0);
            for (int i = 0; i < n0; ++i) {
                a[i] = 6.0 - 3.0 * i + 0.5 * u(rng);  // distinct
                b[i] = (u(rng) > 0 ? 1.0 : -1.0) * (0.2 + std::abs(u(rng)));
                c[i] = (u(rng) > 0 ? 1.0 : -1.0) * (0.2 + std::abs(u(rng)));
            }
            PoleList targets;
            if (n0 >= 2 && trial % 2 == 0) {
                targets = {{-1.5, 0.7}, {-1.5, -0.7}};
            }
            while (targets.size() < static_cast<std::size_t>(n0)) targets.emplace_back(-1.0 - targets.size() - 0.3 * std::abs(u(rng)));
            const Eigen::MatrixXd ad = a.asDiagonal();
            const Eigen::RowVectorXd k = place_single_input(a, b, targets);
            const Eigen::VectorXd l = place_observer(a, c, targets);
            EXPECT_LT(placement_error(ad + b * k, targets), 1e-8);
            EXPECT_LT(placement_error(ad - l * c, targets), 1e-8);
            // duality: observer gain is minus the state gain of the transposed pair
            EXPECT_LT((l + place_single_input(a, c.transpose(), targets).transpose()).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(Placement, RejectsDegenerateInputs) {
    Eigen::VectorXd a(2), b(2);
    a << 1.0, -2.0;
    b << 1.0, 0.0;
    EXPECT_THROW(place_single_input(a, b, {-1.0, -2.0}), UncontrollableModeError);
    Eigen::RowVectorXd c(2);
    c << 0.0, 1.0;
    EXPECT_THROW(place_observer(a, c, {-1.0, -2.0}), UnobservableModeError);
    b << 1.0, 1.0;
    EXPECT_THROW(place_single_input(a, b, {{-1.0, 1.0}, -2.0}), ParameterError);
    EXPECT_THROW(place_single_input(a, b, {-1.0}), ParameterError);
}

TEST(ModalPlant, BoundaryTraceCoefficientClosedForm) {
    const EigenBasis b = fixtures::heat_basis();
    const ModalPlant plant = build_modal_plant(b, fixtures::heat_plant(), fixtures::heat_decomposition(),
                                               Actuation::Boundary, std::nullopt, 1, 2, 0.25);
    EXPECT_NEAR(plant.beta[0], std::sqrt(2.0) * std::numbers::pi / 2.0, 1e-4 * plant.beta[0]);
    EXPECT_NEAR(plant.beta[0], 2.2214, 1e-4);
    EXPECT_LT(plant.beta_identity_error, kBetaIdentityTolerance);
}

TEST(ModalPlant, BetaIdentityOnExampleUpToTwentyModes) {
    const ModalPlant plant = fixtures::example_plant_modal(Actuation::Boundary, 20);
    EXPECT_LT(plant.beta_identity_error, 1e-4);
    // theta2 = 0: beta_n is minus the right-end slope
    const EigenBasis& b = fixtures::example_basis();
    for (Eigen::Index k = 0; k < 20; ++k) EXPECT_DOUBLE_EQ(plant.beta[k], -b.traces.slope_at1[k]);
}

TEST(ModalPlant, ContractViolations) {
    EXPECT_THROW(fixtures::example_plant_modal(Actuation::Distributed, 1), ConfigurationError);
    EXPECT_THROW(build_modal_plant(fixtures::example_basis(), fixtures::example_plant(),
                                   fixtures::example_decomposition(), Actuation::Distributed, std::nullopt, 1, 2, 0.25),
                 ConfigurationError);
    // qc large enough that mode 2 is unstable: the mode gap fails for N0 = 1
    Decomposition d = fixtures::example_decomposition();
    d.qc = 40.0;
    EXPECT_THROW(build_modal_plant(fixtures::example_basis(), fixtures::example_plant(), d, Actuation::Distributed,
                                   fixtures::example_shape(), 1, 2, 0.25),
                 ConfigurationError);
    // a vanishing input shape leaves mode 1 uncontrollable
    EXPECT_THROW(build_modal_plant(fixtures::example_basis(), fixtures::example_plant(),
                                   fixtures::example_decomposition(), Actuation::Distributed,
                                   CoefficientFunction::constant(0.0), 1, 2, 0.25),
                 UncontrollableModeError);
}

TEST(Gains, ExampleGainsPlaceBothPolesAtMinusSix) {
    for (const Actuation a : {Actuation::Distributed, Actuation::Boundary}) {
        const ModalPlant plant = fixtures::example_plant_modal(a, 2);
        const GainSet g = fixtures::example_gains(plant);
        EXPECT_NEAR(g.target_poles_state[0].real(), -6.0, 2e-3);
        EXPECT_NEAR(g.target_poles_observer[0].real(), -6.0, 2e-3);
    }
}

TEST(Gains, DefaultPolesAndValidation) {
    const ModalPlant plant = fixtures::example_plant_modal(Actuation::Distributed, 3);
    const GainSet g = design_gains(plant, 0.5);
    EXPECT_LT(spectrum_distance(eigenvalues(Eigen::MatrixXd(plant.a0().asDiagonal()) + plant.b0() * g.K),
                                default_state_poles(0.5, 1)),
              1e-8);
    Eigen::RowVectorXd k(1);
    k << 0.0;
    Eigen::VectorXd l(1);
    l << 0.0;
    EXPECT_THROW(explicit_gains(plant, 0.5, k, l), ParameterError);  // open loop mode 1 is unstable
}

TEST(Assembly, DistributedBlockStructure) {
    const auto cell = fixtures::example_cell(Actuation::Distributed, 2);
    const auto& m = cell.mats;
    const double a1 = -cell.plant.lambdas[1] + cell.plant.qc;
    ASSERT_EQ(m.F.rows(), 4);
    EXPECT_DOUBLE_EQ(m.F(2, 2), a1);
    EXPECT_DOUBLE_EQ(m.F(3, 3), a1);
    Eigen::MatrixXd g(4, 2);
    g << 0, 0, 1, 0, 0, 0, 0, 1;
    EXPECT_EQ(m.G, g);
    EXPECT_EQ(m.Lscript[0], -m.Lscript[1]);
    EXPECT_EQ(m.Lscript.tail(2).cwiseAbs().sum(), 0.0);
    EXPECT_EQ(m.Ktilde.tail(3).cwiseAbs().sum(), 0.0);
    // zero pattern: row of the observer error only couples to itself and the tail error
    EXPECT_EQ(m.F(1, 0), 0.0);
    EXPECT_EQ(m.F(1, 2), 0.0);
    EXPECT_EQ(m.F(3, 0), 0.0);
    EXPECT_EQ(m.F(3, 1), 0.0);
    EXPECT_EQ(m.F(3, 2), 0.0);
}

TEST(Assembly, SpectrumIsUnionOfBlocks) {
    for (const Actuation a : {Actuation::Distributed, Actuation::Boundary}) {
        for (const std::size_t n : {2u, 4u, 6u}) {
            const auto cell = fixtures::example_cell(a, n);
            const ModalPlant& p = cell.plant;
            const Eigen::MatrixXd a0 = p.a0().asDiagonal();
            Eigen::VectorXd want(2 * static_cast<Eigen::Index>(n));
            want << real_spectrum(a0 + p.b0() * cell.gains.K), real_spectrum(a0 - cell.gains.L * p.c0()), p.a1(),
                p.a1();
            const Eigen::VectorXd got = real_spectrum(cell.mats.F);
            EXPECT_LT((got - sorted(want)).cwiseAbs().maxCoeff(), 1e-7 * std::max(1.0, want.cwiseAbs().maxCoeff()))
                << to_string(a) << " N = " << n;
        }
    }
}

TEST(Assembly, OmegaPositiveAndBounded) {
    for (const Actuation a : {Actuation::Distributed, Actuation::Boundary}) {
        for (std::size_t n = 2; n <= 8; ++n) {
            const auto cell = fixtures::example_cell(a, n);
            const auto& m = cell.mats;
            const ModalPlant& p = cell.plant;
            const auto d = m.Omega.rows();
            EXPECT_GE(min_eig(m.Omega), -1e-10);
            double bound = std::max(1.0, 1.0 / p.lambdas[1]);
            if (a == Actuation::Boundary) bound = std::max(bound, p.lambdas[static_cast<Eigen::Index>(n - 1)] * p.lambdas[static_cast<Eigen::Index>(n - 1)]);
            EXPECT_GE(min_eig(2.0 * bound * Eigen::MatrixXd::Identity(d, d) - m.Omega), -1e-9 * bound);
            const double floor = std::min(1.0, 1.0 / p.lambdas[static_cast<Eigen::Index>(n - 1)]);
            EXPECT_GE(m.LambdaTilde.cwiseInverse().minCoeff(), floor * (1.0 - 1e-14));
        }
    }
}

TEST(Assembly, BoundaryInputDerivativeRow) {
    const auto cell = fixtures::example_cell(Actuation::Boundary, 3);
    ASSERT_EQ(cell.mats.E.size(), 10);
    EXPECT_EQ(cell.mats.E.tail(3).cwiseAbs().sum(), 0.0);
    EXPECT_NE(cell.mats.E.head(7).cwiseAbs().sum(), 0.0);

    GainSet zero = cell.gains;
    zero.K.setZero();
    const ClosedLoopMatrices m = assemble_boundary(cell.plant, zero);
    EXPECT_EQ(m.E.cwiseAbs().sum(), 0.0);
    EXPECT_THROW(assemble_distributed(cell.plant, cell.gains), AssemblyError);
    GainSet bad = cell.gains;
    bad.K = Eigen::RowVectorXd::Zero(2);
    EXPECT_THROW(assemble_boundary(cell.plant, bad), AssemblyError);
}

TEST(Lyapunov, ClosedFormExamples) {
    const Eigen::MatrixXd p1 = solve_lyapunov(-Eigen::MatrixXd::Identity(3, 3), 0.0);
    EXPECT_LT((p1 - 0.5 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(lyapunov_norm_diagnostic(-Eigen::MatrixXd::Identity(2, 2), 0.0), 0.5, 1e-14);
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2, 2);
    f(0, 0) = -1.0;
    f(1, 1) = -3.0;
    const Eigen::MatrixXd p2 = solve_lyapunov(f, 0.0);
    EXPECT_NEAR(p2(0, 0), 0.5, 1e-14);
    EXPECT_NEAR(p2(1, 1), 1.0 / 6.0, 1e-14);
    EXPECT_NEAR(p2(0, 1), 0.0, 1e-14);
    EXPECT_THROW(solve_lyapunov(f, 1.0), NoSolutionError);
}

TEST(Lyapunov, ExampleResidualAndBoundedNorm) {
    std::vector<double> norms;
    for (std::size_t n = 2; n <= 8; ++n) {
        const auto cell = fixtures::example_cell(Actuation::Distributed, n);
        const Eigen::MatrixXd& f = cell.mats.F;
        const Eigen::MatrixXd p = solve_lyapunov(f, 0.25);
        const auto d = f.rows();
        const Eigen::MatrixXd res = f.transpose() * p + p * f + 0.5 * p + Eigen::MatrixXd::Identity(d, d);
        EXPECT_LT(res.cwiseAbs().maxCoeff(), 1e-9 * p.norm());
        EXPECT_GT(min_eig(p), 0.0);
        norms.push_back(lyapunov_norm_diagnostic(f, 0.25));
    }
    EXPECT_LT(*std::max_element(norms.begin(), norms.end()) / *std::min_element(norms.begin(), norms.end()), 5.0);
}

TEST(Assembly, RescaleIsASimilarity) {
    const auto cell = fixtures::example_cell(Actuation::Boundary, 4);
    const Eigen::VectorXd t = balancing_scale(cell.mats);
    const ClosedLoopMatrices s = rescale(cell.mats, t);
    EXPECT_LT((real_spectrum(s.F) - real_spectrum(cell.mats.F)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(s.Omega.diagonal().maxCoeff(), 1.0 + 1e-12);
}
