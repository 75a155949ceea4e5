#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "rdcert/spectral.hpp"

using namespace rdcert;

namespace {

const double pi = std::numbers::pi;

const EigenBasis& nd() {
    static const EigenBasis b = fixtures::heat_basis();
    return b;
}

// Root of sin(mu) + mu tan(theta) cos(mu) on (pi/2, pi) by bisection.
double robin_root(double theta) {
    auto h = [theta](double mu) { return std::sin(mu) + mu * std::tan(theta) * std::cos(mu); };
    double lo = pi / 2.0;
    double hi = pi;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (h(lo) * h(mid) <= 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

Eigen::VectorXd sampled(const Grid& g, double (*f)(double)) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) v[static_cast<Eigen::Index>(i)] = f(g.node(i));
    return v;
}

double bump(double x) { return std::pow(1.0 - x * x, 2); }

}  // namespace

TEST(Eigendecompose, NeumannDirichletClosedForm) {
    const EigenBasis& b = nd();
    for (std::size_t n = 1; n <= 10; ++n) {
        const double mu = fixtures::nd_mu(n);
        const auto k = static_cast<Eigen::Index>(n - 1);
        EXPECT_NEAR(b.lambda(n) / (mu * mu), 1.0, 1e-5) << "n = " << n;
        EXPECT_NEAR(b.traces.at0[k] / std::sqrt(2.0), 1.0, 1e-4) << "n = " << n;
        const double slope = -std::sqrt(2.0) * mu * std::sin(mu);
        EXPECT_NEAR(b.traces.slope_at1[k] / slope, 1.0, 1e-4) << "n = " << n;
        double sup = 0.0;
        for (std::size_t i = 0; i < b.grid.size(); i += 10) {
            sup = std::max(sup, std::abs(b.phis(static_cast<Eigen::Index>(i), k) -
                                         std::sqrt(2.0) * std::cos(mu * b.grid.node(i))));
        }
        EXPECT_LT(sup, 1e-4) << "n = " << n;
    }
    EXPECT_NEAR(b.lambda(1), 2.4674, 1e-4);
}

TEST(Eigendecompose, ConstantPotentialShiftsEveryEigenvalueByOne) {
    const EigenBasis shifted = fixtures::heat_basis(4001, 20, pi / 2.0, 1.0);
    for (std::size_t n = 1; n <= 20; ++n) {
        // the solver resolves eigenvalues to roundoff of the largest one, not of each one
        EXPECT_NEAR(shifted.lambda(n) - nd().lambda(n), 1.0, 1e-7);
        EXPECT_LT((shifted.phi(n) - nd().phi(n)).cwiseAbs().maxCoeff(), 1e-9);
    }
    EXPECT_NEAR(shifted.lambda(1), 3.4674, 1e-4);
}

TEST(Eigendecompose, RobinLeftEndMatchesTranscendentalRoot) {
    const double mu = robin_root(pi / 5.0);
    EXPECT_NEAR(mu, 2.14, 0.01);
    const EigenBasis b = fixtures::heat_basis(4001, 20, pi / 5.0);
    EXPECT_NEAR(b.lambda(1) / (mu * mu), 1.0, 1e-6);
    EXPECT_NEAR(b.lambda(1), 4.6, 0.05);
}

TEST(Eigendecompose, OrthonormalAndBracketedOnExample) {
    const EigenBasis& b = fixtures::example_basis();
    const Eigen::MatrixXd gram = b.phis.transpose() * b.grid.quad_weights().asDiagonal() * b.phis;
    const auto n = static_cast<Eigen::Index>(b.n_max);
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-8);
    for (std::size_t k = 1; k <= b.n_max; ++k) {
        const double kk = static_cast<double>(k);
        EXPECT_GE(b.lambda(k), pi * pi * (kk - 1.0) * (kk - 1.0) * 1.0 * (1.0 - kBracketTolerance));
        EXPECT_LE(b.lambda(k), (pi * pi * kk * kk + 1.0) * (1.0 + kBracketTolerance));
    }
}

TEST(Eigendecompose, RandomProfilesStayOrthonormalAndBracketed) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        // p = 0.5 + 1.5 s(x) with s a convex combination of 1, x, x^2: values in [0.5, 2]
        const double w0 = u(rng), w1 = u(rng), w2 = u(rng), ws = w0 + w1 + w2;
        PlantCoefficients c;
        c.p = CoefficientFunction::polynomial({0.5 + 1.5 * w0 / ws, 1.5 * w1 / ws, 1.5 * w2 / ws});
        c.theta1 = 0.1 + (pi / 2.0 - 0.1) * u(rng);
        c.theta2 = (pi / 2.0) * u(rng);
        Decomposition d;
        d.q = CoefficientFunction::polynomial({0.1 + 2.0 * u(rng), 0.9 * u(rng)});
        const Grid g(2001);
        const EigenBasis b = eigendecompose(c, d, g, 40);
        const Eigen::MatrixXd gram = b.phis.transpose() * g.quad_weights().asDiagonal() * b.phis;
        EXPECT_LT((gram - Eigen::MatrixXd::Identity(40, 40)).cwiseAbs().maxCoeff(), 1e-8);
        const Eigen::VectorXd ps = c.p.sample(g);
        const Eigen::VectorXd qs = d.q.sample(g);
        for (std::size_t k = 1; k <= 40; ++k) {
            const double kk = static_cast<double>(k);
            EXPECT_GE(b.lambda(k), pi * pi * (kk - 1) * (kk - 1) * ps.minCoeff() * (1.0 - 1e-3));
            EXPECT_LE(b.lambda(k), (pi * pi * kk * kk * ps.maxCoeff() + qs.maxCoeff()) * (1.0 + 1e-3));
        }
    }
}

TEST(Eigendecompose, SignConventionAndTraceAsymptotics) {
    const EigenBasis& b = fixtures::example_basis();
    for (std::size_t k = 1; k <= b.n_max; ++k) {
        const auto i = static_cast<Eigen::Index>(k - 1);
        EXPECT_GT(b.traces.at0[i], 0.0);
        EXPECT_LT(std::abs(b.traces.at0[i]), 2.0);
        EXPECT_LT(std::abs(b.traces.slope_at0[i]) / std::sqrt(b.lambda(k)), 2.0);
    }
    const EigenBasis dir = fixtures::heat_basis(401, 10, 0.0);
    for (Eigen::Index i = 0; i < 10; ++i) EXPECT_GT(dir.traces.slope_at0[i], 0.0);
}

TEST(Eigendecompose, SecondOrderOrBetterUnderRefinement) {
    double err[3][3];
    const std::size_t sizes[3] = {41, 81, 161};
    for (int s = 0; s < 3; ++s) {
        const EigenBasis b = fixtures::heat_basis(sizes[s], 4);
        for (std::size_t n = 1; n <= 3; ++n) {
            const double mu = fixtures::nd_mu(n);
            err[s][n - 1] = std::abs(b.lambda(n) - mu * mu);
        }
    }
    for (int n = 0; n < 3; ++n) {
        EXPECT_GE(std::log2(err[0][n] / err[1][n]), 1.8) << "mode " << n + 1;
        EXPECT_GE(std::log2(err[1][n] / err[2][n]), 1.8) << "mode " << n + 1;
    }
}

TEST(Eigendecompose, RejectsBadInputs) {
    PlantCoefficients c = fixtures::heat_plant();
    c.p = CoefficientFunction::polynomial({1.0, -2.0});
    EXPECT_THROW(eigendecompose(c, fixtures::heat_decomposition(1.0), Grid(401), 10), CoefficientSignError);
    EXPECT_THROW(eigendecompose(fixtures::heat_plant(), fixtures::heat_decomposition(0.0), Grid(401), 10),
                 CoefficientSignError);
    EXPECT_THROW(eigendecompose(fixtures::heat_plant(), fixtures::heat_decomposition(1.0), Grid(101), 20),
                 ResolutionError);
    EXPECT_THROW(eigendecompose(fixtures::heat_plant(), fixtures::heat_decomposition(1.0), Grid(101), 0),
                 RangeError);
}

TEST(Project, Examples) {
    const EigenBasis& b = nd();
    const Eigen::VectorXd c1 = project(b.phi(1), b, 5);
    EXPECT_NEAR(c1[0], 1.0, 1e-10);
    EXPECT_LT(c1.tail(4).cwiseAbs().maxCoeff(), 1e-10);

    const Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(b.grid.size()));
    EXPECT_NEAR(project(one, b, 1)[0], 2.0 * std::sqrt(2.0) / pi, 1e-6);

    const Eigen::VectorXd c = project(2.0 * b.phi(1) + 3.0 * b.phi(2), b, 4);
    EXPECT_NEAR(c[0], 2.0, 1e-8);
    EXPECT_NEAR(c[1], 3.0, 1e-8);
    EXPECT_LT(c.tail(2).cwiseAbs().maxCoeff(), 1e-8);

    EXPECT_THROW(project(one, b, b.n_max + 1), RangeError);
}

TEST(ResidualNormSq, Examples) {
    const EigenBasis& b = nd();
    EXPECT_NEAR(residual_norm_sq(b.phi(1), b, 1), 0.0, 1e-10);
    EXPECT_NEAR(residual_norm_sq(b.phi(2), b, 1), 1.0, 1e-10);
}

TEST(ResidualNormSq, InputWindowAgainstFineQuadrature) {
    const EigenBasis& b = fixtures::example_basis();
    const Eigen::VectorXd shape = fixtures::example_shape().sample(b.grid);
    const double got = residual_norm_sq(shape, b, 2);

    // analytic norm of cos(x) on [0.1, 0.3], projections by midpoint rule on a finer basis
    const double norm_sq = 0.1 + (std::sin(0.6) - std::sin(0.2)) / 4.0;
    const EigenBasis fine =
        eigendecompose(fixtures::example_plant(), fixtures::example_decomposition(), Grid(16001), 10);
    double captured = 0.0;
    for (std::size_t k = 1; k <= 2; ++k) {
        const Eigen::VectorXd phi = fine.phi(k);
        const double h = fine.grid.spacing();
        double ck = 0.0;
        for (std::size_t i = 0; i + 1 < fine.grid.size(); ++i) {
            const double xm = fine.grid.node(i) + 0.5 * h;
            if (xm < 0.1 || xm > 0.3) continue;
            const auto j = static_cast<Eigen::Index>(i);
            ck += h * std::cos(xm) * 0.5 * (phi[j] + phi[j + 1]);
        }
        captured += ck * ck;
    }
    EXPECT_NEAR(got, norm_sq - captured, 2e-3 * (norm_sq - captured));
}

TEST(ResidualNormSq, ParsevalMonotoneAndVanishing) {
    const EigenBasis b = fixtures::heat_basis(2001, 120, pi / 2.0, 1.0);
    const Eigen::VectorXd f = sampled(b.grid, bump);
    double prev = b.grid.norm_sq(f);
    for (std::size_t n = 1; n <= b.n_max; ++n) {
        const double r = residual_norm_sq(f, b, n);
        EXPECT_LE(r, prev + 1e-15);
        prev = r;
    }
    EXPECT_LT(prev, 1e-8 * b.grid.norm_sq(f));
}

TEST(BoundaryTailSum, NeumannDirichletSeries) {
    const EigenBasis& b = nd();
    // sum_k 2 / mu_k^2 = 1, so the tail after N modes is 1 - sum_{k <= N} 2 / mu_k^2
    auto exact = [](std::size_t n) {
        double s = 1.0;
        for (std::size_t k = 1; k <= n; ++k) s -= 2.0 / std::pow(fixtures::nd_mu(k), 2);
        return s;
    };
    EXPECT_NEAR(exact(1), 0.1894, 1e-4);
    EXPECT_NEAR(exact(3), 0.0669, 1e-4);
    for (const std::size_t n : {1u, 3u}) {
        const double m = boundary_tail_sum(b, n);
        EXPECT_GE(m, exact(n) - 1e-6);  // conservative
        EXPECT_LT(m, exact(n) + 3e-3);  // remainder bound is ~1.7e-3 at n_max = 120
    }
    EXPECT_THROW(boundary_tail_sum(b, b.n_max), RangeError);
}

TEST(BoundaryTailSum, DirichletLeftEndGivesZero) {
    const EigenBasis b = fixtures::heat_basis(401, 20, 0.0, 1.0);
    EXPECT_EQ(boundary_tail_sum(b, 2), 0.0);
}

TEST(QuadraticForm, Examples) {
    const EigenBasis& b = nd();
    EXPECT_NEAR(quadratic_form(b.phi(1), b), b.lambda(1), 1e-9 * b.lambda(1));
    EXPECT_NEAR(quadratic_form(b.phi(1) + b.phi(2), b), b.lambda(1) + b.lambda(2), 1e-9 * b.lambda(2));

    // (1 - x^2)^2 with p = q = 1: int f'^2 + f^2 = 128/105 + 128/315
    const EigenBasis b1 = fixtures::heat_basis(2001, 120, pi / 2.0, 1.0);
    const double oracle = 512.0 / 315.0;
    EXPECT_NEAR(quadratic_form(sampled(b1.grid, bump), b1), oracle, 0.01 * oracle);
}

TEST(Tridiagonal, SturmCountWhenShiftHitsTheDiagonal) {
    // second-difference matrix of order 8, eigenvalues 2 - 2 cos(k pi / 9); a
    // shift of 2 makes the first pivot exactly zero without being an eigenvalue
    tridiag::Symmetric t;
    t.d = Eigen::VectorXd::Constant(8, 2.0);
    t.e = Eigen::VectorXd::Constant(7, -1.0);
    EXPECT_EQ(tridiag::count_below(t, 2.0), 4);
    for (Eigen::Index k = 0; k < 8; ++k) {
        const double exact = 2.0 - 2.0 * std::cos(static_cast<double>(k + 1) * pi / 9.0);
        EXPECT_NEAR(tridiag::kth_eigenvalue(t, k), exact, 1e-12);
    }
}
