#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "rdcert/coefficients.hpp"
#include "rdcert/errors.hpp"
#include "rdcert/placement.hpp"
#include "rdcert/spectral.hpp"

namespace rdcert {

enum class Actuation { Distributed, Boundary };

inline std::string to_string(Actuation a) { return a == Actuation::Distributed ? "distributed" : "boundary"; }

/// Projected plant seen by a controller with N0 controlled modes and an
/// observer of order N.
struct ModalPlant {
    Actuation actuation = Actuation::Distributed;
    std::size_t N0 = 1;
    std::size_t N = 2;
    Eigen::VectorXd lambdas;  // lambda_1..lambda_{N+1}
    double qc = 0.0;
    Eigen::VectorXd b;         // b_n, n <= N (input shape, or -x^2/(cos t2 + 2 sin t2) when boundary)
    Eigen::VectorXd a;         // a_n, boundary only
    Eigen::VectorXd beta;      // beta_n by the trace formula, boundary only
    Eigen::VectorXd c;         // phi_n(0), n <= N
    double residual_b_sq = 0.0;  // ||R_N b||^2
    double residual_a_sq = 0.0;  // ||R_N a||^2, boundary only
    double m_phi = 0.0;
    double beta_identity_error = 0.0;  // max relative mismatch of a_n + (-lambda_n + qc) b_n

    double lambda_next() const { return lambdas[static_cast<Eigen::Index>(N)]; }

    Eigen::VectorXd a0() const {
        return (-lambdas.head(static_cast<Eigen::Index>(N0))).array() + qc;
    }
    Eigen::VectorXd a1() const {
        return (-lambdas.segment(static_cast<Eigen::Index>(N0), static_cast<Eigen::Index>(N - N0))).array() + qc;
    }
    /// Input column of the controlled modes: B0 or the trace coefficients beta.
    Eigen::VectorXd b0() const {
        const auto n0 = static_cast<Eigen::Index>(N0);
        return actuation == Actuation::Distributed ? Eigen::VectorXd(b.head(n0)) : Eigen::VectorXd(beta.head(n0));
    }
    Eigen::RowVectorXd c0() const { return c.head(static_cast<Eigen::Index>(N0)).transpose(); }
};

inline constexpr double kBetaIdentityTolerance = 1e-4;

/// Boundary lifting profiles a(x), b(x) of the lifting w = z - b(x) u.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> boundary_lifting(const PlantCoefficients& coeffs,
                                                                    const Grid& grid) {
    const double denom = std::cos(coeffs.theta2) + 2.0 * std::sin(coeffs.theta2);
    if (!(denom > 0.0)) {
        throw ContractError("cos(theta2) + 2 sin(theta2) must be positive");
    }
    const Eigen::VectorXd x = grid.nodes();
    const Eigen::VectorXd p = coeffs.p.sample(grid);
    const Eigen::VectorXd dp = coeffs.p.sample_derivative(grid);
    const Eigen::VectorXd net = coeffs.net_reaction(grid);
    const Eigen::VectorXd x2 = x.cwiseProduct(x);
    const Eigen::VectorXd a = (2.0 * p + 2.0 * x.cwiseProduct(dp) - x2.cwiseProduct(net)) / denom;
    const Eigen::VectorXd b = -x2 / denom;
    return {a, b};
}

inline ModalPlant build_modal_plant(const EigenBasis& basis, const PlantCoefficients& coeffs,
                                    const Decomposition& dec, Actuation actuation,
                                    const std::optional<CoefficientFunction>& shape, std::size_t n0,
                                    std::size_t n, double delta) {
    if (!(delta > 0.0)) throw ParameterError("decay rate delta must be positive");
    if (n0 < 1) throw ConfigurationError("N0 must be at least 1");
    if (n < n0 + 1) throw ConfigurationError("observer order N must satisfy N >= N0 + 1");
    if (basis.n_max < n + 2) {
        throw RangeError("basis holds " + std::to_string(basis.n_max) + " modes; N = " + std::to_string(n) +
                         " needs at least " + std::to_string(n + 2));
    }
    if (!(-basis.lambda(n0 + 1) + dec.qc < -delta)) {
        throw ConfigurationError("mode gap violated: -lambda_" + std::to_string(n0 + 1) + " + qc = " +
                                 std::to_string(-basis.lambda(n0 + 1) + dec.qc) + " is not below -delta = " +
                                 std::to_string(-delta) + "; increase N0");
    }

    ModalPlant plant;
    plant.actuation = actuation;
    plant.N0 = n0;
    plant.N = n;
    plant.qc = dec.qc;
    const auto ni = static_cast<Eigen::Index>(n);
    plant.lambdas = basis.lambdas.head(ni + 1);
    plant.c = basis.traces.at0.head(ni);
    plant.m_phi = boundary_tail_sum(basis, n);

    if (actuation == Actuation::Distributed) {
        if (!shape) throw ConfigurationError("distributed actuation needs an input shape b(x)");
        const Eigen::VectorXd bx = shape->sample(basis.grid);
        plant.b = project(bx, basis, n);
        plant.residual_b_sq = residual_norm_sq(bx, basis, n);
        const double scale = std::max(1e-300, std::sqrt(basis.grid.norm_sq(bx)));
        for (std::size_t k = 0; k < n0; ++k) {
            if (std::abs(plant.b[static_cast<Eigen::Index>(k)]) <= 1e-12 * scale) {
                throw UncontrollableModeError("b_" + std::to_string(k + 1) + " vanishes; mode is not controllable");
            }
        }
        return plant;
    }

    const auto [ax, bx] = boundary_lifting(coeffs, basis.grid);
    plant.a = project(ax, basis, n);
    plant.b = project(bx, basis, n);
    plant.residual_a_sq = residual_norm_sq(ax, basis, n);
    plant.residual_b_sq = residual_norm_sq(bx, basis, n);
    const double p1 = coeffs.p(1.0);
    const double c2 = std::cos(coeffs.theta2);
    const double s2 = std::sin(coeffs.theta2);
    plant.beta = p1 * (-c2 * basis.traces.slope_at1.head(ni) + s2 * basis.traces.at1.head(ni));
    const Eigen::VectorXd identity =
        plant.a + ((-plant.lambdas.head(ni)).array() + dec.qc).matrix().cwiseProduct(plant.b);
    for (Eigen::Index k = 0; k < ni; ++k) {
        const double rel = std::abs(identity[k] - plant.beta[k]) / std::max(std::abs(plant.beta[k]), 1e-12);
        plant.beta_identity_error = std::max(plant.beta_identity_error, rel);
    }
    if (plant.beta_identity_error > kBetaIdentityTolerance) {
        throw ResolutionError("trace formula and projection identity for beta_n disagree by " +
                              std::to_string(plant.beta_identity_error) + " (relative); increase the grid size");
    }
    return plant;
}

struct GainSet {
    Eigen::RowVectorXd K;
    Eigen::VectorXd L;
    double delta = 0.0;
    PoleList target_poles_state;
    PoleList target_poles_observer;
};

/// Checks both placed spectra lie strictly left of -delta.
inline void validate_gains(const ModalPlant& plant, const GainSet& gains) {
    const auto n0 = static_cast<Eigen::Index>(plant.N0);
    if (gains.K.size() != n0 || gains.L.size() != n0) {
        throw ParameterError("gain dimensions must equal N0 = " + std::to_string(plant.N0));
    }
    const Eigen::MatrixXd a0 = plant.a0().asDiagonal();
    const Eigen::MatrixXd state = a0 + plant.b0() * gains.K;
    const Eigen::MatrixXd obs = a0 - gains.L * plant.c0();
    for (const auto& ev : eigenvalues(state)) {
        if (!(ev.real() < -gains.delta)) {
            throw ParameterError("A0 + B0 K has an eigenvalue with real part " + std::to_string(ev.real()) +
                                 " not below -delta");
        }
    }
    for (const auto& ev : eigenvalues(obs)) {
        if (!(ev.real() < -gains.delta)) {
            throw ParameterError("A0 - L C0 has an eigenvalue with real part " + std::to_string(ev.real()) +
                                 " not below -delta");
        }
    }
}

/// Pole-placement design; empty target lists fall back to the default poles.
inline GainSet design_gains(const ModalPlant& plant, double delta, PoleList state = {}, PoleList observer = {}) {
    if (state.empty()) state = default_state_poles(delta, plant.N0);
    if (observer.empty()) observer = default_observer_poles(delta, plant.N0);
    GainSet g;
    g.delta = delta;
    g.K = place_single_input(plant.a0(), plant.b0(), state);
    g.L = place_observer(plant.a0(), plant.c0(), observer);
    g.target_poles_state = std::move(state);
    g.target_poles_observer = std::move(observer);
    validate_gains(plant, g);
    return g;
}

/// Explicit gains; the recorded targets are the realized spectra.
inline GainSet explicit_gains(const ModalPlant& plant, double delta, Eigen::RowVectorXd k, Eigen::VectorXd l) {
    GainSet g;
    g.delta = delta;
    g.K = std::move(k);
    g.L = std::move(l);
    if (g.K.size() != static_cast<Eigen::Index>(plant.N0) || g.L.size() != static_cast<Eigen::Index>(plant.N0)) {
        throw ParameterError("gain dimensions must equal N0 = " + std::to_string(plant.N0));
    }
    const Eigen::MatrixXd a0 = plant.a0().asDiagonal();
    g.target_poles_state = eigenvalues(a0 + plant.b0() * g.K);
    g.target_poles_observer = eigenvalues(a0 - g.L * plant.c0());
    validate_gains(plant, g);
    return g;
}

struct ClosedLoopMatrices {
    Actuation actuation = Actuation::Distributed;
    std::size_t N0 = 0;
    std::size_t N = 0;
    Eigen::MatrixXd F;
    Eigen::MatrixXd G;
    Eigen::VectorXd Lscript;
    Eigen::RowVectorXd Ktilde;
    Eigen::MatrixXd Omega;
    Eigen::VectorXd LambdaTilde;  // diagonal of diag(I, Lambda)
    Eigen::RowVectorXd E;         // boundary only, width 3N + 1
};

namespace detail {

inline ClosedLoopMatrices assemble_common(const ModalPlant& plant, const GainSet& gains, const Eigen::VectorXd& b0,
                                          const Eigen::VectorXd& b1) {
    const auto n0 = static_cast<Eigen::Index>(plant.N0);
    const auto n = static_cast<Eigen::Index>(plant.N);
    const Eigen::Index n1 = n - n0;
    if (gains.K.size() != n0 || gains.L.size() != n0 || b0.size() != n0 || b1.size() != n1 ||
        plant.c.size() != n || plant.lambdas.size() < n + 1) {
        throw AssemblyError("dimension mismatch between plant (N0 = " + std::to_string(n0) + ", N = " +
                            std::to_string(n) + ") and gains");
    }
    const Eigen::MatrixXd a0 = plant.a0().asDiagonal();
    const Eigen::MatrixXd a1 = plant.a1().asDiagonal();
    const Eigen::VectorXd lam1 = plant.lambdas.segment(n0, n1);
    const Eigen::RowVectorXd c0 = plant.c0();
    const Eigen::RowVectorXd c1 = plant.c.segment(n0, n1).cwiseQuotient(lam1.cwiseSqrt()).transpose();

    ClosedLoopMatrices m;
    m.N0 = plant.N0;
    m.N = plant.N;
    m.F = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    m.F.block(0, 0, n0, n0) = a0 + b0 * gains.K;
    m.F.block(0, n0, n0, n0) = gains.L * c0;
    m.F.block(0, 2 * n0 + n1, n0, n1) = gains.L * c1;
    m.F.block(n0, n0, n0, n0) = a0 - gains.L * c0;
    m.F.block(n0, 2 * n0 + n1, n0, n1) = -gains.L * c1;
    m.F.block(2 * n0, 0, n1, n0) = b1 * gains.K;
    m.F.block(2 * n0, 2 * n0, n1, n1) = a1;
    m.F.block(2 * n0 + n1, 2 * n0 + n1, n1, n1) = a1;

    m.G = Eigen::MatrixXd::Zero(2 * n, n);
    m.G.block(n0, 0, n0, n0).setIdentity();
    m.G.block(2 * n0 + n1, n0, n1, n1).setIdentity();

    m.Lscript = Eigen::VectorXd::Zero(2 * n);
    m.Lscript.head(n0) = gains.L;
    m.Lscript.segment(n0, n0) = -gains.L;

    m.Ktilde = Eigen::RowVectorXd::Zero(2 * n);
    m.Ktilde.head(n0) = gains.K;

    m.LambdaTilde = Eigen::VectorXd::Ones(n);
    m.LambdaTilde.tail(n1) = lam1;

    m.Omega = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n0; ++i) {
        m.Omega(i, i) = 1.0;
        m.Omega(i, n0 + i) = 1.0;
        m.Omega(n0 + i, i) = 1.0;
        m.Omega(n0 + i, n0 + i) = 1.0;
    }
    return m;
}

}  // namespace detail

inline ClosedLoopMatrices assemble_distributed(const ModalPlant& plant, const GainSet& gains) {
    if (plant.actuation != Actuation::Distributed) {
        throw AssemblyError("assemble_distributed needs a distributed-actuation plant");
    }
    const auto n0 = static_cast<Eigen::Index>(plant.N0);
    const auto n1 = static_cast<Eigen::Index>(plant.N - plant.N0);
    if (plant.b.size() != n0 + n1) throw AssemblyError("input coefficient vector has the wrong size");
    ClosedLoopMatrices m = detail::assemble_common(plant, gains, plant.b.head(n0), plant.b.tail(n1));
    m.actuation = Actuation::Distributed;
    const Eigen::VectorXd lam1 = plant.lambdas.segment(n0, n1);
    for (Eigen::Index i = 0; i < n1; ++i) {
        const Eigen::Index r = 2 * n0 + i;
        const Eigen::Index s = 2 * n0 + n1 + i;
        m.Omega(r, r) = 1.0;
        m.Omega(r, s) = 1.0 / std::sqrt(lam1[i]);
        m.Omega(s, r) = 1.0 / std::sqrt(lam1[i]);
        m.Omega(s, s) = 1.0 / lam1[i];
    }
    return m;
}

inline ClosedLoopMatrices assemble_boundary(const ModalPlant& plant, const GainSet& gains) {
    if (plant.actuation != Actuation::Boundary) {
        throw AssemblyError("assemble_boundary needs a boundary-actuation plant");
    }
    const auto n0 = static_cast<Eigen::Index>(plant.N0);
    const auto n = static_cast<Eigen::Index>(plant.N);
    const Eigen::Index n1 = n - n0;
    if (plant.beta.size() != n) throw AssemblyError("trace coefficient vector has the wrong size");
    const Eigen::VectorXd lam1 = plant.lambdas.segment(n0, n1);
    const Eigen::VectorXd b1 = plant.beta.tail(n1).cwiseQuotient(lam1);
    ClosedLoopMatrices m = detail::assemble_common(plant, gains, plant.beta.head(n0), b1);
    m.actuation = Actuation::Boundary;
    for (Eigen::Index i = 0; i < n1; ++i) {
        const Eigen::Index r = 2 * n0 + i;
        const Eigen::Index s = 2 * n0 + n1 + i;
        m.Omega(r, r) = lam1[i] * lam1[i];
        m.Omega(r, s) = std::sqrt(lam1[i]);
        m.Omega(s, r) = std::sqrt(lam1[i]);
        m.Omega(s, s) = 1.0 / lam1[i];
    }
    // v = K dZhat/dt = E col(X, zeta, R)
    Eigen::MatrixXd top = Eigen::MatrixXd::Zero(n0, 3 * n + 1);
    top.leftCols(2 * n) = m.F.topRows(n0);
    top.col(2 * n) = gains.L;
    m.E = gains.K * top;
    return m;
}

inline ClosedLoopMatrices assemble(const ModalPlant& plant, const GainSet& gains) {
    return plant.actuation == Actuation::Distributed ? assemble_distributed(plant, gains)
                                                     : assemble_boundary(plant, gains);
}

/// Same model in coordinates Y with X = diag(t) Y: F -> T^{-1} F T, Omega -> T Omega T,
/// and so on. A certificate P' in Y coordinates maps back to P = T^{-1} P' T^{-1}.
inline ClosedLoopMatrices rescale(const ClosedLoopMatrices& m, const Eigen::VectorXd& t) {
    if (t.size() != m.F.rows()) throw AssemblyError("scaling vector has the wrong size");
    const Eigen::VectorXd ti = t.cwiseInverse();
    ClosedLoopMatrices s = m;
    s.F = ti.asDiagonal() * m.F * t.asDiagonal();
    s.G = ti.asDiagonal() * m.G;
    s.Lscript = ti.cwiseProduct(m.Lscript);
    s.Ktilde = m.Ktilde.cwiseProduct(t.transpose());
    s.Omega = t.asDiagonal() * m.Omega * t.asDiagonal();
    if (m.E.size() > 0) s.E.head(t.size()) = m.E.head(t.size()).cwiseProduct(t.transpose());
    return s;
}

/// Diagonal scaling 1 / sqrt(max(1, Omega_ii)); it undoes the 1/lambda_n
/// scaling of the boundary-case states, whose Omega entries reach lambda_N^2.
inline Eigen::VectorXd balancing_scale(const ClosedLoopMatrices& m) {
    return m.Omega.diagonal().cwiseMax(1.0).cwiseSqrt().cwiseInverse();
}

/// Solves F^T P + P F + 2 delta P = -I through the vectorized linear system.
inline Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& f, double delta) {
    const Eigen::Index n = f.rows();
    for (const auto& ev : eigenvalues(f)) {
        if (!(ev.real() + delta < 0.0)) {
            throw NoSolutionError("F + delta I is not Hurwitz (eigenvalue real part " +
                                  std::to_string(ev.real() + delta) + ")");
        }
    }
    const Eigen::MatrixXd shifted = f + delta * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n * n, n * n);
    // vec(F^T P + P F) = (I kron F^T + F^T kron I) vec(P), column-major vec
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            big.block(i * n, j * n, n, n) += id(i, j) * shifted.transpose();
            big.block(i * n, j * n, n, n) += shifted(j, i) * id;
        }
    }
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(id.data(), n * n);
    const Eigen::VectorXd sol = big.partialPivLu().solve(rhs);
    Eigen::MatrixXd p = Eigen::Map<const Eigen::MatrixXd>(sol.data(), n, n);
    return 0.5 * (p + p.transpose());
}

/// Spectral norm of the Lyapunov solution above.
inline double lyapunov_norm_diagnostic(const Eigen::MatrixXd& f, double delta) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(solve_lyapunov(f, delta), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace rdcert
