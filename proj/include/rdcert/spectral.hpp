#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "rdcert/coefficients.hpp"
#include "rdcert/errors.hpp"
#include "rdcert/grid.hpp"
#include "rdcert/tridiagonal.hpp"

namespace rdcert {

namespace detail {

inline bool is_dirichlet(double theta) { return std::abs(std::sin(theta)) < 1e-14; }

// Fourth-order one-sided first derivatives at x = 0 and x = 1.
inline double left_derivative(const Eigen::VectorXd& f, double h) {
    return (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
}

inline double right_derivative(const Eigen::VectorXd& f, double h) {
    const Eigen::Index m = f.size();
    return (25.0 * f[m - 1] - 48.0 * f[m - 2] + 36.0 * f[m - 3] - 16.0 * f[m - 4] + 3.0 * f[m - 5]) /
           (12.0 * h);
}

}  // namespace detail

/// Conservative finite-volume discretization of A f = -(p f')' + q f with
/// cos(t1) f(0) - sin(t1) f'(0) = 0 and cos(t2) f(1) + sin(t2) f'(1) = 0.
///
/// Robin ends carry a half cell (weight h/2) whose outer flux is eliminated
/// through the boundary condition; Dirichlet ends are removed from the unknowns.
/// The result is W^{-1} S with S symmetric tridiagonal and W the trapezoid
/// weights restricted to the unknowns.
class SturmLiouvilleFV {
public:
    SturmLiouvilleFV(const Grid& grid, const CoefficientFunction& p, const Eigen::VectorXd& q,
                     double theta1, double theta2)
        : grid_(grid) {
        const std::size_t m = grid.size();
        const double h = grid.spacing();
        first_ = detail::is_dirichlet(theta1) ? 1 : 0;
        last_ = detail::is_dirichlet(theta2) ? m - 2 : m - 1;
        const auto n = static_cast<Eigen::Index>(last_ - first_ + 1);
        stiff_diag_ = Eigen::VectorXd::Zero(n);
        stiff_off_ = Eigen::VectorXd::Zero(n - 1);
        mass_ = Eigen::VectorXd::Zero(n);
        right_input_ = Eigen::VectorXd::Zero(n);

        for (Eigen::Index k = 0; k < n; ++k) {
            const std::size_t i = first_ + static_cast<std::size_t>(k);
            const bool left_end = (i == 0);
            const bool right_end = (i == m - 1);
            mass_[k] = (left_end || right_end) ? 0.5 * h : h;
            if (i > 0) stiff_diag_[k] += p(grid.node(i) - 0.5 * h) / h;
            if (i + 1 < m) stiff_diag_[k] += p(grid.node(i) + 0.5 * h) / h;
            if (left_end) stiff_diag_[k] += p(0.0) * std::cos(theta1) / std::sin(theta1);
            if (right_end) stiff_diag_[k] += p(1.0) * std::cos(theta2) / std::sin(theta2);
            stiff_diag_[k] += q[static_cast<Eigen::Index>(i)] * mass_[k];
            if (k + 1 < n) stiff_off_[k] = -p(grid.node(i) + 0.5 * h) / h;
        }
        // Nonhomogeneous right condition cos(t2) f(1) + sin(t2) f'(1) = u enters
        // as W^{-1} r u.
        if (detail::is_dirichlet(theta2)) {
            right_input_[n - 1] = p(1.0 - 0.5 * h) / h / std::cos(theta2);
        } else {
            right_input_[n - 1] = p(1.0) / std::sin(theta2);
        }
        right_dirichlet_ = detail::is_dirichlet(theta2);
        left_dirichlet_ = detail::is_dirichlet(theta1);
        cos_theta2_ = std::cos(theta2);
    }

    const Grid& grid() const noexcept { return grid_; }
    std::size_t first() const noexcept { return first_; }
    std::size_t last() const noexcept { return last_; }
    Eigen::Index unknowns() const noexcept { return mass_.size(); }
    const Eigen::VectorXd& stiffness_diagonal() const noexcept { return stiff_diag_; }
    const Eigen::VectorXd& stiffness_offdiagonal() const noexcept { return stiff_off_; }
    const Eigen::VectorXd& mass() const noexcept { return mass_; }
    const Eigen::VectorXd& right_input() const noexcept { return right_input_; }

    /// W^{-1/2} S W^{-1/2}.
    tridiag::Symmetric symmetrized() const {
        const Eigen::VectorXd s = mass_.cwiseSqrt().cwiseInverse();
        tridiag::Symmetric t;
        t.d = stiff_diag_.cwiseProduct(s).cwiseProduct(s);
        t.e = stiff_off_.cwiseProduct(s.head(s.size() - 1)).cwiseProduct(s.tail(s.size() - 1));
        return t;
    }

    /// A z on the unknowns (W^{-1} S z).
    Eigen::VectorXd apply(const Eigen::VectorXd& z) const {
        const Eigen::Index n = unknowns();
        Eigen::VectorXd out = stiff_diag_.cwiseProduct(z);
        out.head(n - 1) += stiff_off_.cwiseProduct(z.tail(n - 1));
        out.tail(n - 1) += stiff_off_.cwiseProduct(z.head(n - 1));
        return out.cwiseQuotient(mass_);
    }

    Eigen::VectorXd restrict(const Eigen::VectorXd& full) const {
        return full.segment(static_cast<Eigen::Index>(first_), unknowns());
    }

    /// Full-grid samples; Dirichlet nodes take the boundary value (right end
    /// value u / cos(t2) under boundary input u).
    Eigen::VectorXd extend(const Eigen::VectorXd& inner, double right_value_input = 0.0) const {
        Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid_.size()));
        full.segment(static_cast<Eigen::Index>(first_), unknowns()) = inner;
        if (right_dirichlet_) {
            full[full.size() - 1] = right_value_input / cos_theta2_;
        }
        return full;
    }

private:
    Grid grid_;
    std::size_t first_ = 0;
    std::size_t last_ = 0;
    bool left_dirichlet_ = false;
    bool right_dirichlet_ = false;
    double cos_theta2_ = 1.0;
    Eigen::VectorXd stiff_diag_;
    Eigen::VectorXd stiff_off_;
    Eigen::VectorXd mass_;
    Eigen::VectorXd right_input_;
};

struct BoundaryTraces {
    Eigen::VectorXd at0;        // phi_n(0)
    Eigen::VectorXd slope_at0;  // phi_n'(0)
    Eigen::VectorXd at1;        // phi_n(1)
    Eigen::VectorXd slope_at1;  // phi_n'(1)
};

struct BracketData {
    double p_min = 0.0;
    double p_max = 0.0;
    double q_max = 0.0;

    double lower(std::size_t n) const {
        const double k = static_cast<double>(n) - 1.0;
        return std::numbers::pi * std::numbers::pi * k * k * p_min;
    }
    double upper(std::size_t n) const {
        const double k = static_cast<double>(n);
        return std::numbers::pi * std::numbers::pi * k * k * p_max + q_max;
    }
};

/// Unit eigenpairs of the Sturm-Liouville operator sampled on a grid.
struct EigenBasis {
    Grid grid{3};
    std::size_t n_max = 0;
    Eigen::VectorXd lambdas;  // ascending
    Eigen::MatrixXd phis;     // grid.size() x n_max, column n-1 holds phi_n
    BoundaryTraces traces;
    BracketData bracket;
    double theta1 = 0.0;
    double theta2 = 0.0;

    double lambda(std::size_t n) const { return lambdas[static_cast<Eigen::Index>(n - 1)]; }
    Eigen::VectorXd phi(std::size_t n) const { return phis.col(static_cast<Eigen::Index>(n - 1)); }
};

inline constexpr double kBracketTolerance = 1e-3;

inline EigenBasis eigendecompose(const PlantCoefficients& coeffs, const Decomposition& dec, const Grid& grid,
                                 std::size_t n_max) {
    if (n_max == 0) {
        throw RangeError("n_max must be positive");
    }
    if (grid.size() < 10 * n_max) {
        throw ResolutionError("grid of " + std::to_string(grid.size()) + " nodes is too coarse for " +
                              std::to_string(n_max) + " modes; use at least " + std::to_string(10 * n_max) +
                              " nodes");
    }
    const Eigen::VectorXd p = coeffs.p.sample(grid);
    const Eigen::VectorXd q = dec.q.sample(grid);
    if (p.minCoeff() <= 0.0) {
        throw CoefficientSignError("diffusion p must be strictly positive on the grid");
    }
    if (q.minCoeff() <= 0.0) {
        throw CoefficientSignError("reaction q must be strictly positive on the grid");
    }

    const SturmLiouvilleFV op(grid, coeffs.p, q, coeffs.theta1, coeffs.theta2);
    const auto pairs = tridiag::smallest_eigenpairs(op.symmetrized(), static_cast<Eigen::Index>(n_max));
    const Eigen::VectorXd inv_sqrt_mass = op.mass().cwiseSqrt().cwiseInverse();

    EigenBasis basis{grid};
    basis.n_max = n_max;
    basis.theta1 = coeffs.theta1;
    basis.theta2 = coeffs.theta2;
    basis.lambdas = pairs.values;
    basis.bracket = {p.minCoeff(), p.maxCoeff(), q.maxCoeff()};
    const auto nm = static_cast<Eigen::Index>(n_max);
    basis.phis.resize(static_cast<Eigen::Index>(grid.size()), nm);
    basis.traces.at0.resize(nm);
    basis.traces.slope_at0.resize(nm);
    basis.traces.at1.resize(nm);
    basis.traces.slope_at1.resize(nm);

    const double h = grid.spacing();
    for (Eigen::Index k = 0; k < nm; ++k) {
        Eigen::VectorXd phi = op.extend(pairs.vectors.col(k).cwiseProduct(inv_sqrt_mass));
        phi /= std::sqrt(grid.norm_sq(phi));
        const double sup = phi.cwiseAbs().maxCoeff();
        double d0 = detail::left_derivative(phi, h);
        if (std::abs(phi[0]) > 1e-8 * sup ? phi[0] < 0.0 : d0 < 0.0) {
            phi = -phi;
            d0 = -d0;
        }
        basis.phis.col(k) = phi;
        basis.traces.at0[k] = phi[0];
        basis.traces.slope_at0[k] = d0;
        basis.traces.at1[k] = phi[phi.size() - 1];
        basis.traces.slope_at1[k] = detail::right_derivative(phi, h);
    }

    for (std::size_t n = 1; n <= n_max; ++n) {
        const double lam = basis.lambda(n);
        const double lo = basis.bracket.lower(n);
        const double hi = basis.bracket.upper(n);
        if (lam < lo * (1.0 - kBracketTolerance) || lam > hi * (1.0 + kBracketTolerance) || lam < 0.0) {
            throw ResolutionError("eigenvalue " + std::to_string(n) + " = " + std::to_string(lam) +
                                  " violates the bracket [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                  "]; increase the grid size");
        }
        if (n > 1 && !(lam > basis.lambda(n - 1))) {
            throw ResolutionError("eigenvalues are not strictly increasing at n = " + std::to_string(n));
        }
    }
    return basis;
}

/// <f, phi_k> for k = 1..n by trapezoid quadrature.
inline Eigen::VectorXd project(const Eigen::VectorXd& f, const EigenBasis& basis, std::size_t n) {
    if (n > basis.n_max) {
        throw RangeError("projection onto " + std::to_string(n) + " modes exceeds n_max = " +
                         std::to_string(basis.n_max));
    }
    if (static_cast<std::size_t>(f.size()) != basis.grid.size()) {
        throw RangeError("grid function size does not match the basis grid");
    }
    const Eigen::VectorXd wf = basis.grid.quad_weights().cwiseProduct(f);
    return basis.phis.leftCols(static_cast<Eigen::Index>(n)).transpose() * wf;
}

/// ||R_n f||^2 in Parseval form: max(0, ||f||^2 - sum_{k<=n} <f, phi_k>^2).
inline double residual_norm_sq(const Eigen::VectorXd& f, const EigenBasis& basis, std::size_t n) {
    const Eigen::VectorXd c = project(f, basis, n);
    return std::max(0.0, basis.grid.norm_sq(f) - c.squaredNorm());
}

/// Conservative estimate of sum_{k > n} phi_k(0)^2 / lambda_k: the computed
/// modes up to n_max plus sup|phi_k(0)|^2 / (pi^2 p_min) * sum_{j >= n_max} 1/j^2,
/// using lambda_k >= pi^2 (k-1)^2 p_min beyond n_max.
inline double boundary_tail_sum(const EigenBasis& basis, std::size_t n) {
    if (n < 1 || n >= basis.n_max) {
        throw RangeError("tail sum from mode " + std::to_string(n + 1) + " needs n in [1, n_max), n_max = " +
                         std::to_string(basis.n_max));
    }
    if (!(basis.lambda(n + 1) > 0.0)) {
        throw RangeError("tail sum needs lambda_{n+1} > 0");
    }
    double sum = 0.0;
    for (std::size_t k = n + 1; k <= basis.n_max; ++k) {
        const double t = basis.traces.at0[static_cast<Eigen::Index>(k - 1)];
        sum += t * t / basis.lambda(k);
    }
    const double sup = basis.traces.at0.cwiseAbs().maxCoeff();
    const double m = static_cast<double>(basis.n_max);
    // sum_{j >= m} 1/j^2 <= 1/m^2 + 1/m
    const double zeta_tail = 1.0 / (m * m) + 1.0 / m;
    sum += sup * sup * zeta_tail / (std::numbers::pi * std::numbers::pi * basis.bracket.p_min);
    return sum;
}

/// sum_{k <= n_max} lambda_k <f, phi_k>^2, the truncated <A f, f>.
inline double quadratic_form(const Eigen::VectorXd& f, const EigenBasis& basis) {
    const Eigen::VectorXd c = project(f, basis, basis.n_max);
    return c.cwiseProduct(c).dot(basis.lambdas);
}

}  // namespace rdcert
