#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rdcert/errors.hpp"
#include "rdcert/synthesis.hpp"

namespace rdcert {

enum class Theorem { Two, Three };

inline std::string to_string(Theorem t) { return t == Theorem::Two ? "thm2" : "thm3"; }

inline Theorem theorem_for(Actuation a) { return a == Actuation::Distributed ? Theorem::Two : Theorem::Three; }

/// Lower bound on each alpha: 1 for Theorem 2, 3/2 for Theorem 3.
inline double alpha_bound(Theorem t) { return t == Theorem::Two ? 1.0 : 1.5; }

inline constexpr double kStrictOffset = 1e-6;

/// Decision vector: upper triangle of P (row-major, i <= j), then the alphas, then beta.
class VariableLayout {
public:
    VariableLayout() = default;
    VariableLayout(Eigen::Index p_dim, Eigen::Index n_alpha) : p_dim_(p_dim), n_alpha_(n_alpha) {}

    Eigen::Index p_dim() const noexcept { return p_dim_; }
    Eigen::Index n_alpha() const noexcept { return n_alpha_; }
    Eigen::Index p_count() const noexcept { return p_dim_ * (p_dim_ + 1) / 2; }
    Eigen::Index count() const noexcept { return p_count() + n_alpha_ + 1; }

    Eigen::Index p_var(Eigen::Index i, Eigen::Index j) const {
        if (i > j) std::swap(i, j);
        return i * p_dim_ - i * (i - 1) / 2 + (j - i);
    }
    Eigen::Index alpha_var(Eigen::Index k) const { return p_count() + k; }
    Eigen::Index beta_var() const { return p_count() + n_alpha_; }

    /// Symmetric basis matrix of P entry (i, j).
    Eigen::MatrixXd p_basis(Eigen::Index i, Eigen::Index j) const {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(p_dim_, p_dim_);
        e(i, j) = 1.0;
        e(j, i) = 1.0;
        return e;
    }

    Eigen::MatrixXd unpack_p(const Eigen::VectorXd& v) const {
        Eigen::MatrixXd p(p_dim_, p_dim_);
        for (Eigen::Index i = 0; i < p_dim_; ++i) {
            for (Eigen::Index j = i; j < p_dim_; ++j) {
                p(i, j) = p(j, i) = v[p_var(i, j)];
            }
        }
        return p;
    }

    Eigen::VectorXd pack(const Eigen::MatrixXd& p, const Eigen::VectorXd& alphas, double beta) const {
        if (p.rows() != p_dim_ || p.cols() != p_dim_ || alphas.size() != n_alpha_) {
            throw ContractError("variable dimensions do not match the layout");
        }
        Eigen::VectorXd v(count());
        for (Eigen::Index i = 0; i < p_dim_; ++i) {
            for (Eigen::Index j = i; j < p_dim_; ++j) {
                v[p_var(i, j)] = 0.5 * (p(i, j) + p(j, i));
            }
        }
        v.segment(p_count(), n_alpha_) = alphas;
        v[beta_var()] = beta;
        return v;
    }

private:
    Eigen::Index p_dim_ = 0;
    Eigen::Index n_alpha_ = 0;
};

/// M(v) = constant + sum_k v_k A_k, required to satisfy M(v) <= 0.
struct AffineMatrixInequality {
    struct Term {
        Eigen::Index var;
        Eigen::MatrixXd coeff;
    };

    std::string name;
    Eigen::MatrixXd constant;
    std::vector<Term> terms;

    Eigen::Index size() const noexcept { return constant.rows(); }

    Eigen::MatrixXd value(const Eigen::VectorXd& v) const {
        Eigen::MatrixXd m = constant;
        for (const auto& t : terms) m += v[t.var] * t.coeff;
        return m;
    }

    void add(Eigen::Index var, Eigen::MatrixXd coeff) {
        for (auto& t : terms) {
            if (t.var == var) {
                t.coeff += coeff;
                return;
            }
        }
        terms.push_back({var, std::move(coeff)});
    }
};

inline double max_eigenvalue(const Eigen::MatrixXd& m) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

namespace detail {

// Embeds the P-linear part [[F^T P + P F + 2 delta P, P Lscript, P G], [., 0, 0], [., 0, 0]]
// of Theta_1 for every basis matrix of P.
inline void add_p_terms(AffineMatrixInequality& ineq, const VariableLayout& layout, const ClosedLoopMatrices& m,
                        double delta) {
    const Eigen::Index d = layout.p_dim();
    const Eigen::Index nr = m.G.cols();
    const Eigen::Index size = d + 1 + nr;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i; j < d; ++j) {
            const Eigen::MatrixXd e = layout.p_basis(i, j);
            Eigen::MatrixXd c = Eigen::MatrixXd::Zero(size, size);
            c.topLeftCorner(d, d) = m.F.transpose() * e + e * m.F + 2.0 * delta * e;
            const Eigen::VectorXd pl = e * m.Lscript;
            c.block(0, d, d, 1) = pl;
            c.block(d, 0, 1, d) = pl.transpose();
            const Eigen::MatrixXd pg = e * m.G;
            c.block(0, d + 1, d, nr) = pg;
            c.block(d + 1, 0, nr, d) = pg.transpose();
            ineq.add(layout.p_var(i, j), std::move(c));
        }
    }
}

inline void check_gamma(double gamma, double kf) {
    if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
    if (!(kf >= 0.0)) throw ParameterError("k_f must be nonnegative");
}

}  // namespace detail

inline AffineMatrixInequality build_theta1_distributed(const ClosedLoopMatrices& mats, const ModalPlant& plant,
                                                       const GainSet& gains, double gamma, double kf) {
    detail::check_gamma(gamma, kf);
    const auto n = static_cast<Eigen::Index>(plant.N);
    const Eigen::Index d = 2 * n;
    if (mats.F.rows() != d || mats.G.cols() != n) throw AssemblyError("closed-loop matrices do not match N");
    const VariableLayout layout(d, 2);
    const Eigen::Index size = d + 1 + n;

    AffineMatrixInequality ineq;
    ineq.name = "theta1";
    ineq.constant = Eigen::MatrixXd::Zero(size, size);
    detail::add_p_terms(ineq, layout, mats, gains.delta);

    Eigen::MatrixXd a1 = Eigen::MatrixXd::Zero(size, size);
    a1.topLeftCorner(d, d) = gamma * plant.residual_b_sq * mats.Ktilde.transpose() * mats.Ktilde;
    ineq.add(layout.alpha_var(0), std::move(a1));

    Eigen::MatrixXd a2 = Eigen::MatrixXd::Zero(size, size);
    if (kf > 0.0) a2.topLeftCorner(d, d) = gamma * kf * kf * mats.Omega;
    a2.bottomRightCorner(n, n) = -gamma * mats.LambdaTilde.cwiseInverse().asDiagonal().toDenseMatrix();
    ineq.add(layout.alpha_var(1), std::move(a2));

    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(size, size);
    b(d, d) = -1.0;
    ineq.add(layout.beta_var(), std::move(b));
    return ineq;
}

inline AffineMatrixInequality build_theta1_boundary(const ClosedLoopMatrices& mats, const ModalPlant& plant,
                                                    const GainSet& gains, double gamma, double kf) {
    detail::check_gamma(gamma, kf);
    const auto n = static_cast<Eigen::Index>(plant.N);
    const Eigen::Index d = 2 * n;
    const Eigen::Index size = d + 1 + n;
    if (mats.F.rows() != d || mats.G.cols() != n || mats.E.size() != size) {
        throw AssemblyError("closed-loop matrices do not match N");
    }
    const VariableLayout layout(d, 3);

    AffineMatrixInequality ineq;
    ineq.name = "theta1";
    ineq.constant = Eigen::MatrixXd::Zero(size, size);
    detail::add_p_terms(ineq, layout, mats, gains.delta);
    const Eigen::MatrixXd kk = mats.Ktilde.transpose() * mats.Ktilde;

    Eigen::MatrixXd a1 = Eigen::MatrixXd::Zero(size, size);
    a1.topLeftCorner(d, d) = gamma * plant.residual_a_sq * kk;
    ineq.add(layout.alpha_var(0), std::move(a1));

    Eigen::MatrixXd a2 = gamma * plant.residual_b_sq * mats.E.transpose() * mats.E;
    ineq.add(layout.alpha_var(1), std::move(a2));

    Eigen::MatrixXd a3 = Eigen::MatrixXd::Zero(size, size);
    if (kf > 0.0) {
        a3.topLeftCorner(d, d) = gamma * kf * kf * (2.0 * plant.residual_b_sq * kk + mats.Omega);
    }
    a3.bottomRightCorner(n, n) = -gamma * mats.LambdaTilde.cwiseInverse().asDiagonal().toDenseMatrix();
    ineq.add(layout.alpha_var(2), std::move(a3));

    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(size, size);
    b(d, d) = -1.0;
    ineq.add(layout.beta_var(), std::move(b));
    return ineq;
}

/// Schur form of Theta_2 <= 0:
/// [[mu, s, .., s], [s, -alpha_1, ..], ..] with s = sqrt(gamma lambda_{N+1}) and
/// mu = 2 gamma (-lambda_{N+1} + qc + delta) + beta M_phi + c alpha_last gamma kf^2 / lambda_{N+1},
/// where c = 1 (Theorem 2) or 2 (Theorem 3) and alpha_last is alpha_2 or alpha_3.
inline AffineMatrixInequality build_theta2_lmi(const VariableLayout& layout, double gamma, double lambda_next,
                                               double qc, double delta, double m_phi, double kf, Theorem theorem) {
    detail::check_gamma(gamma, kf);
    if (!(lambda_next > 0.0)) throw ParameterError("lambda_{N+1} must be positive");
    const Eigen::Index na = theorem == Theorem::Two ? 2 : 3;
    if (layout.n_alpha() != na) throw ContractError("layout does not match the theorem");
    const Eigen::Index size = na + 1;
    const double s = std::sqrt(gamma * lambda_next);

    AffineMatrixInequality ineq;
    ineq.name = "theta2";
    ineq.constant = Eigen::MatrixXd::Zero(size, size);
    ineq.constant(0, 0) = 2.0 * gamma * (-lambda_next + qc + delta);
    for (Eigen::Index k = 1; k < size; ++k) {
        ineq.constant(0, k) = s;
        ineq.constant(k, 0) = s;
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(size, size);
        e(k, k) = -1.0;
        ineq.add(layout.alpha_var(k - 1), std::move(e));
    }
    const double tail = (theorem == Theorem::Two ? 1.0 : 2.0) * gamma * kf * kf / lambda_next;
    Eigen::MatrixXd et = Eigen::MatrixXd::Zero(size, size);
    et(0, 0) = tail;
    ineq.add(layout.alpha_var(na - 1), std::move(et));
    Eigen::MatrixXd eb = Eigen::MatrixXd::Zero(size, size);
    eb(0, 0) = m_phi;
    ineq.add(layout.beta_var(), std::move(eb));
    return ineq;
}

/// Theta_2 evaluated directly from the theorem statement.
inline double theta2_scalar(double gamma, double lambda_next, double qc, double delta, double m_phi, double kf,
                            Theorem theorem, const Eigen::VectorXd& alphas, double beta) {
    const double inv_sum = alphas.cwiseInverse().sum();
    const double tail = (theorem == Theorem::Two ? alphas[1] : 2.0 * alphas[2]) * gamma * kf * kf / lambda_next;
    return 2.0 * gamma * (-(1.0 - 0.5 * inv_sum) * lambda_next + qc + delta) + beta * m_phi + tail;
}

/// Full problem for one (theorem, N, delta, gamma, k_f) instance. Lower bounds
/// apply to the alphas and beta in layout order.
struct LmiProblem {
    Theorem theorem = Theorem::Two;
    VariableLayout layout;
    std::vector<AffineMatrixInequality> inequalities;
    Eigen::VectorXd lower_bounds;  // alphas then beta
    double gamma = 1.0;
    double kf = 0.0;
    double delta = 0.0;
    std::size_t N = 0;
    double lambda_next = 0.0;
    double qc = 0.0;
    double m_phi = 0.0;
};

inline constexpr double kEpsP = 1e-8;
inline constexpr double kEpsMargin = 1e-8;

inline LmiProblem build_problem(const ClosedLoopMatrices& mats, const ModalPlant& plant, const GainSet& gains,
                                double gamma, double kf) {
    LmiProblem prob;
    prob.theorem = theorem_for(plant.actuation);
    const auto n = static_cast<Eigen::Index>(plant.N);
    const Eigen::Index na = prob.theorem == Theorem::Two ? 2 : 3;
    prob.layout = VariableLayout(2 * n, na);
    prob.gamma = gamma;
    prob.kf = kf;
    prob.delta = gains.delta;
    prob.N = plant.N;
    prob.lambda_next = plant.lambda_next();
    prob.qc = plant.qc;
    prob.m_phi = plant.m_phi;
    prob.inequalities.push_back(prob.theorem == Theorem::Two
                                    ? build_theta1_distributed(mats, plant, gains, gamma, kf)
                                    : build_theta1_boundary(mats, plant, gains, gamma, kf));
    prob.inequalities.push_back(build_theta2_lmi(prob.layout, gamma, prob.lambda_next, plant.qc, gains.delta,
                                                 plant.m_phi, kf, prob.theorem));
    prob.lower_bounds = Eigen::VectorXd::Constant(na + 1, alpha_bound(prob.theorem) + kStrictOffset);
    prob.lower_bounds[na] = kEpsP;
    return prob;
}

}  // namespace rdcert
