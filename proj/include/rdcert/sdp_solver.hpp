#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdcert/errors.hpp"
#include "rdcert/lmi.hpp"

namespace rdcert {

enum class SolveStatus { Feasible, Infeasible, Inconclusive };

inline std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Feasible: return "feasible";
        case SolveStatus::Infeasible: return "infeasible";
        default: return "inconclusive";
    }
}

struct SolverOptions {
    double eps_margin = kEpsMargin;
    double eps_p = kEpsP;
    double c0 = 1.0;            // initial barrier weight on t
    double growth = 8.0;        // barrier weight multiplier per outer step
    double c_max = 1e13;
    int max_newton = 800;       // Newton steps per start
    double centering_tol = 1e-7;  // half squared Newton decrement
    int random_starts = 1;
    double box_factor = 1e4;    // search box: tr(P), alphas, beta below box_factor times the start values
    std::uint64_t seed = 20240521;
};

struct SolveResult {
    SolveStatus status = SolveStatus::Inconclusive;
    Eigen::VectorXd v;          // best point (strictly feasible for the epigraph)
    double t = std::numeric_limits<double>::infinity();  // max over blocks of lambda_max at v
    double lower_bound = -std::numeric_limits<double>::infinity();  // bound on the optimal t
    int newton_steps = 0;
    int starts_used = 0;
    std::string message;
};

/// 1x1 block lb - v_var <= 0.
inline AffineMatrixInequality bound_block(Eigen::Index var, double lb, std::string name) {
    AffineMatrixInequality b;
    b.name = std::move(name);
    b.constant = Eigen::MatrixXd::Constant(1, 1, lb);
    b.add(var, Eigen::MatrixXd::Constant(1, 1, -1.0));
    return b;
}

/// eps I - P <= 0.
inline AffineMatrixInequality p_positivity_block(const VariableLayout& layout, double eps) {
    AffineMatrixInequality b;
    b.name = "P";
    b.constant = eps * Eigen::MatrixXd::Identity(layout.p_dim(), layout.p_dim());
    for (Eigen::Index i = 0; i < layout.p_dim(); ++i) {
        for (Eigen::Index j = i; j < layout.p_dim(); ++j) {
            b.add(layout.p_var(i, j), -layout.p_basis(i, j));
        }
    }
    return b;
}

/// Minimizes t subject to M_j(v) <= t I for all blocks by a primal log-det
/// barrier method: centering f_c(v, t) = c t - sum_j log det(t I - M_j(v)) with
/// damped Newton steps, then c <- growth * c. The problem is feasible iff the
/// optimal t is negative. Stops as soon as a centered point has
/// t < -10 eps_margin, and reports infeasibility once the barrier duality bound
/// t - m / c stays above -eps_margin.
class BarrierSolver {
public:
    /// `blocks` enter the epigraph M_j(v) <= t I; `hard` blocks are kept
    /// strictly negative definite throughout and do not involve t.
    BarrierSolver(std::vector<AffineMatrixInequality> blocks, Eigen::Index n_vars, SolverOptions opts = {},
                  std::vector<AffineMatrixInequality> hard = {})
        : n_(n_vars), opts_(opts) {
        for (auto& b : blocks) {
            blocks_.push_back(std::move(b));
            epigraph_.push_back(true);
        }
        for (auto& b : hard) {
            blocks_.push_back(std::move(b));
            epigraph_.push_back(false);
        }
        for (const auto& b : blocks_) {
            for (const auto& t : b.terms) {
                if (t.var < 0 || t.var >= n_) throw ContractError("block '" + b.name + "' references unknown variable");
            }
            barrier_dim_ += static_cast<double>(b.size());
        }
    }

    double max_eigen_over_blocks(const Eigen::VectorXd& v) const {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < blocks_.size(); ++j) {
            if (epigraph_[j]) worst = std::max(worst, max_eigenvalue(blocks_[j].value(v)));
        }
        return worst;
    }

    bool inside_hard(const Eigen::VectorXd& v) const {
        for (std::size_t j = 0; j < blocks_.size(); ++j) {
            if (!epigraph_[j] && !(max_eigenvalue(blocks_[j].value(v)) < 0.0)) return false;
        }
        return true;
    }

    SolveResult solve(const Eigen::VectorXd& start) const {
        SolveResult res;
        if (start.size() != n_) throw ContractError("start point has the wrong dimension");
        Eigen::VectorXd x(n_ + 1);
        x.head(n_) = start;
        const double lam = max_eigen_over_blocks(start);
        if (!std::isfinite(lam) || !inside_hard(start)) {
            res.message = "start point outside the search region";
            return res;
        }
        x[n_] = lam + std::max(1.0, 0.1 * std::abs(lam));
        res.v = start;
        res.t = lam;

        double c = opts_.c0;
        int steps = 0;
        while (steps < opts_.max_newton) {
            const bool ok = center(x, c, steps);
            const double t = x[n_];
            if (t < res.t) {
                res.t = t;
                res.v = x.head(n_);
            }
            if (!ok) {
                res.message = "centering failed at c = " + std::to_string(c);
                break;
            }
            res.lower_bound = std::max(res.lower_bound, t - barrier_dim_ / c);
            if (t < -10.0 * opts_.eps_margin) {
                // exact check; t bounds every block's largest eigenvalue
                const double exact = max_eigen_over_blocks(x.head(n_));
                if (exact <= -opts_.eps_margin) {
                    res.status = SolveStatus::Feasible;
                    res.v = x.head(n_);
                    res.t = exact;
                    break;
                }
            }
            if (res.lower_bound > -opts_.eps_margin) {
                res.status = SolveStatus::Infeasible;
                res.message = "optimal margin bounded below by " + std::to_string(res.lower_bound);
                break;
            }
            if (c >= opts_.c_max) {
                res.message = "barrier weight limit reached";
                break;
            }
            c *= opts_.growth;
        }
        if (res.status == SolveStatus::Inconclusive && res.message.empty()) res.message = "Newton budget exhausted";
        res.newton_steps = steps;
        return res;
    }

    /// Tries each start in turn; a conclusive verdict ends the sequence.
    SolveResult solve(const std::vector<Eigen::VectorXd>& starts) const {
        SolveResult best;
        int used = 0;
        int total_steps = 0;
        for (const auto& s : starts) {
            ++used;
            SolveResult r = solve(s);
            total_steps += r.newton_steps;
            if (r.status != SolveStatus::Inconclusive) {
                r.starts_used = used;
                r.newton_steps = total_steps;
                return r;
            }
            if (r.t < best.t || best.v.size() == 0) {
                const double lb = std::max(best.lower_bound, r.lower_bound);
                best = r;
                best.lower_bound = lb;
            }
        }
        best.starts_used = used;
        best.newton_steps = total_steps;
        return best;
    }

private:
    struct Eval {
        bool ok = false;
        double f = 0.0;
    };

    Eval barrier(const Eigen::VectorXd& x, double c) const {
        Eval e;
        const Eigen::VectorXd v = x.head(n_);
        const double t = x[n_];
        double f = c * t;
        for (std::size_t j = 0; j < blocks_.size(); ++j) {
            Eigen::MatrixXd s = -blocks_[j].value(v);
            if (epigraph_[j]) s.diagonal().array() += t;
            const Eigen::LLT<Eigen::MatrixXd> llt(s);
            if (llt.info() != Eigen::Success) return e;
            const Eigen::VectorXd d = llt.matrixLLT().diagonal();
            if ((d.array() <= 0.0).any()) return e;
            f -= 2.0 * d.array().log().sum();
        }
        e.ok = std::isfinite(f);
        e.f = f;
        return e;
    }

    void derivatives(const Eigen::VectorXd& x, double c, Eigen::VectorXd& g, Eigen::MatrixXd& h) const {
        const Eigen::Index nx = n_ + 1;
        g = Eigen::VectorXd::Zero(nx);
        h = Eigen::MatrixXd::Zero(nx, nx);
        g[n_] = c;
        const Eigen::VectorXd v = x.head(n_);
        const double t = x[n_];
        for (std::size_t jb = 0; jb < blocks_.size(); ++jb) {
            const auto& b = blocks_[jb];
            const bool epi = epigraph_[jb];
            const Eigen::Index m = b.size();
            Eigen::MatrixXd s = -b.value(v);
            if (epi) s.diagonal().array() += t;
            const Eigen::LLT<Eigen::MatrixXd> llt(s);
            const auto lower = llt.matrixL();
            const auto k = static_cast<Eigen::Index>(b.terms.size());
            // columns: vec(C_x) for each term variable, then for t
            Eigen::MatrixXd cols(m * m, k + 1);
            for (Eigen::Index i = 0; i < k; ++i) {
                Eigen::MatrixXd w = -b.terms[static_cast<std::size_t>(i)].coeff;
                lower.solveInPlace(w);
                Eigen::MatrixXd wt = w.transpose();
                lower.solveInPlace(wt);
                cols.col(i) = Eigen::Map<const Eigen::VectorXd>(wt.data(), m * m);
            }
            if (epi) {
                Eigen::MatrixXd w = Eigen::MatrixXd::Identity(m, m);
                lower.solveInPlace(w);
                Eigen::MatrixXd wt = w.transpose();
                lower.solveInPlace(wt);
                cols.col(k) = Eigen::Map<const Eigen::VectorXd>(wt.data(), m * m);
            } else {
                cols.col(k).setZero();
            }
            Eigen::MatrixXd gram(k + 1, k + 1);
            gram.setZero();
            gram.selfadjointView<Eigen::Lower>().rankUpdate(cols.transpose());
            gram = gram.selfadjointView<Eigen::Lower>();
            std::vector<Eigen::Index> idx(static_cast<std::size_t>(k + 1));
            for (Eigen::Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = b.terms[static_cast<std::size_t>(i)].var;
            idx[static_cast<std::size_t>(k)] = n_;
            for (Eigen::Index i = 0; i <= k; ++i) {
                double tr = 0.0;
                for (Eigen::Index r = 0; r < m; ++r) tr += cols(r * m + r, i);
                g[idx[static_cast<std::size_t>(i)]] -= tr;
                for (Eigen::Index j = 0; j <= k; ++j) {
                    h(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]) += gram(i, j);
                }
            }
        }
    }

    // Damped Newton centering; false if the iteration broke down.
    bool center(Eigen::VectorXd& x, double c, int& steps) const {
        Eval cur = barrier(x, c);
        if (!cur.ok) return false;
        Eigen::VectorXd g;
        Eigen::MatrixXd h;
        int feasible_steps = 0;
        while (steps < opts_.max_newton) {
            derivatives(x, c, g, h);
            // Jacobi equilibration before the factorization
            Eigen::VectorXd dscale = h.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
            const Eigen::MatrixXd hs = dscale.asDiagonal() * h * dscale.asDiagonal();
            Eigen::LDLT<Eigen::MatrixXd> ldlt(hs + 1e-13 * Eigen::MatrixXd::Identity(h.rows(), h.cols()));
            if (ldlt.info() != Eigen::Success) return false;
            const Eigen::VectorXd dx = dscale.cwiseProduct(ldlt.solve(-dscale.cwiseProduct(g)));
            const double dec2 = -g.dot(dx);
            if (!std::isfinite(dec2)) return false;
            ++steps;
            if (dec2 <= 2.0 * opts_.centering_tol) return true;
            // unbounded directions (e.g. k_f = 0) never center; a feasible t is enough
            if (x[n_] < -10.0 * opts_.eps_margin && ++feasible_steps > 10) return true;
            double step = dec2 > 0.25 ? 1.0 / (1.0 + std::sqrt(dec2)) : 1.0;
            Eval next;
            int tries = 0;
            while (tries < 80) {
                next = barrier(x + step * dx, c);
                if (next.ok && next.f <= cur.f + 0.25 * step * g.dot(dx)) break;
                step *= 0.5;
                ++tries;
            }
            if (tries >= 80) {
                // no decrease possible at working precision: treat as centered
                return dec2 < 1e-3;
            }
            x += step * dx;
            const bool stalled = cur.f - next.f <= 1e-13 * (1.0 + std::abs(cur.f));
            cur = next;
            if (stalled && dec2 < 1e-4) return true;
        }
        return true;
    }

    std::vector<AffineMatrixInequality> blocks_;
    std::vector<bool> epigraph_;
    Eigen::Index n_;
    SolverOptions opts_;
    double barrier_dim_ = 0.0;
};

/// Feasible point of an LMI problem with exact eigenvalue margins.
struct Certificate {
    Theorem theorem = Theorem::Two;
    std::size_t N = 0;
    double delta = 0.0;
    double gamma = 1.0;
    double kf = 0.0;
    Eigen::MatrixXd P;
    Eigen::VectorXd alphas;
    double beta = 0.0;
    std::vector<std::pair<std::string, double>> margins;  // lambda_max per inequality, eps - lambda_min(P) as "P"
    double theta2_scalar = 0.0;

    Eigen::VectorXd pack(const VariableLayout& layout) const { return layout.pack(P, alphas, beta); }
};

struct MarginReport {
    std::vector<std::pair<std::string, double>> margins;
    double p_min_eigenvalue = 0.0;
    double theta2_scalar = 0.0;
    std::vector<std::string> violations;
    bool pass = false;
};

inline MarginReport verify_certificate(const Certificate& cert, const LmiProblem& prob,
                                       double eps_p = kEpsP, double eps_margin = kEpsMargin) {
    MarginReport rep;
    const auto& layout = prob.layout;
    if (cert.P.rows() != layout.p_dim() || cert.P.cols() != layout.p_dim() ||
        cert.alphas.size() != layout.n_alpha()) {
        rep.violations.push_back("dimension mismatch between certificate and problem");
        return rep;
    }
    const Eigen::MatrixXd sym = 0.5 * (cert.P + cert.P.transpose());
    if ((cert.P - sym).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, cert.P.cwiseAbs().maxCoeff())) {
        rep.violations.push_back("P is not symmetric");
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    rep.p_min_eigenvalue = es.eigenvalues().minCoeff();
    if (!(rep.p_min_eigenvalue >= eps_p)) {
        rep.violations.push_back("P positivity: min eigenvalue " + std::to_string(rep.p_min_eigenvalue));
    }
    rep.margins.emplace_back("P", eps_p - rep.p_min_eigenvalue);
    const double ab = alpha_bound(prob.theorem);
    for (Eigen::Index k = 0; k < cert.alphas.size(); ++k) {
        if (!(cert.alphas[k] > ab)) {
            rep.violations.push_back("alpha" + std::to_string(k + 1) + " = " + std::to_string(cert.alphas[k]) +
                                     " not above " + std::to_string(ab));
        }
    }
    if (!(cert.beta > 0.0)) rep.violations.push_back("beta not positive");
    const Eigen::VectorXd v = cert.pack(layout);
    for (const auto& ineq : prob.inequalities) {
        const double m = max_eigenvalue(ineq.value(v));
        rep.margins.emplace_back(ineq.name, m);
        if (!(m <= -eps_margin)) {
            rep.violations.push_back(ineq.name + ": max eigenvalue " + std::to_string(m) + " above " +
                                     std::to_string(-eps_margin));
        }
    }
    rep.theta2_scalar = theta2_scalar(prob.gamma, prob.lambda_next, prob.qc, prob.delta, prob.m_phi, prob.kf,
                                      prob.theorem, cert.alphas, cert.beta);
    if (!(rep.theta2_scalar <= -eps_margin)) {
        rep.violations.push_back("scalar theta2 = " + std::to_string(rep.theta2_scalar));
    }
    rep.pass = rep.violations.empty();
    return rep;
}

/// All blocks handed to the barrier solver for an LMI problem.
inline std::vector<AffineMatrixInequality> solver_blocks(const LmiProblem& prob, double eps_p) {
    std::vector<AffineMatrixInequality> blocks = prob.inequalities;
    blocks.push_back(p_positivity_block(prob.layout, eps_p));
    for (Eigen::Index k = 0; k < prob.layout.n_alpha(); ++k) {
        blocks.push_back(bound_block(prob.layout.alpha_var(k), prob.lower_bounds[k], "alpha" + std::to_string(k + 1)));
    }
    blocks.push_back(bound_block(prob.layout.beta_var(), prob.lower_bounds[prob.layout.n_alpha()], "beta"));
    return blocks;
}

struct CertifyOutcome {
    SolveStatus status = SolveStatus::Inconclusive;
    std::optional<Certificate> certificate;
    MarginReport report;
    SolveResult solve;
    LmiProblem problem;  // in the original coordinates
};

/// Builds the problem for (gamma, k_f), solves it in balanced coordinates from
/// the warm start (if any), the Lyapunov start and seeded perturbations of it,
/// maps the point back and verifies it exactly. Only verified points become
/// certificates.
inline CertifyOutcome certify(const ClosedLoopMatrices& mats, const ModalPlant& plant, const GainSet& gains,
                              double gamma, double kf, const SolverOptions& opts,
                              const std::optional<Certificate>& warm = std::nullopt) {
    CertifyOutcome out;
    out.problem = build_problem(mats, plant, gains, gamma, kf);
    const Eigen::VectorXd scale = balancing_scale(mats);
    const ClosedLoopMatrices scaled = rescale(mats, scale);
    const LmiProblem sprob = build_problem(scaled, plant, gains, gamma, kf);
    const VariableLayout& layout = sprob.layout;

    std::vector<Eigen::VectorXd> starts;
    if (warm && warm->P.rows() == layout.p_dim() && warm->alphas.size() == layout.n_alpha()) {
        const Eigen::MatrixXd p = scale.asDiagonal() * warm->P * scale.asDiagonal();
        starts.push_back(layout.pack(p, warm->alphas, warm->beta));
    }
    Eigen::MatrixXd p0;
    try {
        // certificates scale with gamma (the inequalities are homogeneous in P, beta, gamma)
        p0 = gamma * solve_lyapunov(scaled.F, gains.delta);
    } catch (const NoSolutionError& e) {
        out.status = SolveStatus::Infeasible;
        out.solve.status = SolveStatus::Infeasible;
        out.solve.message = e.what();
        return out;
    }
    const double ab = alpha_bound(sprob.theorem);
    starts.push_back(layout.pack(p0, Eigen::VectorXd::Constant(layout.n_alpha(), 2.0 * ab), gamma));
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int r = 0; r < opts.random_starts; ++r) {
        Eigen::MatrixXd noise(layout.p_dim(), layout.p_dim());
        for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = nd(rng);
        const double amp = 0.1 * p0.norm() / static_cast<double>(noise.rows());
        const Eigen::MatrixXd p = p0 + amp * noise * noise.transpose() / static_cast<double>(noise.rows());
        Eigen::VectorXd alphas(layout.n_alpha());
        for (Eigen::Index k = 0; k < alphas.size(); ++k) alphas[k] = ab * (1.5 + std::abs(nd(rng)));
        starts.push_back(layout.pack(p, alphas, gamma * std::exp(nd(rng))));
    }

    // The P-positivity barrier alone drifts towards unbounded P along weakly
    // penalized directions; a generous box keeps the centering well posed.
    double trace_cap = 0.0;
    Eigen::VectorXd scalar_cap = Eigen::VectorXd::Zero(layout.n_alpha() + 1);
    for (const auto& st : starts) {
        trace_cap = std::max(trace_cap, layout.unpack_p(st).trace());
        scalar_cap = scalar_cap.cwiseMax(st.tail(layout.n_alpha() + 1));
    }
    std::vector<AffineMatrixInequality> hard;
    {
        AffineMatrixInequality tr;
        tr.name = "trace box";
        tr.constant = Eigen::MatrixXd::Constant(1, 1, -opts.box_factor * trace_cap);
        for (Eigen::Index i = 0; i < layout.p_dim(); ++i) tr.add(layout.p_var(i, i), Eigen::MatrixXd::Ones(1, 1));
        hard.push_back(std::move(tr));
        for (Eigen::Index k = 0; k <= layout.n_alpha(); ++k) {
            AffineMatrixInequality ub;
            ub.name = "scalar box";
            ub.constant = Eigen::MatrixXd::Constant(1, 1, -opts.box_factor * scalar_cap[k]);
            ub.add(layout.p_count() + k, Eigen::MatrixXd::Ones(1, 1));
            hard.push_back(std::move(ub));
        }
    }
    const BarrierSolver solver(solver_blocks(sprob, opts.eps_p), layout.count(), opts, std::move(hard));
    out.solve = solver.solve(starts);
    out.status = out.solve.status;
    if (out.solve.status != SolveStatus::Feasible) return out;

    const Eigen::VectorXd inv = scale.cwiseInverse();
    Certificate cert;
    cert.theorem = out.problem.theorem;
    cert.N = out.problem.N;
    cert.delta = out.problem.delta;
    cert.gamma = gamma;
    cert.kf = kf;
    cert.P = inv.asDiagonal() * layout.unpack_p(out.solve.v) * inv.asDiagonal();
    cert.alphas = out.solve.v.segment(layout.p_count(), layout.n_alpha());
    cert.beta = out.solve.v[layout.beta_var()];
    out.report = verify_certificate(cert, out.problem, opts.eps_p, opts.eps_margin);
    cert.margins = out.report.margins;
    cert.theta2_scalar = out.report.theta2_scalar;
    if (!out.report.pass) {
        out.status = SolveStatus::Inconclusive;
        out.solve.message = "solver point failed exact verification";
        return out;
    }
    out.certificate = std::move(cert);
    return out;
}

}  // namespace rdcert
