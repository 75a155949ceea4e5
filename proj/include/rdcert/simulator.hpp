#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdcert/coefficients.hpp"
#include "rdcert/errors.hpp"
#include "rdcert/grid.hpp"
#include "rdcert/sdp_solver.hpp"
#include "rdcert/spectral.hpp"
#include "rdcert/synthesis.hpp"
#include "rdcert/tridiagonal.hpp"

namespace rdcert {

enum class GKind { Zero, Sine, Saturation, Tanh };

inline std::string to_string(GKind k) {
    switch (k) {
        case GKind::Zero: return "zero";
        case GKind::Sine: return "sine";
        case GKind::Saturation: return "saturation";
        case GKind::Tanh: return "tanh";
    }
    return "?";
}

inline GKind gkind_from_string(const std::string& s) {
    if (s == "zero") return GKind::Zero;
    if (s == "sine") return GKind::Sine;
    if (s == "saturation") return GKind::Saturation;
    if (s == "tanh") return GKind::Tanh;
    throw ConfigurationError("unknown nonlinearity kind '" + s + "' (expected zero, sine, saturation or tanh)");
}

/// f(t, x, z) = qf(x) z + g(z) with |g(z)| <= kf_used |z|.
struct NonlinearitySpec {
    CoefficientFunction qf = CoefficientFunction::constant(0.0);
    GKind kind = GKind::Zero;
    double kf_used = 0.0;

    double g(double z) const {
        switch (kind) {
            case GKind::Zero: return 0.0;
            case GKind::Sine: return kf_used * std::sin(z);
            case GKind::Saturation: return kf_used * std::clamp(z, -1.0, 1.0);
            case GKind::Tanh: return kf_used * std::tanh(z);
        }
        return 0.0;
    }

    /// Samples the sector bound on [-zmax, zmax]; throws on a violation.
    void check_sector(double zmax = 20.0, int samples = 4001) const {
        if (!(kf_used >= 0.0)) throw ParameterError("sector radius must be nonnegative");
        for (int i = 0; i < samples; ++i) {
            const double z = -zmax + 2.0 * zmax * i / (samples - 1);
            if (std::abs(g(z)) > kf_used * std::abs(z) * (1.0 + 1e-12) + 1e-300) {
                throw ParameterError("nonlinearity leaves the sector at z = " + std::to_string(z));
            }
        }
        if (g(0.0) != 0.0) throw ParameterError("nonlinearity does not vanish at zero");
    }
};

/// Observer and feedback data as implemented by the controller.
struct ControllerRealization {
    Actuation actuation = Actuation::Distributed;
    std::size_t N0 = 0;
    std::size_t N = 0;  // 0: no controller, u = 0
    double qc = 0.0;
    Eigen::VectorXd lambdas;  // lambda_1..lambda_N
    Eigen::VectorXd b;        // b_n (input shape, or lifting profile when boundary)
    Eigen::VectorXd beta;     // boundary only
    Eigen::VectorXd c;        // phi_n(0)
    Eigen::RowVectorXd K;
    Eigen::VectorXd L;

    static ControllerRealization from(const ModalPlant& plant, const GainSet& gains) {
        ControllerRealization r;
        r.actuation = plant.actuation;
        r.N0 = plant.N0;
        r.N = plant.N;
        r.qc = plant.qc;
        const auto n = static_cast<Eigen::Index>(plant.N);
        r.lambdas = plant.lambdas.head(n);
        r.b = plant.b;
        r.beta = plant.beta;
        r.c = plant.c;
        r.K = gains.K;
        r.L = gains.L;
        return r;
    }

    static ControllerRealization none(Actuation a) {
        ControllerRealization r;
        r.actuation = a;
        return r;
    }

    /// Observer right-hand side for the given measurement.
    Eigen::VectorXd observer_rate(const Eigen::VectorXd& zhat, double y) const {
        const double u = control(zhat);
        Eigen::VectorXd rate = ((-lambdas).array() + qc).matrix().cwiseProduct(zhat);
        double innovation = c.dot(zhat) - y;
        if (actuation == Actuation::Distributed) {
            rate += b * u;
        } else {
            rate += beta * u;
            innovation += c.dot(b) * u;  // sum phi_k(0) (zhat_k + b_k u)
        }
        rate.head(static_cast<Eigen::Index>(N0)) -= L * innovation;
        return rate;
    }

    double control(const Eigen::VectorXd& zhat) const {
        if (N == 0) return 0.0;
        return K.dot(zhat.head(static_cast<Eigen::Index>(N0)));
    }

    void validate() const {
        if (N == 0) return;
        const auto n = static_cast<Eigen::Index>(N);
        const auto n0 = static_cast<Eigen::Index>(N0);
        if (N0 < 1 || N0 >= N) throw ConfigurationError("controller needs 1 <= N0 < N");
        if (lambdas.size() != n || b.size() != n || c.size() != n || K.size() != n0 || L.size() != n0) {
            throw ConfigurationError("controller realization has inconsistent dimensions");
        }
        if (actuation == Actuation::Boundary && beta.size() != n) {
            throw ConfigurationError("boundary controller needs beta_n for every observed mode");
        }
    }
};

struct SimConfig {
    PlantCoefficients plant;
    Decomposition decomposition;
    std::optional<CoefficientFunction> input_shape;  // b(x), distributed case
    std::size_t grid_size = 401;
    double dt = 2e-4;
    double horizon = 10.0;
    Eigen::VectorXd z0;  // full-grid samples
    ControllerRealization controller;
    Eigen::VectorXd zhat0;  // empty means zero
    std::size_t n_proj = 40;
    double record_interval = 0.01;
    double local_tolerance = 1e-4;  // relative predictor/corrector gap
    int max_halvings = 6;
};

struct Trajectory {
    Actuation actuation = Actuation::Distributed;
    std::vector<double> t;
    std::vector<double> l2;
    std::vector<double> h1;  // sqrt of the truncated <A z, z>
    std::vector<double> y;
    std::vector<double> u;
    std::vector<double> v;
    std::vector<Eigen::VectorXd> zhat;
    std::vector<Eigen::VectorXd> modes;   // z_n, n <= n_proj
    std::vector<Eigen::VectorXd> wmodes;  // w_n = z_n + b_n u, boundary case
    std::vector<double> V;                // filled by lyapunov_trace
    Eigen::VectorXd proj_lambdas;         // eigenvalues of the simulation basis
    ControllerRealization controller;
    Eigen::VectorXd z_final;
    double dt_final = 0.0;
    std::size_t steps = 0;
    std::vector<std::string> warnings;

    std::size_t size() const { return t.size(); }

    /// h1^2 + |zhat|^2 at each record.
    std::vector<double> energy() const {
        std::vector<double> e(t.size());
        for (std::size_t k = 0; k < t.size(); ++k) {
            e[k] = h1[k] * h1[k] + (zhat[k].size() > 0 ? zhat[k].squaredNorm() : 0.0);
        }
        return e;
    }
};

/// sin^4(pi x), scaled to unit H^1 norm.
inline Eigen::VectorXd unit_h1_bump(const Grid& grid) {
    const double pi = std::numbers::pi;
    const Eigen::VectorXd x = grid.nodes();
    Eigen::VectorXd f(x.size());
    Eigen::VectorXd df(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double s = std::sin(pi * x[i]);
        f[i] = std::pow(s, 4);
        df[i] = 4.0 * pi * std::pow(s, 3) * std::cos(pi * x[i]);
    }
    const double h1 = std::sqrt(grid.norm_sq(f) + grid.norm_sq(df));
    return f / h1;
}

/// Eigenbasis used to project trajectories; it shares the simulation grid.
inline EigenBasis simulation_basis(const SimConfig& cfg) {
    return eigendecompose(cfg.plant, cfg.decomposition, Grid(cfg.grid_size), cfg.n_proj);
}

namespace detail {

inline std::vector<std::string> check_initial_condition(const SimConfig& cfg, const Grid& grid) {
    std::vector<std::string> warnings;
    const double h = grid.spacing();
    const Eigen::VectorXd& z = cfg.z0;
    const double scale = std::max(1.0, z.cwiseAbs().maxCoeff());
    const double tol = 1e-3 * scale;
    const double c1 = std::cos(cfg.plant.theta1);
    const double s1 = std::sin(cfg.plant.theta1);
    const double c2 = std::cos(cfg.plant.theta2);
    const double s2 = std::sin(cfg.plant.theta2);
    const double left = c1 * z[0] - s1 * left_derivative(z, h);
    if (std::abs(left) > tol) warnings.push_back("z0 violates the left boundary condition by " + std::to_string(left));
    double target = 0.0;
    if (cfg.controller.actuation == Actuation::Boundary && cfg.controller.N > 0 && cfg.zhat0.size() > 0) {
        target = cfg.controller.control(cfg.zhat0);
    }
    const double right = c2 * z[z.size() - 1] + s2 * right_derivative(z, h) - target;
    if (std::abs(right) > tol) {
        warnings.push_back("z0 violates the right boundary condition by " + std::to_string(right));
    }
    return warnings;
}

inline Trajectory simulate(const SimConfig& cfg, const NonlinearitySpec& nl, Actuation actuation) {
    if (cfg.controller.actuation != actuation) {
        throw ConfigurationError("controller realization is for " + to_string(cfg.controller.actuation) +
                                 " actuation");
    }
    cfg.controller.validate();
    nl.check_sector();
    if (!(cfg.dt > 0.0) || !(cfg.horizon > 0.0) || !(cfg.record_interval > 0.0)) {
        throw ConfigurationError("time step, horizon and record interval must be positive");
    }
    if (is_dirichlet(cfg.plant.theta1)) {
        throw ConfigurationError("Dirichlet left end leaves the measurement y = z(t, 0) identically zero");
    }
    const Grid grid(cfg.grid_size);
    cfg.plant.validate(grid);
    if (static_cast<std::size_t>(cfg.z0.size()) != grid.size()) {
        throw ConfigurationError("z0 has " + std::to_string(cfg.z0.size()) + " samples, grid has " +
                                 std::to_string(grid.size()));
    }
    const auto nobs = static_cast<Eigen::Index>(cfg.controller.N);
    Eigen::VectorXd zhat = cfg.zhat0.size() > 0 ? cfg.zhat0 : Eigen::VectorXd::Zero(nobs);
    if (zhat.size() != nobs) throw ConfigurationError("observer initial state has the wrong size");
    if (cfg.n_proj <= cfg.controller.N) {
        throw ConfigurationError("n_proj must exceed the observer order N for the Lyapunov tail");
    }

    const EigenBasis basis = simulation_basis(cfg);
    const Eigen::VectorXd qlin = cfg.plant.q0.sample(grid) - nl.qf.sample(grid);
    const SturmLiouvilleFV op(grid, cfg.plant.p, qlin, cfg.plant.theta1, cfg.plant.theta2);
    const Eigen::Index n = op.unknowns();
    const Eigen::VectorXd w = op.mass();
    const Eigen::VectorXd& sd = op.stiffness_diagonal();
    const Eigen::VectorXd& so = op.stiffness_offdiagonal();
    const Eigen::VectorXd x = op.restrict(grid.nodes());

    Eigen::VectorXd bx = Eigen::VectorXd::Zero(n);
    if (actuation == Actuation::Distributed) {
        if (!cfg.input_shape) throw ConfigurationError("distributed actuation needs an input shape b(x)");
        bx = op.restrict(cfg.input_shape->sample(grid));
    }
    Eigen::VectorXd lift_full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
    if (actuation == Actuation::Boundary) lift_full = boundary_lifting(cfg.plant, grid).second;

    Trajectory traj;
    traj.actuation = actuation;
    traj.controller = cfg.controller;
    traj.proj_lambdas = basis.lambdas;
    traj.warnings = check_initial_condition(cfg, grid);

    auto full_state = [&](const Eigen::VectorXd& z, double u) {
        return op.extend(z, actuation == Actuation::Boundary ? u : 0.0);
    };
    auto measure = [&](const Eigen::VectorXd& z) { return z[0]; };
    // W^{-1}-free forcing: W (g(z) + b u) + r u
    auto forcing = [&](const Eigen::VectorXd& z, double u) {
        Eigen::VectorXd g(n);
        for (Eigen::Index i = 0; i < n; ++i) g[i] = nl.g(z[i]);
        Eigen::VectorXd f = w.cwiseProduct(g);
        if (actuation == Actuation::Distributed) {
            f += w.cwiseProduct(bx) * u;
        } else {
            f += op.right_input() * u;
        }
        return f;
    };
    auto explicit_side = [&](const Eigen::VectorXd& z, double dt) {
        // (W - dt/2 S) z
        Eigen::VectorXd r = w.cwiseProduct(z) - 0.5 * dt * sd.cwiseProduct(z);
        r.head(n - 1) -= 0.5 * dt * so.cwiseProduct(z.tail(n - 1));
        r.tail(n - 1) -= 0.5 * dt * so.cwiseProduct(z.head(n - 1));
        return r;
    };
    auto implicit_solver = [&](double dt) {
        return tridiag::ThomasSolver(0.5 * dt * so, w + 0.5 * dt * sd, 0.5 * dt * so);
    };

    auto record = [&](double t, const Eigen::VectorXd& z, const Eigen::VectorXd& zh) {
        const double u = cfg.controller.control(zh);
        const Eigen::VectorXd zf = full_state(z, u);
        traj.t.push_back(t);
        traj.l2.push_back(std::sqrt(grid.norm_sq(zf)));
        const Eigen::VectorXd modes = project(zf, basis, cfg.n_proj);
        traj.h1.push_back(std::sqrt(modes.cwiseProduct(modes).dot(basis.lambdas)));
        traj.y.push_back(measure(z));
        traj.u.push_back(u);
        double v = 0.0;
        if (cfg.controller.N > 0) {
            v = cfg.controller.K.dot(
                cfg.controller.observer_rate(zh, measure(z)).head(static_cast<Eigen::Index>(cfg.controller.N0)));
        }
        traj.v.push_back(v);
        traj.zhat.push_back(zh);
        traj.modes.push_back(modes);
        if (actuation == Actuation::Boundary) {
            traj.wmodes.push_back(project(zf + lift_full * u, basis, cfg.n_proj));
        }
    };

    Eigen::VectorXd z = op.restrict(cfg.z0);
    double dt = cfg.dt;
    const double dt_floor = cfg.dt * std::ldexp(1.0, -cfg.max_halvings);
    tridiag::ThomasSolver solver = implicit_solver(dt);
    double t = 0.0;
    double next_record = 0.0;
    std::size_t steps = 0;
    const double eps_t = 1e-9 * cfg.dt;

    while (true) {
        if (t >= next_record - eps_t) {
            record(t, z, zhat);
            next_record += cfg.record_interval;
        }
        if (t >= cfg.horizon - eps_t) break;
        const double h = std::min(dt, cfg.horizon - t);
        tridiag::ThomasSolver shortened;
        if (h < dt) shortened = implicit_solver(h);
        const tridiag::ThomasSolver& active = (h < dt) ? shortened : solver;

        const double u0 = cfg.controller.control(zhat);
        const Eigen::VectorXd f0 = forcing(z, u0);
        const Eigen::VectorXd r0 = cfg.controller.N > 0 ? cfg.controller.observer_rate(zhat, measure(z))
                                                        : Eigen::VectorXd(Eigen::VectorXd::Zero(0));
        const Eigen::VectorXd base = explicit_side(z, h);
        const Eigen::VectorXd zp = active.solve(base + h * f0);
        const Eigen::VectorXd zhp = zhat + h * r0;

        const double u1 = cfg.controller.control(zhp);
        const Eigen::VectorXd f1 = forcing(zp, u1);
        const Eigen::VectorXd r1 = cfg.controller.N > 0 ? cfg.controller.observer_rate(zhp, measure(zp))
                                                        : Eigen::VectorXd(Eigen::VectorXd::Zero(0));
        const Eigen::VectorXd zn = active.solve(base + 0.5 * h * (f0 + f1));
        const Eigen::VectorXd zhn = zhat + 0.5 * h * (r0 + r1);

        if (!zn.allFinite() || !zhn.allFinite()) {
            throw StiffnessError("non-finite state at t = " + std::to_string(t) + " (blow-up)");
        }
        const double gap = std::sqrt(w.dot((zn - zp).cwiseAbs2())) + (zhn - zhp).norm();
        const double scale = std::sqrt(w.dot(zn.cwiseAbs2())) + zhn.norm();
        if (gap > cfg.local_tolerance * scale + 1e-300 && scale > 1e-200) {
            if (dt * 0.5 < dt_floor) {
                throw StiffnessError("local error estimate " + std::to_string(gap / scale) + " exceeds " +
                                     std::to_string(cfg.local_tolerance) + " at t = " + std::to_string(t) +
                                     " with dt at its floor " + std::to_string(dt));
            }
            dt *= 0.5;
            solver = implicit_solver(dt);
            continue;
        }
        z = zn;
        zhat = zhn;
        t += h;
        ++steps;
    }
    traj.z_final = full_state(z, cfg.controller.control(zhat));
    traj.dt_final = dt;
    traj.steps = steps;
    return traj;
}

}  // namespace detail

/// Closed loop with in-domain actuation b(x) u(t).
inline Trajectory simulate_distributed(const SimConfig& cfg, const NonlinearitySpec& nl) {
    return detail::simulate(cfg, nl, Actuation::Distributed);
}

/// Closed loop with the right boundary condition driven by u(t).
inline Trajectory simulate_boundary(const SimConfig& cfg, const NonlinearitySpec& nl) {
    return detail::simulate(cfg, nl, Actuation::Boundary);
}

/// Least-squares decay rate -d/dt log(series) over t >= t_end - window.
inline double decay_fit(const std::vector<double>& t, const std::vector<double>& series, double window) {
    if (t.size() != series.size() || t.empty()) throw FitError("time and series lengths differ or are empty");
    const double t0 = t.back() - window;
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t0) continue;
        if (!(series[k] > 0.0)) {
            throw FitError("series is not positive at t = " + std::to_string(t[k]) + "; log fit undefined");
        }
        const double ly = std::log(series[k]);
        st += t[k];
        sy += ly;
        stt += t[k] * t[k];
        sty += t[k] * ly;
        ++count;
    }
    if (count < 2) throw FitError("fit window holds fewer than two samples");
    const double c = static_cast<double>(count);
    const double den = c * stt - st * st;
    if (!(den > 0.0)) throw FitError("degenerate fit window");
    return -(c * sty - st * sy) / den;
}

struct LyapunovTrace {
    std::vector<double> V;
    std::vector<double> bound;
    double worst_ratio = 0.0;  // max V(t) / (V(0) e^{-2 delta t})
    bool pass = true;
};

/// X from observer states and projected errors, in the truncated-model layout.
inline Eigen::VectorXd reconstruct_state(const ControllerRealization& ctrl, const Eigen::VectorXd& zhat,
                                         const Eigen::VectorXd& modes) {
    const auto n = static_cast<Eigen::Index>(ctrl.N);
    const auto n0 = static_cast<Eigen::Index>(ctrl.N0);
    const Eigen::Index n1 = n - n0;
    Eigen::VectorXd x(2 * n);
    const Eigen::VectorXd e = modes.head(n) - zhat;
    x.head(n0) = zhat.head(n0);
    x.segment(n0, n0) = e.head(n0);
    const Eigen::VectorXd lam1 = ctrl.lambdas.tail(n1);
    if (ctrl.actuation == Actuation::Distributed) {
        x.segment(2 * n0, n1) = zhat.tail(n1);
    } else {
        x.segment(2 * n0, n1) = zhat.tail(n1).cwiseQuotient(lam1);
    }
    x.tail(n1) = e.tail(n1).cwiseProduct(lam1.cwiseSqrt());
    return x;
}

/// V = X^T P X + gamma sum_{N < n <= n_proj} lambda_n (z_n or w_n)^2 and the
/// check V(t) <= V(0) e^{-2 delta t} (1 + tol).
inline LyapunovTrace lyapunov_trace(Trajectory& traj, const Certificate& cert, double tol = 0.05,
                                    std::optional<double> delta_check = std::nullopt) {
    const ControllerRealization& ctrl = traj.controller;
    const auto n = static_cast<Eigen::Index>(ctrl.N);
    if (ctrl.N == 0 || cert.N != ctrl.N || cert.P.rows() != 2 * n || cert.P.cols() != 2 * n) {
        throw ContractError("certificate dimensions do not match the controller realization");
    }
    if (traj.proj_lambdas.size() <= n) throw ContractError("no tail modes available beyond N");
    const double delta = delta_check.value_or(cert.delta);
    LyapunovTrace out;
    const auto& tail_source = (traj.actuation == Actuation::Boundary) ? traj.wmodes : traj.modes;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Eigen::VectorXd x = reconstruct_state(ctrl, traj.zhat[k], traj.modes[k]);
        const Eigen::Index tail = traj.proj_lambdas.size() - n;
        const Eigen::VectorXd wn = tail_source[k].tail(tail);
        const double v = x.dot(cert.P * x) + cert.gamma * wn.cwiseAbs2().dot(traj.proj_lambdas.tail(tail));
        out.V.push_back(v);
    }
    const double v0 = out.V.empty() ? 0.0 : out.V.front();
    for (std::size_t k = 0; k < out.V.size(); ++k) {
        const double b = v0 * std::exp(-2.0 * delta * traj.t[k]);
        out.bound.push_back(b * (1.0 + tol));
        if (out.V[k] > b * (1.0 + tol)) out.pass = false;
        if (b > 0.0) out.worst_ratio = std::max(out.worst_ratio, out.V[k] / b);
    }
    traj.V = out.V;
    return out;
}

}  // namespace rdcert
