#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rdcert/errors.hpp"
#include "rdcert/grid.hpp"

namespace rdcert {

/// Scalar coefficient on [0, 1]: a named builtin or tabulated samples.
///
/// The cosine window `amplitude * cos(frequency * x) * 1_[lo, hi](x)` takes the
/// mean of its one-sided limits at the two jump points, so trapezoid
/// quadrature of the sampled window stays second-order accurate whenever the
/// jumps fall on grid nodes.
class CoefficientFunction {
public:
    struct Constant {
        double value = 0.0;
    };
    struct Polynomial {
        std::vector<double> coeffs;  // c0 + c1 x + c2 x^2 + ...
    };
    struct CosineWindow {
        double lo = 0.0;
        double hi = 1.0;
        double amplitude = 1.0;
        double frequency = 1.0;
    };
    struct Tabulated {
        std::vector<double> x;
        std::vector<double> y;
    };

    using Repr = std::variant<Constant, Polynomial, CosineWindow, Tabulated>;

    CoefficientFunction() : repr_(Constant{0.0}) {}

    static CoefficientFunction constant(double value) { return CoefficientFunction(Constant{value}); }

    static CoefficientFunction polynomial(std::vector<double> coeffs) {
        if (coeffs.empty()) {
            coeffs.push_back(0.0);
        }
        return CoefficientFunction(Polynomial{std::move(coeffs)});
    }

    static CoefficientFunction cosine_window(double lo, double hi, double amplitude = 1.0,
                                             double frequency = 1.0) {
        if (!(lo < hi)) {
            throw ConfigurationError("cosine window needs lo < hi");
        }
        return CoefficientFunction(CosineWindow{lo, hi, amplitude, frequency});
    }

    static CoefficientFunction tabulated(std::vector<double> x, std::vector<double> y) {
        if (x.size() != y.size() || x.size() < 2) {
            throw ConfigurationError("tabulated coefficient needs >= 2 matching (x, y) samples");
        }
        for (std::size_t i = 1; i < x.size(); ++i) {
            if (!(x[i] > x[i - 1])) {
                throw ConfigurationError("tabulated abscissae must be strictly increasing");
            }
        }
        if (x.front() > 0.0 || x.back() < 1.0) {
            throw ConfigurationError("tabulated coefficient must cover [0, 1]");
        }
        return CoefficientFunction(Tabulated{std::move(x), std::move(y)});
    }

    const Repr& repr() const noexcept { return repr_; }

    double operator()(double x) const {
        return std::visit([x](const auto& f) { return eval(f, x); }, repr_);
    }

    double derivative(double x) const {
        return std::visit([x](const auto& f) { return deriv(f, x); }, repr_);
    }

    Eigen::VectorXd sample(const Grid& grid) const {
        Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            out[static_cast<Eigen::Index>(i)] = (*this)(grid.node(i));
        }
        return out;
    }

    Eigen::VectorXd sample_derivative(const Grid& grid) const {
        Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            out[static_cast<Eigen::Index>(i)] = derivative(grid.node(i));
        }
        return out;
    }

private:
    explicit CoefficientFunction(Repr r) : repr_(std::move(r)) {}

    static double eval(const Constant& c, double) { return c.value; }

    static double eval(const Polynomial& p, double x) {
        double acc = 0.0;
        for (auto it = p.coeffs.rbegin(); it != p.coeffs.rend(); ++it) {
            acc = acc * x + *it;
        }
        return acc;
    }

    static double eval(const CosineWindow& w, double x) {
        constexpr double kJumpTol = 1e-12;
        const double v = w.amplitude * std::cos(w.frequency * x);
        if (std::abs(x - w.lo) < kJumpTol || std::abs(x - w.hi) < kJumpTol) {
            // a window touching 0 or 1 has no jump there
            const bool open_left = std::abs(x - w.lo) < kJumpTol && w.lo > kJumpTol;
            const bool open_right = std::abs(x - w.hi) < kJumpTol && w.hi < 1.0 - kJumpTol;
            return (open_left || open_right) ? 0.5 * v : v;
        }
        return (x > w.lo && x < w.hi) ? v : 0.0;
    }

    static double eval(const Tabulated& t, double x) {
        const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
        std::size_t i = static_cast<std::size_t>(std::distance(t.x.begin(), it));
        i = std::clamp<std::size_t>(i, 1, t.x.size() - 1);
        const double s = (x - t.x[i - 1]) / (t.x[i] - t.x[i - 1]);
        return (1.0 - s) * t.y[i - 1] + s * t.y[i];
    }

    static double deriv(const Constant&, double) { return 0.0; }

    static double deriv(const Polynomial& p, double x) {
        double acc = 0.0;
        for (std::size_t k = p.coeffs.size(); k-- > 1;) {
            acc = acc * x + static_cast<double>(k) * p.coeffs[k];
        }
        return acc;
    }

    static double deriv(const CosineWindow& w, double x) {
        if (x > w.lo && x < w.hi) {
            return -w.amplitude * w.frequency * std::sin(w.frequency * x);
        }
        return 0.0;
    }

    // Piecewise-linear data: slope of the containing segment, averaged at knots.
    static double deriv(const Tabulated& t, double x) {
        auto slope = [&t](std::size_t i) { return (t.y[i] - t.y[i - 1]) / (t.x[i] - t.x[i - 1]); };
        const auto it = std::lower_bound(t.x.begin(), t.x.end(), x);
        std::size_t i = static_cast<std::size_t>(std::distance(t.x.begin(), it));
        if (i < t.x.size() && t.x[i] == x) {
            if (i == 0) return slope(1);
            if (i == t.x.size() - 1) return slope(i);
            return 0.5 * (slope(i) + slope(i + 1));
        }
        i = std::clamp<std::size_t>(i, 1, t.x.size() - 1);
        return slope(i);
    }

    Repr repr_;
};

/// Plant data: diffusion p, open-loop reaction q0 (tilde q_0), sector center
/// qf (tilde q_f) and the two Robin angles.
struct PlantCoefficients {
    CoefficientFunction p = CoefficientFunction::constant(1.0);
    CoefficientFunction q0 = CoefficientFunction::constant(0.0);
    CoefficientFunction qf = CoefficientFunction::constant(0.0);
    double theta1 = std::numbers::pi / 2.0;
    double theta2 = 0.0;

    /// Net reaction q0 - qf sampled on the grid.
    Eigen::VectorXd net_reaction(const Grid& grid) const { return q0.sample(grid) - qf.sample(grid); }

    void validate(const Grid& grid) const {
        if (!(theta1 > 0.0 && theta1 <= std::numbers::pi / 2.0 + 1e-15)) {
            throw ConfigurationError("theta1 must lie in (0, pi/2]");
        }
        if (!(theta2 >= 0.0 && theta2 <= std::numbers::pi / 2.0 + 1e-15)) {
            throw ConfigurationError("theta2 must lie in [0, pi/2]");
        }
        const Eigen::VectorXd ps = p.sample(grid);
        if (ps.minCoeff() <= 0.0) {
            throw CoefficientSignError("diffusion p must be strictly positive on the grid (min " +
                                       std::to_string(ps.minCoeff()) + ")");
        }
    }
};

/// Split of the net reaction q0 - qf = q - qc with q > 0.
struct Decomposition {
    CoefficientFunction q = CoefficientFunction::constant(1.0);
    double qc = 0.0;

    /// qc = 1 - min(q0 - qf), so that q = (q0 - qf) + qc >= 1. For constant
    /// net reaction -5 this gives q = 1, qc = 6.
    static Decomposition shifted(const PlantCoefficients& coeffs, const Grid& grid) {
        const Eigen::VectorXd net = coeffs.net_reaction(grid);
        const double qc = 1.0 - net.minCoeff();
        std::vector<double> xs(grid.size());
        std::vector<double> ys(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            xs[i] = grid.node(i);
            ys[i] = net[static_cast<Eigen::Index>(i)] + qc;
        }
        Decomposition d;
        d.qc = qc;
        const bool constant = (net.maxCoeff() - net.minCoeff()) < 1e-14;
        d.q = constant ? CoefficientFunction::constant(net[0] + qc)
                       : CoefficientFunction::tabulated(std::move(xs), std::move(ys));
        return d;
    }

    void validate(const PlantCoefficients& coeffs, const Grid& grid) const {
        const Eigen::VectorXd qs = q.sample(grid);
        if (qs.minCoeff() <= 0.0) {
            throw CoefficientSignError("decomposition needs q > 0 on the grid (min " +
                                       std::to_string(qs.minCoeff()) + ")");
        }
        const Eigen::VectorXd mismatch = (qs.array() - qc).matrix() - coeffs.net_reaction(grid);
        if (mismatch.cwiseAbs().maxCoeff() > 1e-12) {
            throw ConfigurationError("decomposition violates q - qc = q0 - qf (max mismatch " +
                                     std::to_string(mismatch.cwiseAbs().maxCoeff()) + ")");
        }
    }
};

}  // namespace rdcert
