#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdcert/errors.hpp"

namespace rdcert {

using PoleList = std::vector<std::complex<double>>;

namespace detail {

inline void check_targets(const Eigen::VectorXd& a, const PoleList& targets) {
    if (targets.size() != static_cast<std::size_t>(a.size())) {
        throw ParameterError("expected " + std::to_string(a.size()) + " target poles, got " +
                             std::to_string(targets.size()));
    }
    // closure under conjugation, so that the characteristic polynomial is real
    std::vector<bool> used(targets.size(), false);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (used[i]) continue;
        const double tol = 1e-12 * std::max(1.0, std::abs(targets[i]));
        if (std::abs(targets[i].imag()) <= tol) {
            used[i] = true;
            continue;
        }
        bool found = false;
        for (std::size_t j = i + 1; j < targets.size() && !found; ++j) {
            if (!used[j] && std::abs(targets[j] - std::conj(targets[i])) <= tol) {
                used[i] = used[j] = true;
                found = true;
            }
        }
        if (!found) {
            throw ParameterError("target poles are not closed under complex conjugation");
        }
    }
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        for (Eigen::Index j = i + 1; j < a.size(); ++j) {
            if (a[i] == a[j]) {
                throw UncontrollableModeError("repeated open-loop eigenvalue; a single input cannot place it");
            }
        }
    }
}

// prod_k (a_i - p_k) / prod_{j != i} (a_i - a_j); real for conjugate-closed targets.
inline double placement_ratio(const Eigen::VectorXd& a, const PoleList& targets, Eigen::Index i) {
    std::complex<double> num = 1.0;
    for (const auto& p : targets) num *= (a[i] - p);
    double den = 1.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        if (j != i) den *= (a[i] - a[j]);
    }
    return num.real() / den;
}

}  // namespace detail

/// K such that diag(a) + b K has the target spectrum. Closed form for a
/// diagonal A: matching det(sI - A - bK) at s = a_i gives
/// K_i = -prod_k (a_i - p_k) / (b_i prod_{j != i} (a_i - a_j)).
inline Eigen::RowVectorXd place_single_input(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                             const PoleList& targets) {
    if (b.size() != a.size()) {
        throw ParameterError("input vector size does not match the state dimension");
    }
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        if (std::abs(b[i]) <= 1e-14 * scale) {
            throw UncontrollableModeError("input coefficient of mode " + std::to_string(i + 1) + " vanishes");
        }
    }
    detail::check_targets(a, targets);
    Eigen::RowVectorXd k(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        k[i] = -detail::placement_ratio(a, targets, i) / b[i];
    }
    return k;
}

/// L such that diag(a) - L c has the target spectrum. Note the dual relation
/// L = -place_single_input(a, c^T, targets)^T.
inline Eigen::VectorXd place_observer(const Eigen::VectorXd& a, const Eigen::RowVectorXd& c,
                                      const PoleList& targets) {
    if (c.size() != a.size()) {
        throw ParameterError("output row size does not match the state dimension");
    }
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        if (std::abs(c[i]) <= 1e-14 * scale) {
            throw UnobservableModeError("output trace of mode " + std::to_string(i + 1) + " vanishes");
        }
    }
    detail::check_targets(a, targets);
    Eigen::VectorXd l(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        l[i] = detail::placement_ratio(a, targets, i) / c[i];
    }
    return l;
}

inline PoleList eigenvalues(const Eigen::MatrixXd& m) {
    const Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    const Eigen::VectorXcd ev = es.eigenvalues();
    return PoleList(ev.data(), ev.data() + ev.size());
}

/// Largest distance between two spectra under a greedy nearest matching.
inline double spectrum_distance(PoleList got, const PoleList& want) {
    if (got.size() != want.size()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (const auto& w : want) {
        auto best = std::min_element(got.begin(), got.end(), [&w](const auto& x, const auto& y) {
            return std::abs(x - w) < std::abs(y - w);
        });
        worst = std::max(worst, std::abs(*best - w));
        got.erase(best);
    }
    return worst;
}

/// State poles -(delta + n), observer poles -(delta + 1 + n), n = 1..N0.
inline PoleList default_state_poles(double delta, std::size_t n0) {
    PoleList out;
    for (std::size_t n = 1; n <= n0; ++n) out.emplace_back(-(delta + 1.0 + static_cast<double>(n - 1)), 0.0);
    return out;
}

inline PoleList default_observer_poles(double delta, std::size_t n0) {
    PoleList out;
    for (std::size_t n = 1; n <= n0; ++n) out.emplace_back(-(delta + 2.0 + static_cast<double>(n - 1)), 0.0);
    return out;
}

}  // namespace rdcert
