#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "rdcert/errors.hpp"

namespace rdcert::tridiag {

// Symmetric tridiagonal matrix: diagonal d (size n), off-diagonal e (size n-1).
struct Symmetric {
    Eigen::VectorXd d;
    Eigen::VectorXd e;

    Eigen::Index size() const noexcept { return d.size(); }
};

/// Number of eigenvalues strictly below x (Sturm sequence from LDL^T pivots).
inline Eigen::Index count_below(const Symmetric& t, double x) {
    const Eigen::Index n = t.size();
    // pivot floor as in LAPACK dstebz: zero pivots count as negative
    const double e2max = n > 1 ? t.e.cwiseAbs2().maxCoeff() : 0.0;
    const double pivmin = std::numeric_limits<double>::min() * std::max(1.0, e2max);
    Eigen::Index count = 0;
    double q = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        q = (t.d[i] - x) - (i > 0 ? t.e[i - 1] * t.e[i - 1] / q : 0.0);
        if (std::abs(q) <= pivmin) q = -pivmin;
        if (q < 0.0) ++count;
    }
    return count;
}

/// Gershgorin enclosure of the spectrum.
inline std::pair<double, double> gershgorin(const Symmetric& t) {
    const Eigen::Index n = t.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(t.e[i - 1]);
        if (i + 1 < n) r += std::abs(t.e[i]);
        lo = std::min(lo, t.d[i] - r);
        hi = std::max(hi, t.d[i] + r);
    }
    return {lo, hi};
}

/// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
inline double kth_eigenvalue(const Symmetric& t, Eigen::Index k) {
    auto [lo, hi] = gershgorin(t);
    const double scale = std::max(std::abs(lo), std::abs(hi));
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1.0) * 1e-2) break;
        if (count_below(t, mid) > k) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Solves (T - shift I) x = b with partial pivoting (LAPACK gttrf/gttrs style).
inline Eigen::VectorXd solve_shifted(const Symmetric& t, double shift, const Eigen::VectorXd& b) {
    const Eigen::Index n = t.size();
    Eigen::VectorXd dl = t.e;
    Eigen::VectorXd d = t.d.array() - shift;
    Eigen::VectorXd du = t.e;
    Eigen::VectorXd du2 = Eigen::VectorXd::Zero(std::max<Eigen::Index>(n - 2, 0));
    std::vector<bool> swapped(static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 0)), false);
    const double tiny = std::numeric_limits<double>::epsilon() *
                        std::max(1.0, t.d.cwiseAbs().maxCoeff() + 2.0 * t.e.cwiseAbs().maxCoeff());

    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            if (std::abs(d[i]) < tiny) d[i] = tiny;
            const double f = dl[i] / d[i];
            dl[i] = f;
            d[i + 1] -= f * du[i];
        } else {
            const double f = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = f;
            const double tmp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = tmp - f * d[i + 1];
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du[i + 1];
            }
            swapped[static_cast<std::size_t>(i)] = true;
        }
    }
    if (std::abs(d[n - 1]) < tiny) d[n - 1] = tiny;

    Eigen::VectorXd x = b;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        if (swapped[static_cast<std::size_t>(i)]) {
            const double tmp = x[i];
            x[i] = x[i + 1];
            x[i + 1] = tmp - dl[i] * x[i];
        } else {
            x[i + 1] -= dl[i] * x[i];
        }
    }
    x[n - 1] /= d[n - 1];
    if (n > 1) x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    for (Eigen::Index i = n - 3; i >= 0; --i) {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    return x;
}

struct EigenPairs {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns, Euclidean unit norm
};

/// The `count` smallest eigenpairs: Sturm bisection for the values, inverse
/// iteration for the vectors, Gram-Schmidt against earlier vectors whose
/// eigenvalues are close.
inline EigenPairs smallest_eigenpairs(const Symmetric& t, Eigen::Index count) {
    const Eigen::Index n = t.size();
    if (count > n) {
        throw RangeError("requested more eigenpairs than the matrix dimension");
    }
    EigenPairs out;
    out.values.resize(count);
    out.vectors.resize(n, count);
    const double norm_est = std::max(std::abs(gershgorin(t).first), std::abs(gershgorin(t).second));
    for (Eigen::Index k = 0; k < count; ++k) {
        const double lambda = kth_eigenvalue(t, k);
        out.values[k] = lambda;
        Eigen::VectorXd v(n);
        // deterministic start vector with components in every direction
        for (Eigen::Index i = 0; i < n; ++i) {
            v[i] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3 * static_cast<double>(k));
        }
        v.normalize();
        const double shift = lambda + 8.0 * std::numeric_limits<double>::epsilon() * std::max(norm_est, 1.0);
        for (int it = 0; it < 3; ++it) {
            v = solve_shifted(t, shift, v);
            for (Eigen::Index j = 0; j < k; ++j) {
                if (std::abs(out.values[j] - lambda) < 1e-6 * std::max(norm_est, 1.0)) {
                    v -= out.vectors.col(j).dot(v) * out.vectors.col(j);
                }
            }
            v.normalize();
        }
        out.vectors.col(k) = v;
    }
    return out;
}

/// General (non-symmetric) tridiagonal LU without pivoting, for diagonally
/// dominant systems such as the implicit time-stepping matrix.
class ThomasSolver {
public:
    ThomasSolver() = default;

    ThomasSolver(Eigen::VectorXd lower, Eigen::VectorXd diag, Eigen::VectorXd upper)
        : lower_(std::move(lower)), upper_(std::move(upper)), diag_(std::move(diag)) {
        const Eigen::Index n = diag_.size();
        cprime_.resize(std::max<Eigen::Index>(n - 1, 0));
        denom_.resize(n);
        denom_[0] = diag_[0];
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            cprime_[i] = upper_[i] / denom_[i];
            denom_[i + 1] = diag_[i + 1] - lower_[i] * cprime_[i];
        }
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        const Eigen::Index n = diag_.size();
        Eigen::VectorXd x(n);
        x[0] = rhs[0] / denom_[0];
        for (Eigen::Index i = 1; i < n; ++i) {
            x[i] = (rhs[i] - lower_[i - 1] * x[i - 1]) / denom_[i];
        }
        for (Eigen::Index i = n - 2; i >= 0; --i) {
            x[i] -= cprime_[i] * x[i + 1];
        }
        return x;
    }

private:
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
    Eigen::VectorXd diag_;
    Eigen::VectorXd cprime_;
    Eigen::VectorXd denom_;
};

}  // namespace rdcert::tridiag
