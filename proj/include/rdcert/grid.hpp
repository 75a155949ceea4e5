#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "rdcert/errors.hpp"

namespace rdcert {

/// Uniform grid on [0, 1] with trapezoid quadrature weights.
class Grid {
public:
    explicit Grid(std::size_t node_count) : m_(node_count) {
        if (m_ < 3) {
            throw RangeError("grid needs at least 3 nodes");
        }
        h_ = 1.0 / static_cast<double>(m_ - 1);
        nodes_.resize(static_cast<Eigen::Index>(m_));
        weights_.resize(static_cast<Eigen::Index>(m_));
        for (std::size_t i = 0; i < m_; ++i) {
            nodes_[static_cast<Eigen::Index>(i)] = static_cast<double>(i) * h_;
            weights_[static_cast<Eigen::Index>(i)] = h_;
        }
        nodes_[static_cast<Eigen::Index>(m_ - 1)] = 1.0;
        weights_[0] = 0.5 * h_;
        weights_[static_cast<Eigen::Index>(m_ - 1)] = 0.5 * h_;
    }

    std::size_t size() const noexcept { return m_; }
    double spacing() const noexcept { return h_; }
    const Eigen::VectorXd& nodes() const noexcept { return nodes_; }
    const Eigen::VectorXd& quad_weights() const noexcept { return weights_; }
    double node(std::size_t i) const { return nodes_[static_cast<Eigen::Index>(i)]; }

    double integrate(const Eigen::VectorXd& f) const {
        check_size(f);
        return weights_.dot(f);
    }

    double inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
        check_size(f);
        check_size(g);
        return (weights_.array() * f.array() * g.array()).sum();
    }

    double norm_sq(const Eigen::VectorXd& f) const { return inner(f, f); }

private:
    void check_size(const Eigen::VectorXd& f) const {
        if (static_cast<std::size_t>(f.size()) != m_) {
            throw RangeError("grid function has " + std::to_string(f.size()) +
                             " samples, grid has " + std::to_string(m_));
        }
    }

    std::size_t m_;
    double h_ = 0.0;
    Eigen::VectorXd nodes_;
    Eigen::VectorXd weights_;
};

}  // namespace rdcert
