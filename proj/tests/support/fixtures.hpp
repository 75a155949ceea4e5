#pragma once

// Shared plants for the tests: the worked example (Robin left end, net
// reaction -5, cosine window input) and the Neumann-Dirichlet heat operator.

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "rdcert/kf_search.hpp"
#include "rdcert/spectral.hpp"
#include "rdcert/synthesis.hpp"

namespace fixtures {

using namespace rdcert;

inline constexpr double kDistributedK = -25.9768;
inline constexpr double kBoundaryK = -2.3307;
inline constexpr double kObserverL = 5.9341;

inline PlantCoefficients example_plant() {
    PlantCoefficients c;
    c.p = CoefficientFunction::constant(1.0);
    c.q0 = CoefficientFunction::constant(-2.0);
    c.qf = CoefficientFunction::constant(3.0);
    c.theta1 = std::numbers::pi / 5.0;
    c.theta2 = 0.0;
    return c;
}

inline Decomposition example_decomposition() {
    Decomposition d;
    d.q = CoefficientFunction::constant(1.0);
    d.qc = 6.0;
    return d;
}

inline CoefficientFunction example_shape() { return CoefficientFunction::cosine_window(0.1, 0.3); }

inline const EigenBasis& example_basis() {
    static const EigenBasis basis = eigendecompose(example_plant(), example_decomposition(), Grid(4001), 120);
    return basis;
}

/// q = 0 is outside the operator's contract (q > 0); a potential of 1e-300
/// is the same operator to every printed digit.
inline PlantCoefficients heat_plant(double theta1 = std::numbers::pi / 2.0) {
    PlantCoefficients c;
    c.theta1 = theta1;
    c.theta2 = 0.0;
    return c;
}

inline Decomposition heat_decomposition(double q = 1e-300) {
    Decomposition d;
    d.q = CoefficientFunction::constant(q);
    d.qc = 0.0;
    return d;
}

inline EigenBasis heat_basis(std::size_t grid_size = 4001, std::size_t n_max = 120,
                             double theta1 = std::numbers::pi / 2.0, double q = 1e-300) {
    return eigendecompose(heat_plant(theta1), heat_decomposition(q), Grid(grid_size), n_max);
}

/// mu_n = (2n - 1) pi / 2 for the Neumann-Dirichlet problem.
inline double nd_mu(std::size_t n) { return (2.0 * static_cast<double>(n) - 1.0) * std::numbers::pi / 2.0; }

inline ModalPlant example_plant_modal(Actuation a, std::size_t n, double delta = 0.25) {
    return build_modal_plant(example_basis(), example_plant(), example_decomposition(), a, example_shape(), 1, n,
                             delta);
}

inline GainSet example_gains(const ModalPlant& plant, double delta = 0.25) {
    Eigen::RowVectorXd k(1);
    k << (plant.actuation == Actuation::Distributed ? kDistributedK : kBoundaryK);
    Eigen::VectorXd l(1);
    l << kObserverL;
    return explicit_gains(plant, delta, k, l);
}

inline CellInput example_cell(Actuation a, std::size_t n, double delta = 0.25) {
    CellInput in;
    in.plant = example_plant_modal(a, n, delta);
    in.gains = example_gains(in.plant, delta);
    in.mats = assemble(in.plant, in.gains);
    return in;
}

inline CellBuilder example_builder() {
    return [](Theorem th, std::size_t n, double delta) {
        return example_cell(th == Theorem::Two ? Actuation::Distributed : Actuation::Boundary, n, delta);
    };
}

inline double max_abs_eigenvalue_gap(Eigen::VectorXd got, Eigen::VectorXd want) {
    std::sort(got.data(), got.data() + got.size());
    std::sort(want.data(), want.data() + want.size());
    return (got - want).cwiseAbs().maxCoeff();
}

}  // namespace fixtures
