#pragma once

#include <cstddef>
#include <memory>

#include "rdcert/config.hpp"
#include "rdcert/kf_search.hpp"
#include "rdcert/simulator.hpp"
#include "rdcert/spectral.hpp"
#include "rdcert/synthesis.hpp"

namespace rdcert {

/// Spectral data shared by every command of one run.
struct Setup {
    RunConfig cfg;
    Decomposition dec;
    std::shared_ptr<const EigenBasis> basis;
};

inline Setup make_setup(const RunConfig& cfg) {
    const Grid grid(cfg.spectral.grid_size);
    cfg.plant.validate(grid);
    Setup s;
    s.cfg = cfg;
    s.dec = cfg.decomposition ? *cfg.decomposition : Decomposition::shifted(cfg.plant, grid);
    s.dec.validate(cfg.plant, grid);
    s.basis = std::make_shared<const EigenBasis>(eigendecompose(cfg.plant, s.dec, grid, cfg.spectral.n_max));
    return s;
}

inline ModalPlant make_plant(const Setup& s, Actuation a, std::size_t n, double delta) {
    return build_modal_plant(*s.basis, s.cfg.plant, s.dec, a, s.cfg.input_shape, s.cfg.design.N0, n, delta);
}

/// Explicit gains from the config when present, pole placement otherwise.
inline GainSet make_gains(const Setup& s, const ModalPlant& plant, double delta) {
    const auto& explicit_case = s.cfg.design.gains_for(plant.actuation);
    if (explicit_case) return explicit_gains(plant, delta, explicit_case->K, explicit_case->L);
    return design_gains(plant, delta, s.cfg.design.state_poles, s.cfg.design.observer_poles);
}

inline CellInput make_cell(const Setup& s, Actuation a, std::size_t n, double delta) {
    CellInput in;
    in.plant = make_plant(s, a, n, delta);
    in.gains = make_gains(s, in.plant, delta);
    in.mats = assemble(in.plant, in.gains);
    return in;
}

inline CellBuilder table1_builder(const Setup& s) {
    return [&s](Theorem th, std::size_t n, double delta) {
        return make_cell(s, th == Theorem::Two ? Actuation::Distributed : Actuation::Boundary, n, delta);
    };
}

inline SimConfig make_sim_config(const Setup& s, const ModalPlant& plant, const GainSet& gains) {
    SimConfig c;
    c.plant = s.cfg.plant;
    c.decomposition = s.dec;
    c.input_shape = s.cfg.input_shape;
    c.grid_size = s.cfg.sim.grid_size;
    c.dt = s.cfg.sim.dt;
    c.horizon = s.cfg.sim.horizon;
    c.n_proj = s.cfg.sim.n_proj;
    c.record_interval = s.cfg.sim.record_interval;
    c.controller = ControllerRealization::from(plant, gains);
    const Grid grid(c.grid_size);
    if (s.cfg.sim.z0 == "phi1") {
        c.z0 = simulation_basis(c).phi(1);
    } else {
        c.z0 = unit_h1_bump(grid);
    }
    c.zhat0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(plant.N));
    return c;
}

inline Trajectory run_simulation(const SimConfig& c, const NonlinearitySpec& nl) {
    return c.controller.actuation == Actuation::Distributed ? simulate_distributed(c, nl) : simulate_boundary(c, nl);
}

}  // namespace rdcert
