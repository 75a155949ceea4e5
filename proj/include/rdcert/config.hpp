#pragma once

#include <complex>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "rdcert/coefficients.hpp"
#include "rdcert/errors.hpp"
#include "rdcert/kf_search.hpp"
#include "rdcert/placement.hpp"
#include "rdcert/simulator.hpp"
#include "rdcert/synthesis.hpp"

namespace rdcert {

using Json = nlohmann::json;

struct CaseGains {
    Eigen::RowVectorXd K;
    Eigen::VectorXd L;
};

struct DesignConfig {
    double delta = 0.25;
    std::size_t N0 = 1;
    std::size_t N = 2;
    PoleList state_poles;     // empty: defaults
    PoleList observer_poles;  // empty: defaults
    std::optional<CaseGains> distributed;
    std::optional<CaseGains> boundary;

    const std::optional<CaseGains>& gains_for(Actuation a) const {
        return a == Actuation::Distributed ? distributed : boundary;
    }
};

struct SpectralConfig {
    std::size_t grid_size = 4001;
    std::size_t n_max = 120;
};

struct LmiConfig {
    double gamma = 1.0;
    std::vector<double> gamma_grid = default_gamma_grid();
    double kf = 0.0;
    double eps_margin = kEpsMargin;
    double eps_p = kEpsP;
    int max_newton = 800;
    int random_starts = 1;
};

struct SearchConfig {
    double tolerance = 1e-2;
    double kf_initial = 0.1;
    double kf_cap = 1e3;
    std::vector<double> deltas = {0.25, 0.5, 0.75, 1.0};
    std::vector<std::size_t> N_values = {2, 3, 4, 5, 6};
};

struct SimSection {
    std::size_t grid_size = 401;
    double dt = 2e-4;
    double horizon = 10.0;
    std::size_t n_proj = 40;
    std::string z0 = "bump";  // bump | phi1
    GKind g_kind = GKind::Sine;
    double kf_fraction = 0.9;  // of the searched k_f*, unless kf_used is given
    std::optional<double> kf_used;
    double record_interval = 0.01;
    double tol_V = 0.05;
    double fit_window = 5.0;
};

struct RunConfig {
    PlantCoefficients plant;
    Actuation actuation = Actuation::Distributed;
    std::optional<CoefficientFunction> input_shape;
    std::optional<Decomposition> decomposition;  // empty: Decomposition::shifted
    DesignConfig design;
    SpectralConfig spectral;
    LmiConfig lmi;
    SearchConfig search;
    SimSection sim;
    std::string output_dir = "out";
    Json source;  // the parsed document, for hashing
};

namespace detail {

inline void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigurationError(where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) throw ConfigurationError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T get(const Json& obj, const std::string& key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(where + "." + key + ": " + e.what());
    }
}

template <typename T>
void maybe(const Json& obj, const std::string& key, const std::string& where, T& out) {
    if (obj.contains(key)) out = get<T>(obj, key, where);
}

inline CoefficientFunction parse_coefficient(const Json& j, const std::string& where) {
    if (j.is_number()) return CoefficientFunction::constant(j.get<double>());
    if (!j.is_object() || j.size() != 1) {
        throw ConfigurationError(where + " must be a number or a single-key object");
    }
    const auto& [kind, body] = *j.items().begin();
    if (kind == "polynomial") {
        return CoefficientFunction::polynomial(get<std::vector<double>>(j, kind, where));
    }
    if (kind == "cosine_window") {
        const std::string w = where + ".cosine_window";
        check_keys(body, w, {"lo", "hi", "amplitude", "frequency"});
        double amp = 1.0;
        double freq = 1.0;
        maybe(body, "amplitude", w, amp);
        maybe(body, "frequency", w, freq);
        return CoefficientFunction::cosine_window(get<double>(body, "lo", w), get<double>(body, "hi", w), amp, freq);
    }
    if (kind == "tabulated") {
        const std::string w = where + ".tabulated";
        check_keys(body, w, {"x", "y"});
        return CoefficientFunction::tabulated(get<std::vector<double>>(body, "x", w),
                                              get<std::vector<double>>(body, "y", w));
    }
    throw ConfigurationError(where + ": unknown coefficient kind '" + kind + "'");
}

inline PoleList parse_poles(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigurationError(where + " must be an array");
    PoleList out;
    for (const auto& p : j) {
        if (p.is_number()) {
            out.emplace_back(p.get<double>(), 0.0);
        } else if (p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number()) {
            out.emplace_back(p[0].get<double>(), p[1].get<double>());
        } else {
            throw ConfigurationError(where + ": poles are numbers or [re, im] pairs");
        }
    }
    return out;
}

inline CaseGains parse_gains(const Json& j, const std::string& where) {
    check_keys(j, where, {"K", "L"});
    const auto k = get<std::vector<double>>(j, "K", where);
    const auto l = get<std::vector<double>>(j, "L", where);
    CaseGains g;
    g.K = Eigen::Map<const Eigen::RowVectorXd>(k.data(), static_cast<Eigen::Index>(k.size()));
    g.L = Eigen::Map<const Eigen::VectorXd>(l.data(), static_cast<Eigen::Index>(l.size()));
    return g;
}

inline Actuation parse_actuation(const std::string& s) {
    if (s == "distributed") return Actuation::Distributed;
    if (s == "boundary") return Actuation::Boundary;
    throw ConfigurationError("actuation must be 'distributed' or 'boundary', got '" + s + "'");
}

}  // namespace detail

/// Parses and validates a run configuration; unknown keys are rejected.
inline RunConfig parse_config(const Json& doc) {
    using detail::check_keys;
    using detail::get;
    using detail::maybe;
    check_keys(doc, "config", {"plant", "decomposition", "design", "spectral", "lmi", "search", "sim", "output_dir"});
    RunConfig cfg;
    cfg.source = doc;

    const Json& plant = doc.at("plant");
    check_keys(plant, "plant", {"p", "q0", "qf", "theta1", "theta2", "actuation", "input_shape"});
    if (plant.contains("p")) cfg.plant.p = detail::parse_coefficient(plant["p"], "plant.p");
    if (plant.contains("q0")) cfg.plant.q0 = detail::parse_coefficient(plant["q0"], "plant.q0");
    if (plant.contains("qf")) cfg.plant.qf = detail::parse_coefficient(plant["qf"], "plant.qf");
    cfg.plant.theta1 = get<double>(plant, "theta1", "plant");
    cfg.plant.theta2 = get<double>(plant, "theta2", "plant");
    cfg.actuation = detail::parse_actuation(get<std::string>(plant, "actuation", "plant"));
    if (plant.contains("input_shape")) {
        cfg.input_shape = detail::parse_coefficient(plant["input_shape"], "plant.input_shape");
    }
    if (cfg.actuation == Actuation::Distributed && !cfg.input_shape) {
        throw ConfigurationError("plant.input_shape is required for distributed actuation");
    }

    if (doc.contains("decomposition")) {
        const Json& d = doc["decomposition"];
        check_keys(d, "decomposition", {"q", "qc"});
        Decomposition dec;
        dec.q = detail::parse_coefficient(d.at("q"), "decomposition.q");
        dec.qc = get<double>(d, "qc", "decomposition");
        cfg.decomposition = dec;
    }

    if (doc.contains("design")) {
        const Json& d = doc["design"];
        check_keys(d, "design", {"delta", "N0", "N", "state_poles", "observer_poles", "gains"});
        maybe(d, "delta", "design", cfg.design.delta);
        maybe(d, "N0", "design", cfg.design.N0);
        maybe(d, "N", "design", cfg.design.N);
        if (d.contains("state_poles")) cfg.design.state_poles = detail::parse_poles(d["state_poles"], "design.state_poles");
        if (d.contains("observer_poles")) {
            cfg.design.observer_poles = detail::parse_poles(d["observer_poles"], "design.observer_poles");
        }
        if (d.contains("gains")) {
            const Json& g = d["gains"];
            check_keys(g, "design.gains", {"distributed", "boundary"});
            if (g.contains("distributed")) {
                cfg.design.distributed = detail::parse_gains(g["distributed"], "design.gains.distributed");
            }
            if (g.contains("boundary")) cfg.design.boundary = detail::parse_gains(g["boundary"], "design.gains.boundary");
        }
    }

    if (doc.contains("spectral")) {
        const Json& s = doc["spectral"];
        check_keys(s, "spectral", {"grid_size", "n_max"});
        maybe(s, "grid_size", "spectral", cfg.spectral.grid_size);
        maybe(s, "n_max", "spectral", cfg.spectral.n_max);
    }

    if (doc.contains("lmi")) {
        const Json& l = doc["lmi"];
        check_keys(l, "lmi", {"gamma", "gamma_grid", "kf", "eps_margin", "eps_p", "max_newton", "random_starts"});
        maybe(l, "gamma", "lmi", cfg.lmi.gamma);
        maybe(l, "gamma_grid", "lmi", cfg.lmi.gamma_grid);
        maybe(l, "kf", "lmi", cfg.lmi.kf);
        maybe(l, "eps_margin", "lmi", cfg.lmi.eps_margin);
        maybe(l, "eps_p", "lmi", cfg.lmi.eps_p);
        maybe(l, "max_newton", "lmi", cfg.lmi.max_newton);
        maybe(l, "random_starts", "lmi", cfg.lmi.random_starts);
    }

    if (doc.contains("search")) {
        const Json& s = doc["search"];
        check_keys(s, "search", {"tolerance", "kf_initial", "kf_cap", "deltas", "N_values"});
        maybe(s, "tolerance", "search", cfg.search.tolerance);
        maybe(s, "kf_initial", "search", cfg.search.kf_initial);
        maybe(s, "kf_cap", "search", cfg.search.kf_cap);
        maybe(s, "deltas", "search", cfg.search.deltas);
        maybe(s, "N_values", "search", cfg.search.N_values);
    }

    if (doc.contains("sim")) {
        const Json& s = doc["sim"];
        check_keys(s, "sim", {"grid_size", "dt", "horizon", "n_proj", "z0", "g_kind", "kf_fraction", "kf_used",
                              "record_interval", "tol_V", "fit_window"});
        maybe(s, "grid_size", "sim", cfg.sim.grid_size);
        maybe(s, "dt", "sim", cfg.sim.dt);
        maybe(s, "horizon", "sim", cfg.sim.horizon);
        maybe(s, "n_proj", "sim", cfg.sim.n_proj);
        maybe(s, "z0", "sim", cfg.sim.z0);
        if (s.contains("g_kind")) cfg.sim.g_kind = gkind_from_string(get<std::string>(s, "g_kind", "sim"));
        maybe(s, "kf_fraction", "sim", cfg.sim.kf_fraction);
        if (s.contains("kf_used")) cfg.sim.kf_used = get<double>(s, "kf_used", "sim");
        maybe(s, "record_interval", "sim", cfg.sim.record_interval);
        maybe(s, "tol_V", "sim", cfg.sim.tol_V);
        maybe(s, "fit_window", "sim", cfg.sim.fit_window);
        if (cfg.sim.z0 != "bump" && cfg.sim.z0 != "phi1") {
            throw ConfigurationError("sim.z0 must be 'bump' or 'phi1'");
        }
    }
    maybe(doc, "output_dir", "config", cfg.output_dir);

    // ranges that can be checked before any computation
    if (!(cfg.design.delta > 0.0)) throw ConfigurationError("design.delta must be positive");
    if (cfg.design.N0 < 1 || cfg.design.N < cfg.design.N0 + 1) {
        throw ConfigurationError("design needs N0 >= 1 and N >= N0 + 1");
    }
    if (cfg.spectral.grid_size < 10 * cfg.spectral.n_max) {
        throw ConfigurationError("spectral.grid_size must be at least 10 * n_max");
    }
    if (!(cfg.lmi.gamma > 0.0)) throw ConfigurationError("lmi.gamma must be positive");
    for (const double g : cfg.lmi.gamma_grid) {
        if (!(g > 0.0)) throw ConfigurationError("lmi.gamma_grid entries must be positive");
    }
    if (cfg.lmi.gamma_grid.empty()) throw ConfigurationError("lmi.gamma_grid is empty");
    if (!(cfg.lmi.kf >= 0.0)) throw ConfigurationError("lmi.kf must be nonnegative");
    if (!(cfg.search.tolerance > 0.0) || !(cfg.search.kf_initial > 0.0)) {
        throw ConfigurationError("search.tolerance and search.kf_initial must be positive");
    }
    for (const double d : cfg.search.deltas) {
        if (!(d > 0.0)) throw ConfigurationError("search.deltas entries must be positive");
    }
    if (!(cfg.sim.dt > 0.0) || !(cfg.sim.horizon > 0.0)) {
        throw ConfigurationError("sim.dt and sim.horizon must be positive");
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot read config file " + path);
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError("config " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

inline SolverOptions solver_options(const RunConfig& cfg, std::uint64_t seed) {
    SolverOptions o;
    o.eps_margin = cfg.lmi.eps_margin;
    o.eps_p = cfg.lmi.eps_p;
    o.max_newton = cfg.lmi.max_newton;
    o.random_starts = cfg.lmi.random_starts;
    o.seed = seed;
    return o;
}

inline SearchSpec search_spec(const RunConfig& cfg, std::uint64_t seed) {
    SearchSpec s;
    s.gamma_grid = cfg.lmi.gamma_grid;
    s.tolerance = cfg.search.tolerance;
    s.kf_initial = cfg.search.kf_initial;
    s.kf_cap = cfg.search.kf_cap;
    s.solver = solver_options(cfg, seed);
    return s;
}

}  // namespace rdcert
