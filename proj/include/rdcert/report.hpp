#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rdcert/errors.hpp"
#include "rdcert/kf_search.hpp"
#include "rdcert/sdp_solver.hpp"
#include "rdcert/simulator.hpp"
#include "rdcert/spectral.hpp"
#include "rdcert/synthesis.hpp"

namespace rdcert {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (const unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Hash of the canonical config text and the seed.
inline std::string config_hash(const std::string& canonical_config, std::uint64_t seed) {
    return hex64(fnv1a(std::to_string(seed), fnv1a(canonical_config)));
}

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string csv_header(const std::string& hash, const std::string& command) {
    return "# config_hash " + hash + "\n# command " + command + "\n";
}

inline std::string eigs_csv(const EigenBasis& basis, const std::string& hash) {
    std::ostringstream out;
    out << csv_header(hash, "eigs");
    out << "n,lambda,phi_0,dphi_0,phi_1,dphi_1,bracket_lower,bracket_upper\n";
    for (std::size_t n = 1; n <= basis.n_max; ++n) {
        const auto k = static_cast<Eigen::Index>(n - 1);
        out << n << ',' << num(basis.lambdas[k]) << ',' << num(basis.traces.at0[k]) << ','
            << num(basis.traces.slope_at0[k]) << ',' << num(basis.traces.at1[k]) << ','
            << num(basis.traces.slope_at1[k]) << ',' << num(basis.bracket.lower(n)) << ','
            << num(basis.bracket.upper(n)) << '\n';
    }
    return out.str();
}

inline std::string poles_text(const PoleList& poles) {
    std::string s;
    for (std::size_t i = 0; i < poles.size(); ++i) {
        if (i) s += ' ';
        s += num(poles[i].real());
        if (poles[i].imag() != 0.0) s += (poles[i].imag() > 0 ? "+" : "") + num(poles[i].imag()) + "i";
    }
    return s;
}

inline std::string gains_report(const ModalPlant& plant, const GainSet& gains, const std::string& hash) {
    const Eigen::MatrixXd a0 = plant.a0().asDiagonal();
    const PoleList state = eigenvalues(a0 + plant.b0() * gains.K);
    const PoleList obs = eigenvalues(a0 - gains.L * plant.c0());
    std::ostringstream out;
    out << "# config_hash " << hash << "\n";
    out << "actuation " << to_string(plant.actuation) << "\nN0 " << plant.N0 << "\nN " << plant.N << "\n";
    out << "delta " << num(gains.delta) << "\n";
    out << "K";
    for (Eigen::Index i = 0; i < gains.K.size(); ++i) out << ' ' << num(gains.K[i]);
    out << "\nL";
    for (Eigen::Index i = 0; i < gains.L.size(); ++i) out << ' ' << num(gains.L[i]);
    out << "\ntarget_state_poles " << poles_text(gains.target_poles_state);
    out << "\nplaced_state_poles " << poles_text(state);
    out << "\nstate_placement_error " << num(spectrum_distance(state, gains.target_poles_state));
    out << "\ntarget_observer_poles " << poles_text(gains.target_poles_observer);
    out << "\nplaced_observer_poles " << poles_text(obs);
    out << "\nobserver_placement_error " << num(spectrum_distance(obs, gains.target_poles_observer)) << "\n";
    return out.str();
}

inline std::string certificate_report(const Certificate& cert, const MarginReport& rep, const std::string& hash) {
    std::ostringstream out;
    out << "# config_hash " << hash << "\n";
    out << "theorem " << to_string(cert.theorem) << "\nN " << cert.N << "\ndelta " << num(cert.delta)
        << "\ngamma " << num(cert.gamma) << "\nkf " << num(cert.kf) << "\nbeta " << num(cert.beta) << "\n";
    out << "alphas";
    for (Eigen::Index i = 0; i < cert.alphas.size(); ++i) out << ' ' << num(cert.alphas[i]);
    out << "\ntheta2_scalar " << num(rep.theta2_scalar) << "\np_min_eigenvalue " << num(rep.p_min_eigenvalue) << "\n";
    for (const auto& [name, m] : rep.margins) out << "margin " << name << ' ' << num(m) << "\n";
    out << "verified " << (rep.pass ? "yes" : "no") << "\n";
    for (const auto& v : rep.violations) out << "violation " << v << "\n";
    out << "P " << cert.P.rows() << "\n";
    for (Eigen::Index i = 0; i < cert.P.rows(); ++i) {
        for (Eigen::Index j = 0; j < cert.P.cols(); ++j) out << (j ? " " : "") << num(cert.P(i, j));
        out << "\n";
    }
    return out.str();
}

inline std::string maxkf_csv(const KfResult& r, const std::string& hash) {
    std::ostringstream out;
    out << csv_header(hash, "max-kf");
    out << "# theorem " << to_string(r.theorem) << " N " << r.N << " delta " << num(r.delta) << " kf_star "
        << num(r.kf_star) << " monotone " << (r.monotone ? "yes" : "no") << "\n";
    if (!r.diagnostic.empty()) out << "# diagnostic " << r.diagnostic << "\n";
    out << "probe,kf,verdict,gamma\n";
    for (std::size_t i = 0; i < r.log.size(); ++i) {
        out << i << ',' << num(r.log[i].kf) << ',' << to_string(r.log[i].verdict) << ',' << num(r.log[i].gamma)
            << '\n';
    }
    return out.str();
}

/// Paper values of the maximal sector bound, for the comparison column.
inline double table1_reference(Theorem th, std::size_t n) {
    static const double thm2[] = {1.99, 2.32, 2.45, 2.54, 2.59};
    static const double thm3[] = {1.93, 2.14, 2.21, 2.25, 2.27};
    if (n < 2 || n > 6) return std::numeric_limits<double>::quiet_NaN();
    return th == Theorem::Two ? thm2[n - 2] : thm3[n - 2];
}

inline std::string table1_csv(const Table1Result& t, const std::string& hash) {
    std::ostringstream out;
    out << csv_header(hash, "table1");
    out << "theorem,N,kf_star,best_delta,reference,relative_deviation";
    std::vector<double> deltas;
    if (!t.cells.empty()) {
        for (const auto& r : t.cells.front().per_delta) deltas.push_back(r.delta);
    }
    for (const double d : deltas) out << ",kf_delta_" << num(d);
    out << ",monotone,notes\n";
    for (const auto& c : t.cells) {
        const double ref = table1_reference(c.theorem, c.N);
        bool mono = true;
        for (const auto& r : c.per_delta) mono = mono && r.monotone;
        out << to_string(c.theorem) << ',' << c.N << ',' << num(c.kf_star) << ',' << num(c.best_delta) << ','
            << num(ref) << ',' << num((c.kf_star - ref) / ref);
        for (const auto& r : c.per_delta) out << ',' << num(r.kf_star);
        std::string notes = c.error;
        for (char& ch : notes) {
            if (ch == ',' || ch == '\n') ch = ';';
        }
        out << ',' << (mono ? "yes" : "no") << ',' << notes << '\n';
    }
    return out.str();
}

inline std::string trajectory_csv(const Trajectory& traj, const std::string& hash) {
    std::ostringstream out;
    out << csv_header(hash, "simulate");
    out << "t,L2_norm,H1_norm,y,u,v,V\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out << num(traj.t[k]) << ',' << num(traj.l2[k]) << ',' << num(traj.h1[k]) << ',' << num(traj.y[k]) << ','
            << num(traj.u[k]) << ',' << num(traj.v[k]) << ',' << (k < traj.V.size() ? num(traj.V[k]) : "") << '\n';
    }
    return out.str();
}

inline std::string matrix_csv(const Eigen::MatrixXd& m, const std::string& hash, const std::string& name) {
    std::ostringstream out;
    out << csv_header(hash, "gains") << "# matrix " << name << " " << m.rows() << "x" << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << num(m(i, j));
        out << '\n';
    }
    return out.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigurationError("cannot write " + path.string());
    f << text;
}

}  // namespace rdcert
