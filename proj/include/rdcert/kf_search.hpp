#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "rdcert/errors.hpp"
#include "rdcert/sdp_solver.hpp"
#include "rdcert/synthesis.hpp"

namespace rdcert {

/// 10^-3 .. 10^2 in 11 logarithmic steps.
inline std::vector<double> default_gamma_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 10; ++i) g.push_back(std::pow(10.0, -3.0 + 0.5 * i));
    return g;
}

struct SearchSpec {
    std::vector<double> gamma_grid = default_gamma_grid();
    double tolerance = 1e-2;
    double kf_initial = 0.1;
    double kf_cap = 1e3;
    // The inequalities are homogeneous in (P, beta, gamma), so an infeasibility
    // proof at one gamma settles the whole grid.
    bool stop_on_infeasible = true;
    SolverOptions solver;
};

struct ProbeRecord {
    double kf = 0.0;
    SolveStatus verdict = SolveStatus::Inconclusive;
    double gamma = 0.0;  // witnessing gamma when feasible
};

struct KfResult {
    double kf_star = 0.0;
    double delta = 0.0;
    std::size_t N = 0;
    Theorem theorem = Theorem::Two;
    std::optional<Certificate> certificate;
    std::vector<ProbeRecord> log;
    bool feasible_at_zero = false;
    bool monotone = true;  // probe verdicts form a down-step and the certificate holds at smaller k_f
    std::string diagnostic;
};

struct ProbeOutcome {
    SolveStatus verdict = SolveStatus::Inconclusive;
    std::optional<Certificate> certificate;
    std::size_t gamma_index = 0;
};

/// Best verdict over the gamma grid, starting at `first` and moving outwards.
inline ProbeOutcome probe_kf(const ClosedLoopMatrices& mats, const ModalPlant& plant, const GainSet& gains, double kf,
                             const SearchSpec& spec, std::size_t first,
                             const std::optional<Certificate>& warm = std::nullopt) {
    const std::size_t n = spec.gamma_grid.size();
    if (n == 0) throw ConfigurationError("empty gamma grid");
    std::vector<std::size_t> order;
    order.push_back(std::min(first, n - 1));
    for (std::size_t d = 1; order.size() < n; ++d) {
        if (first + d < n) order.push_back(first + d);
        if (first >= d) order.push_back(first - d);
    }
    ProbeOutcome out;
    out.verdict = SolveStatus::Infeasible;
    for (const std::size_t gi : order) {
        const double gamma = spec.gamma_grid[gi];
        std::optional<Certificate> w;
        if (warm) {
            // rescale along the homogeneous direction to the probed gamma
            w = *warm;
            const double r = gamma / warm->gamma;
            w->P *= r;
            w->beta *= r;
            w->gamma = gamma;
        }
        const CertifyOutcome c = certify(mats, plant, gains, gamma, kf, spec.solver, w);
        if (c.status == SolveStatus::Feasible) {
            out.verdict = SolveStatus::Feasible;
            out.certificate = c.certificate;
            out.gamma_index = gi;
            return out;
        }
        if (c.status == SolveStatus::Inconclusive) out.verdict = SolveStatus::Inconclusive;
        if (c.status == SolveStatus::Infeasible && spec.stop_on_infeasible) {
            out.verdict = SolveStatus::Infeasible;
            return out;
        }
    }
    return out;
}

/// Largest verified-feasible k_f: doubling from kf_initial until no certificate
/// is found, then bisection down to the tolerance.
inline KfResult max_kf(const ClosedLoopMatrices& mats, const ModalPlant& plant, const GainSet& gains,
                       const SearchSpec& spec) {
    if (!(spec.tolerance > 0.0)) throw ConfigurationError("bisection tolerance must be positive");
    KfResult res;
    res.delta = gains.delta;
    res.N = plant.N;
    res.theorem = theorem_for(plant.actuation);
    std::size_t gi = spec.gamma_grid.size() / 2;

    auto run = [&](double kf, const std::optional<Certificate>& warm) {
        ProbeOutcome p = probe_kf(mats, plant, gains, kf, spec, gi, warm);
        res.log.push_back({kf, p.verdict, p.certificate ? p.certificate->gamma : 0.0});
        if (p.certificate) gi = p.gamma_index;
        return p;
    };

    ProbeOutcome zero = run(0.0, std::nullopt);
    if (zero.verdict != SolveStatus::Feasible) {
        res.feasible_at_zero = false;
        res.diagnostic = "no certificate at k_f = 0: the gains/delta configuration is not certifiable at this N";
        return res;
    }
    res.feasible_at_zero = true;
    std::optional<Certificate> best = zero.certificate;
    double lo = 0.0;
    double hi = spec.kf_initial;
    while (true) {
        ProbeOutcome p = run(hi, best);
        if (p.verdict != SolveStatus::Feasible) break;
        lo = hi;
        best = p.certificate;
        if (hi >= spec.kf_cap) {
            res.diagnostic = "k_f cap reached";
            break;
        }
        hi = std::min(2.0 * hi, spec.kf_cap);
    }
    while (hi - lo > spec.tolerance && lo < spec.kf_cap) {
        const double mid = 0.5 * (lo + hi);
        ProbeOutcome p = run(mid, best);
        if (p.verdict == SolveStatus::Feasible) {
            lo = mid;
            best = p.certificate;
        } else {
            hi = mid;
        }
    }
    res.kf_star = lo;
    res.certificate = best;

    // step-function check over the probe log
    double max_feasible = -1.0;
    double min_other = std::numeric_limits<double>::infinity();
    for (const auto& r : res.log) {
        if (r.verdict == SolveStatus::Feasible) {
            max_feasible = std::max(max_feasible, r.kf);
        } else {
            min_other = std::min(min_other, r.kf);
        }
    }
    res.monotone = max_feasible < min_other;
    // the witnessing certificate must remain valid for every smaller k_f
    if (best) {
        for (const double frac : {0.0, 0.5, 0.9}) {
            const LmiProblem lower = build_problem(mats, plant, gains, best->gamma, frac * res.kf_star);
            if (!verify_certificate(*best, lower).pass) {
                res.monotone = false;
                res.diagnostic += " certificate fails at k_f = " + std::to_string(frac * res.kf_star) + ";";
            }
        }
    }
    return res;
}

/// Everything needed to search one cell at a given decay rate.
struct CellInput {
    ModalPlant plant;
    GainSet gains;
    ClosedLoopMatrices mats;
};

using CellBuilder = std::function<CellInput(Theorem, std::size_t N, double delta)>;

struct Table1Spec {
    std::vector<std::size_t> Ns = {2, 3, 4, 5, 6};
    std::vector<Theorem> theorems = {Theorem::Two, Theorem::Three};
    std::vector<double> deltas = {0.25, 0.5, 0.75, 1.0};
    SearchSpec search;
    unsigned jobs = 1;
};

struct Table1Cell {
    Theorem theorem = Theorem::Two;
    std::size_t N = 0;
    double kf_star = 0.0;
    double best_delta = 0.0;
    std::vector<KfResult> per_delta;
    std::string error;  // set when the cell could not be built
};

struct Table1Result {
    std::vector<Table1Cell> cells;
    double tolerance = 0.0;

    const Table1Cell* find(Theorem t, std::size_t n) const {
        for (const auto& c : cells) {
            if (c.theorem == t && c.N == n) return &c;
        }
        return nullptr;
    }
};

/// Runs `task(i)` for i in [0, count) on up to `jobs` threads.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& task) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

inline Table1Result table1(const CellBuilder& build, const Table1Spec& spec) {
    struct Task {
        std::size_t cell;
        double delta;
    };
    Table1Result out;
    out.tolerance = spec.search.tolerance;
    std::vector<Task> tasks;
    for (const Theorem th : spec.theorems) {
        for (const std::size_t n : spec.Ns) {
            Table1Cell cell;
            cell.theorem = th;
            cell.N = n;
            cell.per_delta.resize(spec.deltas.size());
            out.cells.push_back(std::move(cell));
            for (const double d : spec.deltas) tasks.push_back({out.cells.size() - 1, d});
        }
    }
    std::vector<KfResult> results(tasks.size());
    std::vector<std::string> errors(tasks.size());
    parallel_for(tasks.size(), spec.jobs, [&](std::size_t i) {
        const Table1Cell& cell = out.cells[tasks[i].cell];
        try {
            const CellInput in = build(cell.theorem, cell.N, tasks[i].delta);
            results[i] = max_kf(in.mats, in.plant, in.gains, spec.search);
        } catch (const Error& e) {
            results[i].delta = tasks[i].delta;
            results[i].N = cell.N;
            results[i].theorem = cell.theorem;
            results[i].diagnostic = e.what();
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        Table1Cell& cell = out.cells[tasks[i].cell];
        const auto di = static_cast<std::size_t>(
            std::find(spec.deltas.begin(), spec.deltas.end(), tasks[i].delta) - spec.deltas.begin());
        cell.per_delta[di] = results[i];
        if (!errors[i].empty()) cell.error += "delta " + std::to_string(tasks[i].delta) + ": " + errors[i] + "; ";
        if (results[i].certificate && results[i].kf_star > cell.kf_star) {
            cell.kf_star = results[i].kf_star;
            cell.best_delta = tasks[i].delta;
        }
    }
    return out;
}

/// k_f*(N+1) >= k_f*(N) - slack along each theorem row.
inline bool row_increasing(const Table1Result& t, Theorem th, double slack) {
    const Table1Cell* prev = nullptr;
    for (const auto& c : t.cells) {
        if (c.theorem != th) continue;
        if (prev && c.kf_star < prev->kf_star - slack) return false;
        prev = &c;
    }
    return true;
}

/// Theorem 2 cell >= Theorem 3 cell for every N present in both rows.
inline bool columns_dominate(const Table1Result& t, double slack) {
    for (const auto& c : t.cells) {
        if (c.theorem != Theorem::Two) continue;
        const Table1Cell* other = t.find(Theorem::Three, c.N);
        if (other && c.kf_star < other->kf_star - slack) return false;
    }
    return true;
}

}  // namespace rdcert
