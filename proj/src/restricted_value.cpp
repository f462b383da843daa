#include "gamelab/restricted_value.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "gamelab/parallel.hpp"
#include "sweep.hpp"

namespace gamelab {

namespace {

// Level indices of the macro grid times inside the reference solve
// (descending levels). Throws when a macro time is not a solver level; the
// caller should have aligned the solve with align_steps_multiple.
std::vector<int> macro_level_indices(const ValueFunction& reference,
                                     const TimeGrid& pi) {
    const double tol = 1e-9 * std::max(1.0, std::fabs(reference.terminal_time()));
    std::vector<int> levels(pi.times.size());
    for (std::size_t k = 0; k < pi.times.size(); ++k) {
        const int lev = reference.nearest_level(pi.times[k]);
        if (std::fabs(reference.times[static_cast<std::size_t>(lev)] - pi.times[k]) >
            tol) {
            throw SolverError(
                "macro time grid does not align with the solver's time levels "
                "(solve with align_steps_multiple set to the interval count)");
        }
        levels[k] = lev;
    }
    return levels;
}

void check_strategy_grid(const SpatialGrid& strategy_space,
                         const ValueFunction& reference) {
    if (!(strategy_space == reference.grid)) {
        throw SolverError("strategy was synthesized on a different spatial grid");
    }
}

}  // namespace

AugmentedValue adversary_best_response_value(const GameModel& m,
                                             const SimpleMarkovStrategy& alpha,
                                             const ValueFunction& reference) {
    m.validate();
    check_strategy_grid(alpha.space, reference);
    alpha.grid.validate();
    const std::vector<int> macro_levels = macro_level_indices(reference, alpha.grid);

    const SpatialGrid& grid = reference.grid;
    const std::size_t n_nodes = grid.num_nodes();
    const int n_intervals = alpha.grid.intervals();
    const int nu = m.action_u.size();
    const int nv = m.action_v.size();

    AugmentedValue out;
    out.kind = AugmentedValue::FrozenKind::u_action;
    out.grid = alpha.grid;
    out.space = grid;
    out.frozen_count = nu;
    out.left_values.assign(static_cast<std::size_t>(n_intervals), {});
    out.terminal_values.assign(static_cast<std::size_t>(n_intervals), {});

    const detail::CoefficientBank bank(m);
    const int threads = default_threads();

    double g_min = 0.0, g_max = 0.0;
    std::vector<double> continuation = detail::sample_payoff(m, grid, &g_min, &g_max);

    std::vector<double> work_in(n_nodes), work_out(n_nodes);
    for (int k = n_intervals - 1; k >= 0; --k) {
        out.terminal_values[static_cast<std::size_t>(k)] = continuation;
        auto& left = out.left_values[static_cast<std::size_t>(k)];
        left.resize(static_cast<std::size_t>(nu) * n_nodes);
        // Solver levels run descending; the interval spans levels
        // [macro_levels[k+1] .. macro_levels[k]] with k+1 the right end.
        const int lev_right = macro_levels[static_cast<std::size_t>(k) + 1];
        const int lev_left = macro_levels[static_cast<std::size_t>(k)];
        for (int a = 0; a < nu; ++a) {
            std::copy(continuation.begin(), continuation.end(), work_in.begin());
            const detail::FrozenUPolicy policy{a, nv};
            for (int lev = lev_right; lev < lev_left; ++lev) {
                const double t_eval = reference.times[static_cast<std::size_t>(lev)];
                const double dt = reference.times[static_cast<std::size_t>(lev)] -
                                  reference.times[static_cast<std::size_t>(lev) + 1];
                detail::backward_step(grid, bank, t_eval, dt, work_in, work_out,
                                      g_min, g_max, nullptr, threads, policy);
                work_in.swap(work_out);
            }
            std::copy(work_in.begin(), work_in.end(),
                      left.begin() + static_cast<std::size_t>(a) * n_nodes);
        }
        // Reset at t_{k-1}: the frozen action becomes xi_k(node).
        const auto& table = alpha.tables[static_cast<std::size_t>(k)];
        for (std::size_t node = 0; node < n_nodes; ++node) {
            continuation[node] =
                left[static_cast<std::size_t>(table[node]) * n_nodes + node];
        }
    }
    out.start_slice = std::move(continuation);
    return out;
}

AugmentedValue controller_best_response_value(
    const GameModel& m, const SimpleMarkovCounterStrategy& gamma,
    const ValueFunction& reference) {
    m.validate();
    if (m.d != 1) {
        throw SolverError(
            "controller best response is limited to one-dimensional models (the "
            "augmented state is two-dimensional)");
    }
    check_strategy_grid(gamma.space, reference);
    gamma.grid.validate();
    const std::vector<int> macro_levels = macro_level_indices(reference, gamma.grid);

    const SpatialGrid& grid = reference.grid;
    const std::size_t n_nodes = grid.num_nodes();
    const int n_intervals = gamma.grid.intervals();
    const int nu = m.action_u.size();

    AugmentedValue out;
    out.kind = AugmentedValue::FrozenKind::snapshot_node;
    out.grid = gamma.grid;
    out.space = grid;
    out.frozen_count = static_cast<int>(n_nodes);
    out.left_values.assign(static_cast<std::size_t>(n_intervals), {});
    out.terminal_values.assign(static_cast<std::size_t>(n_intervals), {});

    const detail::CoefficientBank bank(m);
    const int threads = default_threads();

    double g_min = 0.0, g_max = 0.0;
    std::vector<double> continuation = detail::sample_payoff(m, grid, &g_min, &g_max);

    for (int k = n_intervals - 1; k >= 0; --k) {
        out.terminal_values[static_cast<std::size_t>(k)] = continuation;
        auto& left = out.left_values[static_cast<std::size_t>(k)];
        left.resize(n_nodes * n_nodes);
        const int lev_right = macro_levels[static_cast<std::size_t>(k) + 1];
        const int lev_left = macro_levels[static_cast<std::size_t>(k)];
        const auto& table = gamma.tables[static_cast<std::size_t>(k)];

        // Independent 1-D sweeps per frozen snapshot node; parallelize over
        // snapshots (each writes its own slice).
        parallel_for(n_nodes, threads, [&](std::size_t lo, std::size_t hi) {
            std::vector<double> win(n_nodes), wout(n_nodes);
            std::vector<int> v_for_u(static_cast<std::size_t>(nu));
            for (std::size_t snap = lo; snap < hi; ++snap) {
                for (int u = 0; u < nu; ++u) {
                    v_for_u[static_cast<std::size_t>(u)] =
                        table[snap * static_cast<std::size_t>(nu) +
                              static_cast<std::size_t>(u)];
                }
                const detail::CounterResponsePolicy policy{v_for_u};
                std::copy(continuation.begin(), continuation.end(), win.begin());
                for (int lev = lev_right; lev < lev_left; ++lev) {
                    const double t_eval =
                        reference.times[static_cast<std::size_t>(lev)];
                    const double dt =
                        reference.times[static_cast<std::size_t>(lev)] -
                        reference.times[static_cast<std::size_t>(lev) + 1];
                    // Inner sweep single-threaded: parallelism lives at the
                    // snapshot level.
                    detail::backward_step(grid, bank, t_eval, dt, win, wout, g_min,
                                          g_max, nullptr, 1, policy);
                    win.swap(wout);
                }
                std::copy(win.begin(), win.end(), left.begin() + snap * n_nodes);
            }
        });

        // Snapshot reset at t_{k-1}: x_hat <- current node.
        for (std::size_t node = 0; node < n_nodes; ++node) {
            continuation[node] = left[node * n_nodes + node];
        }
    }
    out.start_slice = std::move(continuation);
    return out;
}

bool GapTable::any_violation() const {
    for (const auto& r : rows) {
        if (r.violation) return true;
    }
    return false;
}

double GapTable::max_gap_at_mesh(double mesh) const {
    double g = 0.0;
    for (const auto& r : rows) {
        if (std::fabs(r.mesh - mesh) <= 1e-12 * std::max(1.0, mesh)) {
            g = std::max(g, r.v_pi_plus - r.v_pi_minus);
        }
    }
    return g;
}

void GapTable::write_csv(std::ostream& os) const {
    os << "mesh,x,v_pi_minus,v_fd,v_pi_plus,gap_lo,gap_hi,tol\n";
    char buf[64];
    const auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << buf << sep;
    };
    for (const auto& r : rows) {
        put(r.mesh, ',');
        put(r.x, ',');
        put(r.v_pi_minus, ',');
        put(r.v_fd, ',');
        put(r.v_pi_plus, ',');
        put(r.gap_lo, ',');
        put(r.gap_hi, ',');
        put(r.tol, '\n');
    }
}

void GapTable::write_csv_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    write_csv(out);
}

GapTable sandwich_report(const ValueFunction& v_fd,
                         const std::vector<AugmentedValue>& lowers,
                         const std::vector<AugmentedValue>& uppers,
                         const std::vector<double>& reporting_points, double tol) {
    if (lowers.size() != uppers.size()) {
        throw DomainError("sandwich_report needs one lower per upper value");
    }
    if (reporting_points.empty()) {
        throw DomainError("sandwich_report needs reporting points");
    }
    if (v_fd.grid.dim() != 1) {
        throw DomainError("sandwich_report reports one-dimensional slices");
    }
    GapTable table;
    const double s = v_fd.start_time();
    for (std::size_t i = 0; i < lowers.size(); ++i) {
        const AugmentedValue& lo = lowers[i];
        const AugmentedValue& hi = uppers[i];
        if (!(lo.space == v_fd.grid) || !(hi.space == v_fd.grid)) {
            throw DomainError("mismatched reporting grids in sandwich_report");
        }
        if (std::fabs(lo.grid.mesh() - hi.grid.mesh()) >
            1e-12 * std::max(1.0, lo.grid.mesh())) {
            throw DomainError("lower/upper values use different macro meshes");
        }
        for (const double x : reporting_points) {
            const std::vector<double> xv{x};
            if (!v_fd.grid.contains(xv)) {
                throw DomainError("reporting point outside the solver domain");
            }
            GapRow row;
            row.mesh = lo.grid.mesh();
            row.x = x;
            row.v_pi_minus = lo.start_value_at(xv);
            row.v_fd = v_fd.value(s, xv);
            row.v_pi_plus = hi.start_value_at(xv);
            row.gap_lo = row.v_fd - row.v_pi_minus;
            row.gap_hi = row.v_pi_plus - row.v_fd;
            row.tol = tol;
            row.violation = row.gap_lo < -tol || row.gap_hi < -tol;
            table.rows.push_back(row);
        }
    }
    return table;
}

}  // namespace gamelab
