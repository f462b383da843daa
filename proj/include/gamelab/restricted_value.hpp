#ifndef GAMELAB_RESTRICTED_VALUE_HPP
#define GAMELAB_RESTRICTED_VALUE_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "gamelab/strategy.hpp"

namespace gamelab {

// Best-response value over a macro time grid with one frozen coordinate per
// interval: the u action in force (adversary best response to a Markov
// strategy) or the snapshot node (controller best response to a Markov
// counter-strategy). Stored per interval at the interval's left endpoint,
// plus the terminal data the interval was solved against.
struct AugmentedValue {
    enum class FrozenKind { u_action, snapshot_node };

    FrozenKind kind = FrozenKind::u_action;
    TimeGrid grid;      // the macro grid pi
    SpatialGrid space;  // shared with the reference solve
    int frozen_count = 0;

    // left_values[k][frozen * n_nodes + node]: value at t_{k-1} inside
    // interval k for the given frozen coordinate.
    std::vector<std::vector<double>> left_values;
    // terminal_values[k][node]: the composed continuation the interval was
    // terminated with at t_k (independent of the frozen coordinate).
    std::vector<std::vector<double>> terminal_values;
    // Composed start slice: the frozen coordinate resolved at t_0 = s.
    std::vector<double> start_slice;

    double left_value(int interval, int frozen, std::size_t node) const {
        return left_values[static_cast<std::size_t>(interval)]
                          [static_cast<std::size_t>(frozen) * space.num_nodes() + node];
    }
    double start_value_at(std::span<const double> x) const {
        return start_slice[space.nearest_node(x)];
    }
};

// inf over open-loop v of E[g] with u played by the Markov strategy: a
// backward sweep per macro interval with the Hamiltonian reduced to a pure
// v-minimization for the frozen u action, reset to xi_k at grid times. The
// reference value function supplies the spatial grid and the exact time
// levels, so the restricted sweep and the full solve stay step-aligned.
AugmentedValue adversary_best_response_value(const GameModel& m,
                                             const SimpleMarkovStrategy& alpha,
                                             const ValueFunction& reference);

// sup over open-loop u of E[g] with v played by the Markov counter-strategy:
// per-interval sweeps parametrized by the frozen snapshot node, Hamiltonian
// sup_u L(t, x, u, eta_k(snapshot, u)), snapshot reset at grid times.
// Limited to d = 1 (the augmented state is two-dimensional).
AugmentedValue controller_best_response_value(
    const GameModel& m, const SimpleMarkovCounterStrategy& gamma,
    const ValueFunction& reference);

struct GapRow {
    double mesh = 0.0;
    double x = 0.0;
    double v_pi_minus = 0.0;
    double v_fd = 0.0;
    double v_pi_plus = 0.0;
    double gap_lo = 0.0;  // v_fd - v_pi_minus
    double gap_hi = 0.0;  // v_pi_plus - v_fd
    double tol = 0.0;
    bool violation = false;
};

struct GapTable {
    std::vector<GapRow> rows;

    bool any_violation() const;
    double max_gap_at_mesh(double mesh) const;
    // CSV header: mesh,x,v_pi_minus,v_fd,v_pi_plus,gap_lo,gap_hi,tol
    void write_csv(std::ostream& os) const;
    void write_csv_file(const std::string& path) const;
};

// Assembles per-mesh sandwich rows at the reporting points (1-D) and flags
// any ordering violation beyond the declared tolerance.
GapTable sandwich_report(const ValueFunction& v_fd,
                         const std::vector<AugmentedValue>& lowers,
                         const std::vector<AugmentedValue>& uppers,
                         const std::vector<double>& reporting_points, double tol);

}  // namespace gamelab

#endif
