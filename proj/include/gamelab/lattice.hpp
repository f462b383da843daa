#ifndef GAMELAB_LATTICE_HPP
#define GAMELAB_LATTICE_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gamelab/model.hpp"
#include "gamelab/strategy.hpp"

namespace gamelab {

enum class LatticeMode {
    central,       // p_pm = (sigma^2 h / dx^2 +- b h / dx) / 2
    drift_upwind,  // one-sided drift mass: p_pm = sigma^2 h/(2 dx^2) + b^pm h/dx
};

// Discrete-time, discrete-state surrogate of the controlled SDE on a 1-D
// lattice: per (node, u, v) a {left, stay, right} transition triple whose
// one-step mean and variance match drift and diffusion locally. Boundary
// nodes reflect: out-of-range mass joins the stay probability. Serves as an
// independent brute-force oracle for the PDE solver on tiny instances.
class LatticeGame {
  public:
    double h = 0.0;     // micro time step
    int n_steps = 0;    // micro steps; horizon = n_steps * h
    double x_min = 0.0;
    double x_max = 0.0;
    int n_x = 0;
    LatticeMode mode = LatticeMode::central;
    int n_u = 0;
    int n_v = 0;
    // [ (node * n_u + u) * n_v + v ] -> {p_minus, p_stay, p_plus}
    std::vector<std::array<double, 3>> transitions;
    std::vector<double> terminal;  // g at nodes

    double dx() const { return (x_max - x_min) / static_cast<double>(n_x - 1); }
    double coord(int node) const;
    int node_of(double x) const;  // nearest node, clamped
    const std::array<double, 3>& triple(int node, int u, int v) const;
};

// Materializes the transition table; throws SolverError when a probability
// leaves [0,1], reporting the violating (node, u, v) and a usable h.
LatticeGame build_lattice(const GameModel& m, int n_steps, double x_min,
                          double x_max, int n_x,
                          LatticeMode mode = LatticeMode::central);

// Backward induction value arrays, one per micro step (index 0 = initial
// time, index n_steps = terminal payoff).
struct LatticeValues {
    std::vector<std::vector<double>> per_step;
    double at(int step, int node) const {
        return per_step[static_cast<std::size_t>(step)][static_cast<std::size_t>(node)];
    }
    // CSV in the solver's value layout (t, x1, value).
    void write_csv(std::ostream& os, const LatticeGame& L) const;
};

// V_j(x) = max_u min_v E[V_{j+1}]: both players act every micro step.
LatticeValues lattice_lower_value(const LatticeGame& L);
// Mirrored order min_v max_u.
LatticeValues lattice_upper_value(const LatticeGame& L);

// Exact discrete grid-restricted lower value: u frozen over each macro
// interval of pi as a function of the snapshot node (outer max per node),
// v adapting every micro step (inner min by dynamic programming). pi times
// must land on micro steps. Returns the value array at time 0.
std::vector<double> lattice_grid_restricted_lower(const LatticeGame& L,
                                                  const TimeGrid& pi);

}  // namespace gamelab

#endif
