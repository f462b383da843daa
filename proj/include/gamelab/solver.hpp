#ifndef GAMELAB_SOLVER_HPP
#define GAMELAB_SOLVER_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gamelab/hamiltonian.hpp"
#include "gamelab/model.hpp"

namespace gamelab {

struct AxisSpec {
    double min = 0.0;
    double max = 0.0;
    int count = 0;
    double dx() const { return (max - min) / static_cast<double>(count - 1); }
    bool operator==(const AxisSpec&) const = default;
};

// Uniform tensor-product grid on a truncated box, row-major with the last
// axis varying fastest.
struct SpatialGrid {
    std::vector<AxisSpec> axes;

    static SpatialGrid uniform_1d(double min, double max, int count) {
        return SpatialGrid{{AxisSpec{min, max, count}}};
    }

    int dim() const { return static_cast<int>(axes.size()); }
    std::size_t num_nodes() const;
    std::vector<std::size_t> strides() const;
    double coord(int axis, int index) const;
    void node_coords(std::size_t flat, std::span<double> out) const;
    // Nearest grid node; points outside the box clamp to the boundary.
    std::size_t nearest_node(std::span<const double> x) const;
    bool contains(std::span<const double> x, double tol = 0.0) const;
    void validate() const;

    bool operator==(const SpatialGrid&) const = default;
};

enum class BoundaryMode { ZeroSecondDerivative };

// Numerical solution of the terminal-value lower Isaacs equation: values on
// (time level x spatial node), time levels ordered from T down to the start
// time. Queries interpolate (linear in time, multilinear in space);
// derivative queries use central differences at the nearest node of the
// nearest time level.
class ValueFunction {
  public:
    SpatialGrid grid;
    std::vector<double> times;   // descending: times.front()=T, times.back()=s
    std::vector<double> values;  // times.size() * num_nodes, level-major
    BoundaryMode boundary_mode = BoundaryMode::ZeroSecondDerivative;
    double payoff_min = 0.0;  // min/max of g on the grid (max-principle bounds)
    double payoff_max = 0.0;
    // Largest clamp applied while enforcing the maximum principle; stays at
    // floating-point noise unless the scheme is broken.
    double max_clamp_correction = 0.0;

    int num_levels() const { return static_cast<int>(times.size()); }
    double terminal_time() const { return times.front(); }
    double start_time() const { return times.back(); }

    std::span<const double> level_values(int level) const;
    double value_at(int level, std::size_t node) const;

    // Index of the level whose time is nearest to t (ties toward larger t).
    int nearest_level(double t) const;

    struct Query {
        double value;
        DerivativePair derivatives;
    };
    Query query(double t, std::span<const double> x) const;
    double value(double t, std::span<const double> x) const { return query(t, x).value; }
    DerivativePair derivatives_at_node(int level, std::size_t node) const;

    // CSV layout: header "t,x1..xd,value"; rows run over levels (T down to
    // s), nodes row-major within a level.
    void write_csv(std::ostream& os) const;
    void write_csv_file(const std::string& path) const;
};

// Largest stable explicit time step for the model on this grid:
// safety 0.9 over the sampled maximum of sum_i (a_ii/dx_i^2 + |b_i|/dx_i)
// with a = sigma sigma^T, taken over grid nodes, both action grids and a
// fixed fan of times. Returns +infinity for models with no dynamics.
double cfl_step(const GameModel& m, const SpatialGrid& grid,
                double t_lo = 0.0, double t_hi = -1.0);

struct SolveOptions {
    // Round the number of time steps up to a multiple of this, so macro
    // time grids with that many intervals land exactly on solver levels.
    int align_steps_multiple = 1;
    int threads = 0;  // 0: use default_threads()
};

// Explicit monotone upwind sweep for the lower Isaacs equation, backward
// from T to start_time. First differences are one-sided per the drift sign
// inside the action enumeration, second differences central; the boundary
// closure drops the second-difference term (zero second derivative) and
// sees a constant extension in the outflow drift term. Values are clamped
// to [min g, max g], which this scheme only ever needs at floating-point
// noise level (tracked in max_clamp_correction).
ValueFunction solve_lower_isaacs(const GameModel& m, const SpatialGrid& grid,
                                 double start_time,
                                 const SolveOptions& options = {});

// Discrete upwinded running operator at one node for a frozen action pair;
// exposed for scheme-consistency checks.
double discrete_running_cost(const GameModel& m, const SpatialGrid& grid,
                             std::span<const double> level_values,
                             std::size_t node, double t, int u_index,
                             int v_index);

}  // namespace gamelab

#endif
