#ifndef GAMELAB_STRATEGY_HPP
#define GAMELAB_STRATEGY_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gamelab/rng.hpp"
#include "gamelab/solver.hpp"

namespace gamelab {

// Deterministic partition s = t_0 < t_1 < ... < t_n = T. Interval k
// (1-based in the math, 0-based index k-1 here) is the half-open (t_{k-1},
// t_k]: an action chosen at t_{k-1} applies strictly after it.
struct TimeGrid {
    std::vector<double> times;

    static TimeGrid uniform(double s, double T, int intervals);

    int intervals() const { return static_cast<int>(times.size()) - 1; }
    double start() const { return times.front(); }
    double end() const { return times.back(); }
    double mesh() const;
    void validate() const;

    // 0-based interval index with t in (t_{k}, t_{k+1}]; throws DomainError
    // for t <= start or t > end (beyond rounding slack).
    int interval_of(double t) const;
};

// Per-interval lookup tables xi_k: spatial node -> U action index. The
// action on (t_{k-1}, t_k] depends only on the state snapshot at t_{k-1};
// runtime states snap to the nearest grid node.
class SimpleMarkovStrategy {
  public:
    TimeGrid grid;
    SpatialGrid space;
    std::vector<std::vector<int>> tables;  // [interval][node] -> u index

    int table_action(int interval, std::size_t node) const {
        return tables[static_cast<std::size_t>(interval)][node];
    }
    // CSV: header "k,node,action", k 1-based.
    void write_csv(std::ostream& os) const;
    void write_csv_file(const std::string& path) const;
};

// Per-interval tables eta_k: (spatial node, U action) -> V action index.
// The response may change within an interval, but only through u.
class SimpleMarkovCounterStrategy {
  public:
    TimeGrid grid;
    SpatialGrid space;
    int n_u = 0;
    std::vector<std::vector<int>> tables;  // [interval][node * n_u + u] -> v index

    int table_action(int interval, std::size_t node, int u_index) const {
        return tables[static_cast<std::size_t>(interval)]
                     [node * static_cast<std::size_t>(n_u) +
                      static_cast<std::size_t>(u_index)];
    }
    // CSV: header "k,node,u,action".
    void write_csv(std::ostream& os) const;
    void write_csv_file(const std::string& path) const;
};

// Builds xi_k(x) as the maximizing action of the lower Hamiltonian at
// (t_{k-1}, x), with derivatives queried from the solved value function.
SimpleMarkovStrategy synthesize_markov_strategy(const GameModel& m,
                                                const ValueFunction& vf,
                                                const TimeGrid& pi);

// Builds eta_k(x, u) as the v-grid argmin of L at (t_{k-1}, x) for each u.
SimpleMarkovCounterStrategy synthesize_markov_counter_strategy(
    const GameModel& m, const ValueFunction& vf, const TimeGrid& pi);

// Lookup semantics for simulation time t (right-closed intervals).
int strategy_action(const SimpleMarkovStrategy& alpha, double t,
                    std::span<const double> snapshot_x);
// Off-grid u projects to the nearest U grid point.
int counter_action(const SimpleMarkovCounterStrategy& gamma, double t,
                   std::span<const double> snapshot_x,
                   std::span<const double> u_value, const ActionGrid& u_grid);
int counter_action_indexed(const SimpleMarkovCounterStrategy& gamma, double t,
                           std::span<const double> snapshot_x, int u_index);

// ---------------------------------------------------------------------------
// Control sources: everything a simulated player can be driven by. A source
// maps the visible history (and, for the v player, the opponent's current
// action) to a grid action index. Sources are immutable and thread-safe;
// randomized sources draw from the counter RNG keyed by (master seed,
// path, step), so they never carry state.

struct SimContext {
    double t_left;                   // left endpoint of the current step
    double t_right;                  // right endpoint (action applies on (t_left, t_right])
    std::span<const double> times;   // recorded times t_0..t_j
    std::span<const double> states;  // recorded states, (j+1) x d row-major
    int d = 1;
    std::uint64_t master_seed = 0;
    std::uint64_t path_index = 0;
    std::uint64_t step_index = 0;
    int current_u = -1;  // set when a v-source is consulted

    std::span<const double> current_state() const {
        return states.subspan(states.size() - static_cast<std::size_t>(d),
                              static_cast<std::size_t>(d));
    }
};

class ControlSource {
  public:
    virtual ~ControlSource() = default;
    virtual int action_index(const SimContext& ctx) const = 0;
    virtual std::string describe() const = 0;
};

class ConstantSource final : public ControlSource {
  public:
    ConstantSource(int index, std::string label = "const")
        : index_(index), label_(std::move(label)) {}
    int action_index(const SimContext&) const override { return index_; }
    std::string describe() const override {
        return label_ + ":" + std::to_string(index_);
    }

  private:
    int index_;
    std::string label_;
};

// Deterministic piecewise-constant schedule: entry i applies to steps whose
// left endpoint is >= start_time[i] (entries sorted ascending).
class ScheduleSource final : public ControlSource {
  public:
    ScheduleSource(std::vector<std::pair<double, int>> entries);
    int action_index(const SimContext& ctx) const override;
    std::string describe() const override { return "schedule"; }

  private:
    std::vector<std::pair<double, int>> entries_;
};

// Fresh uniform draw over the action grid at every simulation step.
class RandomPiecewiseSource final : public ControlSource {
  public:
    RandomPiecewiseSource(int grid_size, RngStream stream)
        : grid_size_(grid_size), stream_(stream) {}
    int action_index(const SimContext& ctx) const override;
    std::string describe() const override { return "random"; }

  private:
    int grid_size_;
    RngStream stream_;
};

class MarkovStrategySource final : public ControlSource {
  public:
    explicit MarkovStrategySource(const SimpleMarkovStrategy& alpha)
        : alpha_(&alpha) {}
    int action_index(const SimContext& ctx) const override;
    std::string describe() const override { return "markov-strategy"; }

  private:
    const SimpleMarkovStrategy* alpha_;
};

class CounterStrategySource final : public ControlSource {
  public:
    explicit CounterStrategySource(const SimpleMarkovCounterStrategy& gamma)
        : gamma_(&gamma) {}
    int action_index(const SimContext& ctx) const override;
    std::string describe() const override { return "markov-counter-strategy"; }

  private:
    const SimpleMarkovCounterStrategy* gamma_;
};

// Path-feedback u-player: re-optimizes the lower Hamiltonian at the current
// state every step (a continuously rebalanced benchmark opponent). Results
// are functions of (nearest level, nearest node), so they are memoized one
// level at a time; the cache never changes an answer, only its cost.
class GreedyFeedbackSource final : public ControlSource {
  public:
    GreedyFeedbackSource(const GameModel& m, const ValueFunction& vf)
        : m_(&m), vf_(&vf) {}
    int action_index(const SimContext& ctx) const override;
    std::string describe() const override { return "greedy-feedback"; }

  private:
    std::span<const int> level_table(int level) const;
    const GameModel* m_;
    const ValueFunction* vf_;
    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<int, std::vector<int>> cache_;
};

// Path-feedback v-player: plays the pointwise counter response to the
// opponent's current action, reading derivatives off the value function.
class CounterResponseFeedbackSource final : public ControlSource {
  public:
    CounterResponseFeedbackSource(const GameModel& m, const ValueFunction& vf)
        : m_(&m), vf_(&vf) {}
    int action_index(const SimContext& ctx) const override;
    std::string describe() const override { return "counter-response-feedback"; }

  private:
    std::span<const int> level_table(int level) const;
    const GameModel* m_;
    const ValueFunction* vf_;
    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<int, std::vector<int>> cache_;
};

}  // namespace gamelab

#endif
