#include "gamelab/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "gamelab/parallel.hpp"

namespace gamelab {

TimeGrid TimeGrid::uniform(double s, double T, int intervals) {
    if (intervals < 1) throw DomainError("time grid needs at least one interval");
    if (!(s < T)) throw DomainError("time grid needs s < T");
    TimeGrid g;
    g.times.resize(static_cast<std::size_t>(intervals) + 1);
    for (int k = 0; k <= intervals; ++k) {
        g.times[static_cast<std::size_t>(k)] =
            s + (T - s) * static_cast<double>(k) / static_cast<double>(intervals);
    }
    g.times.front() = s;
    g.times.back() = T;
    return g;
}

double TimeGrid::mesh() const {
    double m = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k) {
        m = std::max(m, times[k] - times[k - 1]);
    }
    return m;
}

void TimeGrid::validate() const {
    if (times.size() < 2) throw DomainError("time grid needs at least two times");
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) {
            throw DomainError("time grid must be strictly increasing");
        }
    }
}

int TimeGrid::interval_of(double t) const {
    const double tol = 1e-12 * std::max({std::fabs(start()), std::fabs(end()), 1.0});
    if (t <= start() + tol) {
        throw DomainError("time is at or before the grid start; intervals are "
                          "left-open at s");
    }
    if (t > end() + tol) throw DomainError("time is past the grid end");
    // First k with times[k] >= t (right-closed intervals).
    const auto it = std::lower_bound(times.begin() + 1, times.end(), t - tol);
    return static_cast<int>(it - times.begin()) - 1;
}

namespace {

void write_strategy_csv(std::ostream& os, const SimpleMarkovStrategy& s) {
    os << "k,node,action\n";
    for (std::size_t k = 0; k < s.tables.size(); ++k) {
        const auto& tab = s.tables[k];
        for (std::size_t node = 0; node < tab.size(); ++node) {
            os << (k + 1) << ',' << node << ',' << tab[node] << '\n';
        }
    }
}

void write_counter_csv(std::ostream& os, const SimpleMarkovCounterStrategy& s) {
    os << "k,node,u,action\n";
    for (std::size_t k = 0; k < s.tables.size(); ++k) {
        const auto& tab = s.tables[k];
        const std::size_t n_nodes = tab.size() / static_cast<std::size_t>(s.n_u);
        for (std::size_t node = 0; node < n_nodes; ++node) {
            for (int u = 0; u < s.n_u; ++u) {
                os << (k + 1) << ',' << node << ',' << u << ','
                   << tab[node * static_cast<std::size_t>(s.n_u) +
                          static_cast<std::size_t>(u)]
                   << '\n';
            }
        }
    }
}

}  // namespace

void SimpleMarkovStrategy::write_csv(std::ostream& os) const {
    write_strategy_csv(os, *this);
}

void SimpleMarkovStrategy::write_csv_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    write_csv(out);
}

void SimpleMarkovCounterStrategy::write_csv(std::ostream& os) const {
    write_counter_csv(os, *this);
}

void SimpleMarkovCounterStrategy::write_csv_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    write_csv(out);
}

namespace {

void check_grid_span(const ValueFunction& vf, const TimeGrid& pi) {
    pi.validate();
    const double tol = 1e-9 * std::max({std::fabs(vf.terminal_time()),
                                        std::fabs(vf.start_time()), 1.0});
    if (pi.start() < vf.start_time() - tol || pi.end() > vf.terminal_time() + tol) {
        throw DomainError("time grid extends outside the value function's span");
    }
}

}  // namespace

SimpleMarkovStrategy synthesize_markov_strategy(const GameModel& m,
                                                const ValueFunction& vf,
                                                const TimeGrid& pi) {
    check_grid_span(vf, pi);
    SimpleMarkovStrategy out;
    out.grid = pi;
    out.space = vf.grid;
    const std::size_t n_nodes = vf.grid.num_nodes();
    out.tables.assign(static_cast<std::size_t>(pi.intervals()),
                      std::vector<int>(n_nodes, 0));
    for (int k = 0; k < pi.intervals(); ++k) {
        const double t = pi.times[static_cast<std::size_t>(k)];
        const int level = vf.nearest_level(t);
        auto& table = out.tables[static_cast<std::size_t>(k)];
        parallel_for(n_nodes, [&](std::size_t lo, std::size_t hi) {
            std::vector<double> local(static_cast<std::size_t>(vf.grid.dim()));
            for (std::size_t node = lo; node < hi; ++node) {
                vf.grid.node_coords(node, local);
                const DerivativePair dp = vf.derivatives_at_node(level, node);
                table[node] = lower_hamiltonian(m, t, local, dp).best_u;
            }
        });
    }
    return out;
}

SimpleMarkovCounterStrategy synthesize_markov_counter_strategy(
    const GameModel& m, const ValueFunction& vf, const TimeGrid& pi) {
    check_grid_span(vf, pi);
    SimpleMarkovCounterStrategy out;
    out.grid = pi;
    out.space = vf.grid;
    out.n_u = m.action_u.size();
    const std::size_t n_nodes = vf.grid.num_nodes();
    out.tables.assign(
        static_cast<std::size_t>(pi.intervals()),
        std::vector<int>(n_nodes * static_cast<std::size_t>(out.n_u), 0));
    for (int k = 0; k < pi.intervals(); ++k) {
        const double t = pi.times[static_cast<std::size_t>(k)];
        const int level = vf.nearest_level(t);
        auto& table = out.tables[static_cast<std::size_t>(k)];
        parallel_for(n_nodes, [&](std::size_t lo, std::size_t hi) {
            std::vector<double> local(static_cast<std::size_t>(vf.grid.dim()));
            for (std::size_t node = lo; node < hi; ++node) {
                vf.grid.node_coords(node, local);
                const DerivativePair dp = vf.derivatives_at_node(level, node);
                for (int u = 0; u < out.n_u; ++u) {
                    table[node * static_cast<std::size_t>(out.n_u) +
                          static_cast<std::size_t>(u)] =
                        counter_response(m, t, local, dp, u);
                }
            }
        });
    }
    return out;
}

int strategy_action(const SimpleMarkovStrategy& alpha, double t,
                    std::span<const double> snapshot_x) {
    const int k = alpha.grid.interval_of(t);
    const std::size_t node = alpha.space.nearest_node(snapshot_x);
    return alpha.table_action(k, node);
}

int counter_action_indexed(const SimpleMarkovCounterStrategy& gamma, double t,
                           std::span<const double> snapshot_x, int u_index) {
    if (u_index < 0 || u_index >= gamma.n_u) {
        throw DomainError("counter_action: u index outside the grid");
    }
    const int k = gamma.grid.interval_of(t);
    const std::size_t node = gamma.space.nearest_node(snapshot_x);
    return gamma.table_action(k, node, u_index);
}

int counter_action(const SimpleMarkovCounterStrategy& gamma, double t,
                   std::span<const double> snapshot_x,
                   std::span<const double> u_value, const ActionGrid& u_grid) {
    return counter_action_indexed(gamma, t, snapshot_x, u_grid.nearest(u_value));
}

// ---------------------------------------------------------------------------
// Control sources.

ScheduleSource::ScheduleSource(std::vector<std::pair<double, int>> entries)
    : entries_(std::move(entries)) {
    if (entries_.empty()) throw DomainError("empty schedule");
    for (std::size_t i = 1; i < entries_.size(); ++i) {
        if (!(entries_[i].first > entries_[i - 1].first)) {
            throw DomainError("schedule times must be strictly increasing");
        }
    }
}

int ScheduleSource::action_index(const SimContext& ctx) const {
    int idx = entries_.front().second;
    for (const auto& [start, action] : entries_) {
        if (start <= ctx.t_left + 1e-12) {
            idx = action;
        } else {
            break;
        }
    }
    return idx;
}

int RandomPiecewiseSource::action_index(const SimContext& ctx) const {
    const std::uint64_t bits = counter_rng_u64(ctx.master_seed, stream_,
                                               ctx.path_index, ctx.step_index, 0);
    return static_cast<int>(bits % static_cast<std::uint64_t>(grid_size_));
}

namespace {

// State recorded at the macro-interval start t_{k-1} for the interval
// containing (t_left, t_right]. The simulation step size must subdivide the
// macro grid, otherwise the snapshot time is not a recorded time.
std::span<const double> snapshot_at_interval_start(const SimContext& ctx,
                                                   const TimeGrid& grid) {
    const int k = grid.interval_of(ctx.t_right);
    const double t_snap = grid.times[static_cast<std::size_t>(k)];
    const double tol = 1e-9 * std::max(1.0, std::fabs(grid.end()));
    // Recorded times are ascending; locate t_snap among them.
    const auto it =
        std::lower_bound(ctx.times.begin(), ctx.times.end(), t_snap - tol);
    if (it == ctx.times.end() || std::fabs(*it - t_snap) > tol) {
        throw SimulationError(
            "simulation steps do not subdivide the strategy's time grid");
    }
    const std::size_t row = static_cast<std::size_t>(it - ctx.times.begin());
    return ctx.states.subspan(row * static_cast<std::size_t>(ctx.d),
                              static_cast<std::size_t>(ctx.d));
}

}  // namespace

int MarkovStrategySource::action_index(const SimContext& ctx) const {
    const auto snapshot = snapshot_at_interval_start(ctx, alpha_->grid);
    const int k = alpha_->grid.interval_of(ctx.t_right);
    return alpha_->table_action(k, alpha_->space.nearest_node(snapshot));
}

int CounterStrategySource::action_index(const SimContext& ctx) const {
    if (ctx.current_u < 0) {
        throw SimulationError("counter-strategy source consulted without a u action");
    }
    const auto snapshot = snapshot_at_interval_start(ctx, gamma_->grid);
    const int k = gamma_->grid.interval_of(ctx.t_right);
    return gamma_->table_action(k, gamma_->space.nearest_node(snapshot),
                                ctx.current_u);
}

std::span<const int> GreedyFeedbackSource::level_table(int level) const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_.find(level);
    if (it == cache_.end()) {
        const double t = vf_->times[static_cast<std::size_t>(level)];
        const std::size_t n = vf_->grid.num_nodes();
        std::vector<int> table(n);
        std::vector<double> coords(static_cast<std::size_t>(vf_->grid.dim()));
        for (std::size_t node = 0; node < n; ++node) {
            vf_->grid.node_coords(node, coords);
            table[node] =
                lower_hamiltonian(*m_, t, coords,
                                  vf_->derivatives_at_node(level, node))
                    .best_u;
        }
        it = cache_.emplace(level, std::move(table)).first;
    }
    return it->second;
}

int GreedyFeedbackSource::action_index(const SimContext& ctx) const {
    const auto x = ctx.current_state();
    const double tc = std::clamp(ctx.t_left, vf_->start_time(), vf_->terminal_time());
    return level_table(vf_->nearest_level(tc))[vf_->grid.nearest_node(x)];
}

std::span<const int> CounterResponseFeedbackSource::level_table(int level) const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_.find(level);
    if (it == cache_.end()) {
        const double t = vf_->times[static_cast<std::size_t>(level)];
        const std::size_t n = vf_->grid.num_nodes();
        const int nu = m_->action_u.size();
        std::vector<int> table(n * static_cast<std::size_t>(nu));
        std::vector<double> coords(static_cast<std::size_t>(vf_->grid.dim()));
        for (std::size_t node = 0; node < n; ++node) {
            vf_->grid.node_coords(node, coords);
            const DerivativePair dp = vf_->derivatives_at_node(level, node);
            for (int u = 0; u < nu; ++u) {
                table[node * static_cast<std::size_t>(nu) + static_cast<std::size_t>(u)] =
                    counter_response(*m_, t, coords, dp, u);
            }
        }
        it = cache_.emplace(level, std::move(table)).first;
    }
    return it->second;
}

int CounterResponseFeedbackSource::action_index(const SimContext& ctx) const {
    if (ctx.current_u < 0) {
        throw SimulationError("counter-response source consulted without a u action");
    }
    const auto x = ctx.current_state();
    const double tc = std::clamp(ctx.t_left, vf_->start_time(), vf_->terminal_time());
    const std::size_t node = vf_->grid.nearest_node(x);
    return level_table(vf_->nearest_level(tc))
        [node * static_cast<std::size_t>(m_->action_u.size()) +
         static_cast<std::size_t>(ctx.current_u)];
}

}  // namespace gamelab
