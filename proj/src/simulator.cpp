#include "gamelab/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>

#include "gamelab/parallel.hpp"
#include "gamelab/rng.hpp"

namespace gamelab {

std::span<const double> Path::state(int j) const {
    const std::size_t d = states.size() / times.size();
    return std::span<const double>(states.data() + static_cast<std::size_t>(j) * d, d);
}

double ExitFrequency::binomial_stderr() const {
    if (n_paths < 2) return 0.0;
    return std::sqrt(frequency * (1.0 - frequency) / static_cast<double>(n_paths));
}

namespace {

struct StepPlan {
    double t0;
    double t1;
    std::uint64_t n_steps;
    double dt;
};

StepPlan plan_steps(double t0, double t1, double dt_sim) {
    if (!(t1 > t0)) throw DomainError("simulation needs end time > start time");
    if (!(dt_sim > 0.0)) throw DomainError("dt_sim must be positive");
    const double ratio = (t1 - t0) / dt_sim;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::fabs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
        throw DomainError("dt_sim must divide the simulated interval");
    }
    StepPlan plan;
    plan.t0 = t0;
    plan.t1 = t1;
    plan.n_steps = static_cast<std::uint64_t>(rounded);
    plan.dt = (t1 - t0) / rounded;
    return plan;
}

// Reusable per-thread simulation state; one Euler run fills it.
struct PathWorkspace {
    std::vector<double> times;
    std::vector<double> states;
    std::vector<int> u_actions;
    std::vector<int> v_actions;
    std::vector<double> normals;
};

// The single Euler engine behind every public entry point.
void run_euler(const GameModel& m, const ControlSource& u_source,
               const ControlSource& v_source, std::span<const double> x0,
               const StepPlan& plan, std::uint64_t seed, std::uint64_t path_index,
               PathWorkspace& ws) {
    const int d = m.d;
    const int dp = m.d_prime;
    const std::size_t n = plan.n_steps;
    ws.times.resize(n + 1);
    ws.states.resize((n + 1) * static_cast<std::size_t>(d));
    ws.u_actions.resize(n);
    ws.v_actions.resize(n);
    ws.normals.resize(n * static_cast<std::size_t>(dp));

    for (std::uint64_t j = 0; j <= n; ++j) {
        ws.times[j] = plan.t0 + (plan.t1 - plan.t0) * static_cast<double>(j) /
                                    static_cast<double>(plan.n_steps);
    }
    ws.times[0] = plan.t0;
    ws.times[n] = plan.t1;
    for (int i = 0; i < d; ++i) ws.states[static_cast<std::size_t>(i)] = x0[static_cast<std::size_t>(i)];

    const double sqrt_dt = std::sqrt(plan.dt);
    for (std::uint64_t j = 0; j < n; ++j) {
        SimContext ctx;
        ctx.t_left = ws.times[j];
        ctx.t_right = ws.times[j + 1];
        ctx.times = std::span<const double>(ws.times.data(), j + 1);
        ctx.states = std::span<const double>(ws.states.data(),
                                             (j + 1) * static_cast<std::size_t>(d));
        ctx.d = d;
        ctx.master_seed = seed;
        ctx.path_index = path_index;
        ctx.step_index = j;

        const int ui = u_source.action_index(ctx);
        ctx.current_u = ui;
        const int vi = v_source.action_index(ctx);
        if (ui < 0 || ui >= m.action_u.size() || vi < 0 || vi >= m.action_v.size()) {
            throw SimulationError("control source produced an off-grid action index");
        }
        ws.u_actions[j] = ui;
        ws.v_actions[j] = vi;

        for (int c = 0; c < dp; ++c) {
            const double udraw = counter_rng_uniform(seed, RngStream::noise,
                                                     path_index, j,
                                                     static_cast<std::uint32_t>(c));
            ws.normals[j * static_cast<std::size_t>(dp) + static_cast<std::size_t>(c)] =
                normal_inverse_cdf(udraw);
        }

        const std::span<const double> xj(
            ws.states.data() + j * static_cast<std::size_t>(d),
            static_cast<std::size_t>(d));
        const EvalContext ectx{ws.times[j], xj, m.action_u.point(ui),
                               m.action_v.point(vi)};
        double* xnext = ws.states.data() + (j + 1) * static_cast<std::size_t>(d);
        for (int i = 0; i < d; ++i) {
            double diffusion = 0.0;
            for (int c = 0; c < dp; ++c) {
                diffusion +=
                    m.sigma[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]
                        .eval(ectx) *
                    ws.normals[j * static_cast<std::size_t>(dp) +
                               static_cast<std::size_t>(c)];
            }
            const double next = xj[static_cast<std::size_t>(i)] +
                                m.drift[static_cast<std::size_t>(i)].eval(ectx) * plan.dt +
                                diffusion * sqrt_dt;
            if (!std::isfinite(next)) {
                throw SimulationError("non-finite state at step " + std::to_string(j));
            }
            xnext[i] = next;
        }
    }
}

double payoff_of(const GameModel& m, const PathWorkspace& ws) {
    const std::size_t d = static_cast<std::size_t>(m.d);
    const std::span<const double> xT(ws.states.data() + (ws.times.size() - 1) * d, d);
    return m.payoff.eval(EvalContext{ws.times.back(), xT, {}, {}});
}

// Parallel per-path loop writing one double per path into `out`; faults are
// counted and the lowest-index fault message is kept for the error report.
template <class PerPath>
void run_paths(std::uint64_t n_paths, int threads, std::vector<double>& out,
               const PerPath& per_path) {
    out.assign(n_paths, 0.0);
    std::atomic<std::uint64_t> fault_count{0};
    std::mutex first_mutex;
    std::uint64_t first_index = ~std::uint64_t{0};
    std::string first_message;

    parallel_for(n_paths, threads, [&](std::size_t lo, std::size_t hi) {
        PathWorkspace ws;
        for (std::size_t p = lo; p < hi; ++p) {
            try {
                out[p] = per_path(static_cast<std::uint64_t>(p), ws);
            } catch (const Error& e) {
                fault_count.fetch_add(1);
                std::lock_guard<std::mutex> lock(first_mutex);
                if (p < first_index) {
                    first_index = p;
                    first_message = e.what();
                }
            }
        }
    });
    if (fault_count.load() > 0) {
        throw SimulationError(std::to_string(fault_count.load()) +
                              " path fault(s); first at path " +
                              std::to_string(first_index) + ": " + first_message);
    }
}

}  // namespace

Path simulate_path(const GameModel& m, const ControlSource& u_source,
                   const ControlSource& v_source, std::span<const double> x0,
                   const SimulateSpec& spec, std::uint64_t path_index) {
    m.validate();
    if (static_cast<int>(x0.size()) != m.d) {
        throw DomainError("initial state has wrong dimension");
    }
    const double t1 = spec.end_time > 0.0 ? spec.end_time : m.horizon;
    const StepPlan plan = plan_steps(spec.start_time, t1, spec.dt_sim);
    PathWorkspace ws;
    run_euler(m, u_source, v_source, x0, plan, spec.seed, path_index, ws);
    Path path;
    path.times = std::move(ws.times);
    path.states = std::move(ws.states);
    path.u_actions = std::move(ws.u_actions);
    path.v_actions = std::move(ws.v_actions);
    path.normals = std::move(ws.normals);
    path.dt = plan.dt;
    path.seed = spec.seed;
    path.path_index = path_index;
    const std::span<const double> xT(
        path.states.data() + (path.times.size() - 1) * static_cast<std::size_t>(m.d),
        static_cast<std::size_t>(m.d));
    path.terminal_payoff = m.payoff.eval(EvalContext{path.times.back(), xT, {}, {}});
    return path;
}

PayoffEstimate mc_payoff(const GameModel& m, const ControlSource& u_source,
                         const ControlSource& v_source, std::span<const double> x0,
                         std::uint64_t n_paths, const SimulateSpec& spec) {
    m.validate();
    if (n_paths < 2) throw DomainError("mc_payoff needs n_paths >= 2");
    if (static_cast<int>(x0.size()) != m.d) {
        throw DomainError("initial state has wrong dimension");
    }
    const double t1 = spec.end_time > 0.0 ? spec.end_time : m.horizon;
    const StepPlan plan = plan_steps(spec.start_time, t1, spec.dt_sim);
    const int threads = spec.threads > 0 ? spec.threads : default_threads();

    std::vector<double> payoffs;
    run_paths(n_paths, threads, payoffs, [&](std::uint64_t p, PathWorkspace& ws) {
        run_euler(m, u_source, v_source, x0, plan, spec.seed, p, ws);
        return payoff_of(m, ws);
    });

    const MeanStderr ms = mean_and_stderr(payoffs);
    PayoffEstimate est;
    est.mean = ms.mean;
    est.stderr_of_mean = ms.stderr_of_mean;
    est.n_paths = n_paths;
    est.seed = spec.seed;
    est.dt_sim = plan.dt;
    return est;
}

ExitFrequency exit_frequency(const GameModel& m, const ControlSource& u_source,
                             const ControlSource& v_source,
                             std::span<const double> x0, double r, double t,
                             double eps_box, double coeff_bound,
                             std::uint64_t n_paths, double dt_sim,
                             std::uint64_t seed, int threads) {
    m.validate();
    if (!(eps_box > 0.0) || !(coeff_bound > 0.0)) {
        throw DomainError("exit_frequency needs positive eps_box and coefficient bound");
    }
    const double limit = std::min(eps_box / 2.0, eps_box / (4.0 * coeff_bound));
    if (t - r > limit + 1e-12) {
        throw DomainError("exit_frequency requires t - r <= min(eps/2, eps/(4C))");
    }
    const StepPlan plan = plan_steps(r, t, dt_sim);
    const int nthreads = threads > 0 ? threads : default_threads();
    const double threshold = eps_box / 2.0;

    std::vector<double> hits;
    run_paths(n_paths, nthreads, hits, [&](std::uint64_t p, PathWorkspace& ws) {
        run_euler(m, u_source, v_source, x0, plan, seed, p, ws);
        const std::size_t d = static_cast<std::size_t>(m.d);
        for (std::size_t j = 1; j < ws.times.size(); ++j) {
            for (std::size_t i = 0; i < d; ++i) {
                if (std::fabs(ws.states[j * d + i] - x0[i]) >= threshold) {
                    return 1.0;
                }
            }
        }
        return 0.0;
    });

    ExitFrequency out;
    out.n_paths = n_paths;
    out.frequency = pairwise_sum(hits) / static_cast<double>(n_paths);
    return out;
}

double gauge_tail_bound(double t_minus_r, double eps, double C, int d) {
    if (!(t_minus_r > 0.0) || !(eps > 0.0) || !(C > 0.0) || d < 1) {
        throw DomainError("gauge_tail_bound needs positive arguments and d >= 1");
    }
    const double z = eps / (4.0 * C * std::sqrt(t_minus_r));
    return 4.0 * static_cast<double>(d) * normal_upper_tail(z);
}

double gauge_function(double t, double eps, double C, double C_prime,
                      double sup_norm) {
    if (!(t > 0.0) || !(eps > 0.0) || !(C > 0.0) || !(C_prime > 0.0) ||
        !(sup_norm > 0.0)) {
        throw DomainError("gauge_function needs positive arguments");
    }
    const double z = eps / (4.0 * C * std::sqrt(t));
    return 2.0 * sup_norm * C_prime / t * normal_upper_tail(z);
}

PayoffEstimate martingale_defect(const ValueFunction& w, const GameModel& m,
                                 const SimpleMarkovStrategy& alpha,
                                 const ControlSource& v_source,
                                 std::span<const double> x0, double r, double t,
                                 std::uint64_t n_paths, double dt_sim,
                                 std::uint64_t seed, int threads) {
    m.validate();
    if (n_paths < 2) throw DomainError("martingale_defect needs n_paths >= 2");
    if (!(r < t)) throw DomainError("martingale_defect needs r < t");
    const StepPlan plan = plan_steps(r, t, dt_sim);
    const int nthreads = threads > 0 ? threads : default_threads();

    // The u action frozen over [r, t]: the strategy's choice for the
    // interval right after r, keyed by the snapshot x0.
    const double probe = r + 0.25 * (t - r);
    const ConstantSource frozen_u(strategy_action(alpha, probe, x0), "frozen-u");

    const double w_start = w.query(r, x0).value;
    std::vector<double> increments;
    run_paths(n_paths, nthreads, increments, [&](std::uint64_t p, PathWorkspace& ws) {
        run_euler(m, frozen_u, v_source, x0, plan, seed, p, ws);
        const std::size_t d = static_cast<std::size_t>(m.d);
        const std::span<const double> xT(
            ws.states.data() + (ws.times.size() - 1) * d, d);
        return w.query(t, xT).value - w_start;
    });

    const MeanStderr ms = mean_and_stderr(increments);
    PayoffEstimate est;
    est.mean = ms.mean;
    est.stderr_of_mean = ms.stderr_of_mean;
    est.n_paths = n_paths;
    est.seed = seed;
    est.dt_sim = plan.dt;
    return est;
}

}  // namespace gamelab
