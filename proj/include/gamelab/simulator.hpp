#ifndef GAMELAB_SIMULATOR_HPP
#define GAMELAB_SIMULATOR_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gamelab/numerics.hpp"
#include "gamelab/strategy.hpp"

namespace gamelab {

// One Euler path of the controlled state equation. The recorded data
// reproduce the recursion exactly:
//   X_{j+1} = X_j + b(t_j, X_j, u_j, v_j) dt + sigma(t_j, X_j, u_j, v_j) sqrt(dt) Z_j
// with u_j, v_j the actions in force on (t_j, t_{j+1}].
struct Path {
    std::vector<double> times;    // n_steps + 1
    std::vector<double> states;   // (n_steps + 1) x d, row-major
    std::vector<int> u_actions;   // n_steps
    std::vector<int> v_actions;   // n_steps
    std::vector<double> normals;  // n_steps x d_prime
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    double terminal_payoff = 0.0;

    int steps() const { return static_cast<int>(u_actions.size()); }
    std::span<const double> state(int j) const;
};

struct PayoffEstimate {
    double mean = 0.0;
    double stderr_of_mean = 0.0;
    std::uint64_t n_paths = 0;
    std::uint64_t seed = 0;
    double dt_sim = 0.0;
};

struct SimulateSpec {
    double start_time = 0.0;
    double end_time = 0.0;  // <= 0: use the model horizon
    double dt_sim = 0.0;
    std::uint64_t seed = 0;
    int threads = 0;  // 0: default_threads()
};

// Simulates one path from x0. Deterministic in (seed, path_index): normal
// draws come from the counter RNG keyed by (seed, path, step, component),
// so results do not depend on evaluation order.
Path simulate_path(const GameModel& m, const ControlSource& u_source,
                   const ControlSource& v_source, std::span<const double> x0,
                   const SimulateSpec& spec, std::uint64_t path_index = 0);

// Monte Carlo estimate of E[g(X_T)] over independent per-path streams
// derived from the master seed. Totals use pairwise summation over the
// path-indexed buffer, so the estimate is bit-identical for any thread
// count. Any path fault aborts the run with the fault count.
PayoffEstimate mc_payoff(const GameModel& m, const ControlSource& u_source,
                         const ControlSource& v_source, std::span<const double> x0,
                         std::uint64_t n_paths, const SimulateSpec& spec);

struct ExitFrequency {
    double frequency = 0.0;
    std::uint64_t n_paths = 0;
    double binomial_stderr() const;
};

// Fraction of paths whose max-norm displacement from x0 reaches
// eps_box / 2 somewhere on [r, t]. Requires t - r <= min(eps/2, eps/(4C))
// with C the caller's coefficient bound on the box.
ExitFrequency exit_frequency(const GameModel& m, const ControlSource& u_source,
                             const ControlSource& v_source,
                             std::span<const double> x0, double r, double t,
                             double eps_box, double coeff_bound,
                             std::uint64_t n_paths, double dt_sim,
                             std::uint64_t seed, int threads = 0);

// 4 d * P(N(0,1) >= eps / (4 C sqrt(t - r))): the Gaussian exit bound.
double gauge_tail_bound(double t_minus_r, double eps, double C, int d);

// (2 sup_norm C' / t) * P(N(0,1) >= eps / (4 C sqrt(t))): the vanishing
// gauge built from the exit bound; C' is 4d in this artifact.
double gauge_function(double t, double eps, double C, double C_prime,
                      double sup_norm);

// Monte Carlo estimate of E[w(t, X_t) - w(r, X_r)] with the u action frozen
// at the strategy's r-snapshot choice and v drawn from v_source. For an
// asymptotic sub-solution w the mean is bounded below by -(t-r) phi(t-r).
PayoffEstimate martingale_defect(const ValueFunction& w, const GameModel& m,
                                 const SimpleMarkovStrategy& alpha,
                                 const ControlSource& v_source,
                                 std::span<const double> x0, double r, double t,
                                 std::uint64_t n_paths, double dt_sim,
                                 std::uint64_t seed, int threads = 0);

}  // namespace gamelab

#endif
