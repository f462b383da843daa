// gamelab: a numerical laboratory for two-player zero-sum stochastic
// differential games. Solves the lower Isaacs equation on a truncated box,
// synthesizes time-grid Markov strategies and counter-strategies, computes
// exact grid-restricted values, and verifies the value sandwich, the gap
// convergence and approximate saddle points by Monte Carlo simulation.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gamelab/experiments.hpp"
#include "gamelab/lattice.hpp"
#include "gamelab/parallel.hpp"
#include "gamelab/reports.hpp"
#include "json.hpp"

using namespace gamelab;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

struct CommonOpts {
    std::string model_path;
    std::string out_dir;
    std::uint64_t seed = 1;
    int threads = 1;
    double x_min = -8.0;
    double x_max = 8.0;
    double dx = 1.0 / 32.0;
    int nx = 0;  // overrides dx when set
    double t_start = 0.0;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_grid = true) {
    cmd->add_option("--model", o.model_path, "model configuration file")->required();
    const char* env_out = std::getenv("GAMELAB_OUT_DIR");
    if (env_out != nullptr) o.out_dir = env_out;
    cmd->add_option("--out", o.out_dir,
                    "output directory (default: $GAMELAB_OUT_DIR, else no files)");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--threads", o.threads, "worker threads (results invariant)");
    if (needs_grid) {
        cmd->add_option("--x-min", o.x_min, "spatial box lower edge");
        cmd->add_option("--x-max", o.x_max, "spatial box upper edge");
        cmd->add_option("--dx", o.dx, "spatial step");
        cmd->add_option("--nx", o.nx, "node count per axis (overrides --dx)");
        cmd->add_option("--t-start", o.t_start, "initial time s");
    }
}

SpatialGrid make_grid(const CommonOpts& o, int dim) {
    int count = o.nx;
    if (count <= 0) {
        count = static_cast<int>(std::lround((o.x_max - o.x_min) / o.dx)) + 1;
    }
    SpatialGrid g;
    for (int i = 0; i < dim; ++i) g.axes.push_back(AxisSpec{o.x_min, o.x_max, count});
    g.validate();
    return g;
}

json grid_meta(const SpatialGrid& g) {
    json axes = json::array();
    for (const auto& a : g.axes) {
        axes.push_back({{"min", a.min}, {"max", a.max}, {"count", a.count}});
    }
    return axes;
}

void emit_meta(const std::string& out_dir, json meta) {
    meta["tool"] = "gamelab";
    meta["version"] = "0.1.0";
    write_text_file(out_dir + "/meta.json", meta.dump(2) + "\n");
}

std::unique_ptr<ControlSource> make_source(const std::string& spec, char side,
                                           const GameModel& m,
                                           const ValueFunction* vf,
                                           const SimpleMarkovStrategy* alpha,
                                           const SimpleMarkovCounterStrategy* gamma) {
    const ActionGrid& grid = side == 'u' ? m.action_u : m.action_v;
    if (spec.rfind("const:", 0) == 0) {
        const int idx = std::stoi(spec.substr(6));
        if (idx < 0 || idx >= grid.size()) {
            throw ConfigError("source index outside the action grid: " + spec);
        }
        return std::make_unique<ConstantSource>(idx,
                                                side == 'u' ? "const-u" : "const-v");
    }
    if (spec == "random") {
        return std::make_unique<RandomPiecewiseSource>(
            grid.size(), side == 'u' ? RngStream::u_source : RngStream::v_source);
    }
    if (spec == "strategy" && side == 'u') {
        return std::make_unique<MarkovStrategySource>(*alpha);
    }
    if (spec == "counter" && side == 'v') {
        return std::make_unique<CounterStrategySource>(*gamma);
    }
    if (spec == "greedy" && side == 'u') {
        return std::make_unique<GreedyFeedbackSource>(m, *vf);
    }
    if (spec == "greedy" && side == 'v') {
        return std::make_unique<CounterResponseFeedbackSource>(m, *vf);
    }
    throw ConfigError(std::string("unknown ") + side +
                      "-source '" + spec +
                      "' (use const:<i>, random, strategy, counter, greedy)");
}

int cmd_solve(const CommonOpts& o, const std::vector<double>& points) {
    const GameModel m = load_model_file(o.model_path);
    const SpatialGrid grid = make_grid(o, m.d);
    SolveOptions opts;
    opts.threads = o.threads;
    const ValueFunction vf = solve_lower_isaacs(m, grid, o.t_start, opts);
    for (const double x : points) {
        std::vector<double> xv(static_cast<std::size_t>(m.d), 0.0);
        xv[0] = x;
        std::printf("v(%g, %g) = %.10g\n", o.t_start, x, vf.value(o.t_start, xv));
    }
    std::printf("time levels: %d, max clamp correction: %.3e\n", vf.num_levels(),
                vf.max_clamp_correction);
    if (!o.out_dir.empty()) {
        ensure_directory(o.out_dir);
        vf.write_csv_file(o.out_dir + "/value.csv");
        json meta;
        meta["command"] = "solve";
        meta["model_path"] = o.model_path;
        meta["grid"] = grid_meta(grid);
        meta["start_time"] = o.t_start;
        meta["time_levels"] = vf.num_levels();
        meta["max_clamp_correction"] = vf.max_clamp_correction;
        meta["files"] = {"value.csv", "meta.json"};
        emit_meta(o.out_dir, meta);
        std::printf("wrote %s/value.csv\n", o.out_dir.c_str());
    }
    return kExitOk;
}

int cmd_synthesize(const CommonOpts& o, int pi_steps) {
    const GameModel m = load_model_file(o.model_path);
    const SpatialGrid grid = make_grid(o, m.d);
    SolveOptions opts;
    opts.threads = o.threads;
    opts.align_steps_multiple = pi_steps;
    const ValueFunction vf = solve_lower_isaacs(m, grid, o.t_start, opts);
    const TimeGrid pi = TimeGrid::uniform(o.t_start, m.horizon, pi_steps);
    const SimpleMarkovStrategy alpha = synthesize_markov_strategy(m, vf, pi);
    const SimpleMarkovCounterStrategy gamma =
        synthesize_markov_counter_strategy(m, vf, pi);
    std::printf("synthesized %d intervals over %zu nodes\n", pi.intervals(),
                grid.num_nodes());
    if (!o.out_dir.empty()) {
        ensure_directory(o.out_dir);
        vf.write_csv_file(o.out_dir + "/value.csv");
        alpha.write_csv_file(o.out_dir + "/strategy.csv");
        gamma.write_csv_file(o.out_dir + "/counter_strategy.csv");
        json meta;
        meta["command"] = "synthesize";
        meta["model_path"] = o.model_path;
        meta["grid"] = grid_meta(grid);
        meta["pi_steps"] = pi_steps;
        meta["start_time"] = o.t_start;
        meta["files"] = {"value.csv", "strategy.csv", "counter_strategy.csv",
                         "meta.json"};
        emit_meta(o.out_dir, meta);
        std::printf("wrote strategy tables to %s\n", o.out_dir.c_str());
    }
    return kExitOk;
}

int cmd_simulate(const CommonOpts& o, const std::string& u_spec,
                 const std::string& v_spec, double x0, std::uint64_t n_paths,
                 double dt_sim, int pi_steps) {
    const GameModel m = load_model_file(o.model_path);
    const bool needs_vf = u_spec == "strategy" || u_spec == "greedy" ||
                          v_spec == "counter" || v_spec == "greedy";
    ValueFunction vf;
    SimpleMarkovStrategy alpha;
    SimpleMarkovCounterStrategy gamma;
    if (needs_vf) {
        const SpatialGrid grid = make_grid(o, m.d);
        SolveOptions opts;
        opts.threads = o.threads;
        opts.align_steps_multiple = pi_steps;
        vf = solve_lower_isaacs(m, grid, o.t_start, opts);
        const TimeGrid pi = TimeGrid::uniform(o.t_start, m.horizon, pi_steps);
        alpha = synthesize_markov_strategy(m, vf, pi);
        gamma = synthesize_markov_counter_strategy(m, vf, pi);
    }
    const auto u_src = make_source(u_spec, 'u', m, &vf, &alpha, &gamma);
    const auto v_src = make_source(v_spec, 'v', m, &vf, &alpha, &gamma);

    SimulateSpec spec;
    spec.start_time = o.t_start;
    spec.end_time = m.horizon;
    spec.dt_sim = dt_sim;
    spec.seed = o.seed;
    spec.threads = o.threads;
    std::vector<double> x0v(static_cast<std::size_t>(m.d), 0.0);
    x0v[0] = x0;
    const PayoffEstimate est = mc_payoff(m, *u_src, *v_src, x0v, n_paths, spec);
    std::printf("E[g(X_T)] = %.8g +- %.3g  (n=%llu, dt=%g, seed=%llu)\n", est.mean,
                est.stderr_of_mean, static_cast<unsigned long long>(est.n_paths),
                est.dt_sim, static_cast<unsigned long long>(est.seed));
    if (!o.out_dir.empty()) {
        ensure_directory(o.out_dir);
        std::ostringstream csv;
        csv << "u_source,v_source,x0,mean,stderr,n_paths,dt_sim,seed\n";
        char buf[64];
        csv << u_src->describe() << ',' << v_src->describe() << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", x0);
        csv << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", est.mean);
        csv << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", est.stderr_of_mean);
        csv << buf << ',' << est.n_paths << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", est.dt_sim);
        csv << buf << ',' << est.seed << '\n';
        write_text_file(o.out_dir + "/estimate.csv", csv.str());
        json meta;
        meta["command"] = "simulate";
        meta["model_path"] = o.model_path;
        meta["u_source"] = u_src->describe();
        meta["v_source"] = v_src->describe();
        meta["x0"] = x0;
        meta["n_paths"] = n_paths;
        meta["dt_sim"] = dt_sim;
        meta["seed"] = o.seed;
        meta["files"] = {"estimate.csv", "meta.json"};
        emit_meta(o.out_dir, meta);
    }
    return kExitOk;
}

int cmd_converge(const CommonOpts& o, const std::vector<int>& meshes,
                 const std::vector<double>& points, double tol) {
    ExperimentConfig cfg;
    cfg.model_path = o.model_path;
    cfg.model = load_model_file(o.model_path);
    cfg.grid = make_grid(o, cfg.model.d);
    cfg.start_time = o.t_start;
    cfg.mesh_intervals = meshes;
    cfg.reporting_points = points;
    cfg.tolerance = tol;
    cfg.seed = o.seed;
    cfg.out_dir = o.out_dir;
    cfg.threads = o.threads;
    const ConvergenceResult result = run_convergence_study(cfg);
    std::printf("mesh          max_gap\n");
    for (std::size_t i = 0; i < result.meshes.size(); ++i) {
        std::printf("%-12.6g  %.6g\n", result.meshes[i], result.max_gaps[i]);
    }
    for (const auto& row : result.table.rows) {
        if (row.violation) {
            std::printf("ORDERING VIOLATION at mesh %g, x=%g: gap_lo=%.3e gap_hi=%.3e\n",
                        row.mesh, row.x, row.gap_lo, row.gap_hi);
        }
    }
    if (!o.out_dir.empty()) {
        std::printf("wrote gaps.csv, gaps.svg, meta.json to %s\n", o.out_dir.c_str());
    }
    return result.ordering_violation ? kExitViolation : kExitOk;
}

int cmd_saddle(const CommonOpts& o, double eps, int pi_steps,
               const std::vector<double>& points, std::uint64_t n_paths,
               double dt_sim) {
    ExperimentConfig cfg;
    cfg.model_path = o.model_path;
    cfg.model = load_model_file(o.model_path);
    cfg.grid = make_grid(o, cfg.model.d);
    cfg.start_time = o.t_start;
    cfg.reporting_points = points;
    cfg.n_paths = n_paths;
    cfg.dt_sim = dt_sim;
    cfg.seed = o.seed;
    cfg.out_dir = o.out_dir;
    cfg.threads = o.threads;
    const SaddleReport report = run_saddle_check(cfg, eps, pi_steps);
    if (report.tolerance_dominated) {
        std::printf("epsilon = %g: numerical tolerance dominates; refusing a hard "
                    "pass/fail verdict\n",
                    eps);
        return kExitUsage;
    }
    for (const auto& row : report.rows) {
        std::printf("x=%g: pair=%.6g+-%.2g, worst u dev=%.6g (%s), worst v=%.6g (%s), "
                    "dev gain u=%.4g, dev loss v=%.4g\n",
                    row.x, row.pair_value, row.pair_stderr, row.worst_u_payoff,
                    row.worst_u_source.c_str(), row.worst_v_payoff,
                    row.worst_v_source.c_str(), row.slack_u, row.slack_v);
    }
    std::printf("saddle checks: %d/%d passed (2 eps = %g)\n", report.checks_passed(),
                report.checks_total(), 2.0 * eps);
    return report.all_pass() ? kExitOk : kExitViolation;
}

int cmd_audit(const CommonOpts& o, std::uint64_t samples, double radius) {
    const GameModel m = load_model_file(o.model_path);
    const AuditReport r = audit_assumptions(m, samples, radius, o.seed);
    std::printf("Lipschitz estimate L(%g) = %.6g\n", radius, r.lipschitz_estimate);
    std::printf("growth constant      C   = %.6g\n", r.growth_constant);
    for (const auto& f : r.continuity_flags) {
        std::printf("continuity %-14s %s\n", f.coefficient.c_str(),
                    f.continuous ? "ok" : "SUSPECT");
    }
    if (!o.out_dir.empty()) {
        ensure_directory(o.out_dir);
        json meta;
        meta["command"] = "audit";
        meta["model_path"] = o.model_path;
        meta["samples"] = r.samples_used;
        meta["radius"] = r.radius;
        meta["seed"] = r.seed;
        meta["lipschitz_estimate"] = r.lipschitz_estimate;
        meta["growth_constant"] = r.growth_constant;
        json flags = json::array();
        for (const auto& f : r.continuity_flags) {
            flags.push_back({{"coefficient", f.coefficient},
                             {"continuous", f.continuous}});
        }
        meta["continuity_flags"] = flags;
        meta["files"] = {"meta.json"};
        emit_meta(o.out_dir, meta);
    }
    return r.all_continuous() ? kExitOk : kExitViolation;
}

int cmd_oracle(const CommonOpts& o, int steps, int nx, const std::string& mode_name,
               int pi_steps) {
    const GameModel m = load_model_file(o.model_path);
    const LatticeMode mode = mode_name == "upwind" ? LatticeMode::drift_upwind
                                                   : LatticeMode::central;
    const LatticeGame L = build_lattice(m, steps, o.x_min, o.x_max, nx, mode);
    const LatticeValues lower = lattice_lower_value(L);
    const LatticeValues upper = lattice_upper_value(L);
    const int c = L.node_of(0.0);
    std::printf("lattice lower value at (0, %g) = %.8g\n", L.coord(c), lower.at(0, c));
    std::printf("lattice upper value at (0, %g) = %.8g\n", L.coord(c), upper.at(0, c));

    std::vector<double> restricted;
    if (pi_steps > 0) {
        const TimeGrid pi =
            TimeGrid::uniform(0.0, L.h * static_cast<double>(L.n_steps), pi_steps);
        restricted = lattice_grid_restricted_lower(L, pi);
        std::printf("grid-restricted lower value (pi=%d) = %.8g\n", pi_steps,
                    restricted[static_cast<std::size_t>(c)]);
    }
    if (!o.out_dir.empty()) {
        ensure_directory(o.out_dir);
        std::ostringstream lo_csv, hi_csv;
        lower.write_csv(lo_csv, L);
        upper.write_csv(hi_csv, L);
        write_text_file(o.out_dir + "/oracle_lower.csv", lo_csv.str());
        write_text_file(o.out_dir + "/oracle_upper.csv", hi_csv.str());
        json meta;
        meta["command"] = "oracle";
        meta["model_path"] = o.model_path;
        meta["mode"] = mode_name;
        meta["n_steps"] = steps;
        meta["n_x"] = nx;
        meta["h"] = L.h;
        meta["dx"] = L.dx();
        meta["files"] = {"oracle_lower.csv", "oracle_upper.csv", "meta.json"};
        if (!restricted.empty()) meta["pi_steps"] = pi_steps;
        emit_meta(o.out_dir, meta);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gamelab: zero-sum stochastic differential game laboratory"};
    app.require_subcommand(1);

    CommonOpts solve_o, synth_o, sim_o, conv_o, saddle_o, audit_o, oracle_o;
    std::vector<double> solve_points{0.0};
    int synth_pi = 32;
    std::string sim_u = "random", sim_v = "random";
    double sim_x0 = 0.0;
    std::uint64_t sim_paths = 10000;
    double sim_dt = 1.0 / 256.0;
    int sim_pi = 32;
    std::vector<int> conv_meshes{4, 8, 16, 32};
    std::vector<double> conv_points{-1.0, 0.0, 1.0};
    double conv_tol = 1e-2;
    double saddle_eps = 0.05;
    int saddle_pi = 32;
    std::vector<double> saddle_points{-1.0, 0.0, 1.0};
    std::uint64_t saddle_paths = 100000;
    double saddle_dt = 1.0 / 256.0;
    std::uint64_t audit_samples = 100000;
    double audit_radius = 8.0;
    int oracle_steps = 4096;
    int oracle_nx = 1025;
    std::string oracle_mode = "central";
    int oracle_pi = 0;

    auto* solve = app.add_subcommand("solve", "solve the lower Isaacs equation");
    add_common(solve, solve_o);
    solve->add_option("--points", solve_points, "x values to print")->delimiter(',');

    auto* synth = app.add_subcommand(
        "synthesize", "solve, then build Markov strategy/counter-strategy tables");
    add_common(synth, synth_o);
    synth->add_option("--pi-steps", synth_pi, "macro grid interval count");

    auto* sim = app.add_subcommand("simulate", "Monte Carlo payoff estimation");
    add_common(sim, sim_o);
    sim->add_option("--u-source", sim_u, "const:<i>|random|strategy|greedy");
    sim->add_option("--v-source", sim_v, "const:<i>|random|counter|greedy");
    sim->add_option("--x0", sim_x0, "initial state (first coordinate)");
    sim->add_option("--paths", sim_paths, "path count");
    sim->add_option("--dt-sim", sim_dt, "simulation step");
    sim->add_option("--pi-steps", sim_pi, "macro grid for strategy sources");

    auto* conv = app.add_subcommand(
        "converge", "restricted-value sandwich and gap convergence study");
    add_common(conv, conv_o);
    conv->add_option("--meshes", conv_meshes,
                     "macro interval counts (strictly increasing)")
        ->delimiter(',');
    conv->add_option("--points", conv_points, "reporting x values")->delimiter(',');
    conv->add_option("--tol", conv_tol, "declared numerical tolerance");

    auto* sad = app.add_subcommand("saddle", "approximate-saddle Monte Carlo check");
    add_common(sad, saddle_o);
    sad->add_option("--eps", saddle_eps, "epsilon target")->required();
    sad->add_option("--pi-steps", saddle_pi, "macro grid interval count");
    sad->add_option("--points", saddle_points, "reporting x values")->delimiter(',');
    sad->add_option("--paths", saddle_paths, "path count per estimate");
    sad->add_option("--dt-sim", saddle_dt, "simulation step");

    auto* audit = app.add_subcommand("audit", "sample the coefficient assumptions");
    add_common(audit, audit_o, /*needs_grid=*/false);
    audit->add_option("--samples", audit_samples, "sample count");
    audit->add_option("--radius", audit_radius, "state-space radius K");

    auto* oracle = app.add_subcommand("oracle", "discrete lattice cross-check");
    add_common(oracle, oracle_o);
    oracle->add_option("--steps", oracle_steps, "micro time steps");
    oracle->add_option("--oracle-nx", oracle_nx, "lattice node count");
    oracle->add_option("--mode", oracle_mode, "central|upwind");
    oracle->add_option("--pi-steps", oracle_pi,
                       "also compute the grid-restricted lower value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (solve->parsed()) {
            set_default_threads(solve_o.threads);
            return cmd_solve(solve_o, solve_points);
        }
        if (synth->parsed()) {
            set_default_threads(synth_o.threads);
            return cmd_synthesize(synth_o, synth_pi);
        }
        if (sim->parsed()) {
            set_default_threads(sim_o.threads);
            return cmd_simulate(sim_o, sim_u, sim_v, sim_x0, sim_paths, sim_dt, sim_pi);
        }
        if (conv->parsed()) {
            set_default_threads(conv_o.threads);
            return cmd_converge(conv_o, conv_meshes, conv_points, conv_tol);
        }
        if (sad->parsed()) {
            set_default_threads(saddle_o.threads);
            return cmd_saddle(saddle_o, saddle_eps, saddle_pi, saddle_points,
                              saddle_paths, saddle_dt);
        }
        if (audit->parsed()) {
            set_default_threads(audit_o.threads);
            return cmd_audit(audit_o, audit_samples, audit_radius);
        }
        if (oracle->parsed()) {
            set_default_threads(oracle_o.threads);
            return cmd_oracle(oracle_o, oracle_steps, oracle_nx, oracle_mode,
                              oracle_pi);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitViolation;
    }
    return kExitUsage;
}
