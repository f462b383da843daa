#include "gamelab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "gamelab/parallel.hpp"
#include "gamelab/reports.hpp"
#include "json.hpp"

namespace gamelab {

namespace {

using nlohmann::json;

int lcm_of(const std::vector<int>& xs) {
    long long acc = 1;
    for (const int x : xs) {
        acc = std::lcm(acc, static_cast<long long>(x));
        if (acc > 1'000'000) throw ConfigError("mesh interval counts are too large");
    }
    return static_cast<int>(acc);
}

json grid_json(const SpatialGrid& g) {
    json axes = json::array();
    for (const auto& a : g.axes) {
        axes.push_back({{"min", a.min}, {"max", a.max}, {"count", a.count}});
    }
    return axes;
}

json base_meta(const ExperimentConfig& cfg) {
    json meta;
    meta["tool"] = "gamelab";
    meta["version"] = "0.1.0";
    meta["model_path"] = cfg.model_path;
    meta["grid"] = grid_json(cfg.grid);
    meta["start_time"] = cfg.start_time;
    meta["horizon"] = cfg.model.horizon;
    meta["action_grid_sizes"] = {cfg.model.action_u.size(), cfg.model.action_v.size()};
    meta["reporting_points"] = cfg.reporting_points;
    meta["tolerance"] = cfg.tolerance;
    meta["seed"] = cfg.seed;
    meta["n_paths"] = cfg.n_paths;
    meta["dt_sim"] = cfg.dt_sim;
    meta["threads"] = cfg.threads > 0 ? cfg.threads : default_threads();
    return meta;
}

void write_meta(const std::string& out_dir, const json& meta) {
    write_text_file(out_dir + "/meta.json", meta.dump(2) + "\n");
}

[[noreturn]] void stage_fail(const std::string& stage, const Error& e) {
    throw Error("stage '" + stage + "' failed: " + e.what());
}

}  // namespace

void ExperimentConfig::validate() const {
    model.validate();
    grid.validate();
    if (mesh_intervals.empty()) throw ConfigError("mesh sequence must be non-empty");
    for (std::size_t i = 0; i < mesh_intervals.size(); ++i) {
        if (mesh_intervals[i] < 1) throw ConfigError("mesh interval count must be >= 1");
        if (i > 0 && mesh_intervals[i] <= mesh_intervals[i - 1]) {
            throw ConfigError("mesh sequence must be strictly decreasing "
                              "(interval counts strictly increasing)");
        }
    }
    if (reporting_points.empty()) throw ConfigError("need at least one reporting point");
    for (const double x : reporting_points) {
        const std::vector<double> xv{x};
        if (grid.dim() != 1 || !grid.contains(xv)) {
            throw ConfigError("reporting points must lie inside the 1-D solver domain");
        }
    }
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (!(start_time < model.horizon)) {
        throw ConfigError("start time must precede the horizon");
    }
}

ConvergenceResult run_convergence_study(const ExperimentConfig& cfg) {
    cfg.validate();

    ValueFunction vf;
    try {
        SolveOptions opts;
        opts.align_steps_multiple = lcm_of(cfg.mesh_intervals);
        opts.threads = cfg.threads;
        vf = solve_lower_isaacs(cfg.model, cfg.grid, cfg.start_time, opts);
    } catch (const Error& e) {
        stage_fail("solve", e);
    }

    std::vector<AugmentedValue> lowers, uppers;
    for (const int intervals : cfg.mesh_intervals) {
        const TimeGrid pi =
            TimeGrid::uniform(cfg.start_time, cfg.model.horizon, intervals);
        SimpleMarkovStrategy alpha;
        SimpleMarkovCounterStrategy gamma;
        try {
            alpha = synthesize_markov_strategy(cfg.model, vf, pi);
            gamma = synthesize_markov_counter_strategy(cfg.model, vf, pi);
        } catch (const Error& e) {
            stage_fail("synthesize (intervals=" + std::to_string(intervals) + ")", e);
        }
        try {
            lowers.push_back(adversary_best_response_value(cfg.model, alpha, vf));
        } catch (const Error& e) {
            stage_fail("adversary best response (intervals=" +
                           std::to_string(intervals) + ")",
                       e);
        }
        try {
            uppers.push_back(controller_best_response_value(cfg.model, gamma, vf));
        } catch (const Error& e) {
            stage_fail("controller best response (intervals=" +
                           std::to_string(intervals) + ")",
                       e);
        }
    }

    ConvergenceResult result;
    try {
        result.table =
            sandwich_report(vf, lowers, uppers, cfg.reporting_points, cfg.tolerance);
    } catch (const Error& e) {
        stage_fail("sandwich report", e);
    }
    result.ordering_violation = result.table.any_violation();
    for (const auto& av : lowers) {
        result.meshes.push_back(av.grid.mesh());
    }
    for (const double mesh : result.meshes) {
        result.max_gaps.push_back(result.table.max_gap_at_mesh(mesh));
    }

    if (!cfg.out_dir.empty()) {
        try {
            ensure_directory(cfg.out_dir);
            result.table.write_csv_file(cfg.out_dir + "/gaps.csv");
            PlotSeries series{"max gap over reporting points", {}};
            for (std::size_t i = 0; i < result.meshes.size(); ++i) {
                series.points.emplace_back(result.meshes[i], result.max_gaps[i]);
            }
            write_text_file(cfg.out_dir + "/gaps.svg",
                            render_loglog_svg("restricted-value gap vs mesh",
                                              "mesh |pi|", "v_pi_plus - v_pi_minus",
                                              {series}));
            json meta = base_meta(cfg);
            meta["experiment"] = "convergence";
            meta["mesh_intervals"] = cfg.mesh_intervals;
            meta["meshes"] = result.meshes;
            meta["max_gaps"] = result.max_gaps;
            meta["solver_time_levels"] = vf.num_levels();
            meta["solver_max_clamp_correction"] = vf.max_clamp_correction;
            meta["ordering_violation"] = result.ordering_violation;
            meta["files"] = {"gaps.csv", "gaps.svg", "meta.json"};
            write_meta(cfg.out_dir, meta);
        } catch (const Error& e) {
            stage_fail("emit report", e);
        }
    }
    return result;
}

std::vector<std::unique_ptr<ControlSource>> u_battery(const GameModel& m,
                                                      const ValueFunction& vf) {
    std::vector<std::unique_ptr<ControlSource>> battery;
    for (int i = 0; i < m.action_u.size(); ++i) {
        battery.push_back(std::make_unique<ConstantSource>(i, "const-u"));
    }
    battery.push_back(std::make_unique<RandomPiecewiseSource>(m.action_u.size(),
                                                              RngStream::u_source));
    battery.push_back(std::make_unique<GreedyFeedbackSource>(m, vf));
    return battery;
}

std::vector<std::unique_ptr<ControlSource>> v_battery(const GameModel& m,
                                                      const ValueFunction& vf) {
    std::vector<std::unique_ptr<ControlSource>> battery;
    for (int i = 0; i < m.action_v.size(); ++i) {
        battery.push_back(std::make_unique<ConstantSource>(i, "const-v"));
    }
    battery.push_back(std::make_unique<RandomPiecewiseSource>(m.action_v.size(),
                                                              RngStream::v_source));
    battery.push_back(std::make_unique<CounterResponseFeedbackSource>(m, vf));
    return battery;
}

bool SaddleReport::all_pass() const {
    if (tolerance_dominated) return false;
    for (const auto& row : rows) {
        for (const auto& c : row.u_checks) {
            if (!c.pass) return false;
        }
        for (const auto& c : row.v_checks) {
            if (!c.pass) return false;
        }
    }
    return true;
}

int SaddleReport::checks_total() const {
    int n = 0;
    for (const auto& row : rows) {
        n += static_cast<int>(row.u_checks.size() + row.v_checks.size());
    }
    return n;
}

int SaddleReport::checks_passed() const {
    int n = 0;
    for (const auto& row : rows) {
        for (const auto& c : row.u_checks) n += c.pass ? 1 : 0;
        for (const auto& c : row.v_checks) n += c.pass ? 1 : 0;
    }
    return n;
}

void SaddleReport::write_csv(std::ostream& os) const {
    os << "x,side,source,payoff,stderr,pair_value,pair_stderr,slack,margin,pass\n";
    char buf[64];
    const auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << buf;
    };
    for (const auto& row : rows) {
        const auto emit = [&](const char* side, const SaddleCheck& c) {
            put(row.x);
            os << ',' << side << ',' << c.source << ',';
            put(c.payoff);
            os << ',';
            put(c.stderr_of_mean);
            os << ',';
            put(row.pair_value);
            os << ',';
            put(row.pair_stderr);
            os << ',';
            put(c.slack);
            os << ',';
            put(c.margin);
            os << ',' << (c.pass ? 1 : 0) << '\n';
        };
        for (const auto& c : row.u_checks) emit("u", c);
        for (const auto& c : row.v_checks) emit("v", c);
    }
}

SaddleReport run_saddle_check(const ExperimentConfig& cfg, double epsilon,
                              int pi_intervals) {
    cfg.validate();
    if (pi_intervals < 1) throw ConfigError("saddle check needs pi_intervals >= 1");

    SaddleReport report;
    report.epsilon = epsilon;
    report.pi_intervals = pi_intervals;
    if (!(epsilon > 0.0)) {
        // Numerical tolerance dominates a zero target; refuse pass/fail.
        report.tolerance_dominated = true;
        return report;
    }

    ValueFunction vf;
    SimpleMarkovStrategy alpha;
    SimpleMarkovCounterStrategy gamma;
    try {
        SolveOptions opts;
        opts.align_steps_multiple = pi_intervals;
        opts.threads = cfg.threads;
        vf = solve_lower_isaacs(cfg.model, cfg.grid, cfg.start_time, opts);
        const TimeGrid pi =
            TimeGrid::uniform(cfg.start_time, cfg.model.horizon, pi_intervals);
        alpha = synthesize_markov_strategy(cfg.model, vf, pi);
        gamma = synthesize_markov_counter_strategy(cfg.model, vf, pi);
    } catch (const Error& e) {
        stage_fail("solve/synthesize", e);
    }

    const auto u_sources = u_battery(cfg.model, vf);
    const auto v_sources = v_battery(cfg.model, vf);
    if (u_sources.empty() || v_sources.empty()) {
        throw ConfigError("empty battery");
    }

    const MarkovStrategySource pair_u(alpha);
    const CounterStrategySource pair_v(gamma);

    SimulateSpec spec;
    spec.start_time = cfg.start_time;
    spec.end_time = cfg.model.horizon;
    spec.dt_sim = cfg.dt_sim;
    spec.seed = cfg.seed;  // common random numbers across compared configs
    spec.threads = cfg.threads;

    try {
        for (const double x : cfg.reporting_points) {
            const std::vector<double> x0{x};
            SaddleReport::Row row;
            row.x = x;
            const PayoffEstimate pair =
                mc_payoff(cfg.model, pair_u, pair_v, x0, cfg.n_paths, spec);
            row.pair_value = pair.mean;
            row.pair_stderr = pair.stderr_of_mean;

            bool have_worst_u = false;
            for (const auto& src : u_sources) {
                const PayoffEstimate est =
                    mc_payoff(cfg.model, *src, pair_v, x0, cfg.n_paths, spec);
                SaddleCheck c;
                c.source = src->describe();
                c.payoff = est.mean;
                c.stderr_of_mean = est.stderr_of_mean;
                c.margin = 3.0 * std::sqrt(est.stderr_of_mean * est.stderr_of_mean +
                                           pair.stderr_of_mean * pair.stderr_of_mean);
                c.slack = (pair.mean + 2.0 * epsilon) - est.mean;
                c.pass = c.slack >= -c.margin;
                if (!have_worst_u || est.mean > row.worst_u_payoff) {
                    row.worst_u_payoff = est.mean;
                    row.worst_u_source = c.source;
                    have_worst_u = true;
                }
                row.u_checks.push_back(std::move(c));
            }
            bool have_worst_v = false;
            for (const auto& src : v_sources) {
                const PayoffEstimate est =
                    mc_payoff(cfg.model, pair_u, *src, x0, cfg.n_paths, spec);
                SaddleCheck c;
                c.source = src->describe();
                c.payoff = est.mean;
                c.stderr_of_mean = est.stderr_of_mean;
                c.margin = 3.0 * std::sqrt(est.stderr_of_mean * est.stderr_of_mean +
                                           pair.stderr_of_mean * pair.stderr_of_mean);
                c.slack = est.mean - (pair.mean - 2.0 * epsilon);
                c.pass = c.slack >= -c.margin;
                if (!have_worst_v || est.mean < row.worst_v_payoff) {
                    row.worst_v_payoff = est.mean;
                    row.worst_v_source = c.source;
                    have_worst_v = true;
                }
                row.v_checks.push_back(std::move(c));
            }
            row.slack_u = row.worst_u_payoff - row.pair_value;
            row.slack_v = row.pair_value - row.worst_v_payoff;
            report.rows.push_back(std::move(row));
        }
    } catch (const Error& e) {
        stage_fail("saddle simulation", e);
    }

    if (!cfg.out_dir.empty()) {
        try {
            ensure_directory(cfg.out_dir);
            std::ostringstream csv;
            report.write_csv(csv);
            write_text_file(cfg.out_dir + "/saddle.csv", csv.str());
            json meta = base_meta(cfg);
            meta["experiment"] = "saddle";
            meta["epsilon"] = epsilon;
            meta["pi_intervals"] = pi_intervals;
            meta["u_battery_size"] = u_sources.size();
            meta["v_battery_size"] = v_sources.size();
            meta["checks_total"] = report.checks_total();
            meta["checks_passed"] = report.checks_passed();
            meta["all_pass"] = report.all_pass();
            meta["solver_max_clamp_correction"] = vf.max_clamp_correction;
            meta["files"] = {"saddle.csv", "meta.json"};
            write_meta(cfg.out_dir, meta);
        } catch (const Error& e) {
            stage_fail("emit report", e);
        }
    }
    return report;
}

}  // namespace gamelab
