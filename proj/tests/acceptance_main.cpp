// Acceptance suite: every release gate runs here, one pass/fail line per
// criterion, tolerances pinned in code. Exit code 0 iff all criteria pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "gamelab/experiments.hpp"
#include "gamelab/lattice.hpp"
#include "gamelab/parallel.hpp"
#include "test_support.hpp"

using namespace gamelab;

namespace {

struct CriterionResult {
    int id;
    std::string name;
    bool pass;
    std::string detail;
    double seconds;
};

std::vector<CriterionResult> g_results;

// time_limit <= 0 means the criterion carries no runtime bound.
template <class Fn>
void run_criterion(int id, const std::string& name, double time_limit, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r{id, name, false, "", 0.0};
    try {
        r.pass = fn(r.detail);
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
    if (r.pass && time_limit > 0.0 && r.seconds > time_limit) {
        r.pass = false;
        r.detail += fmt(" -- runtime %.0f s exceeds the %.0f s limit", r.seconds,
                        time_limit);
    }
    std::printf("[%s] %d. %s: %s  (%.1f s)\n", r.pass ? "PASS" : "FAIL", id,
                name.c_str(), r.detail.c_str(), r.seconds);
    std::fflush(stdout);
    g_results.push_back(std::move(r));
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

// Shared across criteria (solved once).
struct Artifacts {
    GameModel cancellation = testsupport::cancellation_model(5);
    GameModel one_player = testsupport::one_player_drift_model();
    GameModel heat = testsupport::heat_model();
    SpatialGrid grid32 = SpatialGrid::uniform_1d(-8.0, 8.0, 513);    // dx = 1/32
    SpatialGrid grid64 = SpatialGrid::uniform_1d(-8.0, 8.0, 1025);   // dx = 1/64
    std::vector<double> points{-1.0, 0.0, 1.0};

    ValueFunction heat64;          // criterion 1 and 6
    ValueFunction cancellation32;  // criteria 2, 3, 4, 8
    ValueFunction one_player32;    // criterion 2
    GapTable cancellation_gaps;    // criteria 2 and 3
    GapTable one_player_gaps;      // criterion 2
    double cancellation_tol = 0.0;
    double one_player_tol = 0.0;
    double gap_coarse = 0.0;  // mesh T/4
    double gap_fine = 0.0;    // mesh T/32
};

Artifacts g_art;

// Exact values for the two closed-form anchors.
double cancellation_exact(double x) { return testsupport::heat_cos_value(x, 1.0); }
double one_player_exact(double x) { return x + 1.0; }

GapTable sandwich_for(const GameModel& m, const ValueFunction& vf,
                      const std::vector<int>& meshes, double tol,
                      std::vector<double>* out_meshes,
                      std::vector<double>* out_gaps) {
    std::vector<AugmentedValue> lowers, uppers;
    for (const int intervals : meshes) {
        const TimeGrid pi = TimeGrid::uniform(0.0, m.horizon, intervals);
        const SimpleMarkovStrategy alpha = synthesize_markov_strategy(m, vf, pi);
        const SimpleMarkovCounterStrategy gamma =
            synthesize_markov_counter_strategy(m, vf, pi);
        lowers.push_back(adversary_best_response_value(m, alpha, vf));
        uppers.push_back(controller_best_response_value(m, gamma, vf));
    }
    const GapTable table = sandwich_report(vf, lowers, uppers, g_art.points, tol);
    if (out_meshes && out_gaps) {
        for (const auto& av : lowers) {
            out_meshes->push_back(av.grid.mesh());
            out_gaps->push_back(table.max_gap_at_mesh(av.grid.mesh()));
        }
    }
    return table;
}

bool criterion_heat_anchor(std::string& detail) {
    g_art.heat64 = solve_lower_isaacs(g_art.heat, g_art.grid64, 0.0);
    const double oracle = testsupport::heat_cos_value(0.0, 1.0);
    if (std::fabs(oracle - std::exp(-0.5)) > 1e-9) {
        detail = "quadrature oracle disagrees with the closed form";
        return false;
    }
    const std::vector<double> x0{0.0};
    const double v = g_art.heat64.value(0.0, x0);
    const double err = std::fabs(v - oracle);
    detail = fmt("|v(0,0) - 0.6065306597| = %.2e <= 2e-3", err);
    return err <= 2e-3;
}

bool criterion_sandwich(std::string& detail) {
    const std::vector<int> meshes{4, 8, 16, 32};
    SolveOptions opts;
    opts.align_steps_multiple = 32;

    g_art.cancellation32 =
        solve_lower_isaacs(g_art.cancellation, g_art.grid32, 0.0, opts);
    g_art.one_player32 = solve_lower_isaacs(g_art.one_player, g_art.grid32, 0.0, opts);

    double err_c = 0.0, err_o = 0.0;
    for (const double x : g_art.points) {
        const std::vector<double> xv{x};
        err_c = std::max(err_c, std::fabs(g_art.cancellation32.value(0.0, xv) -
                                          cancellation_exact(x)));
        err_o = std::max(err_o, std::fabs(g_art.one_player32.value(0.0, xv) -
                                          one_player_exact(x)));
    }
    g_art.cancellation_tol = err_c;
    g_art.one_player_tol = err_o;
    if (err_c > 1e-2 || err_o > 1e-2) {
        detail = fmt("measured scheme error %.2e / %.2e exceeds 1e-2", err_c, err_o);
        return false;
    }

    std::vector<double> mesh_list, gap_list;
    g_art.cancellation_gaps = sandwich_for(g_art.cancellation, g_art.cancellation32,
                                           meshes, err_c, &mesh_list, &gap_list);
    g_art.gap_coarse = gap_list.front();
    g_art.gap_fine = gap_list.back();
    g_art.one_player_gaps =
        sandwich_for(g_art.one_player, g_art.one_player32, meshes, err_o, nullptr,
                     nullptr);

    const bool ok = !g_art.cancellation_gaps.any_violation() &&
                    !g_art.one_player_gaps.any_violation();
    detail = fmt("tol (measured scheme error) = %.2e / %.2e; "
                 "all 24 sandwich rows ordered",
                 err_c, err_o);
    if (!ok) detail += " -- ORDERING VIOLATION";
    return ok;
}

bool criterion_convergence(std::string& detail) {
    if (g_art.cancellation_gaps.rows.empty()) {
        detail = "criterion 2 artifacts missing";
        return false;
    }
    const double ratio = g_art.gap_fine / g_art.gap_coarse;
    detail = fmt("max gap: %.4f at T/4 -> %.4f at T/32 (ratio %.3f <= 0.25)",
                 g_art.gap_coarse, g_art.gap_fine, ratio);
    return ratio <= 0.25;
}

bool criterion_saddle(std::string& detail) {
    const double eps = g_art.gap_fine;  // epsilon from the measured fine-mesh gap
    ExperimentConfig cfg;
    cfg.model = g_art.cancellation;
    cfg.grid = g_art.grid32;
    cfg.reporting_points = g_art.points;
    cfg.n_paths = 100000;
    cfg.dt_sim = 1.0 / 256.0;
    cfg.seed = 20260810;
    cfg.tolerance = 1e-2;
    const SaddleReport report = run_saddle_check(cfg, eps, 32);
    detail = fmt("eps = %.4f: ", eps) +
             std::to_string(report.checks_passed()) + "/" +
             std::to_string(report.checks_total()) +
             " battery inequalities hold (14 per reporting point)";
    return report.all_pass() && report.checks_total() == 42;
}

bool criterion_exit_bound(std::string& detail) {
    // Oracle values of the Gaussian bound, computed here via erfc.
    const auto oracle_bound = [](double t) {
        const double z = 0.4 / (4.0 * std::sqrt(t));
        return 4.0 * 0.5 * std::erfc(z / std::sqrt(2.0));
    };
    const double spans[3] = {0.01, 0.005, 0.0025};
    const double expected[3] = {0.634621015725828, 0.314598414100570,
                                0.091000527792717};
    const ConstantSource u(0), v(0);
    const std::vector<double> x0{0.0};
    std::string parts;
    for (int i = 0; i < 3; ++i) {
        const double bound = gauge_tail_bound(spans[i], 0.4, 1.0, 1);
        if (std::fabs(bound - oracle_bound(spans[i])) > 1e-12 ||
            std::fabs(bound - expected[i]) > 1e-9) {
            detail = fmt("bound at t-r=%g disagrees with the erfc oracle", spans[i]);
            return false;
        }
        const ExitFrequency f =
            exit_frequency(g_art.heat, u, v, x0, 0.0, spans[i], 0.4, 1.0, 100000,
                           spans[i] / 64.0, 555);
        if (f.frequency > bound + 3.0 * f.binomial_stderr()) {
            detail = fmt("frequency %.4f exceeds bound %.4f at t-r=%g", f.frequency,
                         bound, spans[i]);
            return false;
        }
        parts += fmt("%.4f<=%.4f ", f.frequency, bound);
    }
    detail = "empirical vs bound: " + parts + "(bounds 0.6346, 0.3146, 0.0910)";
    return true;
}

bool criterion_oracle_equivalence(std::string& detail) {
    // Heat anchor on the lattice: dx = 1/64, h = dx^2 = 1/4096.
    const LatticeGame L = build_lattice(g_art.heat, 4096, -8.0, 8.0, 1025);
    const LatticeValues lo = lattice_lower_value(L);
    const std::vector<double> x0{0.0};
    const double lattice_v = lo.at(0, L.node_of(0.0));
    const double pde_v = g_art.heat64.value(0.0, x0);
    const double diff = std::fabs(lattice_v - pde_v);
    if (diff > 5e-3) {
        detail = fmt("lattice %.6f vs solver %.6f differ by %.2e > 5e-3", lattice_v,
                     pde_v, diff);
        return false;
    }

    // One-step sign game: exactly -1 / +1.
    GameModel sign = testsupport::sign_game_model();
    const LatticeGame Ls =
        build_lattice(sign, 1, -2.0, 2.0, 5, LatticeMode::drift_upwind);
    const LatticeValues slo = lattice_lower_value(Ls);
    const LatticeValues shi = lattice_upper_value(Ls);
    const int c = Ls.node_of(0.0);
    if (slo.at(0, c) != -1.0 || shi.at(0, c) != 1.0) {
        detail = "sign game lattice values are not exactly -1 / +1";
        return false;
    }
    detail = fmt("lattice vs solver at (0,0): %.2e <= 5e-3; sign game exact -1/+1",
                 diff);
    return true;
}

bool criterion_property_suites(std::string& detail) {
    // (a) sup-inf <= inf-sup at 1000 random samples per model.
    const GameModel models[] = {g_art.cancellation, g_art.one_player,
                                testsupport::sign_game_model()};
    for (const GameModel& m : models) {
        for (std::uint64_t i = 0; i < 1000; ++i) {
            const auto draw = [&](std::uint32_t slot, double lo, double hi) {
                return lo + (hi - lo) * counter_rng_uniform(0xACCE5Cull,
                                                            RngStream::generic, i, 0,
                                                            slot);
            };
            const double t = draw(0, 0.0, 1.0);
            const std::vector<double> x{draw(1, -4.0, 4.0)};
            const DerivativePair dp =
                DerivativePair::scalar(draw(2, -5.0, 5.0), draw(3, -5.0, 5.0));
            if (lower_hamiltonian(m, t, x, dp).value >
                upper_hamiltonian(m, t, x, dp).value) {
                detail = "weak duality violated";
                return false;
            }
        }
    }

    // (b) scheme monotonicity on a paired-payoff run.
    {
        GameModel lo_m = g_art.cancellation;
        GameModel hi_m = g_art.cancellation;
        hi_m.payoff = parse_expression("cos(x1) + 0.05*x1^2");
        const SpatialGrid g = SpatialGrid::uniform_1d(-6.0, 6.0, 193);
        const ValueFunction v1 = solve_lower_isaacs(lo_m, g, 0.0);
        const ValueFunction v2 = solve_lower_isaacs(hi_m, g, 0.0);
        for (std::size_t i = 0; i < v1.values.size(); ++i) {
            if (!(v1.values[i] <= v2.values[i])) {
                detail = "paired-payoff monotonicity violated";
                return false;
            }
        }
    }

    // (c) discrete maximum principle on every solve performed by the suite.
    for (const ValueFunction* vf :
         {&g_art.heat64, &g_art.cancellation32, &g_art.one_player32}) {
        if (vf->values.empty()) continue;
        for (const double v : vf->values) {
            if (v < vf->payoff_min || v > vf->payoff_max) {
                detail = "maximum principle violated";
                return false;
            }
        }
        if (vf->max_clamp_correction > 1e-9) {
            detail = "clamp correction above float noise";
            return false;
        }
    }

    // (d) seed determinism: byte-identical estimates across 1, 4, 8 threads.
    {
        const RandomPiecewiseSource u(5, RngStream::u_source);
        const RandomPiecewiseSource v(5, RngStream::v_source);
        const std::vector<double> x0{0.0};
        SimulateSpec spec;
        spec.dt_sim = 1.0 / 64.0;
        spec.seed = 31337;
        PayoffEstimate ests[3];
        const int thread_counts[3] = {1, 4, 8};
        for (int i = 0; i < 3; ++i) {
            spec.threads = thread_counts[i];
            ests[i] = mc_payoff(g_art.cancellation, u, v, x0, 20000, spec);
        }
        if (ests[0].mean != ests[1].mean || ests[0].mean != ests[2].mean ||
            ests[0].stderr_of_mean != ests[1].stderr_of_mean ||
            ests[0].stderr_of_mean != ests[2].stderr_of_mean) {
            detail = "thread-count determinism violated";
            return false;
        }
        // And the solver sweeps.
        SolveOptions o1, o8;
        o1.threads = 1;
        o8.threads = 8;
        const SpatialGrid g = SpatialGrid::uniform_1d(-4.0, 4.0, 129);
        const ValueFunction a = solve_lower_isaacs(g_art.cancellation, g, 0.0, o1);
        const ValueFunction b = solve_lower_isaacs(g_art.cancellation, g, 0.0, o8);
        if (a.values != b.values) {
            detail = "solver thread-count determinism violated";
            return false;
        }
    }
    detail = "duality x3000, paired monotonicity, max principle, byte-exact across "
             "1/4/8 threads";
    return true;
}

// The defect gate is evaluated at the symmetry point x0 = 0, where the
// solved value's gradient vanishes and the tie-broken frozen action is
// maximally exposed to an adversary that adapts inside the interval. The
// measured per-unit-time defect there scales like sqrt(t-r) (a genuine
// vanishing gauge) but sits near 0.07 at t-r = 1/32, above the pinned 0.05
// surrogate; the suite reports the defect curve alongside the verdict.
bool criterion_martingale_defect(std::string& detail) {
    const GameModel& m = g_art.cancellation;
    const ValueFunction& vf = g_art.cancellation32;
    if (vf.values.empty()) {
        detail = "criterion 2 artifacts missing";
        return false;
    }
    const TimeGrid pi = TimeGrid::uniform(0.0, 1.0, 32);
    const SimpleMarkovStrategy alpha = synthesize_markov_strategy(m, vf, pi);
    const auto battery = v_battery(m, vf);

    // Defect-vs-horizon curve at x0 = 0 (worst battery member each time).
    std::string curve = "rate(t-r): ";
    for (const double span : {1.0 / 8.0, 1.0 / 32.0, 1.0 / 128.0}) {
        double worst_mean = 1e300;
        for (const auto& src : battery) {
            const PayoffEstimate d =
                martingale_defect(vf, m, alpha, *src, std::vector<double>{0.0}, 0.0,
                                  span, 20000, 1.0 / 1024.0, 777);
            worst_mean = std::min(worst_mean, d.mean);
        }
        curve += fmt("%.3f@1/%g ", -worst_mean / span, 1.0 / span);
    }

    const double bound = -(1.0 / 32.0) * 0.05;
    bool pass = true;
    std::string verdicts;
    for (const double x : g_art.points) {
        const std::vector<double> x0{x};
        double worst_mean = 1e300, worst_se = 0.0;
        std::string worst_src;
        for (const auto& src : battery) {
            const PayoffEstimate d = martingale_defect(vf, m, alpha, *src, x0, 0.0,
                                                       1.0 / 32.0, 100000,
                                                       1.0 / 1024.0, 777);
            if (d.mean < worst_mean) {
                worst_mean = d.mean;
                worst_se = d.stderr_of_mean;
                worst_src = src->describe();
            }
        }
        const bool ok = worst_mean >= bound - 3.0 * worst_se;
        if (x == 0.0 && !ok) {
            verdicts += fmt("x=0: %.5f < %.5f (", worst_mean,
                            bound - 3.0 * worst_se) +
                        worst_src + ") ";
        } else {
            verdicts += fmt("x=%g: %+.1e ok ", x, worst_mean - bound);
        }
        pass = pass && ok;
    }
    detail = verdicts + "| " + curve;
    return pass;
}

}  // namespace

int main() {
    set_default_threads(1);
    std::printf("acceptance suite\n");

    run_criterion(1, "heat anchor (dx=1/64, domain [-8,8])", 60.0,
                  criterion_heat_anchor);
    run_criterion(2, "sandwich v_pi- <= V <= v_pi+ on two anchored models", 300.0,
                  criterion_sandwich);
    run_criterion(3, "gap convergence T/4 -> T/32", 600.0, criterion_convergence);
    run_criterion(4, "2-epsilon saddle, 14 inequalities per point, n=1e5", 600.0,
                  criterion_saddle);
    run_criterion(5, "Gaussian exit bound at three horizons", 0.0,
                  criterion_exit_bound);
    run_criterion(6, "lattice oracle equivalence", 0.0,
                  criterion_oracle_equivalence);
    run_criterion(7, "property suites (duality, monotonicity, max principle, "
                     "determinism)",
                  0.0, criterion_property_suites);
    run_criterion(8, "martingale defect under the adversarial v battery", 0.0,
                  criterion_martingale_defect);

    int passed = 0;
    for (const auto& r : g_results) passed += r.pass ? 1 : 0;
    std::printf("acceptance: %d/%d criteria passed\n", passed,
                static_cast<int>(g_results.size()));
    return passed == static_cast<int>(g_results.size()) ? 0 : 1;
}
