#include "gamelab/restricted_value.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "gamelab/simulator.hpp"
#include "test_support.hpp"

using namespace gamelab;

namespace {

struct Pipeline {
    GameModel model;
    ValueFunction vf;
    SimpleMarkovStrategy alpha;
    SimpleMarkovCounterStrategy gamma;
    TimeGrid pi;
};

Pipeline make_pipeline(const GameModel& m, const SpatialGrid& grid, int intervals) {
    Pipeline p{m, {}, {}, {}, {}};
    SolveOptions opts;
    opts.align_steps_multiple = intervals;
    p.vf = solve_lower_isaacs(m, grid, 0.0, opts);
    p.pi = TimeGrid::uniform(0.0, m.horizon, intervals);
    p.alpha = synthesize_markov_strategy(m, p.vf, p.pi);
    p.gamma = synthesize_markov_counter_strategy(m, p.vf, p.pi);
    return p;
}

}  // namespace

TEST_CASE("terminal and reset consistency of the augmented values") {
    const SpatialGrid grid = SpatialGrid::uniform_1d(-6.0, 6.0, 97);
    const Pipeline p = make_pipeline(testsupport::cancellation_model(3), grid, 4);
    const AugmentedValue lower = adversary_best_response_value(p.model, p.alpha, p.vf);

    // At T the terminal data equal g at every node.
    const auto& gT = lower.terminal_values.back();
    std::vector<double> coords(1);
    for (std::size_t node = 0; node < grid.num_nodes(); ++node) {
        grid.node_coords(node, coords);
        CHECK(gT[node] == std::cos(coords[0]));
    }

    // Reset consistency: interval k's terminal data are interval k+1's left
    // values with the frozen coordinate re-derived from the current state.
    const std::size_t n = grid.num_nodes();
    for (int k = 0; k + 1 < p.pi.intervals(); ++k) {
        const auto& term = lower.terminal_values[static_cast<std::size_t>(k)];
        const auto& table = p.alpha.tables[static_cast<std::size_t>(k) + 1];
        for (std::size_t node = 0; node < n; ++node) {
            CHECK(term[node] ==
                  lower.left_value(k + 1, table[node], node));
        }
    }

    // Same shape checks for the controller side.
    const AugmentedValue upper = controller_best_response_value(p.model, p.gamma, p.vf);
    const auto& gT2 = upper.terminal_values.back();
    for (std::size_t node = 0; node < n; ++node) {
        grid.node_coords(node, coords);
        CHECK(gT2[node] == std::cos(coords[0]));
    }
    for (int k = 0; k + 1 < p.pi.intervals(); ++k) {
        const auto& term = upper.terminal_values[static_cast<std::size_t>(k)];
        for (std::size_t node = 0; node < n; ++node) {
            CHECK(term[node] ==
                  upper.left_value(k + 1, static_cast<int>(node), node));
        }
    }
}

TEST_CASE("deterministic transport: frozen drift gives x + (T - s)") {
    // sigma = 0, b = u, g = x: the synthesized strategy drives at +1 and the
    // adversary is inert, so the restricted value is x + 1 away from the
    // boundary influence cone (finite propagation speed).
    GameModel m = load_model(R"cfg([dynamics]
d = 1
d_prime = 1
T = 1.0
b = ["u1"]
sigma = [["0"]]
g = "x1"

[actions]
u_grid = [{ min = -1, max = 1, count = 3 }]
v_grid = [{ min = 0, max = 0, count = 1 }]
)cfg");
    const SpatialGrid grid = SpatialGrid::uniform_1d(-8.0, 8.0, 129);
    const Pipeline p = make_pipeline(m, grid, 4);
    const AugmentedValue lower = adversary_best_response_value(m, p.alpha, p.vf);
    for (const double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        const std::vector<double> xv{x};
        CHECK(lower.start_value_at(xv) == doctest::Approx(x + 1.0).epsilon(1e-10));
        CHECK(p.vf.value(0.0, xv) == doctest::Approx(x + 1.0).epsilon(1e-10));
    }
}

TEST_CASE("degenerate adversary: restricted value matches Monte Carlo") {
    // v-inert model: inf over v is trivial, so the restricted value is the
    // plain policy value of alpha; cross-check by simulation within 3
    // standard errors.
    const GameModel m = testsupport::one_player_drift_model();
    const SpatialGrid grid = SpatialGrid::uniform_1d(-8.0, 8.0, 257);
    const Pipeline p = make_pipeline(m, grid, 4);
    const AugmentedValue lower = adversary_best_response_value(m, p.alpha, p.vf);

    const MarkovStrategySource u_src(p.alpha);
    const ConstantSource v_src(0);
    const std::vector<double> x0{0.0};
    SimulateSpec spec;
    spec.dt_sim = 1.0 / 64.0;
    spec.seed = 4242;
    const PayoffEstimate mc = mc_payoff(m, u_src, v_src, x0, 20000, spec);

    const double pde = lower.start_value_at(x0);
    // 3 stderr for the MC noise plus a discretization allowance for the
    // Euler step and the scheme.
    CHECK(std::fabs(mc.mean - pde) <= 3.0 * mc.stderr_of_mean + 2e-2);
}

TEST_CASE("sandwich: restricted values bracket the solver value") {
    const SpatialGrid grid = SpatialGrid::uniform_1d(-8.0, 8.0, 129);
    const std::vector<double> points{-1.0, 0.0, 1.0};
    const double tol = 1e-2;

    for (const GameModel& m : {testsupport::cancellation_model(5),
                               testsupport::one_player_drift_model()}) {
        std::vector<AugmentedValue> lowers, uppers;
        SolveOptions opts;
        opts.align_steps_multiple = 8;  // lcm of the meshes below
        const ValueFunction vf = solve_lower_isaacs(m, grid, 0.0, opts);
        for (const int intervals : {2, 8}) {
            const TimeGrid pi = TimeGrid::uniform(0.0, m.horizon, intervals);
            const SimpleMarkovStrategy alpha = synthesize_markov_strategy(m, vf, pi);
            const SimpleMarkovCounterStrategy gamma =
                synthesize_markov_counter_strategy(m, vf, pi);
            lowers.push_back(adversary_best_response_value(m, alpha, vf));
            uppers.push_back(controller_best_response_value(m, gamma, vf));
        }
        const GapTable table = sandwich_report(vf, lowers, uppers, points, tol);
        CHECK(table.rows.size() == 6);
        for (const auto& row : table.rows) {
            CAPTURE(row.mesh);
            CAPTURE(row.x);
            CHECK(row.gap_lo >= -tol);
            CHECK(row.gap_hi >= -tol);
            CHECK_FALSE(row.violation);
        }
    }
}

TEST_CASE("violation flag trips on a doctored table") {
    const SpatialGrid grid = SpatialGrid::uniform_1d(-6.0, 6.0, 97);
    const Pipeline p = make_pipeline(testsupport::cancellation_model(3), grid, 2);
    std::vector<AugmentedValue> lowers{adversary_best_response_value(p.model, p.alpha, p.vf)};
    std::vector<AugmentedValue> uppers{controller_best_response_value(p.model, p.gamma, p.vf)};
    // Push the lower value above the solver value artificially.
    for (double& v : lowers[0].start_slice) v += 1.0;
    const GapTable table =
        sandwich_report(p.vf, lowers, uppers, std::vector<double>{0.0}, 1e-3);
    CHECK(table.any_violation());
}

TEST_CASE("controller best response rejects d >= 2") {
    const GameModel m2 = load_model(R"cfg([dynamics]
d = 2
d_prime = 2
T = 1.0
b = ["0", "0"]
sigma = [["1", "0"], ["0", "1"]]
g = "cos(x1)*cos(x2)"

[actions]
u_grid = [{ min = 0, max = 0, count = 1 }]
v_grid = [{ min = 0, max = 0, count = 1 }]
)cfg");
    SpatialGrid grid2;
    grid2.axes = {AxisSpec{-3.0, 3.0, 25}, AxisSpec{-3.0, 3.0, 25}};
    SolveOptions opts;
    opts.align_steps_multiple = 2;
    const ValueFunction vf2 = solve_lower_isaacs(m2, grid2, 0.0, opts);
    const TimeGrid pi = TimeGrid::uniform(0.0, 1.0, 2);
    const SimpleMarkovCounterStrategy gamma =
        synthesize_markov_counter_strategy(m2, vf2, pi);
    CHECK_THROWS_AS(controller_best_response_value(m2, gamma, vf2), SolverError);

    // The adversary side works in 2-D.
    const SimpleMarkovStrategy alpha = synthesize_markov_strategy(m2, vf2, pi);
    const AugmentedValue lower = adversary_best_response_value(m2, alpha, vf2);
    const std::vector<double> origin{0.0, 0.0};
    CHECK(lower.start_value_at(origin) ==
          doctest::Approx(vf2.value(0.0, origin)).epsilon(1e-9));
}

TEST_CASE("strategies from a mismatched grid are rejected") {
    const GameModel m = testsupport::cancellation_model(3);
    const SpatialGrid grid = SpatialGrid::uniform_1d(-6.0, 6.0, 97);
    const SpatialGrid other = SpatialGrid::uniform_1d(-6.0, 6.0, 49);
    SolveOptions opts;
    opts.align_steps_multiple = 2;
    const ValueFunction vf = solve_lower_isaacs(m, grid, 0.0, opts);
    const ValueFunction vf_other = solve_lower_isaacs(m, other, 0.0, opts);
    const TimeGrid pi = TimeGrid::uniform(0.0, 1.0, 2);
    const SimpleMarkovStrategy alpha = synthesize_markov_strategy(m, vf_other, pi);
    CHECK_THROWS_AS(adversary_best_response_value(m, alpha, vf), SolverError);

    // Macro times that are not solver levels are rejected too.
    const SimpleMarkovStrategy good = synthesize_markov_strategy(m, vf, pi);
    SimpleMarkovStrategy skewed = good;
    skewed.grid.times = {0.0, 0.23, 1.0};
    CHECK_THROWS_AS(adversary_best_response_value(m, skewed, vf), SolverError);
}

TEST_CASE("gap table serializes with the pinned header") {
    GapTable t;
    t.rows.push_back(GapRow{0.25, 0.0, 1.0, 1.005, 1.01, 0.005, 0.005, 0.01, false});
    std::ostringstream os;
    t.write_csv(os);
    CHECK(os.str().rfind("mesh,x,v_pi_minus,v_fd,v_pi_plus,gap_lo,gap_hi,tol\n", 0) == 0);
}
