#include "gamelab/strategy.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "test_support.hpp"

using namespace gamelab;

namespace {

const SpatialGrid kGrid = SpatialGrid::uniform_1d(-6.0, 6.0, 97);

}  // namespace

TEST_CASE("time grid semantics: right-closed intervals") {
    const TimeGrid pi = TimeGrid::uniform(0.0, 1.0, 4);
    CHECK(pi.mesh() == doctest::Approx(0.25));
    CHECK(pi.interval_of(0.1) == 0);
    CHECK(pi.interval_of(0.25) == 0);   // t = t_1 belongs to interval 1
    CHECK(pi.interval_of(0.2500001) == 1);
    CHECK(pi.interval_of(1.0) == 3);
    CHECK_THROWS_AS(pi.interval_of(0.0), DomainError);   // left-open at s
    CHECK_THROWS_AS(pi.interval_of(-0.1), DomainError);
    CHECK_THROWS_AS(pi.interval_of(1.1), DomainError);
}

TEST_CASE("u-inert model synthesizes the lowest-index action everywhere") {
    const GameModel m = testsupport::heat_model();  // single u action anyway
    const ValueFunction vf = solve_lower_isaacs(m, kGrid, 0.0);
    const TimeGrid pi = TimeGrid::uniform(0.0, 1.0, 4);
    const SimpleMarkovStrategy alpha = synthesize_markov_strategy(m, vf, pi);
    REQUIRE(alpha.tables.size() == 4);
    for (const auto& table : alpha.tables) {
        for (const int a : table) CHECK(a == 0);
    }

    // A genuinely u-inert model with a non-trivial U grid: ties everywhere,
    // lowest index wins.
    GameModel inert = load_model(R"cfg([dynamics]
d = 1
d_prime = 1
T = 1.0
b = ["v1"]
sigma = [["1"]]
g = "cos(x1)"

[actions]
u_grid = [{ min = -1, max = 1, count = 3 }]
v_grid = [{ min = -1, max = 1, count = 3 }]
)cfg");
    const ValueFunction vfi = solve_lower_isaacs(inert, kGrid, 0.0);
    const SimpleMarkovStrategy ai = synthesize_markov_strategy(inert, vfi, pi);
    for (const auto& table : ai.tables) {
        for (const int a : table) CHECK(a == 0);
    }
}

TEST_CASE("one-player drift game picks the maximal action inside") {
    const GameModel m = testsupport::one_player_drift_model();
    const SpatialGrid g = SpatialGrid::uniform_1d(-6.0, 6.0, 97);
    const ValueFunction vf = solve_lower_isaacs(m, g, 0.0);
    const TimeGrid pi = TimeGrid::uniform(0.0, 1.0, 4);
    const SimpleMarkovStrategy alpha = synthesize_markov_strategy(m, vf, pi);
    // v_x > 0 for increasing terminal data under heat smoothing; away from
    // the boundary the argmax is u = +1 (grid index 2).
    const std::size_t n = g.num_nodes();
    for (const auto& table : alpha.tables) {
        for (std::size_t node = n / 4; node < 3 * n / 4; ++node) {
            CHECK(table[node] == 2);
        }
    }
}

TEST_CASE("sign game strategy at positive-gradient nodes ties to index 0") {
    const GameModel m = testsupport::sign_game_model();
    // max_u min_v (u v) p at p > 0 is -p for both u = -1 and u = +1: a tie,
    // broken to the lowest index.
    const std::vector<double> x{0.0};
    const HamiltonianResult h =
        lower_hamiltonian(m, 0.0, x, DerivativePair::scalar(2.0, 0.0));
    CHECK(h.best_u == 0);
    CHECK(h.value == doctest::Approx(-2.0));
}

TEST_CASE("strategy_action lookup semantics") {
    const GameModel m = testsupport::one_player_drift_model();
    const ValueFunction vf = solve_lower_isaacs(m, kGrid, 0.0);
    const TimeGrid pi = TimeGrid::uniform(0.0, 1.0, 4);
    const SimpleMarkovStrategy alpha = synthesize_markov_strategy(m, vf, pi);

    const std::vector<double> snap{0.51};
    // Same interval, same snapshot: identical actions.
    CHECK(strategy_action(alpha, 0.26, snap) == strategy_action(alpha, 0.49, snap));
    // Right-closed boundary: t = t_k uses interval k.
    CHECK(strategy_action(alpha, 0.25, snap) ==
          strategy_action(alpha, 0.10, snap));
    // t = s errors (intervals are left-open at s).
    CHECK_THROWS_AS(strategy_action(alpha, 0.0, snap), DomainError);
    // Off-grid snapshots snap to the nearest node, including outside the box.
    const std::vector<double> far{100.0};
    CHECK_NOTHROW(strategy_action(alpha, 0.5, far));
}

TEST_CASE("counter-strategy synthesis and lookup") {
    const TimeGrid pi = TimeGrid::uniform(0.0, 1.0, 4);

    // v-inert model: every response ties to index 0.
    const GameModel mo = testsupport::one_player_drift_model();
    const ValueFunction vfo = solve_lower_isaacs(mo, kGrid, 0.0);
    const SimpleMarkovCounterStrategy go =
        synthesize_markov_counter_strategy(mo, vfo, pi);
    for (const auto& table : go.tables) {
        for (const int v : table) CHECK(v == 0);
    }

    // Cancellation game: the response to any u at a positive-gradient node
    // is the leftmost v. At x=0 the solved gradient is ~0 but the second
    // derivative term is u-independent, so check a node with clear slope.
    const GameModel mc = testsupport::cancellation_model(3);
    const ValueFunction vfc = solve_lower_isaacs(mc, kGrid, 0.0);
    const SimpleMarkovCounterStrategy gc =
        synthesize_markov_counter_strategy(mc, vfc, pi);
    const std::vector<double> probe{3.0 * 3.14159265 / 2.0};  // rising part of cos
    const std::size_t node = kGrid.nearest_node(probe);
    const int lev = vfc.nearest_level(0.0);
    const double slope = vfc.derivatives_at_node(lev, node).p[0];
    REQUIRE(slope > 1e-4);
    for (int u = 0; u < 3; ++u) {
        CHECK(gc.table_action(0, node, u) == 0);  // v = -1
    }

    // The response changes with u inside an interval (structural), stays
    // fixed for a fixed u, and off-grid u projects to the nearest point.
    const GameModel ms = testsupport::sign_game_model();
    const ValueFunction vfs = solve_lower_isaacs(ms, kGrid, 0.0);
    const SimpleMarkovCounterStrategy gs =
        synthesize_markov_counter_strategy(ms, vfs, pi);
    const std::vector<double> snap{2.0};
    const std::size_t snode = kGrid.nearest_node(snap);
    const double slope_s = vfs.derivatives_at_node(vfs.nearest_level(0.0), snode).p[0];
    if (slope_s > 1e-6) {
        // Minimizing uv * slope: response flips with the sign of u.
        CHECK(gs.table_action(0, snode, 0) == 1);  // u=-1 -> v=+1
        CHECK(gs.table_action(0, snode, 1) == 0);  // u=+1 -> v=-1
    }
    CHECK(counter_action_indexed(gs, 0.4, snap, 1) ==
          counter_action_indexed(gs, 0.3, snap, 1));
    const std::vector<double> off_grid_u{0.9};  // nearest U point is +1 (index 1)
    CHECK(counter_action(gs, 0.4, snap, off_grid_u, ms.action_u) ==
          counter_action_indexed(gs, 0.4, snap, 1));
    CHECK_THROWS_AS(counter_action_indexed(gs, 0.4, snap, 7), DomainError);
}

TEST_CASE("refining the time grid preserves tables at shared grid times") {
    const GameModel m = testsupport::cancellation_model(5);
    const ValueFunction vf = solve_lower_isaacs(m, kGrid, 0.0, SolveOptions{8, 0});
    const SimpleMarkovStrategy a4 =
        synthesize_markov_strategy(m, vf, TimeGrid::uniform(0.0, 1.0, 4));
    const SimpleMarkovStrategy a8 =
        synthesize_markov_strategy(m, vf, TimeGrid::uniform(0.0, 1.0, 8));
    // Interval k of the coarse grid starts at the same time as interval 2k
    // of the fine grid; synthesis depends only on (t_{k-1}, x).
    for (int k = 0; k < 4; ++k) {
        CHECK(a4.tables[static_cast<std::size_t>(k)] ==
              a8.tables[static_cast<std::size_t>(2 * k)]);
    }
}

TEST_CASE("synthesis is invariant under positive scaling of the value") {
    const GameModel m = testsupport::cancellation_model(5);
    ValueFunction vf = solve_lower_isaacs(m, kGrid, 0.0);
    const TimeGrid pi = TimeGrid::uniform(0.0, 1.0, 4);
    const SimpleMarkovStrategy base = synthesize_markov_strategy(m, vf, pi);
    const SimpleMarkovCounterStrategy cbase =
        synthesize_markov_counter_strategy(m, vf, pi);

    // Scaling every stored value by 3 scales all queried derivatives by 3.
    for (double& v : vf.values) v *= 3.0;
    const SimpleMarkovStrategy scaled = synthesize_markov_strategy(m, vf, pi);
    const SimpleMarkovCounterStrategy cscaled =
        synthesize_markov_counter_strategy(m, vf, pi);
    CHECK(scaled.tables == base.tables);
    CHECK(cscaled.tables == cbase.tables);
}

TEST_CASE("tables are total over their key sets") {
    const GameModel m = testsupport::cancellation_model(3);
    const ValueFunction vf = solve_lower_isaacs(m, kGrid, 0.0);
    const TimeGrid pi = TimeGrid::uniform(0.0, 1.0, 3);
    const SimpleMarkovStrategy alpha = synthesize_markov_strategy(m, vf, pi);
    const SimpleMarkovCounterStrategy gamma =
        synthesize_markov_counter_strategy(m, vf, pi);
    REQUIRE(alpha.tables.size() == 3);
    REQUIRE(gamma.tables.size() == 3);
    for (const auto& t : alpha.tables) {
        CHECK(t.size() == kGrid.num_nodes());
        for (const int a : t) {
            CHECK(a >= 0);
            CHECK(a < 3);
        }
    }
    for (const auto& t : gamma.tables) {
        CHECK(t.size() == kGrid.num_nodes() * 3);
        for (const int v : t) {
            CHECK(v >= 0);
            CHECK(v < 3);
        }
    }
}

TEST_CASE("strategies serialize to the documented CSV layouts") {
    const GameModel m = testsupport::cancellation_model(3);
    const SpatialGrid tiny = SpatialGrid::uniform_1d(-1.0, 1.0, 3);
    const ValueFunction vf = solve_lower_isaacs(m, tiny, 0.0);
    const TimeGrid pi = TimeGrid::uniform(0.0, 1.0, 2);
    const SimpleMarkovStrategy alpha = synthesize_markov_strategy(m, vf, pi);
    const SimpleMarkovCounterStrategy gamma =
        synthesize_markov_counter_strategy(m, vf, pi);

    std::ostringstream sa;
    alpha.write_csv(sa);
    const std::string csv_a = sa.str();
    CHECK(csv_a.substr(0, 14) == "k,node,action\n");
    // 2 intervals x 3 nodes rows + header.
    CHECK(std::count(csv_a.begin(), csv_a.end(), '\n') == 7);

    std::ostringstream sg;
    gamma.write_csv(sg);
    const std::string csv_g = sg.str();
    CHECK(csv_g.substr(0, 16) == "k,node,u,action\n");
    CHECK(std::count(csv_g.begin(), csv_g.end(), '\n') == 19);
}

TEST_CASE("synthesis rejects grids outside the value function span") {
    const GameModel m = testsupport::heat_model();
    const ValueFunction vf = solve_lower_isaacs(m, kGrid, 0.5);
    CHECK_THROWS_AS(
        synthesize_markov_strategy(m, vf, TimeGrid::uniform(0.0, 1.0, 4)),
        DomainError);
}

TEST_CASE("schedule source: entries apply from their start times") {
    ScheduleSource src({{0.0, 2}, {0.5, 0}});
    SimContext ctx;
    ctx.t_left = 0.2;
    CHECK(src.action_index(ctx) == 2);
    ctx.t_left = 0.5;
    CHECK(src.action_index(ctx) == 0);
    ctx.t_left = 0.9;
    CHECK(src.action_index(ctx) == 0);
    CHECK_THROWS_AS(ScheduleSource({}), DomainError);
    CHECK_THROWS_AS(ScheduleSource({{0.0, 1}, {0.0, 2}}), DomainError);
}
