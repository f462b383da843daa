#include "gamelab/solver.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "gamelab/parallel.hpp"
#include "test_support.hpp"

using namespace gamelab;

namespace {

GameModel drift_diffusion_model(const std::string& b, const std::string& sigma,
                                const std::string& g) {
    return load_model(std::string("[dynamics]\nd = 1\nd_prime = 1\nT = 1.0\nb = [\"") +
                      b + "\"]\nsigma = [[\"" + sigma + "\"]]\ng = \"" + g +
                      "\"\n\n[actions]\nu_grid = [{ min = 0, max = 0, count = 1 }]\n"
                      "v_grid = [{ min = 0, max = 0, count = 1 }]\n");
}

}  // namespace

TEST_CASE("cfl_step instantiates the stability formula") {
    const SpatialGrid g = SpatialGrid::uniform_1d(-1.0, 1.0, 21);  // dx = 0.1

    // sigma = 1, b = 0: dt = 0.9 dx^2 / sigma^2.
    CHECK(cfl_step(drift_diffusion_model("0", "1", "x1"), g) ==
          doctest::Approx(0.009));

    // sigma = 0, b = 1: dt = 0.9 dx^2 / (dx |b|) = 0.9 dx.
    CHECK(cfl_step(drift_diffusion_model("1", "0", "x1"), g) ==
          doctest::Approx(0.09));

    // Halving dx quarters dt for diffusion-dominated models.
    const SpatialGrid g2 = SpatialGrid::uniform_1d(-1.0, 1.0, 41);  // dx = 0.05
    const GameModel md = drift_diffusion_model("0", "1", "x1");
    CHECK(cfl_step(md, g2) == doctest::Approx(cfl_step(md, g) / 4.0));

    // No dynamics at all: unbounded step.
    CHECK(std::isinf(cfl_step(drift_diffusion_model("0", "0", "x1"), g)));

    // Degenerate grid.
    SpatialGrid bad = SpatialGrid::uniform_1d(0.0, 0.0, 5);
    CHECK_THROWS_AS(cfl_step(md, bad), SolverError);
}

TEST_CASE("no dynamics: the value equals the payoff at every level") {
    const GameModel m = drift_diffusion_model("0", "0", "cos(x1)");
    const SpatialGrid g = SpatialGrid::uniform_1d(-2.0, 2.0, 41);
    const ValueFunction vf = solve_lower_isaacs(m, g, 0.0);
    std::vector<double> coords(1);
    for (int level = 0; level < vf.num_levels(); ++level) {
        for (std::size_t node = 0; node < g.num_nodes(); ++node) {
            g.node_coords(node, coords);
            CHECK(vf.value_at(level, node) == std::cos(coords[0]));
        }
    }
}

TEST_CASE("heat anchor: solver matches the quadrature oracle") {
    // Quadrature oracle cross-checked against the closed form first.
    const double oracle = testsupport::heat_cos_value(0.0, 1.0);
    CHECK(oracle == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));

    const GameModel m = testsupport::heat_model();
    const SpatialGrid g = SpatialGrid::uniform_1d(-8.0, 8.0, 513);  // dx = 1/32
    const ValueFunction vf = solve_lower_isaacs(m, g, 0.0);
    const std::vector<double> x0{0.0};
    const double v00 = vf.value(0.0, x0);
    CHECK(v00 == doctest::Approx(oracle).epsilon(4e-3));

    // Off-center values follow cos(x) e^{-1/2} as well.
    for (const double xi : {-1.0, -0.5, 0.5, 1.0}) {
        const std::vector<double> x{xi};
        CHECK(vf.value(0.0, x) ==
              doctest::Approx(testsupport::heat_cos_value(xi, 1.0)).epsilon(5e-3));
    }
}

TEST_CASE("cancellation game value matches the pure-diffusion run") {
    const SpatialGrid g = SpatialGrid::uniform_1d(-8.0, 8.0, 257);  // dx = 1/16
    const ValueFunction heat = solve_lower_isaacs(testsupport::heat_model(), g, 0.0);
    const ValueFunction canc =
        solve_lower_isaacs(testsupport::cancellation_model(5), g, 0.0);
    // Inner half of the domain, at the start time.
    for (std::size_t node = g.num_nodes() / 4; node <= 3 * g.num_nodes() / 4; ++node) {
        const double a = heat.value_at(heat.num_levels() - 1, node);
        const double b = canc.value_at(canc.num_levels() - 1, node);
        CHECK(std::fabs(a - b) <= 5e-3);
    }
}

TEST_CASE("query: node identity, symmetry of the gradient, domain errors") {
    const GameModel m = testsupport::heat_model();
    const SpatialGrid g = SpatialGrid::uniform_1d(-8.0, 8.0, 257);
    const ValueFunction vf = solve_lower_isaacs(m, g, 0.0);

    // Exact node and level: interpolation returns the stored value.
    const std::size_t node = g.num_nodes() / 2;
    std::vector<double> coords(1);
    g.node_coords(node, coords);
    const int level = 3;
    CHECK(vf.query(vf.times[level], coords).value == vf.value_at(level, node));

    // Even symmetry of the solution about x = 0: gradient vanishes there.
    const std::vector<double> x0{0.0};
    CHECK(std::fabs(vf.query(0.0, x0).derivatives.p[0]) <= 1e-3);
    // Second derivative is negative near the cosine peak.
    CHECK(vf.query(0.0, x0).derivatives.M[0] < 0.0);

    const std::vector<double> outside{9.0};
    CHECK_THROWS_AS(vf.query(0.0, outside), DomainError);
    CHECK_THROWS_AS(vf.query(-0.5, x0), DomainError);
    CHECK_THROWS_AS(vf.query(1.5, x0), DomainError);
}

TEST_CASE("scheme monotonicity under payoff ordering") {
    const SpatialGrid g = SpatialGrid::uniform_1d(-4.0, 4.0, 65);
    auto with_payoff = [&](const std::string& payoff) {
        GameModel m = load_model(testsupport::cancellation_config(3));
        m.payoff = parse_expression(payoff);
        return solve_lower_isaacs(m, g, 0.0);
    };
    const ValueFunction v1 = with_payoff("cos(x1)");
    const ValueFunction v2 = with_payoff("cos(x1) + 0.05*x1^2");
    REQUIRE(v1.num_levels() == v2.num_levels());
    for (int level = 0; level < v1.num_levels(); ++level) {
        for (std::size_t node = 0; node < g.num_nodes(); ++node) {
            CHECK(v1.value_at(level, node) <= v2.value_at(level, node));
        }
    }
}

TEST_CASE("discrete maximum principle holds exactly on every solve") {
    const SpatialGrid g = SpatialGrid::uniform_1d(-6.0, 6.0, 129);
    for (const auto& m : {testsupport::cancellation_model(5),
                          testsupport::one_player_drift_model(),
                          testsupport::sign_game_model()}) {
        const ValueFunction vf = solve_lower_isaacs(m, g, 0.0);
        for (const double v : vf.values) {
            CHECK(v >= vf.payoff_min);
            CHECK(v <= vf.payoff_max);
        }
        // The clamp never does real work on a healthy scheme.
        CHECK(vf.max_clamp_correction <= 1e-9);
    }
}

TEST_CASE("constant payoff solves to a constant") {
    GameModel m = testsupport::cancellation_model(5);
    m.payoff = parse_expression("3.25");
    const SpatialGrid g = SpatialGrid::uniform_1d(-4.0, 4.0, 65);
    const ValueFunction vf = solve_lower_isaacs(m, g, 0.0);
    for (const double v : vf.values) CHECK(v == 3.25);
}

TEST_CASE("one-step consistency on quadratics is O(dx)") {
    // Frozen action pair, smooth quadratic test function; the second
    // difference is exact on quadratics, the upwind first difference carries
    // the O(dx) bias.
    const GameModel m = load_model(R"cfg([dynamics]
d = 1
d_prime = 1
T = 1.0
b = ["u1 + v1 + 0.5"]
sigma = [["1"]]
g = "x1"

[actions]
u_grid = [{ min = -1, max = 1, count = 3 }]
v_grid = [{ min = -1, max = 1, count = 3 }]
)cfg");
    const auto residual = [&](int count) {
        const SpatialGrid g = SpatialGrid::uniform_1d(-2.0, 2.0, count);
        std::vector<double> w(g.num_nodes());
        std::vector<double> coords(1);
        for (std::size_t node = 0; node < g.num_nodes(); ++node) {
            g.node_coords(node, coords);
            w[node] = 2.0 + 0.5 * coords[0] + 0.25 * coords[0] * coords[0];
        }
        // interior node, u = 1 (index 2), v = -1 (index 0): b = 0.5, a = 1.
        const std::size_t node = g.num_nodes() / 2 + 1;
        g.node_coords(node, coords);
        const double vx = 0.5 + 0.5 * coords[0];
        const double vxx = 0.5;
        const double exact = 0.5 * vx + 0.5 * 1.0 * vxx;
        const double numeric = discrete_running_cost(m, g, w, node, 0.0, 2, 0);
        return std::fabs(numeric - exact);
    };
    const double r1 = residual(33);   // dx = 0.125
    const double r2 = residual(65);   // dx = 0.0625
    CHECK(r1 > 1e-6);                 // genuinely first order, not exact
    const double ratio = r2 / r1;
    CHECK(ratio > 0.3);
    CHECK(ratio < 0.7);               // halving dx roughly halves the residual
}

TEST_CASE("solves are byte-identical across thread counts") {
    const GameModel m = testsupport::cancellation_model(5);
    const SpatialGrid g = SpatialGrid::uniform_1d(-4.0, 4.0, 129);
    SolveOptions o1, o4, o8;
    o1.threads = 1;
    o4.threads = 4;
    o8.threads = 8;
    const ValueFunction a = solve_lower_isaacs(m, g, 0.0, o1);
    const ValueFunction b = solve_lower_isaacs(m, g, 0.0, o4);
    const ValueFunction c = solve_lower_isaacs(m, g, 0.0, o8);
    CHECK(a.values == b.values);
    CHECK(a.values == c.values);
}

TEST_CASE("value function serializes to the documented CSV layout") {
    const GameModel m = drift_diffusion_model("0", "0", "x1");
    const SpatialGrid g = SpatialGrid::uniform_1d(0.0, 1.0, 3);
    const ValueFunction vf = solve_lower_isaacs(m, g, 0.0);
    std::ostringstream os;
    vf.write_csv(os);
    const std::string csv = os.str();
    CHECK(csv.substr(0, 11) == "t,x1,value\n");
    // First data row is the terminal level at the left edge.
    CHECK(csv.find("1,0,0\n") != std::string::npos);
}

TEST_CASE("start time must precede the horizon") {
    const GameModel m = testsupport::heat_model();
    const SpatialGrid g = SpatialGrid::uniform_1d(-1.0, 1.0, 11);
    CHECK_THROWS_AS(solve_lower_isaacs(m, g, 1.0), SolverError);
    CHECK_THROWS_AS(solve_lower_isaacs(m, g, 2.0), SolverError);
}
