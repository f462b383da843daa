#ifndef GAMELAB_MODEL_HPP
#define GAMELAB_MODEL_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gamelab/expr.hpp"

namespace gamelab {

// Finite set of action vectors approximating a compact action space.
// Points are materialized from per-component {min, max, count} ranges as the
// cartesian product with the last component varying fastest; that ordering
// is the canonical tie-breaking order everywhere in the library.
struct ActionGrid {
    std::vector<std::vector<double>> points;
    int components = 0;
    char label = 'U';

    int size() const { return static_cast<int>(points.size()); }
    const std::vector<double>& point(int idx) const {
        return points[static_cast<std::size_t>(idx)];
    }
    // Index of the grid point nearest to `a` (Euclidean), lowest index wins ties.
    int nearest(std::span<const double> a) const;

    static ActionGrid from_ranges(
        const std::vector<std::array<double, 2>>& min_max,
        const std::vector<int>& counts, char label);
};

// A zero-sum differential game: dX = b dt + sigma dW on [0,T], terminal
// payoff g(X_T), u maximizing, v minimizing over finite action grids.
struct GameModel {
    int d = 0;        // state dimension
    int d_prime = 0;  // driving-noise dimension
    double horizon = 0.0;
    std::vector<Expr> drift;                // d entries
    std::vector<std::vector<Expr>> sigma;   // d rows, d_prime columns
    Expr payoff;                            // depends on x only
    ActionGrid action_u;
    ActionGrid action_v;

    // True when neither drift nor sigma reads t or x anywhere; such models
    // admit per-action coefficient tables in the solvers.
    bool coefficients_static() const;
    void validate() const;  // throws ConfigError on any broken invariant
};

// Parses the documented key/value model configuration (see README):
// sections [dynamics] (d, d_prime, T, b, sigma, g) and [actions]
// (u_grid, v_grid).
GameModel load_model(std::string_view config_text);
GameModel load_model_file(const std::string& path);

// Monte Carlo audit of the coefficient assumptions: local Lipschitz
// constant over |x|,|y| <= K, global-linear-growth constant, and sampled
// continuity verdicts per coefficient entry. Estimates use one sample
// stream indexed by the sample number, so for a fixed seed they are
// non-decreasing in n_samples.
struct AuditReport {
    double lipschitz_estimate = 0.0;
    double growth_constant = 0.0;
    struct ContinuityFlag {
        std::string coefficient;  // "b[0]", "sigma[0][1]", ...
        bool continuous = true;
    };
    std::vector<ContinuityFlag> continuity_flags;
    std::uint64_t samples_used = 0;
    std::uint64_t seed = 0;
    double radius = 0.0;

    bool all_continuous() const;
};

AuditReport audit_assumptions(const GameModel& m, std::uint64_t n_samples,
                              double K, std::uint64_t seed);

}  // namespace gamelab

#endif
