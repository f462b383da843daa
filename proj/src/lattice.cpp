#include "gamelab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace gamelab {

double LatticeGame::coord(int node) const {
    if (node == n_x - 1) return x_max;
    return x_min + dx() * static_cast<double>(node);
}

int LatticeGame::node_of(double x) const {
    long idx = std::lround((x - x_min) / dx());
    if (idx < 0) idx = 0;
    if (idx >= n_x) idx = n_x - 1;
    return static_cast<int>(idx);
}

const std::array<double, 3>& LatticeGame::triple(int node, int u, int v) const {
    return transitions[static_cast<std::size_t>((node * n_u + u) * n_v + v)];
}

LatticeGame build_lattice(const GameModel& m, int n_steps, double x_min,
                          double x_max, int n_x, LatticeMode mode) {
    m.validate();
    if (m.d != 1 || m.d_prime != 1) {
        throw SolverError("the lattice oracle is one-dimensional only");
    }
    if (n_steps < 1 || n_x < 3 || !(x_min < x_max)) {
        throw SolverError("lattice needs n_steps >= 1, n_x >= 3, x_min < x_max");
    }
    for (const auto& e : m.drift) {
        if (e.depends_on(VarKind::Time)) {
            throw SolverError("lattice oracle requires time-independent coefficients");
        }
    }
    for (const auto& row : m.sigma) {
        for (const auto& e : row) {
            if (e.depends_on(VarKind::Time)) {
                throw SolverError("lattice oracle requires time-independent coefficients");
            }
        }
    }

    LatticeGame L;
    L.n_steps = n_steps;
    L.h = m.horizon / static_cast<double>(n_steps);
    L.x_min = x_min;
    L.x_max = x_max;
    L.n_x = n_x;
    L.mode = mode;
    L.n_u = m.action_u.size();
    L.n_v = m.action_v.size();
    L.transitions.resize(static_cast<std::size_t>(n_x) * static_cast<std::size_t>(L.n_u) *
                         static_cast<std::size_t>(L.n_v));
    L.terminal.resize(static_cast<std::size_t>(n_x));

    const double dx = L.dx();
    const double h = L.h;
    // Probabilities may miss [0,1] by accumulated rounding only.
    const double slack = 64.0 * 1e-16;

    std::vector<double> x(1);
    for (int node = 0; node < n_x; ++node) {
        x[0] = L.coord(node);
        L.terminal[static_cast<std::size_t>(node)] =
            m.payoff.eval(EvalContext{0.0, x, {}, {}});
        for (int u = 0; u < L.n_u; ++u) {
            for (int v = 0; v < L.n_v; ++v) {
                const EvalContext ctx{0.0, x, m.action_u.point(u), m.action_v.point(v)};
                const double b = m.drift[0].eval(ctx);
                const double s = m.sigma[0][0].eval(ctx);
                const double a = s * s;
                double p_plus, p_minus;
                if (mode == LatticeMode::central) {
                    p_plus = 0.5 * (a * h / (dx * dx) + b * h / dx);
                    p_minus = 0.5 * (a * h / (dx * dx) - b * h / dx);
                } else {
                    const double bp = b > 0.0 ? b : 0.0;
                    const double bm = b < 0.0 ? -b : 0.0;
                    p_plus = 0.5 * a * h / (dx * dx) + bp * h / dx;
                    p_minus = 0.5 * a * h / (dx * dx) + bm * h / dx;
                }
                double p_stay = 1.0 - p_plus - p_minus;
                if (p_plus < -slack || p_minus < -slack || p_stay < -slack ||
                    p_plus > 1.0 + slack || p_minus > 1.0 + slack) {
                    char msg[512];
                    if (mode == LatticeMode::central && (p_plus < 0.0 || p_minus < 0.0)) {
                        std::snprintf(msg, sizeof(msg),
                                      "transition probability out of [0,1] at node %d "
                                      "(x=%g), u=%d, v=%d: p-=%g, p0=%g, p+=%g; drift "
                                      "dominates diffusion here, use drift-upwind mode "
                                      "or reduce dx below %g",
                                      node, x[0], u, v, p_minus, p_stay, p_plus,
                                      std::fabs(b) > 0 ? a / std::fabs(b) : dx);
                    } else {
                        std::snprintf(msg, sizeof(msg),
                                      "transition probability out of [0,1] at node %d "
                                      "(x=%g), u=%d, v=%d: p-=%g, p0=%g, p+=%g; reduce "
                                      "h to at most %g",
                                      node, x[0], u, v, p_minus, p_stay, p_plus,
                                      (dx * dx) / (a + std::fabs(b) * dx + 1e-300));
                    }
                    throw SolverError(msg);
                }
                p_plus = std::clamp(p_plus, 0.0, 1.0);
                p_minus = std::clamp(p_minus, 0.0, 1.0);
                p_stay = std::clamp(p_stay, 0.0, 1.0);
                // Reflecting boundary: out-of-range mass stays put.
                if (node == 0) {
                    p_stay += p_minus;
                    p_minus = 0.0;
                }
                if (node == n_x - 1) {
                    p_stay += p_plus;
                    p_plus = 0.0;
                }
                L.transitions[static_cast<std::size_t>((node * L.n_u + u) * L.n_v + v)] =
                    {p_minus, p_stay, p_plus};
            }
        }
    }
    return L;
}

namespace {

inline double expected_value(const LatticeGame& L, const std::array<double, 3>& p,
                             const std::vector<double>& next, int node) {
    const int left = node > 0 ? node - 1 : 0;
    const int right = node + 1 < L.n_x ? node + 1 : L.n_x - 1;
    return p[0] * next[static_cast<std::size_t>(left)] +
           p[1] * next[static_cast<std::size_t>(node)] +
           p[2] * next[static_cast<std::size_t>(right)];
}

// One backward step at a node: max over u of min over v (or the mirrored
// order) of the one-step expectation.
double step_value(const LatticeGame& L, const std::vector<double>& next, int node,
                  bool sup_outer_over_u) {
    const int n_outer = sup_outer_over_u ? L.n_u : L.n_v;
    const int n_inner = sup_outer_over_u ? L.n_v : L.n_u;
    double outer = 0.0;
    bool have_outer = false;
    for (int o = 0; o < n_outer; ++o) {
        double inner = 0.0;
        bool have_inner = false;
        for (int in = 0; in < n_inner; ++in) {
            const int u = sup_outer_over_u ? o : in;
            const int v = sup_outer_over_u ? in : o;
            const double e = expected_value(L, L.triple(node, u, v), next, node);
            const bool better = sup_outer_over_u ? e < inner : e > inner;
            if (!have_inner || better) {
                inner = e;
                have_inner = true;
            }
        }
        const bool better = sup_outer_over_u ? inner > outer : inner < outer;
        if (!have_outer || better) {
            outer = inner;
            have_outer = true;
        }
    }
    return outer;
}

LatticeValues induct(const LatticeGame& L, bool sup_outer_over_u) {
    LatticeValues out;
    out.per_step.assign(static_cast<std::size_t>(L.n_steps) + 1,
                        std::vector<double>(static_cast<std::size_t>(L.n_x)));
    out.per_step[static_cast<std::size_t>(L.n_steps)] = L.terminal;
    for (int j = L.n_steps - 1; j >= 0; --j) {
        const auto& next = out.per_step[static_cast<std::size_t>(j + 1)];
        auto& cur = out.per_step[static_cast<std::size_t>(j)];
        for (int node = 0; node < L.n_x; ++node) {
            cur[static_cast<std::size_t>(node)] =
                step_value(L, next, node, sup_outer_over_u);
        }
    }
    return out;
}

}  // namespace

LatticeValues lattice_lower_value(const LatticeGame& L) { return induct(L, true); }
LatticeValues lattice_upper_value(const LatticeGame& L) { return induct(L, false); }

void LatticeValues::write_csv(std::ostream& os, const LatticeGame& L) const {
    os << "t,x1,value\n";
    char buf[64];
    for (std::size_t j = 0; j < per_step.size(); ++j) {
        const double t = L.h * static_cast<double>(j);
        for (int node = 0; node < L.n_x; ++node) {
            std::snprintf(buf, sizeof(buf), "%.17g", t);
            os << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", L.coord(node));
            os << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g",
                          per_step[j][static_cast<std::size_t>(node)]);
            os << buf << '\n';
        }
    }
}

std::vector<double> lattice_grid_restricted_lower(const LatticeGame& L,
                                                  const TimeGrid& pi) {
    pi.validate();
    const double horizon = L.h * static_cast<double>(L.n_steps);
    const double tol = 1e-9 * std::max(1.0, horizon);
    if (std::fabs(pi.start()) > tol || std::fabs(pi.end() - horizon) > tol) {
        throw DomainError("time grid must span [0, n_steps * h]");
    }
    // Macro times must land on micro steps.
    std::vector<int> micro(pi.times.size());
    for (std::size_t k = 0; k < pi.times.size(); ++k) {
        const double ratio = pi.times[k] / L.h;
        const double rounded = std::round(ratio);
        if (std::fabs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
            throw DomainError("time grid point does not align with micro steps");
        }
        micro[k] = static_cast<int>(rounded);
        if (k > 0 && micro[k] <= micro[k - 1]) {
            throw DomainError("time grid has an empty micro-step interval");
        }
    }

    std::vector<double> continuation = L.terminal;
    // Backward over macro intervals: inner v-minimizing DP per frozen u,
    // outer max over u per snapshot node.
    std::vector<std::vector<double>> frozen(static_cast<std::size_t>(L.n_u));
    for (std::size_t k = micro.size() - 1; k >= 1; --k) {
        const int j_hi = micro[k];
        const int j_lo = micro[k - 1];
        for (int u = 0; u < L.n_u; ++u) {
            frozen[static_cast<std::size_t>(u)] = continuation;
            auto& w = frozen[static_cast<std::size_t>(u)];
            std::vector<double> next(w.size());
            for (int j = j_hi - 1; j >= j_lo; --j) {
                next.swap(w);
                for (int node = 0; node < L.n_x; ++node) {
                    double inner = 0.0;
                    bool have = false;
                    for (int v = 0; v < L.n_v; ++v) {
                        const double e =
                            expected_value(L, L.triple(node, u, v), next, node);
                        if (!have || e < inner) {
                            inner = e;
                            have = true;
                        }
                    }
                    w[static_cast<std::size_t>(node)] = inner;
                }
            }
        }
        for (int node = 0; node < L.n_x; ++node) {
            double best = frozen[0][static_cast<std::size_t>(node)];
            for (int u = 1; u < L.n_u; ++u) {
                best = std::max(best, frozen[static_cast<std::size_t>(u)]
                                          [static_cast<std::size_t>(node)]);
            }
            continuation[static_cast<std::size_t>(node)] = best;
        }
        if (k == 1) break;
    }
    return continuation;
}

}  // namespace gamelab
