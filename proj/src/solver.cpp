#include "gamelab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "gamelab/parallel.hpp"
#include "sweep.hpp"

namespace gamelab {

std::size_t SpatialGrid::num_nodes() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= static_cast<std::size_t>(a.count);
    return n;
}

std::vector<std::size_t> SpatialGrid::strides() const {
    std::vector<std::size_t> s(axes.size(), 1);
    for (std::size_t i = axes.size(); i-- > 1;) {
        s[i - 1] = s[i] * static_cast<std::size_t>(axes[i].count);
    }
    return s;
}

double SpatialGrid::coord(int axis, int index) const {
    const auto& a = axes[static_cast<std::size_t>(axis)];
    if (index == a.count - 1) return a.max;
    return a.min + a.dx() * static_cast<double>(index);
}

void SpatialGrid::node_coords(std::size_t flat, std::span<double> out) const {
    const auto s = strides();
    for (std::size_t i = 0; i < axes.size(); ++i) {
        const std::size_t idx = flat / s[i];
        flat %= s[i];
        out[i] = coord(static_cast<int>(i), static_cast<int>(idx));
    }
}

std::size_t SpatialGrid::nearest_node(std::span<const double> x) const {
    const auto s = strides();
    std::size_t flat = 0;
    for (std::size_t i = 0; i < axes.size(); ++i) {
        const auto& a = axes[i];
        const double pos = (x[i] - a.min) / a.dx();
        long idx = std::lround(pos);
        if (idx < 0) idx = 0;
        if (idx >= a.count) idx = a.count - 1;
        flat += static_cast<std::size_t>(idx) * s[i];
    }
    return flat;
}

bool SpatialGrid::contains(std::span<const double> x, double tol) const {
    for (std::size_t i = 0; i < axes.size(); ++i) {
        if (x[i] < axes[i].min - tol || x[i] > axes[i].max + tol) return false;
    }
    return true;
}

void SpatialGrid::validate() const {
    if (axes.empty()) throw SolverError("spatial grid has no axes");
    for (const auto& a : axes) {
        if (a.count < 3) throw SolverError("spatial grid needs at least 3 points per axis");
        if (!(a.min < a.max)) throw SolverError("spatial grid axis has min >= max");
        if (!(a.dx() > 0.0)) throw SolverError("degenerate spatial grid spacing");
    }
}

std::span<const double> ValueFunction::level_values(int level) const {
    const std::size_t n = grid.num_nodes();
    return std::span<const double>(values.data() + static_cast<std::size_t>(level) * n, n);
}

double ValueFunction::value_at(int level, std::size_t node) const {
    return values[static_cast<std::size_t>(level) * grid.num_nodes() + node];
}

int ValueFunction::nearest_level(double t) const {
    // times are strictly descending; find the bracketing pair, pick the
    // closer level, ties toward the larger time (the smaller index).
    int lo = 0, hi = static_cast<int>(times.size()) - 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (times[static_cast<std::size_t>(mid)] >= t) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double d_lo = std::fabs(times[static_cast<std::size_t>(lo)] - t);
    const double d_hi = std::fabs(times[static_cast<std::size_t>(hi)] - t);
    return d_hi < d_lo ? hi : lo;
}

namespace {

double interp_space(const SpatialGrid& grid, std::span<const double> level,
                    std::span<const double> x) {
    const int d = grid.dim();
    const auto strides = grid.strides();
    int base_idx[detail::kMaxDim];
    double frac[detail::kMaxDim];
    for (int i = 0; i < d; ++i) {
        const auto& a = grid.axes[static_cast<std::size_t>(i)];
        double pos = (x[static_cast<std::size_t>(i)] - a.min) / a.dx();
        if (pos < 0.0) pos = 0.0;
        if (pos > static_cast<double>(a.count - 1)) pos = static_cast<double>(a.count - 1);
        int cell = static_cast<int>(pos);
        if (cell >= a.count - 1) cell = a.count - 2;
        base_idx[i] = cell;
        frac[i] = pos - static_cast<double>(cell);
    }
    double acc = 0.0;
    const int corners = 1 << d;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t flat = 0;
        for (int i = 0; i < d; ++i) {
            const int hi_side = (c >> i) & 1;
            w *= hi_side ? frac[i] : 1.0 - frac[i];
            flat += static_cast<std::size_t>(base_idx[i] + hi_side) *
                    strides[static_cast<std::size_t>(i)];
        }
        acc += w * level[flat];
    }
    return acc;
}

}  // namespace

DerivativePair ValueFunction::derivatives_at_node(int level, std::size_t node) const {
    const int d = grid.dim();
    const auto strides = grid.strides();
    const auto vals = level_values(level);
    DerivativePair dp = DerivativePair::zero(d);

    int idx[detail::kMaxDim];
    std::size_t rem = node;
    for (int i = 0; i < d; ++i) {
        idx[i] = static_cast<int>(rem / strides[static_cast<std::size_t>(i)]);
        rem %= strides[static_cast<std::size_t>(i)];
    }
    const double vc = vals[node];
    for (int i = 0; i < d; ++i) {
        const auto& a = grid.axes[static_cast<std::size_t>(i)];
        const double dx = a.dx();
        const std::size_t stride = strides[static_cast<std::size_t>(i)];
        const bool has_left = idx[i] > 0;
        const bool has_right = idx[i] + 1 < a.count;
        const double vp = has_right ? vals[node + stride] : vc;
        const double vm = has_left ? vals[node - stride] : vc;
        // Central differences; with the linear-extrapolation ghost the
        // boundary gradient becomes the inner one-sided difference and the
        // boundary second difference becomes zero.
        if (has_left && has_right) {
            dp.p[static_cast<std::size_t>(i)] = (vp - vm) / (2.0 * dx);
            dp.M[static_cast<std::size_t>(i * d + i)] = (vp - 2.0 * vc + vm) / (dx * dx);
        } else if (has_right) {
            dp.p[static_cast<std::size_t>(i)] = (vp - vc) / dx;
        } else if (has_left) {
            dp.p[static_cast<std::size_t>(i)] = (vc - vm) / dx;
        }
    }
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const auto& ai = grid.axes[static_cast<std::size_t>(i)];
            const auto& aj = grid.axes[static_cast<std::size_t>(j)];
            if (idx[i] <= 0 || idx[i] + 1 >= ai.count || idx[j] <= 0 ||
                idx[j] + 1 >= aj.count) {
                continue;  // cross term zero at the boundary closure
            }
            const std::size_t si = strides[static_cast<std::size_t>(i)];
            const std::size_t sj = strides[static_cast<std::size_t>(j)];
            const double cross =
                (vals[node + si + sj] - vals[node + si - sj] -
                 vals[node - si + sj] + vals[node - si - sj]) /
                (4.0 * ai.dx() * aj.dx());
            dp.M[static_cast<std::size_t>(i * d + j)] = cross;
            dp.M[static_cast<std::size_t>(j * d + i)] = cross;
        }
    }
    return dp;
}

ValueFunction::Query ValueFunction::query(double t, std::span<const double> x) const {
    const double t_hi = terminal_time();
    const double t_lo = start_time();
    const double ttol = 1e-12 * std::max({std::fabs(t_hi), std::fabs(t_lo), 1.0});
    if (t < t_lo - ttol || t > t_hi + ttol) {
        throw DomainError("value query outside the time span");
    }
    if (static_cast<int>(x.size()) != grid.dim() || !grid.contains(x)) {
        throw DomainError("value query outside the spatial box");
    }
    const double tc = std::clamp(t, t_lo, t_hi);

    int lo = 0, hi = static_cast<int>(times.size()) - 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (times[static_cast<std::size_t>(mid)] >= tc) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Query q;
    const double t_upper = times[static_cast<std::size_t>(lo)];
    const double t_lower = times[static_cast<std::size_t>(hi)];
    if (lo == hi || t_upper == t_lower) {
        q.value = interp_space(grid, level_values(lo), x);
    } else {
        const double w = (tc - t_lower) / (t_upper - t_lower);
        const double v_upper = interp_space(grid, level_values(lo), x);
        const double v_lower = interp_space(grid, level_values(hi), x);
        q.value = w * v_upper + (1.0 - w) * v_lower;
    }
    q.derivatives = derivatives_at_node(nearest_level(tc), grid.nearest_node(x));
    return q;
}

void ValueFunction::write_csv(std::ostream& os) const {
    const int d = grid.dim();
    os << "t";
    for (int i = 1; i <= d; ++i) os << ",x" << i;
    os << ",value\n";
    char buf[64];
    const std::size_t n = grid.num_nodes();
    std::vector<double> coords(static_cast<std::size_t>(d));
    for (int level = 0; level < num_levels(); ++level) {
        for (std::size_t node = 0; node < n; ++node) {
            grid.node_coords(node, coords);
            std::snprintf(buf, sizeof(buf), "%.17g",
                          times[static_cast<std::size_t>(level)]);
            os << buf;
            for (int i = 0; i < d; ++i) {
                std::snprintf(buf, sizeof(buf), "%.17g",
                              coords[static_cast<std::size_t>(i)]);
                os << ',' << buf;
            }
            std::snprintf(buf, sizeof(buf), "%.17g", value_at(level, node));
            os << ',' << buf << '\n';
        }
    }
}

void ValueFunction::write_csv_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    write_csv(out);
}

namespace detail {

void require_diagonal_diffusion(const GameModel& m, const SpatialGrid& grid,
                                double t_lo, double t_hi) {
    if (m.d < 2) return;
    const int d = m.d;
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<double> sig(static_cast<std::size_t>(d * m.d_prime));
    std::vector<std::size_t> nodes = {0, grid.num_nodes() / 2, grid.num_nodes() - 1};
    for (const double t : {t_lo, 0.5 * (t_lo + t_hi), t_hi}) {
        for (const std::size_t node : nodes) {
            grid.node_coords(node, x);
            for (int ui = 0; ui < m.action_u.size(); ++ui) {
                for (int vi = 0; vi < m.action_v.size(); ++vi) {
                    const EvalContext ctx{t, x, m.action_u.point(ui),
                                          m.action_v.point(vi)};
                    for (int i = 0; i < d; ++i) {
                        for (int j = 0; j < m.d_prime; ++j) {
                            sig[static_cast<std::size_t>(i * m.d_prime + j)] =
                                m.sigma[static_cast<std::size_t>(i)]
                                       [static_cast<std::size_t>(j)]
                                           .eval(ctx);
                        }
                    }
                    for (int i = 0; i < d; ++i) {
                        for (int j = 0; j < d; ++j) {
                            if (i == j) continue;
                            double off = 0.0;
                            double scale = 1e-12;
                            for (int k = 0; k < m.d_prime; ++k) {
                                const double si =
                                    sig[static_cast<std::size_t>(i * m.d_prime + k)];
                                const double sj =
                                    sig[static_cast<std::size_t>(j * m.d_prime + k)];
                                off += si * sj;
                                scale += std::fabs(si) + std::fabs(sj);
                            }
                            if (std::fabs(off) > 1e-12 * scale) {
                                throw SolverError(
                                    "sigma sigma^T has off-diagonal entries; the "
                                    "explicit monotone scheme supports diagonal "
                                    "diffusion only");
                            }
                        }
                    }
                }
            }
        }
    }
}

std::size_t step_count(double span, double dt_max, int multiple) {
    std::size_t n = 1;
    if (std::isfinite(dt_max) && dt_max > 0.0 && span > dt_max) {
        n = static_cast<std::size_t>(std::ceil(span / dt_max));
    }
    if (multiple > 1) {
        const std::size_t mult = static_cast<std::size_t>(multiple);
        n = ((n + mult - 1) / mult) * mult;
    }
    return n;
}

std::vector<double> sample_payoff(const GameModel& m, const SpatialGrid& grid,
                                  double* out_min, double* out_max) {
    const std::size_t n = grid.num_nodes();
    std::vector<double> g(n);
    std::vector<double> coords(static_cast<std::size_t>(grid.dim()));
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t node = 0; node < n; ++node) {
        grid.node_coords(node, coords);
        const double val = m.payoff.eval(EvalContext{0.0, coords, {}, {}});
        g[node] = val;
        lo = std::min(lo, val);
        hi = std::max(hi, val);
    }
    if (out_min) *out_min = lo;
    if (out_max) *out_max = hi;
    return g;
}

}  // namespace detail

double cfl_step(const GameModel& m, const SpatialGrid& grid, double t_lo,
                double t_hi) {
    m.validate();
    grid.validate();
    if (t_hi < t_lo) t_hi = m.horizon;
    if (grid.dim() != m.d) throw SolverError("grid dimension does not match model");
    const detail::CoefficientBank bank(m);
    const int d = m.d;

    double max_rate = 0.0;
    double b[detail::kMaxDim];
    double a[detail::kMaxDim];
    std::vector<double> coords(static_cast<std::size_t>(d));
    const std::size_t n_nodes = bank.is_static() ? 1 : grid.num_nodes();
    const int n_time = bank.is_static() ? 1 : 9;
    for (int ti = 0; ti < n_time; ++ti) {
        const double t =
            n_time == 1
                ? t_lo
                : t_lo + (t_hi - t_lo) * static_cast<double>(ti) /
                      static_cast<double>(n_time - 1);
        for (std::size_t node = 0; node < n_nodes; ++node) {
            grid.node_coords(node, coords);
            for (int ui = 0; ui < m.action_u.size(); ++ui) {
                for (int vi = 0; vi < m.action_v.size(); ++vi) {
                    bank.load(t, coords, ui, vi, b, a);
                    double rate = 0.0;
                    for (int i = 0; i < d; ++i) {
                        const double dx = grid.axes[static_cast<std::size_t>(i)].dx();
                        rate += a[i] / (dx * dx) + std::fabs(b[i]) / dx;
                    }
                    max_rate = std::max(max_rate, rate);
                }
            }
        }
    }
    if (max_rate == 0.0) return std::numeric_limits<double>::infinity();
    return 0.9 / max_rate;
}

ValueFunction solve_lower_isaacs(const GameModel& m, const SpatialGrid& grid,
                                 double start_time, const SolveOptions& options) {
    m.validate();
    grid.validate();
    if (!(start_time < m.horizon)) {
        throw SolverError("start time must precede the horizon");
    }
    detail::require_diagonal_diffusion(m, grid, start_time, m.horizon);

    const double span = m.horizon - start_time;
    const double dt_max = cfl_step(m, grid, start_time, m.horizon);
    const std::size_t n_steps =
        detail::step_count(span, dt_max, options.align_steps_multiple);

    ValueFunction vf;
    vf.grid = grid;
    vf.times.resize(n_steps + 1);
    for (std::size_t j = 0; j <= n_steps; ++j) {
        vf.times[j] =
            m.horizon - span * static_cast<double>(j) / static_cast<double>(n_steps);
    }
    vf.times.front() = m.horizon;
    vf.times.back() = start_time;

    const std::size_t n_nodes = grid.num_nodes();
    vf.values.resize((n_steps + 1) * n_nodes);

    const std::vector<double> terminal =
        detail::sample_payoff(m, grid, &vf.payoff_min, &vf.payoff_max);
    std::copy(terminal.begin(), terminal.end(), vf.values.begin());

    const detail::CoefficientBank bank(m);
    const detail::LowerIsaacsPolicy policy{m.action_u.size(), m.action_v.size()};
    const int threads = options.threads > 0 ? options.threads : default_threads();

    for (std::size_t j = 0; j < n_steps; ++j) {
        const double t_known = vf.times[j];
        const double dt = vf.times[j] - vf.times[j + 1];
        const std::span<const double> in(vf.values.data() + j * n_nodes, n_nodes);
        const std::span<double> out(vf.values.data() + (j + 1) * n_nodes, n_nodes);
        try {
            detail::backward_step(grid, bank, t_known, dt, in, out, vf.payoff_min,
                                  vf.payoff_max, &vf.max_clamp_correction, threads,
                                  policy);
        } catch (const Error& e) {
            throw SolverError(std::string(e.what()) + " (backward step " +
                              std::to_string(j + 1) + " of " +
                              std::to_string(n_steps) + ")");
        }
    }
    return vf;
}

double discrete_running_cost(const GameModel& m, const SpatialGrid& grid,
                             std::span<const double> level_values,
                             std::size_t node, double t, int u_index,
                             int v_index) {
    m.validate();
    grid.validate();
    if (level_values.size() != grid.num_nodes()) {
        throw DomainError("level_values size does not match the grid");
    }
    const detail::CoefficientBank bank(m);

    // Single-node evaluation through the same stencil construction the
    // sweeps use.
    std::vector<double> scratch(level_values.size());
    const detail::SinglePairPolicy policy{u_index, v_index};
    detail::backward_step(grid, bank, t, 1.0, level_values, scratch,
                          -std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity(), nullptr, 1,
                          policy);
    return scratch[node] - level_values[node];
}

}  // namespace gamelab
