#ifndef GAMELAB_SRC_SWEEP_HPP
#define GAMELAB_SRC_SWEEP_HPP

// Internal kernel shared by the Isaacs solver and the restricted-value
// sweeps: one explicit backward time step of the monotone upwind scheme,
// parametrized by how the action enumeration is reduced at each node.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "gamelab/model.hpp"
#include "gamelab/parallel.hpp"
#include "gamelab/solver.hpp"

namespace gamelab::detail {

inline constexpr int kMaxDim = 4;

// Drift vector and the diagonal of sigma sigma^T for every action pair.
// When the coefficients read neither t nor x the values are tabulated once;
// otherwise they are evaluated on demand.
class CoefficientBank {
  public:
    explicit CoefficientBank(const GameModel& m)
        : m_(&m),
          d_(m.d),
          dprime_(m.d_prime),
          nu_(m.action_u.size()),
          nv_(m.action_v.size()),
          static_(m.coefficients_static()) {
        if (d_ > kMaxDim) {
            throw SolverError("state dimension larger than the supported maximum (" +
                              std::to_string(kMaxDim) + ")");
        }
        if (static_) {
            b_tab_.resize(static_cast<std::size_t>(nu_ * nv_ * d_));
            a_tab_.resize(static_cast<std::size_t>(nu_ * nv_ * d_));
            for (int ui = 0; ui < nu_; ++ui) {
                for (int vi = 0; vi < nv_; ++vi) {
                    double* b = &b_tab_[pair_offset(ui, vi)];
                    double* a = &a_tab_[pair_offset(ui, vi)];
                    evaluate(0.0, {}, ui, vi, b, a);
                }
            }
        }
    }

    bool is_static() const { return static_; }
    int nu() const { return nu_; }
    int nv() const { return nv_; }
    int dim() const { return d_; }

    // Fills b[0..d) and a[0..d) for the pair (ui, vi) at (t, x).
    void load(double t, std::span<const double> x, int ui, int vi, double* b,
              double* a) const {
        if (static_) {
            const std::size_t off = pair_offset(ui, vi);
            for (int i = 0; i < d_; ++i) {
                b[i] = b_tab_[off + static_cast<std::size_t>(i)];
                a[i] = a_tab_[off + static_cast<std::size_t>(i)];
            }
        } else {
            evaluate(t, x, ui, vi, b, a);
        }
    }

  private:
    std::size_t pair_offset(int ui, int vi) const {
        return static_cast<std::size_t>((ui * nv_ + vi) * d_);
    }

    void evaluate(double t, std::span<const double> x, int ui, int vi, double* b,
                  double* a) const {
        const EvalContext ctx{t, x, m_->action_u.point(ui), m_->action_v.point(vi)};
        for (int i = 0; i < d_; ++i) {
            b[i] = m_->drift[static_cast<std::size_t>(i)].eval(ctx);
            double aii = 0.0;
            for (int j = 0; j < dprime_; ++j) {
                const double s =
                    m_->sigma[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                        .eval(ctx);
                aii += s * s;
            }
            a[i] = aii;
        }
    }

    const GameModel* m_;
    int d_, dprime_, nu_, nv_;
    bool static_;
    std::vector<double> b_tab_, a_tab_;
};

// Throws unless sigma sigma^T is (numerically) diagonal on a sample of grid
// nodes, action pairs and times. The explicit scheme has no monotone stencil
// for cross-diffusion terms; one-dimensional models pass trivially.
void require_diagonal_diffusion(const GameModel& m, const SpatialGrid& grid,
                                double t_lo, double t_hi);

// Per-node upwinded stencil pieces: every entry multiplies a non-negative
// coefficient, which is what makes the update monotone and keeps the
// discrete maximum principle exact.
struct NodeStencil {
    double cp[kMaxDim];  // (V[i+e] - V[i]) / dx,          0 at a right boundary
    double cm[kMaxDim];  // (V[i-e] - V[i]) / dx,          0 at a left boundary
    double cd[kMaxDim];  // (V[i+e] + V[i-e] - 2 V[i]) / (2 dx^2), 0 at either
    std::size_t flat;
    double coords[kMaxDim];

    // Discrete L for one action pair given its coefficients.
    double combine(const double* b, const double* a, int d) const {
        double L = 0.0;
        for (int i = 0; i < d; ++i) {
            const double bi = b[i];
            const double bp = bi > 0.0 ? bi : 0.0;
            const double bm = bi < 0.0 ? -bi : 0.0;
            L += bp * cp[i] + bm * cm[i] + a[i] * cd[i];
        }
        return L;
    }
};

// One explicit backward step: out[i] = clamp(in[i] + dt * H_i). The policy
// maps a prepared stencil to the Hamiltonian value:
//   policy(const NodeStencil&, const LPair&) -> double
// where LPair::operator()(ui, vi) is the discrete L for that action pair.
template <class Policy>
void backward_step(const SpatialGrid& grid, const CoefficientBank& bank,
                   double t_eval, double dt, std::span<const double> in,
                   std::span<double> out, double clamp_lo, double clamp_hi,
                   double* max_clamp, int threads, const Policy& policy) {
    const int d = grid.dim();
    const std::size_t n = grid.num_nodes();
    const auto strides = grid.strides();
    const std::vector<std::size_t> stride_copy = strides;
    std::vector<int> extents(static_cast<std::size_t>(d));
    std::vector<double> dxs(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        extents[static_cast<std::size_t>(i)] = grid.axes[static_cast<std::size_t>(i)].count;
        dxs[static_cast<std::size_t>(i)] = grid.axes[static_cast<std::size_t>(i)].dx();
    }

    // max() is order-independent, so an atomic merge keeps the diagnostic
    // deterministic across thread schedules.
    std::atomic<double> clamp_worst{0.0};
    const int nthreads = threads > 0 ? threads : 1;

    parallel_for(n, nthreads, [&](std::size_t lo, std::size_t hi) {
        double local_clamp = 0.0;
        NodeStencil st;
        std::size_t rem_index[kMaxDim];
        for (std::size_t node = lo; node < hi; ++node) {
            std::size_t rem = node;
            for (int i = 0; i < d; ++i) {
                rem_index[i] = rem / stride_copy[static_cast<std::size_t>(i)];
                rem %= stride_copy[static_cast<std::size_t>(i)];
                st.coords[i] = grid.coord(i, static_cast<int>(rem_index[i]));
            }
            st.flat = node;
            const double vc = in[node];
            for (int i = 0; i < d; ++i) {
                const std::size_t stride = stride_copy[static_cast<std::size_t>(i)];
                const bool has_left = rem_index[i] > 0;
                const bool has_right =
                    rem_index[i] + 1 < static_cast<std::size_t>(extents[static_cast<std::size_t>(i)]);
                const double dvp = has_right ? in[node + stride] - vc : 0.0;
                const double dvm = has_left ? in[node - stride] - vc : 0.0;
                const double dx = dxs[static_cast<std::size_t>(i)];
                st.cp[i] = has_right ? dvp / dx : 0.0;
                st.cm[i] = has_left ? dvm / dx : 0.0;
                st.cd[i] = (has_left && has_right) ? (dvp + dvm) / (2.0 * dx * dx) : 0.0;
            }
            const auto lpair = [&](int ui, int vi) {
                double b[kMaxDim];
                double a[kMaxDim];
                bank.load(t_eval, std::span<const double>(st.coords, static_cast<std::size_t>(d)),
                          ui, vi, b, a);
                return st.combine(b, a, d);
            };
            const double H = policy(st, lpair);
            double next = vc + dt * H;
            if (!std::isfinite(next)) {
                throw SolverError("non-finite value produced at t=" +
                                  std::to_string(t_eval));
            }
            if (next < clamp_lo) {
                local_clamp = std::max(local_clamp, clamp_lo - next);
                next = clamp_lo;
            } else if (next > clamp_hi) {
                local_clamp = std::max(local_clamp, next - clamp_hi);
                next = clamp_hi;
            }
            out[node] = next;
        }
        double seen = clamp_worst.load();
        while (local_clamp > seen &&
               !clamp_worst.compare_exchange_weak(seen, local_clamp)) {
        }
    });
    if (max_clamp != nullptr) {
        *max_clamp = std::max(*max_clamp, clamp_worst.load());
    }
}

// Reduction policies.

struct LowerIsaacsPolicy {
    int nu, nv;
    template <class LPair>
    double operator()(const NodeStencil&, const LPair& L) const {
        double outer = 0.0;
        bool have_outer = false;
        for (int ui = 0; ui < nu; ++ui) {
            double inner = 0.0;
            bool have_inner = false;
            for (int vi = 0; vi < nv; ++vi) {
                const double val = L(ui, vi);
                if (!have_inner || val < inner) {
                    inner = val;
                    have_inner = true;
                }
            }
            if (!have_outer || inner > outer) {
                outer = inner;
                have_outer = true;
            }
        }
        return outer;
    }
};

// inf over V with u frozen (adversary best response).
struct FrozenUPolicy {
    int u_index, nv;
    template <class LPair>
    double operator()(const NodeStencil&, const LPair& L) const {
        double inner = 0.0;
        bool have = false;
        for (int vi = 0; vi < nv; ++vi) {
            const double val = L(u_index, vi);
            if (!have || val < inner) {
                inner = val;
                have = true;
            }
        }
        return inner;
    }
};

// sup over U with v supplied by a per-u response table (controller best
// response against a counter-strategy with a frozen snapshot).
struct CounterResponsePolicy {
    std::span<const int> v_for_u;  // size nu
    template <class LPair>
    double operator()(const NodeStencil&, const LPair& L) const {
        double outer = 0.0;
        bool have = false;
        for (int ui = 0; ui < static_cast<int>(v_for_u.size()); ++ui) {
            const double val = L(ui, v_for_u[static_cast<std::size_t>(ui)]);
            if (!have || val > outer) {
                outer = val;
                have = true;
            }
        }
        return outer;
    }
};

// Single fixed action pair (scheme-consistency checks).
struct SinglePairPolicy {
    int ui, vi;
    template <class LPair>
    double operator()(const NodeStencil&, const LPair& L) const {
        return L(ui, vi);
    }
};

// Shared helper: number of steps for a span under a CFL bound, rounded up
// to a multiple so macro grids land on levels.
std::size_t step_count(double span, double dt_max, int multiple);

// Terminal payoff sampled on the grid, with min/max tracking.
std::vector<double> sample_payoff(const GameModel& m, const SpatialGrid& grid,
                                  double* out_min, double* out_max);

}  // namespace gamelab::detail

#endif
