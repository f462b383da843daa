#include "gamelab/hamiltonian.hpp"

#include <cmath>

namespace gamelab {

void DerivativePair::validate(int d) const {
    if (static_cast<int>(p.size()) != d ||
        static_cast<int>(M.size()) != d * d) {
        throw DomainError("DerivativePair has wrong dimensions");
    }
    double scale = 1.0;
    for (const double v : M) scale = std::max(scale, std::fabs(v));
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const double a = M[static_cast<std::size_t>(i * d + j)];
            const double b = M[static_cast<std::size_t>(j * d + i)];
            if (std::fabs(a - b) > 1e-9 * scale) {
                throw DomainError("DerivativePair.M is not symmetric");
            }
        }
    }
}

double running_cost_operator(const GameModel& m, double t,
                             std::span<const double> x, int u_index, int v_index,
                             const DerivativePair& dp) {
    const int d = m.d;
    dp.validate(d);
    if (u_index < 0 || u_index >= m.action_u.size() || v_index < 0 ||
        v_index >= m.action_v.size()) {
        throw DomainError("action index outside the grid");
    }
    const EvalContext ctx{t, x, m.action_u.point(u_index), m.action_v.point(v_index)};

    double drift_term = 0.0;
    for (int i = 0; i < d; ++i) {
        drift_term += m.drift[static_cast<std::size_t>(i)].eval(ctx) *
                      dp.p[static_cast<std::size_t>(i)];
    }

    // 1/2 Tr(sigma sigma^T M) = 1/2 sum_ij (sigma sigma^T)_ij M_ij for
    // symmetric M. Evaluate sigma once, then contract. Stack storage keeps
    // this allocation-free at the dimensions the solvers support.
    double diffusion_term = 0.0;
    constexpr int kStackCap = 64;
    double sig_stack[kStackCap];
    std::vector<double> sig_heap;
    double* sig = sig_stack;
    if (d * m.d_prime > kStackCap) {
        sig_heap.resize(static_cast<std::size_t>(d * m.d_prime));
        sig = sig_heap.data();
    }
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < m.d_prime; ++j) {
            sig[static_cast<std::size_t>(i * m.d_prime + j)] =
                m.sigma[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(ctx);
        }
    }
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            double a_ij = 0.0;
            for (int k = 0; k < m.d_prime; ++k) {
                a_ij += sig[static_cast<std::size_t>(i * m.d_prime + k)] *
                        sig[static_cast<std::size_t>(j * m.d_prime + k)];
            }
            diffusion_term += a_ij * dp.M[static_cast<std::size_t>(i * d + j)];
        }
    }
    return drift_term + 0.5 * diffusion_term;
}

namespace {

// Shared enumeration: returns sup-inf or inf-sup with lowest-index ties.
HamiltonianResult enumerate(const GameModel& m, double t,
                            std::span<const double> x, const DerivativePair& dp,
                            bool sup_outer_over_u) {
    const int nu = m.action_u.size();
    const int nv = m.action_v.size();
    HamiltonianResult best;
    bool have_outer = false;
    const int n_outer = sup_outer_over_u ? nu : nv;
    const int n_inner = sup_outer_over_u ? nv : nu;
    for (int o = 0; o < n_outer; ++o) {
        double inner_val = 0.0;
        int inner_idx = 0;
        bool have_inner = false;
        for (int in = 0; in < n_inner; ++in) {
            const int ui = sup_outer_over_u ? o : in;
            const int vi = sup_outer_over_u ? in : o;
            const double L = running_cost_operator(m, t, x, ui, vi, dp);
            const bool better = sup_outer_over_u ? (L < inner_val) : (L > inner_val);
            if (!have_inner || better) {
                inner_val = L;
                inner_idx = in;
                have_inner = true;
            }
        }
        const bool better = sup_outer_over_u ? (inner_val > best.value)
                                             : (inner_val < best.value);
        if (!have_outer || better) {
            best.value = inner_val;
            if (sup_outer_over_u) {
                best.best_u = o;
                best.worst_v_given_best_u = inner_idx;
            } else {
                best.worst_v_given_best_u = o;
                best.best_u = inner_idx;
            }
            have_outer = true;
        }
    }
    return best;
}

}  // namespace

HamiltonianResult lower_hamiltonian(const GameModel& m, double t,
                                    std::span<const double> x,
                                    const DerivativePair& dp) {
    return enumerate(m, t, x, dp, /*sup_outer_over_u=*/true);
}

HamiltonianResult upper_hamiltonian(const GameModel& m, double t,
                                    std::span<const double> x,
                                    const DerivativePair& dp) {
    return enumerate(m, t, x, dp, /*sup_outer_over_u=*/false);
}

int counter_response(const GameModel& m, double t, std::span<const double> x,
                     const DerivativePair& dp, int u_index) {
    const int nv = m.action_v.size();
    if (u_index < 0 || u_index >= m.action_u.size()) {
        throw DomainError("counter_response: u index outside the grid");
    }
    int best = 0;
    double best_val = 0.0;
    bool have = false;
    for (int vi = 0; vi < nv; ++vi) {
        const double L = running_cost_operator(m, t, x, u_index, vi, dp);
        if (!have || L < best_val) {
            best_val = L;
            best = vi;
            have = true;
        }
    }
    return best;
}

double isaacs_gap(const GameModel& m, std::span<const HamiltonianSample> cloud) {
    if (cloud.empty()) throw DomainError("isaacs_gap: empty sample cloud");
    double gap = 0.0;
    for (const auto& s : cloud) {
        const double lo = lower_hamiltonian(m, s.t, s.x, s.dp).value;
        const double hi = upper_hamiltonian(m, s.t, s.x, s.dp).value;
        gap = std::max(gap, hi - lo);
    }
    return gap;
}

}  // namespace gamelab
