#ifndef GAMELAB_HAMILTONIAN_HPP
#define GAMELAB_HAMILTONIAN_HPP

#include <span>
#include <vector>

#include "gamelab/model.hpp"

namespace gamelab {

// First and second spatial derivatives handed to the running operator:
// gradient p (d entries) and symmetric matrix M (d x d, row-major).
struct DerivativePair {
    std::vector<double> p;
    std::vector<double> M;

    static DerivativePair scalar(double p1, double m11) { return {{p1}, {m11}}; }
    static DerivativePair zero(int d) {
        return {std::vector<double>(static_cast<std::size_t>(d), 0.0),
                std::vector<double>(static_cast<std::size_t>(d * d), 0.0)};
    }
    int dim() const { return static_cast<int>(p.size()); }
    // Throws DomainError if M is not square/symmetric to working precision.
    void validate(int d) const;
};

struct HamiltonianResult {
    double value = 0.0;
    int best_u = 0;                 // index into the U grid
    int worst_v_given_best_u = 0;   // index into the V grid
};

// L(t,x,u,v,p,M) = b . p + 1/2 Tr(sigma sigma^T M).
double running_cost_operator(const GameModel& m, double t,
                             std::span<const double> x, int u_index, int v_index,
                             const DerivativePair& dp);

// sup over U of inf over V of L, by exhaustive enumeration over the finite
// grids. Ties break to the lowest grid index, which keeps every synthesized
// strategy reproducible.
HamiltonianResult lower_hamiltonian(const GameModel& m, double t,
                                    std::span<const double> x,
                                    const DerivativePair& dp);

// inf over V of sup over U of L (the mirrored order).
HamiltonianResult upper_hamiltonian(const GameModel& m, double t,
                                    std::span<const double> x,
                                    const DerivativePair& dp);

// argmin over V of L(t,x,u,.,p,M) for a fixed u; lowest-index tie-break.
int counter_response(const GameModel& m, double t, std::span<const double> x,
                     const DerivativePair& dp, int u_index);

struct HamiltonianSample {
    double t;
    std::vector<double> x;
    DerivativePair dp;
};

// max over the sample cloud of (upper - lower); zero when the two
// optimization orders agree everywhere on the cloud.
double isaacs_gap(const GameModel& m, std::span<const HamiltonianSample> cloud);

}  // namespace gamelab

#endif
