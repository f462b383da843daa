#ifndef GAMELAB_NUMERICS_HPP
#define GAMELAB_NUMERICS_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gamelab/errors.hpp"

namespace gamelab {

// P(N(0,1) >= z), accurate to well over 12 significant digits across the
// whole range (delegates to erfc, which does the hard work in the tails).
inline double normal_upper_tail(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// Inverse of the standard normal CDF (Wichura's AS 241, PPND16 variant),
// good to roughly 1e-15 relative error for p in (0,1).
double normal_inverse_cdf(double p);

// Sum of a span with pairwise recursion. The summation tree depends only on
// the length, never on how the values were produced, so totals are
// bit-identical across thread counts.
double pairwise_sum(std::span<const double> x);

struct MeanStderr {
    double mean = 0.0;
    double stderr_of_mean = 0.0;
    std::size_t n = 0;
};

// Mean and standard error (sample std / sqrt(n)) via pairwise sums.
MeanStderr mean_and_stderr(std::span<const double> x);

// n equally spaced points from lo to hi inclusive; n == 1 requires lo == hi.
std::vector<double> linspace(double lo, double hi, int n);

}  // namespace gamelab

#endif
