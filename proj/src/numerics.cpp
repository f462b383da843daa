#include "gamelab/numerics.hpp"

#include <algorithm>

namespace gamelab {

// Wichura (1988), algorithm AS 241, routine PPND16.
double normal_inverse_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("normal_inverse_cdf: p must lie in (0,1)");
    }
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                  3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -val : val;
}

namespace {

double pairwise_sum_impl(const double* x, std::size_t n) {
    if (n <= 32) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum_impl(x, half) + pairwise_sum_impl(x + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> x) {
    return pairwise_sum_impl(x.data(), x.size());
}

MeanStderr mean_and_stderr(std::span<const double> x) {
    MeanStderr out;
    out.n = x.size();
    if (out.n == 0) return out;
    out.mean = pairwise_sum(x) / static_cast<double>(out.n);
    if (out.n < 2) return out;
    std::vector<double> sq(out.n);
    for (std::size_t i = 0; i < out.n; ++i) {
        const double d = x[i] - out.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(out.n - 1);
    out.stderr_of_mean = std::sqrt(var / static_cast<double>(out.n));
    return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1) throw DomainError("linspace: need at least one point");
    if (n == 1) {
        if (lo != hi) throw DomainError("linspace: single point requires lo == hi");
        return {lo};
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + step * i;
    out.back() = hi;
    return out;
}

}  // namespace gamelab
