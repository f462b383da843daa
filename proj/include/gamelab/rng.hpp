#ifndef GAMELAB_RNG_HPP
#define GAMELAB_RNG_HPP

#include <array>
#include <cstdint>

namespace gamelab {

// Philox 4x32-10 counter-based generator (Salmon et al., SC 2011).
//
// Every draw is a pure function of (key, counter), so simulations can hand
// out statistically independent streams indexed by (path, step, slot)
// without any sequential state. This is what makes Monte Carlo results
// bit-identical regardless of evaluation order or thread count.
namespace philox {

inline constexpr std::uint32_t kW32A = 0x9E3779B9u;
inline constexpr std::uint32_t kW32B = 0xBB67AE85u;
inline constexpr std::uint32_t kM4x32A = 0xD2511F53u;
inline constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

inline void round_once(std::array<std::uint32_t, 4>& ctr,
                       const std::array<std::uint32_t, 2>& key) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM4x32A) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM4x32B) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
        round_once(ctr, key);
        key[0] += kW32A;
        key[1] += kW32B;
    }
    return ctr;
}

}  // namespace philox

// Stream tags keep unrelated consumers of the same master seed apart.
enum class RngStream : std::uint32_t {
    noise = 0,         // Brownian increments
    u_source = 1,      // randomized u-player control sources
    v_source = 2,      // randomized v-player control sources
    audit = 3,         // assumption-audit sample points
    generic = 4,
};

// One 64-bit word keyed by (seed, stream, path, step, slot).
inline std::uint64_t counter_rng_u64(std::uint64_t seed, RngStream stream,
                                     std::uint64_t path, std::uint64_t step,
                                     std::uint32_t slot) {
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed),
        static_cast<std::uint32_t>(seed >> 32)};
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(step),
        slot ^ (static_cast<std::uint32_t>(stream) << 24),
        static_cast<std::uint32_t>(path),
        static_cast<std::uint32_t>(path >> 32) ^
            (static_cast<std::uint32_t>(step >> 32) << 8)};
    const auto out = philox::block(ctr, key);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// Uniform double in the open interval (0, 1); never returns 0 or 1, so it
// is safe to feed through the normal inverse CDF.
inline double counter_rng_uniform(std::uint64_t seed, RngStream stream,
                                  std::uint64_t path, std::uint64_t step,
                                  std::uint32_t slot) {
    const std::uint64_t bits = counter_rng_u64(seed, stream, path, step, slot);
    return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace gamelab

#endif
