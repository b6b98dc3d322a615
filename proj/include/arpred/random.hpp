#pragma once

// Counter-based random streams.
//
// Every replicate of a Monte-Carlo run draws from its own stream, addressed by
// (master_seed, stream_index, substream). The generator is Philox4x32-10
// (Salmon et al., SC 2011): the master seed is the key, and the counter packs
// the stream index, the substream tag, and a block position. A stream is
// therefore a pure function of its address and never depends on how
// replicates are scheduled across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace arpred {

/// Address of a replicate stream.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
};

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

[[nodiscard]] constexpr Counter round(const Counter& ctr, const Key& key) noexcept {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

/// Philox4x32 with 10 rounds.
[[nodiscard]] constexpr Counter philox4x32_10(Counter ctr, Key key) noexcept {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        ctr = round(ctr, key);
    }
    return ctr;
}

}  // namespace philox

/// Standard-normal variates from one counter-addressed stream.
///
/// Each Philox block yields two 53-bit uniforms, mapped to two normals with the
/// Box-Muller transform. Draw order within the stream is fixed, so the i-th
/// normal of a given address is reproducible.
class NormalStream {
public:
    explicit NormalStream(SeedSpec seed, std::uint32_t substream = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed.master_seed),
               static_cast<std::uint32_t>(seed.master_seed >> 32)},
          stream_lo_(static_cast<std::uint32_t>(seed.stream_index)),
          stream_hi_(static_cast<std::uint32_t>(seed.stream_index >> 32)),
          substream_(substream) {}

    [[nodiscard]] double next() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const philox::Counter out =
            philox::philox4x32_10({block_, substream_, stream_lo_, stream_hi_}, key_);
        ++block_;
        // (0,1] for the radius so log never sees zero; [0,1) for the angle.
        const double u1 = (to_u53(out[0], out[1]) + 1.0) * kTwoPowMinus53;
        const double u2 = to_u53(out[2], out[3]) * kTwoPowMinus53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double operator()() noexcept { return next(); }

private:
    static constexpr double kTwoPowMinus53 = 1.0 / 9007199254740992.0;

    static double to_u53(std::uint32_t hi, std::uint32_t lo) noexcept {
        const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
        return static_cast<double>(bits >> 11);
    }

    philox::Key key_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
    std::uint32_t substream_;
    std::uint32_t block_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 finalizer; derives independent master seeds for nested runs.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace arpred
