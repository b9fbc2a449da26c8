#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace irrlab {

inline constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for stream `index` derived from a master seed: seed ^ splitmix(index).
inline constexpr std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index)
{
    return master ^ splitmix64(index);
}

/// Philox4x32-10 counter-based bijection (Salmon et al., SC'11).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter apply(Counter ctr, Key key)
    {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += 0x9E3779B9U;
                key[1] += 0xBB67AE85U;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53U} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57U} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

/// Random-access stream of uniforms/normals keyed by a 64-bit seed.
/// Draw `index` of lane `lane` is a pure function of (seed, lane, index),
/// so results never depend on scheduling.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed, std::uint32_t lane = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, lane_(lane)
    {
    }

    /// Two 64-bit words for position `index`.
    std::array<std::uint64_t, 2> bits(std::uint64_t index) const
    {
        const auto out = Philox4x32::apply(
            {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), lane_, 0U}, key_);
        return {(std::uint64_t{out[0]} << 32) | out[1], (std::uint64_t{out[2]} << 32) | out[3]};
    }

    /// Uniform on the open interval (0,1).
    static double to_open_unit(std::uint64_t w) { return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53; }

    std::array<double, 2> uniform_pair(std::uint64_t index) const
    {
        const auto b = bits(index);
        return {to_open_unit(b[0]), to_open_unit(b[1])};
    }

    /// Two independent standard normals (Box-Muller).
    std::array<double, 2> normal_pair(std::uint64_t index) const
    {
        const auto [u1, u2] = uniform_pair(index);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

private:
    Philox4x32::Key key_;
    std::uint32_t lane_;
};

}  // namespace irrlab
