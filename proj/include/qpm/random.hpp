#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace qpm {

// SplitMix64 (Steele, Lea, Flood 2014). Advances `state` and returns the mixed output.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept
{
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of realization `index` under `master`.
///
/// Counter-keyed: the master seed is mixed once, then combined with the index and
/// mixed again, so any realization can be regenerated without replaying earlier ones.
constexpr std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    std::uint64_t key = master;
    std::uint64_t state = splitmix64(key) ^ (index * 0xD1B54A32D192ED03ULL);
    return splitmix64(state);
}

/// Standard normal variates from a 64-bit Mersenne Twister.
///
/// std::normal_distribution is implementation defined, so the transform is fixed here:
/// uniforms take the top 53 bits of each engine output mapped to (0, 1), and pairs are
/// turned into normals by the Box-Muller transform (cosine branch first, sine branch cached).
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double uniform() noexcept
    {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double operator()() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double const u1 = uniform();
        double const u2 = uniform();
        double const radius = std::sqrt(-2.0 * std::log(u1));
        double const angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace qpm
