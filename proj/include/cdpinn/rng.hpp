#pragma once

#include <cstdint>
#include <random>

namespace cdpinn {

/// Reproducible random stream: std::mt19937_64 (whose output sequence is
/// fixed by the C++ standard) seeded with splitmix64(seed ^ stream tag).
/// Reals are produced from the top 53 bits by explicit arithmetic, so runs
/// are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(mix(seed ^ (stream * 0x9E3779B97F4A7C15ULL)))
    {
    }

    /// Uniform on the open interval (0,1).
    double open01() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53); }

    std::uint64_t next() { return engine_(); }

    static std::uint64_t mix(std::uint64_t z)
    {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

// Stream tags keep draws for different purposes independent under one seed.
inline constexpr std::uint64_t kStreamInit = 1;
inline constexpr std::uint64_t kStreamBulk = 2;
inline constexpr std::uint64_t kStreamImportance = 3;

} // namespace cdpinn
