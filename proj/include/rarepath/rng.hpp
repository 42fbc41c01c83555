#pragma once

#include <cstdint>

namespace rarepath {

/// Purpose tags for derived random streams. A stream is identified by
/// (seed, index, tag); distinct tags never share a stream.
enum class StreamTag : std::uint64_t {
    Scenario = 1,
    Cohort = 2,
    Training = 3,
    Evaluation = 4,
    Tree = 5,
    Synthetic = 6,
};

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based splittable generator.
///
/// The n-th output of a stream with key k is mix64(k + (n+1) * gamma), with
/// gamma = 0x9E3779B97F4A7C15 (SplitMix64). Child streams get keys hashed
/// from (parent seed, index, tag), so a stream's output depends only on its
/// coordinates and never on how many other streams were consumed before it.
/// All distribution sampling below is implemented here rather than through
/// <random> distributions, whose algorithms are implementation-defined.
class Rng {
public:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    explicit Rng(std::uint64_t key) noexcept : state_{key} {}

    /// Stream keyed by (seed, index, tag).
    static Rng derive(std::uint64_t seed, std::uint64_t index, StreamTag tag) noexcept {
        return Rng{derive_key(seed, index, tag)};
    }

    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t index,
                                    StreamTag tag) noexcept {
        std::uint64_t k = mix64(seed + kGamma);
        k = mix64(k ^ (static_cast<std::uint64_t>(tag) * 0xD1B54A32D192ED03ULL));
        return mix64(k + (index + 1) * kGamma);
    }

    std::uint64_t next_u64() noexcept {
        state_ += kGamma;
        return mix64(state_);
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1].
    double uniform_pos() noexcept { return 1.0 - uniform(); }

    /// Uniform integer in [0, n). Lemire's multiply-shift; bias < n / 2^64.
    std::uint64_t below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Standard normal via Box-Muller (one draw consumes two outputs).
    double normal() noexcept;

    /// Exponential with the given rate (mean 1 / rate).
    double exponential(double rate) noexcept;

private:
    std::uint64_t state_;
};

}  // namespace rarepath
