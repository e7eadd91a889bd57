#pragma once

#include <cstdint>

namespace haarwalk {

/// Deterministic, platform-independent random streams.
///
/// Streams are derived from a root seed and a stream index by a counter-based
/// split (SplitMix64 over root ^ golden-ratio multiples of the index), so
/// trial k always sees the same stream no matter how many workers run or in
/// which order trials complete. The generator itself is xoshiro256++, fully
/// specified here so outputs are bit-identical across platforms (std::
/// distributions are not).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) { reseed(seed, 0); }
    RngStream(std::uint64_t root_seed, std::uint64_t stream_index) { reseed(root_seed, stream_index); }

    void reseed(std::uint64_t root_seed, std::uint64_t stream_index) {
        std::uint64_t x = root_seed ^ (0x9E3779B97F4A7C15ULL * (stream_index + 1));
        for (auto& word : state_) word = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Multiply-high mapping; bias < 2^-64 per draw.
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<__uint128_t>(next_u64()) * static_cast<__uint128_t>(n)) >> 64);
    }

    /// One value derived from (seed, counter) without constructing a stream.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) {
        std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL * (counter + 1));
        return splitmix64(x);
    }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_[4];
};

}  // namespace haarwalk
