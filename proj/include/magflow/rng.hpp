#pragma once

#include <cstdint>

namespace magflow {

// Counter-based random stream: every draw is a stateless hash of
// (seed, stream, counter), so sample i of stream s is the same number
// no matter which worker produces it or in what order.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix(seed ^ 0x9e3779b97f4a7c15ull) ^ mix(stream + 0x6a09e667f3bcc909ull)) {}

    std::uint64_t next_u64() { return mix(key_ ^ mix(counter_++ + 0xbf58476d1ce4e5b9ull)); }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

private:
    static std::uint64_t mix(std::uint64_t x) {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Disjoint stream ids for the independent Monte Carlo pipelines.
namespace rng_stream {
inline constexpr std::uint64_t kThetaSamples = 1ull << 32;
inline constexpr std::uint64_t kPairSamples = 2ull << 32;
inline constexpr std::uint64_t kPairResample = 3ull << 32;
inline constexpr std::uint64_t kTest = 4ull << 32;
} // namespace rng_stream

} // namespace magflow
