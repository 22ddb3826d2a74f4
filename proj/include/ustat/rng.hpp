#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace ustat {

// Philox4x32-10 counter-based generator. The key is the 64-bit seed, the upper
// half of the counter is the stream id, so (seed, stream_id) pairs give
// independent sequences without any shared state between tasks.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Standard normal via Box-Muller (cached pair).
    double normal();
    // Uniform integer in [0, bound), bound > 0, unbiased.
    std::uint64_t below(std::uint64_t bound);

    // A child stream keyed by this stream's seed and a mixed id.
    RngStream split(std::uint64_t child) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// SplitMix64 finalizer; used to derive stream ids from structured keys.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

}  // namespace ustat
