#pragma once

#include <array>
#include <cstdint>

namespace urnflow {

// Philox4x64-10 counter-based block cipher. A block of four 64-bit outputs is a
// pure function of (key, counter), so any (seed, stream, draw index) is
// reproducible across platforms and thread placements.
struct Philox4x64 {
    static std::array<std::uint64_t, 4> block(const std::array<std::uint64_t, 4>& counter,
                                              std::uint64_t key0, std::uint64_t key1);
};

// One logical stream of randomness: key = (seed, stream_id), counter = block index.
// All variate transforms are hand-rolled so outputs are bit-stable everywhere.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key0_(seed), key1_(stream_id) {}

    std::uint64_t next_u64();

    // Uniform on [0,1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    // Uniform on (0,1), never returns an endpoint (safe under log()).
    double uniform_oo() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }
    double exponential();
    double normal();  // Box-Muller, pairs cached

    // Poisson variate: sequential inversion for mean < 10, transformed
    // rejection with squeeze (PTRS) above.
    std::uint64_t poisson(double mean);

    std::uint64_t seed() const { return key0_; }
    std::uint64_t stream_id() const { return key1_; }
    std::uint64_t blocks_used() const { return block_index_; }

private:
    void refill();

    std::uint64_t key0_, key1_;
    std::uint64_t block_index_ = 0;
    std::array<std::uint64_t, 4> buffer_{};
    int buffer_pos_ = 4;  // empty
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace urnflow
