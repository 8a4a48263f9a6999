#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace urnflow {

inline constexpr int kOccupancyKMax = 8;

enum class SimMode { Discrete, Poissonized, Coupled };

// Clock semantics for the missing-mass statistic: ball count n (discrete),
// real horizon s (poissonized), or realized arrival count Pi(s) (tilde).
enum class MassMode { Discrete, Poissonized, Tilde };

// Incremental occupancy statistics, O(1) per ball. Tracks the count spectrum
// R_k for k = 1..kKMax plus an overflow bucket, the odd-count urn total, and
// the compensated sum of p_i over occupied urns. The missing mass over the
// infinitely many empty urns is exact via the complement identity
// sum_{empty} p_i = 1 - sum_{occupied} p_i.
class OccupancyState {
public:
    static constexpr int kKMax = kOccupancyKMax;

    explicit OccupancyState(std::size_t expected_occupied = 64,
                            std::size_t occupied_cap = std::size_t(1) << 28);

    void insert_ball(std::uint64_t urn, double p);

    std::uint64_t total_balls() const { return total_balls_; }
    std::uint64_t occupied() const { return occupied_; }
    // R*_k = #urns with count >= k, 1 <= k <= kKMax
    std::uint64_t rstar(int k) const;
    // R_k = #urns with count exactly k (1 <= k <= kKMax); k = kKMax+1 names
    // the overflow bucket (> kKMax balls)
    std::uint64_t rk(int k) const;
    std::uint64_t parity_count() const { return parity_; }
    double occupied_mass() const;
    std::uint64_t count_of(std::uint64_t urn) const;

    // clock * (1 - occupied_mass); the mode names the clock's meaning
    double missing_mass(MassMode mode, double clock) const;

private:
    void grow();
    std::size_t slot_of(std::uint64_t urn) const;

    std::vector<std::uint64_t> keys_;   // 0 = empty slot (urn indices are >= 1)
    std::vector<std::uint32_t> counts_;
    std::size_t mask_ = 0;
    std::size_t used_ = 0;
    std::size_t cap_ = 0;
    std::uint64_t total_balls_ = 0;
    std::uint64_t occupied_ = 0;
    std::uint64_t parity_ = 0;
    std::uint64_t spectrum_[kKMax + 1] = {};  // [k-1] = R_k; [kKMax] = overflow
    double mass_sum_ = 0.0;
    double mass_comp_ = 0.0;
};

// Snapshots of one simulated path on a time grid. Coupled runs produce two
// samples (Discrete and Poissonized tags) fed by one shared urn sequence.
struct PathSample {
    SimMode mode = SimMode::Discrete;
    std::uint64_t stream_id = 0;
    double n = 0.0;  // scale: ball budget (discrete) or horizon multiplier
    std::vector<double> grid;
    std::vector<std::uint64_t> balls;  // consumed arrivals at each snapshot
    std::vector<std::array<double, kOccupancyKMax>> rstar;
    std::vector<double> u;
    std::vector<double> m;       // missing mass under the mode's own clock
    std::vector<double> mtilde;  // arrival-count clock (equals m for discrete)
};

// Columns: mode,stream_id,t,balls,Rstar1..Rstar8,U,M
void write_path_csv(std::ostream& os, const std::vector<PathSample>& paths,
                    bool header = true);

}  // namespace urnflow
