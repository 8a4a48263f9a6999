#include "urnflow/occupancy.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace urnflow {

namespace {

constexpr std::uint64_t kFib = 0x9E3779B97F4A7C15ull;

std::size_t ceil_pow2(std::size_t x) {
    std::size_t c = 16;
    while (c < x) c <<= 1;
    return c;
}

const char* mode_str(SimMode m) {
    switch (m) {
        case SimMode::Discrete: return "discrete";
        case SimMode::Poissonized: return "poissonized";
        case SimMode::Coupled: return "coupled";
    }
    return "?";
}

}  // namespace

OccupancyState::OccupancyState(std::size_t expected_occupied,
                               std::size_t occupied_cap)
    : cap_(occupied_cap) {
    // size so the expected load stays under the 0.7 growth trigger
    std::size_t cap = ceil_pow2(expected_occupied * 2);
    keys_.assign(cap, 0);
    counts_.assign(cap, 0);
    mask_ = cap - 1;
}

std::size_t OccupancyState::slot_of(std::uint64_t urn) const {
    std::size_t i = static_cast<std::size_t>((urn * kFib) >> 1) & mask_;
    while (keys_[i] != 0 && keys_[i] != urn) i = (i + 1) & mask_;
    return i;
}

void OccupancyState::grow() {
    if (keys_.size() >= cap_)
        throw std::runtime_error("OccupancyState: occupied-urn cap exceeded");
    std::vector<std::uint64_t> old_keys = std::move(keys_);
    std::vector<std::uint32_t> old_counts = std::move(counts_);
    std::size_t cap = old_keys.size() * 2;
    keys_.assign(cap, 0);
    counts_.assign(cap, 0);
    mask_ = cap - 1;
    for (std::size_t j = 0; j < old_keys.size(); ++j) {
        if (old_keys[j] == 0) continue;
        std::size_t i = slot_of(old_keys[j]);
        keys_[i] = old_keys[j];
        counts_[i] = old_counts[j];
    }
}

void OccupancyState::insert_ball(std::uint64_t urn, double p) {
    if (urn == 0) throw std::invalid_argument("insert_ball: urn index 0 is reserved");
    std::size_t i = slot_of(urn);
    if (keys_[i] == 0) {
        if ((used_ + 1) * 10 > keys_.size() * 7) {
            grow();
            i = slot_of(urn);
        }
        keys_[i] = urn;
        ++used_;
    }
    std::uint32_t c = counts_[i];
    counts_[i] = c + 1;
    ++total_balls_;
    if (c == 0) {
        ++occupied_;
        // Neumaier-compensated accumulation of the occupied probability mass
        double t = mass_sum_ + p;
        if (std::abs(mass_sum_) >= std::abs(p))
            mass_comp_ += (mass_sum_ - t) + p;
        else
            mass_comp_ += (p - t) + mass_sum_;
        mass_sum_ = t;
    } else {
        --spectrum_[std::min<std::uint32_t>(c, kKMax + 1) - 1];
    }
    ++spectrum_[std::min<std::uint32_t>(c + 1, kKMax + 1) - 1];
    if ((c + 1) % 2 == 1)
        ++parity_;
    else
        --parity_;
}

std::uint64_t OccupancyState::rstar(int k) const {
    if (k < 1 || k > kKMax) throw std::invalid_argument("rstar: k out of range");
    std::uint64_t s = spectrum_[kKMax];  // overflow bucket has count > kKMax
    for (int j = k; j <= kKMax; ++j) s += spectrum_[j - 1];
    return s;
}

std::uint64_t OccupancyState::rk(int k) const {
    if (k < 1 || k > kKMax + 1) throw std::invalid_argument("rk: k out of range");
    return spectrum_[k - 1];
}

double OccupancyState::occupied_mass() const {
    double v = mass_sum_ + mass_comp_;
    return std::min(1.0, std::max(0.0, v));
}

std::uint64_t OccupancyState::count_of(std::uint64_t urn) const {
    if (urn == 0) return 0;
    std::size_t i = slot_of(urn);
    return keys_[i] == urn ? counts_[i] : 0;
}

double OccupancyState::missing_mass(MassMode mode, double clock) const {
    (void)mode;  // the clock's meaning differs, the formula does not
    return clock * (1.0 - occupied_mass());
}

void write_path_csv(std::ostream& os, const std::vector<PathSample>& paths,
                    bool header) {
    char buf[512];
    if (header) {
        os << "mode,stream_id,t,balls";
        for (int k = 1; k <= kOccupancyKMax; ++k) os << ",Rstar" << k;
        os << ",U,M\n";
    }
    for (const PathSample& ps : paths) {
        for (std::size_t j = 0; j < ps.grid.size(); ++j) {
            int len = std::snprintf(buf, sizeof buf, "%s,%llu,%.17g,%llu",
                                    mode_str(ps.mode),
                                    static_cast<unsigned long long>(ps.stream_id),
                                    ps.grid[j],
                                    static_cast<unsigned long long>(ps.balls[j]));
            os.write(buf, len);
            for (int k = 0; k < kOccupancyKMax; ++k) {
                len = std::snprintf(buf, sizeof buf, ",%.17g", ps.rstar[j][k]);
                os.write(buf, len);
            }
            len = std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", ps.u[j], ps.m[j]);
            os.write(buf, len);
        }
    }
}

}  // namespace urnflow
