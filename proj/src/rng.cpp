#include "urnflow/rng.hpp"

#include <cmath>

namespace urnflow {
namespace {

constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

}  // namespace

std::array<std::uint64_t, 4> Philox4x64::block(const std::array<std::uint64_t, 4>& counter,
                                               std::uint64_t key0, std::uint64_t key1) {
    std::uint64_t x0 = counter[0], x1 = counter[1], x2 = counter[2], x3 = counter[3];
    std::uint64_t k0 = key0, k1 = key1;
    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMult0, x0, hi0, lo0);
        mulhilo(kMult1, x2, hi1, lo1);
        std::uint64_t y0 = hi1 ^ x1 ^ k0;
        std::uint64_t y1 = lo1;
        std::uint64_t y2 = hi0 ^ x3 ^ k1;
        std::uint64_t y3 = lo0;
        x0 = y0; x1 = y1; x2 = y2; x3 = y3;
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return {x0, x1, x2, x3};
}

void RngStream::refill() {
    buffer_ = Philox4x64::block({block_index_, 0, 0, 0}, key0_, key1_);
    ++block_index_;
    buffer_pos_ = 0;
}

std::uint64_t RngStream::next_u64() {
    if (buffer_pos_ >= 4) refill();
    return buffer_[buffer_pos_++];
}

double RngStream::exponential() { return -std::log(uniform_oo()); }

double RngStream::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = uniform_oo();
    double u2 = uniform_oo();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_normal_ = true;
    return r * std::cos(a);
}

std::uint64_t RngStream::poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 10.0) {
        // Sequential inversion: walk the CDF with one uniform.
        double p = std::exp(-mean);
        double cdf = p;
        double u = uniform01();
        std::uint64_t k = 0;
        while (u > cdf) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
            if (k > 2000) break;  // p underflowed; mass exhausted
        }
        return k;
    }
    // PTRS: transformed rejection with squeeze (Hormann 1993).
    const double mu = mean;
    const double slam = std::sqrt(mu);
    const double loglam = std::log(mu);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        double u = uniform_oo() - 0.5;
        double v = uniform_oo();
        double us = 0.5 - std::abs(u);
        double k = std::floor((2.0 * a / us + b) * u + mu + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -mu + k * loglam - std::lgamma(k + 1.0))
            return static_cast<std::uint64_t>(k);
    }
}

}  // namespace urnflow
