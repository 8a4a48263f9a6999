#pragma once

#include <cstdint>
#include <stdexcept>

#include "urnflow/weights.hpp"

namespace urnflow {

// Certified evaluation of an infinite series: |true - value| <= tail_bound.
struct SeriesResult {
    double value = 0.0;
    double tail_bound = 0.0;
    long long terms_used = 0;
};

// Thrown when a series cannot be certified to the requested tolerance.
struct ToleranceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace series {

// Head/tail split index for arguments of scale a: the head sum_{i<=I} is
// computed term by term and the tail is expanded in certified power sums.
// I = max(64, 4*alpha(2a)) guarantees a * p_{I+1} <= 1/4, so the alternating
// tail expansions below have strictly decreasing terms (Leibniz remainders).
std::uint64_t head_cutoff(const WeightModel& w, double a);

// S0(a) = sum_i (1 - e^{-a p_i}).
SeriesResult s0(const WeightModel& w, double a);
// Sm(a) = sum_i p_i^m e^{-a p_i}, m >= 1.
SeriesResult sm(const WeightModel& w, int m, double a);

// Binomial (fixed ball count) analogues.
// sum_i (1 - (1-p_i)^n).
SeriesResult s0_binomial(const WeightModel& w, std::uint64_t n);
// sum_i p_i^m (1-p_i)^n.
SeriesResult sm_binomial(const WeightModel& w, int m, std::uint64_t n);
// sum_i (1 - (1-2 p_i)^n) / 2  (odd-count probability summed over urns).
SeriesResult odd_binomial(const WeightModel& w, std::uint64_t n);

// Tail pieces at a caller-fixed split index I, for fused covariance series
// that difference two tails at a common I. Requires a * p_{I+1} <= 1/4
// (take I = head_cutoff at the largest argument involved).
SeriesResult tail_s0(const WeightModel& w, double a, std::uint64_t cut);
SeriesResult tail_sm(const WeightModel& w, int m, double a, std::uint64_t cut);

// (1 - q)^n for q <= 1, accurate for q near 0 and valid for q > 1 (signed).
double pow1m(double q, double n);

}  // namespace series
}  // namespace urnflow
