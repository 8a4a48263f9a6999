#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace urnflow {

// Value plus a certified absolute error bound: the true quantity lies in
// [value - error, value + error]. Bounds come from analysis, not estimates.
struct CertifiedValue {
    double value = 0.0;
    double error = 0.0;
};

enum class Family { PowerLaw, LogPowerLaw, ThetaOneLog, FiniteVector };

// Immutable weight sequence p_1 >= p_2 >= ... > 0 summing to 1.
//
// Infinite families are regularly varying: alpha(x) = max{i: p_i >= 1/x}
// behaves like x^theta * L(x) with L slowly varying.
//   PowerLaw(theta):             p_i = c * i^(-1/theta),          theta in (0,1)
//   LogPowerLaw(theta, gamma):   p_i = c * i^(-1/theta) * log(i+e)^(-gamma/theta)
//   ThetaOneLog(gamma):          p_i = c * i^(-1) * log(i+e)^(-gamma), gamma > 1
//   FiniteVector(probs):         explicit list, for brute-force oracles
//
// All tail quantities carry certified error bounds from midpoint-rule
// bracketing: for g positive, decreasing, convex with decreasing g'',
//   0 <= integral_{I+1/2}^inf g - sum_{i>I} g(i) <= (g''(I+1/2) + |g'(I+1/2)|)/24.
class WeightModel {
public:
    static WeightModel power_law(double theta);
    static WeightModel log_power_law(double theta, double gamma);
    static WeightModel theta_one_log(double gamma);
    static WeightModel finite(std::vector<double> probs);

    Family family() const;
    bool is_finite() const;
    bool has_theta() const;      // false only for FiniteVector
    double theta() const;        // regular-variation index, in (0,1]
    double gamma() const;        // log-factor exponent, 0 when absent
    double normalizer() const;   // c
    // Number of urns; UINT64_MAX for the infinite families.
    std::uint64_t support_size() const;

    // p_i for i >= 1 (0 beyond a finite support).
    double prob(std::uint64_t i) const;
    // sum_{j<=i} p_j by direct compensated summation; O(i).
    double head_mass(std::uint64_t i) const;
    // sum_{j>i} p_j, certified error <= 1e-13.
    CertifiedValue tail_mass(std::uint64_t i) const;
    // sum_{j>i} p_j^m for 1 <= m <= max_tail_power().
    CertifiedValue tail_power_sum(int m, std::uint64_t i) const;
    static int max_tail_power();

    // max{i: p_i >= 1/x}, 0 when p_1 < 1/x. Exact (binary search on the
    // monotone sequence).
    std::uint64_t alpha(double x) const;
    // L(x) = alpha(x) / x^theta. Infinite families only.
    double slowly_varying(double x) const;
    // L*(x) for theta = 1: the exponentially weighted transform
    // integral_0^inf L(x/s) e^{-s} s^{-1} ds. For a step function L this
    // integral collapses exactly to (1/x) * sum_i (1 - e^{-x p_i}), which is
    // how it is evaluated (certified series; error far below 1e-8 relative).
    double lstar(double x) const;
    // Variance-scale normalizer: alpha(n) for theta < 1, n * L*(n) at theta = 1.
    double beta(double n) const;
    // delta_n = L(n)/L*(n) (theta = 1 only); governs convergence rates.
    double delta_n(double n) const;

    std::string describe() const;

    struct Impl;
    const Impl& impl() const { return *impl_; }

private:
    explicit WeightModel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

}  // namespace urnflow
