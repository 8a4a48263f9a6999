#pragma once

#include <cmath>
#include <cstddef>
#include <functional>

namespace urnflow {

// Compensated accumulator (Neumaier's variant of Kahan summation).
// Error after N adds is O(eps) + N * O(eps^2), independent of cancellation pattern.
class NeumaierSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }
    void reset() { sum_ = 0.0; comp_ = 0.0; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;   // conservative estimate, not a hard bound
    int evaluations = 0;
    bool converged = false;
};

// Adaptive Gauss-Kronrod 7-15 on [a,b]. Bisects panels until the local
// GK7-vs-GK15 discrepancy meets tol_abs + tol_rel*|total|.
QuadResult integrate_gk(const std::function<double(double)>& f, double a, double b,
                        double tol_abs = 1e-14, double tol_rel = 1e-12,
                        int max_panels = 4000);

// Stable x^e - y^e for x >= y > 0 (avoids cancellation when x ~ y).
inline double pow_diff(double x, double y, double e) {
    if (y <= 0.0) return std::pow(x, e);
    // x^e - y^e = y^e * expm1(e*log(x/y))
    return std::pow(y, e) * std::expm1(e * (std::log(x) - std::log(y)));
}

// Skewness and excess kurtosis of a sample.
struct MomentStats {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};
MomentStats sample_moments(const double* data, std::size_t n);

}  // namespace urnflow
