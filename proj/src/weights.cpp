#include "urnflow/weights.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "urnflow/numerics.hpp"
#include "urnflow/series.hpp"

namespace urnflow {
namespace {

constexpr double kE = 2.718281828459045235360287471353;
constexpr std::uint64_t kTableM1 = 1ull << 17;  // prefix length for m = 1
constexpr std::uint64_t kTable = 1ull << 14;    // prefix length for m >= 2
constexpr int kMaxPower = 64;
constexpr std::uint64_t kNormHead = 1000000;    // head terms for the normalizer

// Shape of p(x)^m as a smooth function of real x >= 1:
//   g(x) = scale * x^(-A) * u(x)^(-B),  u(x) = log(x + e).
// g is positive, decreasing, convex with decreasing g'' on x >= 1, which is
// exactly what the midpoint tail bracket requires.
struct PowShape {
    double scale;
    double A;
    double B;

    double g(double x) const {
        double lg = std::log(scale) - A * std::log(x);
        if (B != 0.0) lg -= B * std::log(std::log(x + kE));
        return std::exp(lg);
    }
    // h = -g'/g = A/x + B / ((x+e) log(x+e))
    double h(double x) const {
        double v = A / x;
        if (B != 0.0) v += B / ((x + kE) * std::log(x + kE));
        return v;
    }
    double neg_gp(double x) const {
        double v = g(x);
        if (v == 0.0) return 0.0;
        return v * h(x);
    }
    double gpp(double x) const {
        double v = g(x);
        if (v == 0.0) return 0.0;
        double u = std::log(x + kE);
        double hx = h(x);
        double extra = A / (x * x);
        if (B != 0.0) {
            double d = (x + kE) * u;
            extra += B * (u + 1.0) / (d * d);
        }
        return v * (hx * hx + extra);
    }
    // integral_X^inf g(x) dx with certified error
    CertifiedValue integral(double X) const {
        if (B == 0.0) {
            // pure power: closed form (A > 1 for every summable family)
            double v = scale * std::pow(X, 1.0 - A) / (A - 1.0);
            return {v, 8e-16 * v};
        }
        if (A > 1.0) {
            // x = X e^v maps to an exponentially damped smooth integrand
            double lX = std::log(X);
            double V = std::min(46.0 / (A - 1.0), 4000.0);
            auto f = [&](double v) {
                double lv = lX + v + std::log1p((kE / X) * std::exp(-v));
                return std::exp(-(A - 1.0) * v - B * std::log(lv));
            };
            QuadResult q = integrate_gk(f, 0.0, V, 1e-300, 5e-14, 4000);
            double front = scale * std::pow(X, 1.0 - A);
            double rem = std::exp(-(A - 1.0) * V - B * std::log(lX + V)) / (A - 1.0);
            double value = front * q.value;
            return {value, front * (q.error + rem) + 8e-16 * value};
        }
        // A == 1 (the theta = 1 family, m = 1): split off the exact part,
        //   integral_X x^{-1} u^{-B} = u(X)^{1-B}/(B-1)
        //                            + e * integral_0^1 (log(X+es)-log s)^{-B}/(X+es) ds
        double uX = std::log(X + kE);
        double t1 = std::pow(uX, 1.0 - B) / (B - 1.0);
        auto f = [&](double s) {
            double l = std::log(X + kE * s) - std::log(s);
            return std::exp(-B * std::log(l)) / (X + kE * s);
        };
        QuadResult q = integrate_gk(f, 0.0, 1.0, 1e-300, 5e-14, 4000);
        double value = scale * (t1 + kE * q.value);
        return {value, scale * kE * q.error + 8e-16 * value};
    }
};

// sum_{i>I} g(i) bracketed by the midpoint rule: the sum lies in
// [Q - slack, Q] with Q = integral_{I+1/2}^inf g and
// slack = (g''(I+1/2) + |g'(I+1/2)|)/24.
CertifiedValue midpoint_tail(const PowShape& s, std::uint64_t I) {
    double X = static_cast<double>(I) + 0.5;
    CertifiedValue q = s.integral(X);
    double slack = (s.gpp(X) + s.neg_gp(X)) / 24.0;
    return {q.value - 0.5 * slack, q.error + 0.5 * slack};
}

double raw_term(Family f, double theta, double gamma, double x) {
    switch (f) {
        case Family::PowerLaw:
            return std::pow(x, -1.0 / theta);
        case Family::LogPowerLaw:
            return std::pow(x, -1.0 / theta) * std::pow(std::log(x + kE), -gamma / theta);
        case Family::ThetaOneLog:
            return std::pow(std::log(x + kE), -gamma) / x;
        default:
            throw std::logic_error("raw_term: finite family has no closed form");
    }
}

}  // namespace

struct WeightModel::Impl {
    Family family = Family::FiniteVector;
    double theta = 0.0;
    double gamma = 0.0;
    double c = 1.0;
    std::vector<double> finite_probs;
    // suffix[m-1][i] = sum_{i<k<=end} p_k^m, built backward so that small
    // tails are summed without cancellation; m = 1 extends further than m >= 2.
    std::vector<std::vector<double>> suffix;
    std::vector<CertifiedValue> table_tail;  // P_m beyond the table end

    double prob(std::uint64_t i) const {
        if (i == 0) throw std::invalid_argument("prob: urn index is 1-based");
        double x = static_cast<double>(i);
        switch (family) {
            case Family::FiniteVector:
                return i <= finite_probs.size() ? finite_probs[i - 1] : 0.0;
            case Family::PowerLaw:
                return c * std::pow(x, -1.0 / theta);
            case Family::LogPowerLaw:
                return c * std::pow(x, -1.0 / theta) *
                       std::pow(std::log(x + kE), -gamma / theta);
            case Family::ThetaOneLog:
                return c * std::pow(std::log(x + kE), -gamma) / x;
        }
        return 0.0;
    }

    PowShape shape(int m) const {
        double s = std::pow(c, m);
        switch (family) {
            case Family::PowerLaw:
                return {s, m / theta, 0.0};
            case Family::LogPowerLaw:
                return {s, m / theta, m * gamma / theta};
            case Family::ThetaOneLog:
                return {s, static_cast<double>(m), m * gamma};
            default:
                throw std::logic_error("shape: finite family has no tail shape");
        }
    }

    void build_infinite() {
        // Normalizer: exact head + certified integral tail of the raw terms.
        NeumaierSum head;
        for (std::uint64_t i = 1; i <= kNormHead; ++i)
            head.add(raw_term(family, theta, gamma, static_cast<double>(i)));
        PowShape raw{1.0, family == Family::ThetaOneLog ? 1.0 : 1.0 / theta,
                     family == Family::PowerLaw ? 0.0
                     : family == Family::LogPowerLaw ? gamma / theta
                                                     : gamma};
        CertifiedValue tail = midpoint_tail(raw, kNormHead);
        c = 1.0 / (head.value() + tail.value);

        // Suffix tables of p_i^m and certified tails beyond the table ends.
        // Backward accumulation keeps each stored value's error relative,
        // which matters when the big alternating coefficients of the series
        // layer multiply tiny deep tails.
        suffix.assign(kMaxPower, {});
        table_tail.assign(kMaxPower, {});
        suffix[0].resize(kTableM1 + 1, 0.0);
        NeumaierSum acc1;
        for (std::uint64_t i = kTableM1; i >= 1; --i) {
            acc1.add(prob(i));
            suffix[0][i - 1] = acc1.value();
        }
        for (int m = 2; m <= kMaxPower; ++m) suffix[m - 1].resize(kTable + 1, 0.0);
        std::vector<NeumaierSum> accs(kMaxPower);
        for (std::uint64_t i = kTable; i >= 1; --i) {
            double p = prob(i);
            double pw = p;
            for (int m = 2; m <= kMaxPower; ++m) {
                pw *= p;
                accs[m - 1].add(pw);
                suffix[m - 1][i - 1] = accs[m - 1].value();
            }
        }
        table_tail[0] = midpoint_tail(shape(1), kTableM1);
        for (int m = 2; m <= kMaxPower; ++m)
            table_tail[m - 1] = midpoint_tail(shape(m), kTable);

        // Mass check: the sequence must sum to 1 within 1e-12.
        double total = suffix[0][0] + table_tail[0].value;
        if (std::abs(total - 1.0) > 1e-12 + table_tail[0].error)
            throw std::logic_error("weight normalization failed the mass check");
    }
};

WeightModel WeightModel::power_law(double theta) {
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("power_law: theta must lie in (0,1)");
    auto impl = std::make_shared<Impl>();
    impl->family = Family::PowerLaw;
    impl->theta = theta;
    impl->build_infinite();
    return WeightModel(std::move(impl));
}

WeightModel WeightModel::log_power_law(double theta, double gamma) {
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("log_power_law: theta must lie in (0,1)");
    if (!(gamma >= 0.0))
        throw std::invalid_argument("log_power_law: gamma must be >= 0");
    auto impl = std::make_shared<Impl>();
    impl->family = Family::LogPowerLaw;
    impl->theta = theta;
    impl->gamma = gamma;
    impl->build_infinite();
    return WeightModel(std::move(impl));
}

WeightModel WeightModel::theta_one_log(double gamma) {
    if (!(gamma > 1.0))
        throw std::invalid_argument("theta_one_log: gamma must exceed 1 for summability");
    auto impl = std::make_shared<Impl>();
    impl->family = Family::ThetaOneLog;
    impl->theta = 1.0;
    impl->gamma = gamma;
    impl->build_infinite();
    return WeightModel(std::move(impl));
}

WeightModel WeightModel::finite(std::vector<double> probs) {
    if (probs.empty())
        throw std::invalid_argument("finite: probability list is empty");
    NeumaierSum sum;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (!(probs[k] > 0.0))
            throw std::invalid_argument("finite: probabilities must be positive");
        if (k > 0 && probs[k] > probs[k - 1])
            throw std::invalid_argument("finite: probabilities must be non-increasing");
        sum.add(probs[k]);
    }
    if (std::abs(sum.value() - 1.0) > 1e-12)
        throw std::invalid_argument("finite: probabilities must sum to 1 within 1e-12");
    auto impl = std::make_shared<Impl>();
    impl->family = Family::FiniteVector;
    impl->finite_probs = std::move(probs);
    return WeightModel(std::move(impl));
}

Family WeightModel::family() const { return impl_->family; }
bool WeightModel::is_finite() const { return impl_->family == Family::FiniteVector; }
bool WeightModel::has_theta() const { return impl_->family != Family::FiniteVector; }

double WeightModel::theta() const {
    if (!has_theta()) throw std::logic_error("theta: finite vectors carry no index");
    return impl_->theta;
}

double WeightModel::gamma() const { return impl_->gamma; }
double WeightModel::normalizer() const { return impl_->c; }

std::uint64_t WeightModel::support_size() const {
    return is_finite() ? impl_->finite_probs.size()
                       : std::numeric_limits<std::uint64_t>::max();
}

double WeightModel::prob(std::uint64_t i) const { return impl_->prob(i); }

double WeightModel::head_mass(std::uint64_t i) const {
    if (i > (1ull << 30))
        throw std::invalid_argument("head_mass: index too large for direct summation");
    std::uint64_t stop = is_finite()
                             ? std::min<std::uint64_t>(i, impl_->finite_probs.size())
                             : i;
    NeumaierSum s;
    for (std::uint64_t k = 1; k <= stop; ++k) s.add(impl_->prob(k));
    return s.value();
}

CertifiedValue WeightModel::tail_mass(std::uint64_t i) const {
    return tail_power_sum(1, i);
}

int WeightModel::max_tail_power() { return kMaxPower; }

CertifiedValue WeightModel::tail_power_sum(int m, std::uint64_t i) const {
    if (m < 1 || m > kMaxPower)
        throw std::invalid_argument("tail_power_sum: power out of range");
    if (is_finite()) {
        NeumaierSum s;
        const auto& probs = impl_->finite_probs;
        for (std::uint64_t k = i + 1; k <= probs.size(); ++k)
            s.add(std::pow(probs[k - 1], m));
        double v = s.value();
        return {v, 1e-15 * v};
    }
    std::uint64_t table_end = (m == 1) ? kTableM1 : kTable;
    if (i <= table_end) {
        double within = impl_->suffix[m - 1][i];
        const CertifiedValue& end_tail = impl_->table_tail[m - 1];
        return {within + end_tail.value, end_tail.error + 3e-16 * within};
    }
    return midpoint_tail(impl_->shape(m), i);
}

std::uint64_t WeightModel::alpha(double x) const {
    if (std::isnan(x)) throw std::invalid_argument("alpha: x must be a number");
    if (!(x > 0.0)) return 0;
    double thr = 1.0 / x;
    if (impl_->prob(1) < thr) return 0;
    if (is_finite()) {
        const auto& probs = impl_->finite_probs;
        std::uint64_t lo = 1, hi = probs.size();
        if (probs[hi - 1] >= thr) return hi;
        while (hi - lo > 1) {
            std::uint64_t mid = lo + (hi - lo) / 2;
            (probs[mid - 1] >= thr ? lo : hi) = mid;
        }
        return lo;
    }
    std::uint64_t lo = 1, hi = 2;
    while (impl_->prob(hi) >= thr) {
        lo = hi;
        if (hi > (1ull << 61)) throw std::overflow_error("alpha: index exceeds 2^62");
        hi *= 2;
    }
    while (hi - lo > 1) {
        std::uint64_t mid = lo + (hi - lo) / 2;
        (impl_->prob(mid) >= thr ? lo : hi) = mid;
    }
    return lo;
}

double WeightModel::slowly_varying(double x) const {
    if (!has_theta())
        throw std::logic_error("slowly_varying: finite vectors carry no index");
    if (!(x > 0.0)) throw std::invalid_argument("slowly_varying: x must be positive");
    return static_cast<double>(alpha(x)) / std::pow(x, impl_->theta);
}

double WeightModel::lstar(double x) const {
    if (family() != Family::ThetaOneLog)
        throw std::logic_error("lstar: defined only for the theta = 1 family");
    if (!(x > 0.0)) throw std::invalid_argument("lstar: x must be positive");
    return series::s0(*this, x).value / x;
}

double WeightModel::beta(double n) const {
    if (!has_theta()) throw std::logic_error("beta: finite vectors carry no index");
    if (!(n >= 1.0)) throw std::invalid_argument("beta: n must be >= 1");
    if (impl_->theta < 1.0) return static_cast<double>(alpha(n));
    return series::s0(*this, n).value;  // n * L*(n)
}

double WeightModel::delta_n(double n) const {
    if (family() != Family::ThetaOneLog)
        throw std::logic_error("delta_n: defined only for the theta = 1 family");
    return slowly_varying(n) / lstar(n);
}

std::string WeightModel::describe() const {
    char buf[128];
    switch (impl_->family) {
        case Family::PowerLaw:
            std::snprintf(buf, sizeof buf, "power_law(theta=%.17g)", impl_->theta);
            break;
        case Family::LogPowerLaw:
            std::snprintf(buf, sizeof buf, "log_power_law(theta=%.17g,gamma=%.17g)",
                          impl_->theta, impl_->gamma);
            break;
        case Family::ThetaOneLog:
            std::snprintf(buf, sizeof buf, "theta_one_log(gamma=%.17g)", impl_->gamma);
            break;
        case Family::FiniteVector:
            std::snprintf(buf, sizeof buf, "finite(size=%zu)", impl_->finite_probs.size());
            break;
    }
    return buf;
}

}  // namespace urnflow
