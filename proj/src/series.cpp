#include "urnflow/series.hpp"

#include <algorithm>
#include <cmath>

#include "urnflow/numerics.hpp"

namespace urnflow::series {
namespace {

constexpr int kMaxSeriesPower = 8;  // public m range; leaves >= 56 expansion terms

// Alternating tail expansion over certified power sums P_k = sum_{i>cut} p_i^k:
//   m0 == 0:  sum_{i>cut} (1 - e^{-a p_i})  = sum_{j>=1} (-1)^{j+1} (a^j/j!) P_j
//   m0 >= 1:  sum_{i>cut} p_i^m0 e^{-a p_i} = sum_{j>=0} (-1)^j (a^j/j!) P_{m0+j}
// Successive term ratios are <= rho = a * p_{cut+1}, so once rho <= 1/2 the
// remainder after the last included term is <= |last term| * rho (Leibniz).
// Coefficients are assembled in log space; a^j/j! alone overflows for large a.
SeriesResult poisson_tail(const WeightModel& w, int m0, double a, std::uint64_t cut) {
    SeriesResult out;
    if (a == 0.0) {
        if (m0 >= 1) {
            CertifiedValue p = w.tail_power_sum(m0, cut);
            out.value = p.value;
            out.tail_bound = p.error;
            out.terms_used = 1;
        }
        return out;
    }
    double rho = a * w.prob(cut + 1);
    if (!(rho <= 0.5))
        throw std::logic_error("poisson_tail: split index too small for the argument");
    double la = std::log(a);
    NeumaierSum acc;
    double err = 0.0, abs_sum = 0.0, last_term = 0.0;
    int j_last = WeightModel::max_tail_power() - m0;
    for (int j = (m0 == 0) ? 1 : 0; j <= j_last; ++j) {
        CertifiedValue p = w.tail_power_sum(m0 + j, cut);
        double lc = j * la - std::lgamma(j + 1.0);
        double term = (p.value > 0.0) ? std::exp(lc + std::log(p.value)) : 0.0;
        if (p.error > 0.0) err += std::exp(lc + std::log(p.error));
        bool negative = (m0 == 0) ? (j % 2 == 0) : (j % 2 == 1);
        acc.add(negative ? -term : term);
        abs_sum += term;
        last_term = term;
        ++out.terms_used;
        if (term <= 1e-19 * (abs_sum + 1e-300)) break;
    }
    out.value = acc.value();
    out.tail_bound = err + last_term * rho + 2e-13 * abs_sum;
    return out;
}

// Binomial analogue with C(n,j) q^j coefficients (q = 1 or 2):
//   m0 == 0:  sum_{i>cut} (1 - (1 - q p_i)^n) = sum_{j>=1} (-1)^{j+1} C(n,j) q^j P_j
//   m0 >= 1:  sum_{i>cut} p_i^m0 (1 - p_i)^n = sum_{j>=0} (-1)^j C(n,j) P_{m0+j}
// Term ratios are <= rho = q n p_{cut+1}. log C(n,j) is built incrementally to
// avoid the catastrophic cancellation of lgamma(n+1) - lgamma(n-j+1) at large n.
SeriesResult binomial_tail(const WeightModel& w, int m0, std::uint64_t n, double q,
                           std::uint64_t cut) {
    SeriesResult out;
    if (n == 0) {
        if (m0 >= 1) {
            CertifiedValue p = w.tail_power_sum(m0, cut);
            out.value = p.value;
            out.tail_bound = p.error;
            out.terms_used = 1;
        }
        return out;
    }
    double nd = static_cast<double>(n);
    double rho = q * nd * w.prob(cut + 1);
    if (!(rho <= 0.5))
        throw std::logic_error("binomial_tail: split index too small for the ball count");
    double lq = std::log(q);
    double lbinom = 0.0;  // log C(n,j), updated as j advances
    NeumaierSum acc;
    double err = 0.0, abs_sum = 0.0, last_term = 0.0;
    bool exact_stop = false;
    int j_last = WeightModel::max_tail_power() - m0;
    int j_first = (m0 == 0) ? 1 : 0;
    for (int j = 0; j <= j_last; ++j) {
        if (static_cast<std::uint64_t>(j) > n) {
            exact_stop = true;  // C(n,j) = 0: the expansion terminates
            break;
        }
        if (j > 0) lbinom += std::log(nd - (j - 1)) - std::log(static_cast<double>(j));
        if (j < j_first) continue;
        CertifiedValue p = w.tail_power_sum(m0 + j, cut);
        double lc = lbinom + j * lq;
        double term = (p.value > 0.0) ? std::exp(lc + std::log(p.value)) : 0.0;
        if (p.error > 0.0) err += std::exp(lc + std::log(p.error));
        bool negative = (m0 == 0) ? (j % 2 == 0) : (j % 2 == 1);
        acc.add(negative ? -term : term);
        abs_sum += term;
        last_term = term;
        ++out.terms_used;
        if (term <= 1e-19 * (abs_sum + 1e-300)) break;
    }
    out.value = acc.value();
    out.tail_bound = err + (exact_stop ? 0.0 : last_term * rho) + 2e-13 * abs_sum;
    return out;
}

std::uint64_t binomial_cutoff(const WeightModel& w, std::uint64_t n, double q) {
    if (w.is_finite()) return w.support_size();
    std::uint64_t al = w.alpha(2.0 * q * static_cast<double>(n));
    if (al > (1ull << 31))
        throw ToleranceError("binomial_cutoff: head would exceed 2^31 terms");
    return std::max<std::uint64_t>(64, 4 * al);
}

}  // namespace

std::uint64_t head_cutoff(const WeightModel& w, double a) {
    if (!(a >= 0.0) || !std::isfinite(a))
        throw std::invalid_argument("head_cutoff: argument must be finite and >= 0");
    if (w.is_finite()) return w.support_size();
    std::uint64_t al = w.alpha(2.0 * a);
    if (al > (1ull << 31))
        throw ToleranceError("head_cutoff: head would exceed 2^31 terms");
    return std::max<std::uint64_t>(64, 4 * al);
}

double pow1m(double q, double n) {
    if (q == 0.0) return 1.0;
    if (q < 0.25) return std::exp(n * std::log1p(-q));
    if (q < 1.0) return std::pow(1.0 - q, n);
    if (q == 1.0) return n == 0.0 ? 1.0 : 0.0;
    // q > 1 with integral n: (1-q)^n = (-1)^n (q-1)^n
    double mag = std::pow(q - 1.0, n);
    return std::fmod(n, 2.0) != 0.0 ? -mag : mag;
}

SeriesResult s0(const WeightModel& w, double a) {
    std::uint64_t cut = head_cutoff(w, a);
    if (a == 0.0) return {};
    NeumaierSum acc;
    for (std::uint64_t i = 1; i <= cut; ++i) acc.add(-std::expm1(-a * w.prob(i)));
    double head = acc.value();
    SeriesResult out;
    out.terms_used = static_cast<long long>(cut);
    out.value = head;
    out.tail_bound = 2e-16 * head;
    if (!w.is_finite()) {
        SeriesResult tail = poisson_tail(w, 0, a, cut);
        out.value += tail.value;
        out.tail_bound += tail.tail_bound;
        out.terms_used += tail.terms_used;
    }
    return out;
}

SeriesResult sm(const WeightModel& w, int m, double a) {
    if (m < 1 || m > kMaxSeriesPower)
        throw std::invalid_argument("sm: power out of range");
    if (a == 0.0) {
        CertifiedValue p = w.tail_power_sum(m, 0);
        return {p.value, p.error, 1};
    }
    std::uint64_t cut = head_cutoff(w, a);
    NeumaierSum acc;
    for (std::uint64_t i = 1; i <= cut; ++i) {
        double p = w.prob(i);
        double pm = p;
        for (int k = 1; k < m; ++k) pm *= p;
        acc.add(pm * std::exp(-a * p));
    }
    double head = acc.value();
    SeriesResult out;
    out.terms_used = static_cast<long long>(cut);
    out.value = head;
    out.tail_bound = 2e-16 * head;
    if (!w.is_finite()) {
        SeriesResult tail = poisson_tail(w, m, a, cut);
        out.value += tail.value;
        out.tail_bound += tail.tail_bound;
        out.terms_used += tail.terms_used;
    }
    return out;
}

SeriesResult s0_binomial(const WeightModel& w, std::uint64_t n) {
    if (n == 0) return {};
    std::uint64_t cut = binomial_cutoff(w, n, 1.0);
    double nd = static_cast<double>(n);
    NeumaierSum acc;
    for (std::uint64_t i = 1; i <= cut; ++i) {
        double p = w.prob(i);
        acc.add(p >= 1.0 ? 1.0 : -std::expm1(nd * std::log1p(-p)));
    }
    double head = acc.value();
    SeriesResult out;
    out.terms_used = static_cast<long long>(cut);
    out.value = head;
    out.tail_bound = 2e-16 * head;
    if (!w.is_finite()) {
        SeriesResult tail = binomial_tail(w, 0, n, 1.0, cut);
        out.value += tail.value;
        out.tail_bound += tail.tail_bound;
        out.terms_used += tail.terms_used;
    }
    return out;
}

SeriesResult sm_binomial(const WeightModel& w, int m, std::uint64_t n) {
    if (m < 1 || m > kMaxSeriesPower)
        throw std::invalid_argument("sm_binomial: power out of range");
    if (n == 0) {
        CertifiedValue p = w.tail_power_sum(m, 0);
        return {p.value, p.error, 1};
    }
    std::uint64_t cut = binomial_cutoff(w, n, 1.0);
    double nd = static_cast<double>(n);
    NeumaierSum acc;
    for (std::uint64_t i = 1; i <= cut; ++i) {
        double p = w.prob(i);
        double pm = p;
        for (int k = 1; k < m; ++k) pm *= p;
        acc.add(pm * pow1m(p, nd));
    }
    double head = acc.value();
    SeriesResult out;
    out.terms_used = static_cast<long long>(cut);
    out.value = head;
    out.tail_bound = 2e-16 * std::abs(head);
    if (!w.is_finite()) {
        SeriesResult tail = binomial_tail(w, m, n, 1.0, cut);
        out.value += tail.value;
        out.tail_bound += tail.tail_bound;
        out.terms_used += tail.terms_used;
    }
    return out;
}

SeriesResult odd_binomial(const WeightModel& w, std::uint64_t n) {
    if (n == 0) return {};
    std::uint64_t cut = binomial_cutoff(w, n, 2.0);
    double nd = static_cast<double>(n);
    NeumaierSum acc;
    for (std::uint64_t i = 1; i <= cut; ++i) {
        double tp = 2.0 * w.prob(i);
        double term = (tp < 0.25) ? -std::expm1(nd * std::log1p(-tp))
                                  : 1.0 - pow1m(tp, nd);
        acc.add(0.5 * term);
    }
    double head = acc.value();
    SeriesResult out;
    out.terms_used = static_cast<long long>(cut);
    out.value = head;
    out.tail_bound = 2e-16 * head;
    if (!w.is_finite()) {
        SeriesResult tail = binomial_tail(w, 0, n, 2.0, cut);
        out.value += 0.5 * tail.value;
        out.tail_bound += 0.5 * tail.tail_bound;
        out.terms_used += tail.terms_used;
    }
    return out;
}

SeriesResult tail_s0(const WeightModel& w, double a, std::uint64_t cut) {
    if (!(a >= 0.0) || !std::isfinite(a))
        throw std::invalid_argument("tail_s0: argument must be finite and >= 0");
    return poisson_tail(w, 0, a, cut);
}

SeriesResult tail_sm(const WeightModel& w, int m, double a, std::uint64_t cut) {
    if (m < 1 || m > kMaxSeriesPower)
        throw std::invalid_argument("tail_sm: power out of range");
    if (!(a >= 0.0) || !std::isfinite(a))
        throw std::invalid_argument("tail_sm: argument must be finite and >= 0");
    return poisson_tail(w, m, a, cut);
}

}  // namespace urnflow::series
