#include "urnflow/moments.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "urnflow/numerics.hpp"

namespace urnflow::moments {
namespace {

// 1 - e^{-x} without cancellation for small x
inline double em(double x) { return -std::expm1(-x); }

void require_tol(const char* op, const SeriesResult& r, double tol) {
    if (!(r.tail_bound <= tol)) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "%s: certified bound %.3e exceeds tolerance %.3e", op,
                      r.tail_bound, tol);
        throw ToleranceError(buf);
    }
    if (!std::isfinite(r.value)) throw ToleranceError(std::string(op) + ": value not finite");
}

void require_times(const char* op, double tau, double t) {
    if (!(tau >= 0.0) || !(t >= tau) || !std::isfinite(t)) {
        char buf[120];
        std::snprintf(buf, sizeof buf, "%s: requires 0 <= tau <= t (got tau=%g, t=%g)",
                      op, tau, t);
        throw std::invalid_argument(buf);
    }
}

// s^k / k! for small integer k (k <= 8; no overflow for s <= 1e9)
double pow_over_fact(double s, int k) {
    double v = 1.0;
    for (int j = 1; j <= k; ++j) v *= s / j;
    return v;
}

// One fused per-urn covariance series: head term h(p) summed to a common
// split index, plus a signed combination of certified tail expansions. All
// head terms have one sign, so the head accumulates without cancellation.
struct TailPiece {
    double coef;
    int m;  // 0 -> tail_s0, >= 1 -> tail_sm
    double arg;
};

template <typename HeadTerm>
SeriesResult fused_cov(const WeightModel& w, double a_max, HeadTerm head_term,
                       std::initializer_list<TailPiece> tails) {
    std::uint64_t cut = series::head_cutoff(w, a_max);
    NeumaierSum acc;
    double abs_head = 0.0;
    for (std::uint64_t i = 1; i <= cut; ++i) {
        double term = head_term(w.prob(i));
        acc.add(term);
        abs_head += std::abs(term);
    }
    SeriesResult out;
    out.value = acc.value();
    out.tail_bound = 2e-16 * abs_head;
    out.terms_used = static_cast<long long>(cut);
    if (!w.is_finite()) {
        for (const TailPiece& piece : tails) {
            SeriesResult tail = (piece.m == 0)
                                    ? series::tail_s0(w, piece.arg, cut)
                                    : series::tail_sm(w, piece.m, piece.arg, cut);
            out.value += piece.coef * tail.value;
            out.tail_bound += std::abs(piece.coef) * tail.tail_bound;
            out.terms_used += tail.terms_used;
        }
    }
    return out;
}

SeriesResult direct_cov(const WeightModel& w, CovPair pair, double tau, double t) {
    switch (pair) {
        case CovPair::RR:
            return fused_cov(
                w, t + tau,
                [&](double p) { return std::exp(-p * t) * em(p * tau); },
                {{+1.0, 0, t + tau}, {-1.0, 0, t}});
        case CovPair::UU:
            return fused_cov(
                w, 2 * (t + tau),
                [&](double p) { return 0.25 * std::exp(-2 * p * (t - tau)) * em(4 * p * tau); },
                {{+0.25, 0, 2 * (t + tau)}, {-0.25, 0, 2 * (t - tau)}});
        case CovPair::MM:
            return fused_cov(
                w, t + tau,
                [&](double p) { return tau * t * p * p * std::exp(-p * t) * em(p * tau); },
                {{+tau * t, 2, t}, {-tau * t, 2, t + tau}});
        case CovPair::RU:
            return fused_cov(
                w, 2 * t + tau,
                [&](double p) { return 0.5 * std::exp(-p * (2 * t - tau)) * em(2 * p * tau); },
                {{+0.5, 0, 2 * t + tau}, {-0.5, 0, 2 * t - tau}});
        case CovPair::UR:
            return fused_cov(
                w, t + 2 * tau,
                [&](double p) { return 0.5 * std::exp(-p * t) * em(2 * p * tau); },
                {{+0.5, 0, t + 2 * tau}, {-0.5, 0, t}});
        case CovPair::RM:
            return fused_cov(
                w, t + tau,
                [&](double p) { return -t * p * std::exp(-p * t) * em(p * tau); },
                {{+t, 1, t + tau}, {-t, 1, t}});
        case CovPair::MR:
            return fused_cov(
                w, t + tau,
                [&](double p) { return -tau * p * std::exp(-p * t) * em(p * tau); },
                {{+tau, 1, t + tau}, {-tau, 1, t}});
        case CovPair::UM:
            return fused_cov(
                w, t + 2 * tau,
                [&](double p) { return -0.5 * t * p * std::exp(-p * t) * em(2 * p * tau); },
                {{+0.5 * t, 1, t + 2 * tau}, {-0.5 * t, 1, t}});
        case CovPair::MU:
            return fused_cov(
                w, 2 * t + tau,
                [&](double p) {
                    return -0.5 * tau * p * std::exp(-p * (2 * t - tau)) * em(2 * p * tau);
                },
                {{+0.5 * tau, 1, 2 * t + tau}, {-0.5 * tau, 1, 2 * t - tau}});
    }
    throw std::logic_error("direct_cov: unknown pair");
}

// Combination of poisson_mean calls, each with its own split index.
SeriesResult combine(std::initializer_list<std::pair<double, SeriesResult>> parts) {
    SeriesResult out;
    double abs_sum = 0.0;
    for (const auto& [coef, r] : parts) {
        out.value += coef * r.value;
        out.tail_bound += std::abs(coef) * r.tail_bound;
        out.terms_used += r.terms_used;
        abs_sum += std::abs(coef * r.value);
    }
    out.tail_bound += 2e-16 * abs_sum;
    return out;
}

SeriesResult identity_cov(const WeightModel& w, CovPair pair, double tau, double t) {
    // tolerance handling happens in the caller; pass a permissive bound here
    const double loose = std::numeric_limits<double>::infinity();
    auto mean = [&](Component c, double s, int k = 1) {
        return poisson_mean(w, c, s, k, loose);
    };
    switch (pair) {
        case CovPair::RR:
            return combine({{+1.0, mean(Component::R, t + tau)},
                            {-1.0, mean(Component::R, t)}});
        case CovPair::UU:
            return combine({{+0.5, mean(Component::U, t + tau)},
                            {-0.5, mean(Component::U, t - tau)}});
        case CovPair::MM:
            return combine({{+2 * tau / t, mean(Component::Rk, t, 2)},
                            {-2 * tau * t / ((t + tau) * (t + tau)),
                             mean(Component::Rk, t + tau, 2)}});
        case CovPair::RU:
            return combine({{+0.5, mean(Component::R, 2 * t + tau)},
                            {-0.5, mean(Component::R, 2 * t - tau)}});
        case CovPair::UR:
            return combine({{+0.5, mean(Component::R, t + 2 * tau)},
                            {-0.5, mean(Component::R, t)}});
        case CovPair::RM:
            return combine({{+t / (t + tau), mean(Component::M, t + tau)},
                            {-1.0, mean(Component::M, t)}});
        case CovPair::MR:
            return combine({{+tau / (t + tau), mean(Component::M, t + tau)},
                            {-tau / t, mean(Component::M, t)}});
        case CovPair::UM:
            return combine({{+t / (2 * (2 * tau + t)), mean(Component::M, 2 * tau + t)},
                            {-0.5, mean(Component::M, t)}});
        case CovPair::MU:
            return combine({{+tau / (2 * (2 * t + tau)), mean(Component::M, 2 * t + tau)},
                            {-tau / (2 * (2 * t - tau)), mean(Component::M, 2 * t - tau)}});
    }
    throw std::logic_error("identity_cov: unknown pair");
}

}  // namespace

SeriesResult poisson_mean(const WeightModel& w, Component comp, double s, int k,
                          double tol) {
    if (!(s >= 0.0) || !std::isfinite(s))
        throw std::invalid_argument("poisson_mean: s must be finite and >= 0");
    if (s == 0.0) return {};
    SeriesResult r;
    switch (comp) {
        case Component::R:
            r = series::s0(w, s);
            break;
        case Component::U: {
            r = series::s0(w, 2 * s);
            r.value *= 0.5;
            r.tail_bound *= 0.5;
            break;
        }
        case Component::M: {
            r = series::sm(w, 1, s);
            r.value *= s;
            r.tail_bound *= s;
            break;
        }
        case Component::Rk: {
            if (k < 1 || k > 8) throw std::invalid_argument("poisson_mean: k must be in 1..8");
            r = series::sm(w, k, s);
            double c = pow_over_fact(s, k);
            r.value *= c;
            r.tail_bound *= c;
            break;
        }
        case Component::RstarK: {
            if (k < 1 || k > 8) throw std::invalid_argument("poisson_mean: k must be in 1..8");
            r = series::s0(w, s);
            for (int j = 1; j < k; ++j) {
                SeriesResult part = series::sm(w, j, s);
                double c = pow_over_fact(s, j);
                r.value -= c * part.value;
                r.tail_bound += c * part.tail_bound;
                r.terms_used += part.terms_used;
            }
            break;
        }
        case Component::Mtilde: {
            SeriesResult s1 = series::sm(w, 1, s);
            SeriesResult s2 = series::sm(w, 2, s);
            r.value = s * (s1.value - s2.value);
            r.tail_bound = s * (s1.tail_bound + s2.tail_bound);
            r.terms_used = s1.terms_used + s2.terms_used;
            break;
        }
    }
    require_tol("poisson_mean", r, tol);
    return r;
}

SeriesResult discrete_mean(const WeightModel& w, Component comp, std::uint64_t n,
                           double tol) {
    if (n == 0) return {};
    SeriesResult r;
    switch (comp) {
        case Component::R:
            r = series::s0_binomial(w, n);
            break;
        case Component::U:
            r = series::odd_binomial(w, n);
            break;
        case Component::M: {
            r = series::sm_binomial(w, 1, n);
            double nd = static_cast<double>(n);
            r.value *= nd;
            r.tail_bound *= nd;
            break;
        }
        default:
            throw std::invalid_argument(
                "discrete_mean: only R, U, M exist for the fixed-ball-count chain");
    }
    require_tol("discrete_mean", r, tol);
    return r;
}

SeriesResult poisson_cov(const WeightModel& w, CovPair pair, double tau, double t,
                         Route route, double tol) {
    require_times("poisson_cov", tau, t);
    if (tau == 0.0) return {};  // X(0) is constant for every component
    SeriesResult r = (route == Route::Direct) ? direct_cov(w, pair, tau, t)
                                              : identity_cov(w, pair, tau, t);
    char op[64];
    std::snprintf(op, sizeof op, "poisson_cov(%s,%s)", pair_name(pair),
                  route == Route::Direct ? "direct" : "identity");
    require_tol(op, r, tol);
    return r;
}

SeriesResult var_M_increment(const WeightModel& w, double t1, double t2, double tol) {
    require_times("var_M_increment", t1, t2);
    const double loose = std::numeric_limits<double>::infinity();
    SeriesResult v2 = poisson_cov(w, CovPair::MM, t2, t2, Route::Direct, loose);
    SeriesResult v1 = poisson_cov(w, CovPair::MM, t1, t1, Route::Direct, loose);
    SeriesResult c12 = poisson_cov(w, CovPair::MM, t1, t2, Route::Direct, loose);
    SeriesResult r;
    r.value = v2.value + v1.value - 2.0 * c12.value;
    r.tail_bound = v2.tail_bound + v1.tail_bound + 2.0 * c12.tail_bound +
                   2e-16 * (std::abs(v2.value) + std::abs(v1.value) + 2.0 * std::abs(c12.value));
    r.terms_used = v2.terms_used + v1.terms_used + c12.terms_used;
    require_tol("var_M_increment", r, tol);
    return r;
}

const char* component_name(Component c) {
    switch (c) {
        case Component::R: return "R";
        case Component::U: return "U";
        case Component::M: return "M";
        case Component::Rk: return "R_k";
        case Component::RstarK: return "Rstar_k";
        case Component::Mtilde: return "Mtilde";
    }
    return "?";
}

const char* pair_name(CovPair p) {
    switch (p) {
        case CovPair::RR: return "RR";
        case CovPair::UU: return "UU";
        case CovPair::MM: return "MM";
        case CovPair::RU: return "RU";
        case CovPair::UR: return "UR";
        case CovPair::MU: return "MU";
        case CovPair::UM: return "UM";
        case CovPair::RM: return "RM";
        case CovPair::MR: return "MR";
    }
    return "?";
}

}  // namespace urnflow::moments
