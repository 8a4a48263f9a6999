#include "urnflow/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "urnflow/numerics.hpp"

namespace urnflow {

namespace {

constexpr double kE = 2.7182818284590452354;
// ln(2^53): a log-pole draw beyond this lands past the deep boundary
constexpr double kDeepLog = 36.7368005696771014;

}  // namespace

UrnSampler::UrnSampler(const WeightModel& model, std::uint64_t head_size)
    : model_(model) {
    finite_ = model_.is_finite();
    if (finite_) {
        head_n_ = model_.support_size();
    } else {
        if (head_size < 8 || head_size > (std::uint64_t(1) << 26))
            throw std::invalid_argument(
                "UrnSampler: head_size must lie in [8, 2^26]");
        head_n_ = head_size;
    }

    cdf_.resize(static_cast<std::size_t>(head_n_) + 1);
    cdf_[0] = 0.0;
    NeumaierSum acc;
    for (std::uint64_t i = 1; i <= head_n_; ++i) {
        acc.add(model_.prob(i));
        cdf_[static_cast<std::size_t>(i)] = acc.value();
    }
    head_mass_ = cdf_.back();

    if (finite_) return;

    double c = model_.normalizer();
    double theta = model_.theta();
    switch (model_.family()) {
        case Family::PowerLaw:
            env_a_ = 1.0 / theta;
            env_scale_ = c;
            break;
        case Family::LogPowerLaw:
            env_a_ = 1.0 / theta;
            env_scale_ = c * std::pow(std::log(static_cast<double>(head_n_) +
                                               1.0 + kE),
                                      -model_.gamma() / theta);
            break;
        case Family::ThetaOneLog:
            log_pole_ = true;
            env_gamma_ = model_.gamma();
            env_scale_ = c;
            log_head_ = std::log(static_cast<double>(head_n_));
            break;
        case Family::FiniteVector:
            break;
    }
    inv_exp_ = log_pole_ ? -1.0 / (env_gamma_ - 1.0) : -1.0 / (env_a_ - 1.0);

    // Spot-check domination on a log-spaced probe grid; the analytic
    // argument above makes failure a construction bug, not a sampling one.
    std::uint64_t probe = head_n_ + 1;
    while (probe < static_cast<std::uint64_t>(kDeepBoundary)) {
        for (std::uint64_t i : {probe, probe + 1, probe + 7}) {
            if (static_cast<double>(i) >= kDeepBoundary) continue;
            double ratio = model_.prob(i) / tail_cell(i);
            if (!(ratio <= 1.0 + 1e-9)) {
                char msg[160];
                std::snprintf(msg, sizeof msg,
                              "UrnSampler: envelope fails to dominate at i=%llu "
                              "(ratio %.17g)",
                              static_cast<unsigned long long>(i), ratio);
                throw std::logic_error(msg);
            }
        }
        probe = probe < (std::uint64_t(1) << 40) ? probe * 8 : probe * 4096;
    }
}

double UrnSampler::tail_cell(std::uint64_t i) const {
    // integral of the envelope density over (i-1, i]; the log of the ratio
    // of consecutive arguments goes through log1p to keep full relative
    // precision, since the domination margin is only O(1/i)
    double xm = static_cast<double>(i - 1);
    double dl = std::log1p(1.0 / xm);  // ln(i) - ln(i-1)
    if (!log_pole_)
        return env_scale_ * std::pow(xm, 1.0 - env_a_) *
               (-std::expm1((1.0 - env_a_) * dl)) / (env_a_ - 1.0);
    double lm = std::log(xm);
    return env_scale_ * std::pow(lm, 1.0 - env_gamma_) *
           (-std::expm1((1.0 - env_gamma_) * std::log1p(dl / lm))) /
           (env_gamma_ - 1.0);
}

double UrnSampler::continuous_p(double x, double lx) const {
    double c = model_.normalizer();
    switch (model_.family()) {
        case Family::PowerLaw:
            return std::isfinite(x) ? c * std::pow(x, -env_a_) : 0.0;
        case Family::LogPowerLaw:
            return std::isfinite(x)
                       ? c * std::exp(-env_a_ * std::log(x) -
                                      (model_.gamma() / model_.theta()) *
                                          std::log(std::log(x + kE)))
                       : 0.0;
        case Family::ThetaOneLog:
            // p(x) = c exp(-ln x) ln(x)^{-gamma}; underflow to 0 is exact
            // enough (true mass < 1e-300)
            return c * std::exp(-lx) * std::pow(lx, -env_gamma_);
        case Family::FiniteVector:
            break;
    }
    return 0.0;
}

UrnDraw UrnSampler::sample(RngStream& rng) const {
    double u = rng.uniform01();
    if (finite_ || u < head_mass_) {
        auto it = std::upper_bound(cdf_.begin() + 1, cdf_.end(), u);
        std::uint64_t i = it == cdf_.end()
                              ? head_n_
                              : static_cast<std::uint64_t>(it - cdf_.begin());
        return {i, model_.prob(i)};
    }
    for (;;) {
        proposals_.fetch_add(1, std::memory_order_relaxed);
        double v = rng.uniform_oo();
        double x, lx = 0.0;
        if (!log_pole_) {
            x = static_cast<double>(head_n_) * std::pow(v, inv_exp_);
        } else {
            lx = log_head_ * std::pow(v, inv_exp_);
            x = lx <= kDeepLog ? std::exp(lx)
                               : std::numeric_limits<double>::infinity();
        }
        if (!(x < kDeepBoundary)) {
            // Deep zone: the per-index acceptance ratio is 1 - O(1/x) here,
            // so accepting unconditionally biases this region's mass by a
            // relative O(2^-53); the key is a fresh synthetic urn.
            deep_.fetch_add(1, std::memory_order_relaxed);
            accepts_.fetch_add(1, std::memory_order_relaxed);
            std::uint64_t key =
                (std::uint64_t(1) << 63) |
                deep_counter_.fetch_add(1, std::memory_order_relaxed);
            return {key, continuous_p(x, lx)};
        }
        std::uint64_t i = static_cast<std::uint64_t>(std::ceil(x));
        if (i <= head_n_) i = head_n_ + 1;  // fp edge at the head boundary
        double p = model_.prob(i);
        if (rng.uniform01() * tail_cell(i) < p) {
            accepts_.fetch_add(1, std::memory_order_relaxed);
            return {i, p};
        }
    }
}

double UrnSampler::acceptance_rate() const {
    std::uint64_t prop = proposals_.load(std::memory_order_relaxed);
    if (prop == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(accepts_.load(std::memory_order_relaxed)) /
           static_cast<double>(prop);
}

std::uint64_t UrnSampler::tail_proposals() const {
    return proposals_.load(std::memory_order_relaxed);
}
std::uint64_t UrnSampler::tail_accepts() const {
    return accepts_.load(std::memory_order_relaxed);
}
std::uint64_t UrnSampler::deep_accepts() const {
    return deep_.load(std::memory_order_relaxed);
}

std::uint64_t snap_count(double v) {
    if (!(v > 0.0)) return 0;
    double r = std::nearbyint(v);
    if (std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v)))
        return static_cast<std::uint64_t>(r);
    return static_cast<std::uint64_t>(std::floor(v));
}

namespace {

void validate_stream(const BallStream& stream) {
    if (stream.grid.empty())
        throw std::invalid_argument("BallStream: grid must be nonempty");
    double prev = 0.0;
    for (double t : stream.grid) {
        if (!(t > 0.0) || !(t <= 1.0))
            throw std::invalid_argument("BallStream: grid points must lie in (0, 1]");
        if (t < prev)
            throw std::invalid_argument("BallStream: grid must be nondecreasing");
        prev = t;
    }
    if (!(stream.n >= 0.0) || !std::isfinite(stream.n))
        throw std::invalid_argument("BallStream: n must be finite and >= 0");
    if (stream.n > 9.0e15)
        throw std::invalid_argument("BallStream: ball budget exceeds 9e15");
}

PathSample make_sample(SimMode mode, std::uint64_t stream_id,
                       const BallStream& stream) {
    PathSample ps;
    ps.mode = mode;
    ps.stream_id = stream_id;
    ps.n = stream.n;
    ps.grid = stream.grid;
    std::size_t m = stream.grid.size();
    ps.balls.assign(m, 0);
    ps.rstar.assign(m, {});
    ps.u.assign(m, 0.0);
    ps.m.assign(m, 0.0);
    ps.mtilde.assign(m, 0.0);
    return ps;
}

void record_point(PathSample& ps, std::size_t j, const OccupancyState& st,
                  std::uint64_t balls, double m_clock) {
    ps.balls[j] = balls;
    for (int k = 1; k <= kOccupancyKMax; ++k)
        ps.rstar[j][k - 1] = static_cast<double>(st.rstar(k));
    ps.u[j] = static_cast<double>(st.parity_count());
    double complement = 1.0 - st.occupied_mass();
    ps.m[j] = m_clock * complement;
    ps.mtilde[j] = static_cast<double>(balls) * complement;
}

std::size_t occupied_hint(const WeightModel& w, std::uint64_t balls) {
    if (w.is_finite()) return static_cast<std::size_t>(w.support_size()) + 8;
    if (balls == 0) return 64;
    double est = 5.0 * w.alpha(static_cast<double>(balls)) + 1024.0;
    est = std::min(est, static_cast<double>(balls));
    return static_cast<std::size_t>(std::min(est, 1.5e8));
}

}  // namespace

std::vector<PathSample> simulate(const UrnSampler& sampler,
                                 const BallStream& stream, RngStream& rng,
                                 std::uint64_t stream_id) {
    validate_stream(stream);
    std::size_t m = stream.grid.size();
    bool want_d = stream.mode != SimMode::Poissonized;
    bool want_p = stream.mode != SimMode::Discrete;

    std::vector<std::uint64_t> nd, np;
    if (want_d) {
        nd.resize(m);
        for (std::size_t j = 0; j < m; ++j)
            nd[j] = snap_count(stream.n * stream.grid[j]);
    }
    if (want_p) {
        // All arrival counts are drawn before any urn draw.
        np.resize(m);
        std::uint64_t a = 0;
        double prev = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double s = stream.n * stream.grid[j];
            a += rng.poisson(s - prev);
            prev = s;
            np[j] = a;
        }
    }

    PathSample ds, psample;
    if (want_d) ds = make_sample(SimMode::Discrete, stream_id, stream);
    if (want_p) psample = make_sample(SimMode::Poissonized, stream_id, stream);

    std::uint64_t last = 0;
    if (want_d) last = std::max(last, nd.back());
    if (want_p) last = std::max(last, np.back());

    OccupancyState st(occupied_hint(sampler.model(), last));
    std::size_t di = 0, pi = 0;
    auto flush = [&](std::uint64_t k) {
        while (want_d && di < m && nd[di] == k) {
            record_point(ds, di, st, k, static_cast<double>(k));
            ++di;
        }
        while (want_p && pi < m && np[pi] == k) {
            record_point(psample, pi, st, k, stream.n * stream.grid[pi]);
            ++pi;
        }
    };
    flush(0);
    for (std::uint64_t k = 1; k <= last; ++k) {
        UrnDraw d = sampler.sample(rng);
        st.insert_ball(d.key, d.p);
        flush(k);
    }

    std::vector<PathSample> out;
    if (want_d) out.push_back(std::move(ds));
    if (want_p) out.push_back(std::move(psample));
    return out;
}

std::vector<PathSample> simulate(const WeightModel& model,
                                 const BallStream& stream, std::uint64_t seed,
                                 std::uint64_t stream_id,
                                 std::uint64_t head_size) {
    UrnSampler sampler(model, head_size);
    RngStream rng(seed, stream_id);
    return simulate(sampler, stream, rng, stream_id);
}

}  // namespace urnflow
