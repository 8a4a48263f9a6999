#include "urnflow/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "urnflow/limits.hpp"
#include "urnflow/moments.hpp"
#include "urnflow/numerics.hpp"
#include "urnflow/series.hpp"

namespace urnflow {

namespace {

// Series tolerances for centering and reference covariances only need to sit
// far below the Monte Carlo standard errors, which scale like the raw values.
double mean_tol(double n) { return 1e-10 + 1e-11 * n; }
double cov_tol(double n) { return 1e-10 + 1e-9 * n; }

struct Centering {
    // exact means per grid point, raw units
    std::vector<double> r, u, m, mtilde;
};

Centering exact_centering(const WeightModel& w, SimMode mode, double n,
                          const std::vector<double>& grid, bool want_mtilde) {
    Centering c;
    std::size_t m = grid.size();
    c.r.resize(m);
    c.u.resize(m);
    c.m.resize(m);
    if (want_mtilde) c.mtilde.resize(m);
    double tol = mean_tol(n);
    for (std::size_t j = 0; j < m; ++j) {
        if (mode == SimMode::Discrete) {
            std::uint64_t nj = snap_count(n * grid[j]);
            c.r[j] = moments::discrete_mean(w, Component::R, nj, tol).value;
            c.u[j] = moments::discrete_mean(w, Component::U, nj, tol).value;
            c.m[j] = moments::discrete_mean(w, Component::M, nj, tol).value;
        } else {
            double s = n * grid[j];
            c.r[j] = moments::poisson_mean(w, Component::R, s, 1, tol).value;
            c.u[j] = moments::poisson_mean(w, Component::U, s, 1, tol).value;
            c.m[j] = moments::poisson_mean(w, Component::M, s, 1, tol).value;
            if (want_mtilde)
                c.mtilde[j] =
                    moments::poisson_mean(w, Component::Mtilde, s, 1, tol).value;
        }
    }
    return c;
}

void fill_row(const PathSample& ps, const Centering& c, double scale_r,
              double scale_m, std::size_t m, double* out) {
    for (std::size_t j = 0; j < m; ++j) {
        out[j] = (ps.rstar[j][0] - c.r[j]) / scale_r;
        out[m + j] = (ps.u[j] - c.u[j]) / scale_r;
        out[2 * m + j] = (ps.m[j] - c.m[j]) / scale_m;
    }
}

CovPair pair_of(int ca, int cb) {
    static const CovPair table[3][3] = {
        {CovPair::RR, CovPair::RU, CovPair::RM},
        {CovPair::UR, CovPair::UU, CovPair::UM},
        {CovPair::MR, CovPair::MU, CovPair::MM},
    };
    return table[ca][cb];
}

LimitPair limit_pair_of(int ca, int cb) {
    static const LimitPair table[3][3] = {
        {LimitPair::RhoRho, LimitPair::RhoUps, LimitPair::RhoMu},
        {LimitPair::UpsRho, LimitPair::UpsUps, LimitPair::UpsMu},
        {LimitPair::MuRho, LimitPair::MuUps, LimitPair::MuMu},
    };
    return table[ca][cb];
}

const char* comp_str(int c) { return c == 0 ? "rho" : c == 1 ? "ups" : "mu"; }

}  // namespace

PathMatrix run_experiment(const ExperimentConfig& cfg) {
    if (cfg.replicates == 0)
        throw std::invalid_argument("run_experiment: replicates must be >= 1");
    BallStream stream{cfg.mode, cfg.n, cfg.grid};

    UrnSampler sampler(cfg.model, cfg.head_size);
    bool coupled = cfg.mode == SimMode::Coupled;

    PathMatrix pm;
    pm.mode = cfg.mode;
    pm.n = cfg.n;
    pm.reps = cfg.replicates;
    pm.m = cfg.grid.size();
    pm.grid = cfg.grid;
    if (!cfg.model.is_finite()) {
        pm.scale_r = std::sqrt(cfg.model.beta(std::max(cfg.n, 2.0)));
        pm.scale_m = std::sqrt(cfg.model.alpha(std::max(cfg.n, 2.0)));
        if (!(pm.scale_r > 0.0) || !(pm.scale_m > 0.0))
            throw std::invalid_argument(
                "run_experiment: beta(n) = 0, n too small to normalize");
    }
    pm.data.assign(pm.reps * 3 * pm.m, 0.0);
    if (coupled) {
        pm.data_poisson.assign(pm.reps * 3 * pm.m, 0.0);
        pm.mtilde_gap.assign(pm.reps, 0.0);
    }

    Centering cd, cp;
    if (cfg.mode != SimMode::Poissonized)
        cd = exact_centering(cfg.model, SimMode::Discrete, cfg.n, cfg.grid, false);
    if (cfg.mode != SimMode::Discrete)
        cp = exact_centering(cfg.model, SimMode::Poissonized, cfg.n, cfg.grid,
                             coupled);

    int threads = cfg.threads > 0
                      ? cfg.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, 256);
    threads = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(threads), pm.reps));

    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;

    auto worker = [&]() {
        std::size_t r = 0;
        try {
            for (;;) {
                r = next.fetch_add(1, std::memory_order_relaxed);
                if (r >= pm.reps) return;
                RngStream rng(cfg.seed, r);
                std::vector<PathSample> out = simulate(sampler, stream, rng, r);
                const PathSample* dps = nullptr;
                const PathSample* pps = nullptr;
                for (const PathSample& ps : out)
                    (ps.mode == SimMode::Discrete ? dps : pps) = &ps;
                if (dps)
                    fill_row(*dps, cd, pm.scale_r, pm.scale_m, pm.m,
                             pm.data.data() + r * 3 * pm.m);
                if (pps && !coupled)
                    fill_row(*pps, cp, pm.scale_r, pm.scale_m, pm.m,
                             pm.data.data() + r * 3 * pm.m);
                if (pps && coupled) {
                    fill_row(*pps, cp, pm.scale_r, pm.scale_m, pm.m,
                             pm.data_poisson.data() + r * 3 * pm.m);
                    double sup = 0.0;
                    for (std::size_t j = 0; j < pm.m; ++j) {
                        double mt = (pps->mtilde[j] - cp.mtilde[j]) / pm.scale_m;
                        double ms = (pps->m[j] - cp.m[j]) / pm.scale_m;
                        sup = std::max(sup, std::abs(mt - ms));
                    }
                    pm.mtilde_gap[r] = sup;
                }
            }
        } catch (const std::exception& e) {
            char msg[256];
            std::snprintf(msg, sizeof msg, "replicate stream_id=%zu: %s", r,
                          e.what());
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!err) err = std::make_exception_ptr(std::runtime_error(msg));
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!err) err = std::current_exception();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (err) std::rethrow_exception(err);

    pm.acceptance_rate = sampler.acceptance_rate();
    return pm;
}

std::vector<CovCell> covariance_cells(const PathMatrix& paths,
                                      const WeightModel& model) {
    std::size_t m = paths.m;
    std::vector<CovCell> cells;
    cells.reserve(9 * m * (m + 1) / 2);
    bool poissonized = paths.mode == SimMode::Poissonized;
    bool has_theta = model.has_theta();
    double tolc = cov_tol(paths.n);

    for (int ca = 0; ca < 3; ++ca) {
        for (int cb = 0; cb < 3; ++cb) {
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = i; j < m; ++j) {
                    CovCell cell;
                    cell.comp_a = ca;
                    cell.comp_b = cb;
                    cell.i = i;
                    cell.j = j;
                    cell.tau = paths.grid[i];
                    cell.t = paths.grid[j];

                    std::tie(cell.empirical, cell.se) =
                        empirical_cov(paths, ca, i, cb, j);

                    if (poissonized) {
                        double sc_a = ca == 2 ? paths.scale_m : paths.scale_r;
                        double sc_b = cb == 2 ? paths.scale_m : paths.scale_r;
                        SeriesResult ex = moments::poisson_cov(
                            model, pair_of(ca, cb), paths.n * paths.grid[i],
                            paths.n * paths.grid[j], Route::Direct, tolc);
                        cell.exact = ex.value / (sc_a * sc_b);
                    }
                    if (has_theta)
                        cell.limit = limits::limit_cov(model.theta(),
                                                       limit_pair_of(ca, cb),
                                                       cell.tau, cell.t);

                    double ref = std::isfinite(cell.exact) ? cell.exact
                                                           : cell.limit;
                    if (std::isfinite(ref)) {
                        double diff = cell.empirical - ref;
                        cell.z = cell.se > 0.0
                                     ? diff / cell.se
                                     : (diff == 0.0
                                            ? 0.0
                                            : std::numeric_limits<
                                                  double>::infinity());
                    }
                    if (std::isfinite(cell.limit))
                        cell.gap = std::abs(cell.empirical - cell.limit);
                    cells.push_back(cell);
                }
            }
        }
    }
    return cells;
}

std::pair<double, double> empirical_cov(const PathMatrix& paths, int comp_a,
                                        std::size_t i, int comp_b,
                                        std::size_t j) {
    if (comp_a < 0 || comp_a > 2 || comp_b < 0 || comp_b > 2 || i >= paths.m ||
        j >= paths.m)
        throw std::invalid_argument("empirical_cov: coordinate out of range");
    if (paths.reps < 2)
        throw std::invalid_argument("empirical_cov: needs >= 2 replicates");
    // mean over replicates of the product of exactly centered coordinates;
    // SE from the product's own spread
    NeumaierSum s1, s2;
    std::size_t qa = static_cast<std::size_t>(comp_a) * paths.m + i;
    std::size_t qb = static_cast<std::size_t>(comp_b) * paths.m + j;
    for (std::size_t r = 0; r < paths.reps; ++r) {
        const double* row = paths.row(r);
        double prod = row[qa] * row[qb];
        s1.add(prod);
        s2.add(prod * prod);
    }
    double reps = static_cast<double>(paths.reps);
    double mean = s1.value() / reps;
    double var = std::max(0.0, s2.value() / reps - mean * mean);
    return {mean, std::sqrt(var / reps)};
}

void write_cov_csv(std::ostream& os, const std::vector<CovCell>& cells,
                   double n, bool header) {
    char buf[512];
    if (header) os << "pair,tau,t,n,empirical,se,exact,limit,z,gap\n";
    for (const CovCell& c : cells) {
        int len = std::snprintf(
            buf, sizeof buf, "%s_%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
            comp_str(c.comp_a), comp_str(c.comp_b), c.tau, c.t, n, c.empirical,
            c.se, c.exact, c.limit, c.z, c.gap);
        os.write(buf, len);
    }
}

CellSummary summarize_cells(const std::vector<CovCell>& cells, double k_se) {
    CellSummary s;
    for (const CovCell& c : cells) {
        ++s.total;
        if (std::abs(c.z) <= k_se) ++s.within;
        s.max_abs_z = std::max(s.max_abs_z, std::abs(c.z));
        if (std::isfinite(c.gap)) s.max_gap = std::max(s.max_gap, c.gap);
    }
    s.frac_within =
        s.total ? static_cast<double>(s.within) / static_cast<double>(s.total)
                : 0.0;
    return s;
}

MomentDiagnostics gaussianity(const PathMatrix& paths, int comp,
                              std::size_t j) {
    if (comp < 0 || comp > 2 || j >= paths.m)
        throw std::invalid_argument("gaussianity: coordinate out of range");
    if (paths.reps < 100)
        throw std::invalid_argument(
            "gaussianity: moment bands need >= 100 replicates");
    std::size_t q = static_cast<std::size_t>(comp) * paths.m + j;
    std::size_t reps = paths.reps;
    NeumaierSum s1;
    for (std::size_t r = 0; r < reps; ++r) s1.add(paths.row(r)[q]);
    double mean = s1.value() / static_cast<double>(reps);
    NeumaierSum s2, s3, s4;
    for (std::size_t r = 0; r < reps; ++r) {
        double d = paths.row(r)[q] - mean;
        s2.add(d * d);
        s3.add(d * d * d);
        s4.add(d * d * d * d);
    }
    double m2 = s2.value() / static_cast<double>(reps);
    double m3 = s3.value() / static_cast<double>(reps);
    double m4 = s4.value() / static_cast<double>(reps);
    MomentDiagnostics g;
    g.mean = mean;
    g.sd = std::sqrt(m2);
    g.skewness = m2 > 0 ? m3 / (m2 * std::sqrt(m2)) : 0.0;
    g.excess_kurtosis = m2 > 0 ? m4 / (m2 * m2) - 3.0 : 0.0;
    double n = static_cast<double>(reps);
    g.skew_limit = 5.0 * std::sqrt(6.0 / n);
    g.kurt_limit = 5.0 * std::sqrt(24.0 / n);
    g.gaussian_ok = std::abs(g.skewness) < g.skew_limit &&
                    std::abs(g.excess_kurtosis) < g.kurt_limit;
    return g;
}

CouplingSummary coupling_distance(const PathMatrix& paths) {
    if (paths.mode != SimMode::Coupled || paths.data_poisson.empty())
        throw std::invalid_argument("coupling_distance: needs a Coupled run");
    std::size_t m = paths.m;
    std::vector<double> dr(paths.reps), du(paths.reps), dm(paths.reps);
    for (std::size_t r = 0; r < paths.reps; ++r) {
        const double* a = paths.row(r);
        const double* b = paths.row_poisson(r);
        double sr = 0, su = 0, sm = 0;
        for (std::size_t j = 0; j < m; ++j) {
            sr = std::max(sr, std::abs(a[j] - b[j]));
            su = std::max(su, std::abs(a[m + j] - b[m + j]));
            sm = std::max(sm, std::abs(a[2 * m + j] - b[2 * m + j]));
        }
        dr[r] = sr;
        du[r] = su;
        dm[r] = sm;
    }
    CouplingSummary cs;
    cs.q90_rho = empirical_quantile(std::move(dr), 0.9);
    cs.q90_ups = empirical_quantile(std::move(du), 0.9);
    cs.q90_mu = empirical_quantile(std::move(dm), 0.9);
    cs.q90_mtilde = empirical_quantile(paths.mtilde_gap, 0.9);
    return cs;
}

double empirical_quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("empirical_quantile: empty");
    q = std::clamp(q, 0.0, 1.0);
    std::size_t k = static_cast<std::size_t>(
        std::min<double>(std::floor(q * static_cast<double>(v.size())),
                         static_cast<double>(v.size() - 1)));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k),
                     v.end());
    return v[k];
}

double lemma_ratio(const WeightModel& model, LemmaKind kind, double n,
                   double delta) {
    if (!(n >= 2.0)) throw std::invalid_argument("lemma_ratio: n must be >= 2");
    if (!(delta >= 0.0) || !(delta <= 1.0))
        throw std::invalid_argument("lemma_ratio: delta must lie in [0, 1]");
    if (delta == 0.0) return 0.0;
    double theta = model.theta();
    double denom = std::pow(delta, theta / 2.0);
    if (kind == LemmaKind::L21) {
        double er = series::s0(model, n * delta).value;
        return er / model.beta(n) / denom;
    }
    // window position matters little but is part of the supremum
    double alpha = model.alpha(n);
    double sup = 0.0;
    for (double t1 : {0.0, 0.5 * (1.0 - delta), 1.0 - delta}) {
        if (t1 < 0.0) continue;
        double v = moments::var_M_increment(model, n * t1, n * (t1 + delta),
                                            1e-8 * (1.0 + n))
                       .value;
        sup = std::max(sup, v / alpha / denom);
    }
    return sup;
}

std::vector<LemmaRow> lemma_scan(const WeightModel& model, LemmaKind kind,
                                 const std::vector<double>& n_values,
                                 const std::vector<double>& deltas) {
    std::vector<LemmaRow> rows;
    rows.reserve(n_values.size() * deltas.size());
    for (double n : n_values)
        for (double d : deltas)
            rows.push_back({n, d, lemma_ratio(model, kind, n, d)});
    return rows;
}

double lemma_sup(const std::vector<LemmaRow>& rows) {
    double s = 0.0;
    for (const LemmaRow& r : rows) s = std::max(s, r.ratio);
    return s;
}

}  // namespace urnflow
