#include "urnflow/acceptance.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "urnflow/harness.hpp"
#include "urnflow/limits.hpp"
#include "urnflow/moments.hpp"
#include "urnflow/rng.hpp"
#include "urnflow/svg.hpp"

namespace urnflow {
namespace {

constexpr int kStages = 9;  // criteria 1..9; 10 is the double-run comparison

struct SuiteData {
    std::map<std::string, std::string> csv;  // filename -> bytes
    std::array<double, kStages> seconds{};
    std::array<bool, kStages> ok{};
    std::array<std::string, kStages> detail{};
    PathMatrix gauss_paths;  // discrete theta=0.5 n=1e5 tier, reused by stage 6
    // stage 5 trend values and stage 7/9 rows, kept for the SVG charts
    std::array<double, 3> trend_gap{};
    std::vector<LemmaRow> lemma21, lemma23;
};

double now_minus(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::vector<double> default_grid() {
    std::vector<double> g(10);
    for (int i = 0; i < 10; ++i) g[i] = (i + 1) / 10.0;
    return g;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string brief(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// dedicated rng stream ids, far away from the replicate ids 0..reps-1
constexpr std::uint64_t kStreamIdentity = (1ull << 40) + 2;
constexpr std::uint64_t kStreamScaling = (1ull << 40) + 8;

const char* family_name(const WeightModel& w) {
    switch (w.family()) {
        case Family::PowerLaw: return "power_law";
        case Family::LogPowerLaw: return "log_power_law";
        case Family::ThetaOneLog: return "theta_one_log";
        case Family::FiniteVector: return "finite";
    }
    return "?";
}

CovPair cov_pair_of(LimitPair p) {
    switch (p) {
        case LimitPair::RhoRho: return CovPair::RR;
        case LimitPair::UpsUps: return CovPair::UU;
        case LimitPair::MuMu: return CovPair::MM;
        case LimitPair::RhoUps: return CovPair::RU;
        case LimitPair::UpsRho: return CovPair::UR;
        case LimitPair::RhoMu: return CovPair::RM;
        case LimitPair::MuRho: return CovPair::MR;
        case LimitPair::MuUps: return CovPair::MU;
        case LimitPair::UpsMu: return CovPair::UM;
    }
    throw std::logic_error("cov_pair_of: unknown pair");
}

// ---- criterion 1: exact finite-vector law vs the simulator -----------------

void stage_finite_oracle(const AcceptanceOptions& opt, SuiteData& d) {
    auto t0 = std::chrono::steady_clock::now();
    const double p[3] = {0.5, 0.25, 0.25};
    // joint law of (R4, U4, M4) by brute enumeration of all 3^4 sequences;
    // M4 = 4 * missing mass takes the integer values 0..3 exactly
    std::map<std::array<int, 3>, double> atoms;
    for (int s = 0; s < 81; ++s) {
        int c[3] = {0, 0, 0};
        double pr = 1.0;
        for (int b = 0, x = s; b < 4; ++b, x /= 3) {
            pr *= p[x % 3];
            ++c[x % 3];
        }
        int R = 0, U = 0;
        double miss = 0.0;
        for (int i = 0; i < 3; ++i) {
            if (c[i] > 0) ++R;
            if (c[i] % 2 == 1) ++U;
            if (c[i] == 0) miss += p[i];
        }
        atoms[{R, U, static_cast<int>(std::lround(4.0 * miss))}] += pr;
    }

    const std::size_t reps = 100000;
    WeightModel w = WeightModel::finite({0.5, 0.25, 0.25});
    UrnSampler sampler(w);
    BallStream stream{SimMode::Discrete, 4.0, {1.0}};
    std::map<std::array<int, 3>, std::size_t> hits;
    for (std::size_t r = 0; r < reps; ++r) {
        RngStream rng(opt.seed, r);
        std::vector<PathSample> ps = simulate(sampler, stream, rng, r);
        hits[{static_cast<int>(std::lround(ps[0].rstar[0][0])),
              static_cast<int>(std::lround(ps[0].u[0])),
              static_cast<int>(std::lround(ps[0].m[0]))}] += 1;
    }

    bool ok = true;
    double max_z = 0.0;
    std::size_t strays = 0;
    for (const auto& [key, cnt] : hits)
        if (!atoms.count(key)) ++strays;
    std::ostringstream csv;
    csv << "R,U,M,prob_exact,prob_empirical,se,z\n";
    for (const auto& [key, prob] : atoms) {
        double emp = hits.count(key)
                         ? static_cast<double>(hits.at(key)) / static_cast<double>(reps)
                         : 0.0;
        double se = std::sqrt(prob * (1.0 - prob) / static_cast<double>(reps));
        double z = (emp - prob) / se;
        max_z = std::max(max_z, std::abs(z));
        if (std::abs(z) > 4.0) ok = false;
        csv << key[0] << ',' << key[1] << ',' << key[2] << ',' << num(prob)
            << ',' << num(emp) << ',' << num(se) << ',' << num(z) << '\n';
    }
    if (strays > 0) ok = false;
    d.csv["finite_atoms.csv"] = csv.str();
    d.seconds[0] = now_minus(t0);
    bool in_time = d.seconds[0] < 5.0;
    d.ok[0] = ok && in_time;
    d.detail[0] = std::to_string(atoms.size()) + " atoms, max|z| = " +
                  brief(max_z) + (strays ? ", impossible atoms observed" : "") +
                  (in_time ? "" : ", over 5 s budget");
}

// ---- criterion 2: direct vs identity covariance routes ---------------------

void stage_route_identities(const AcceptanceOptions& opt, SuiteData& d) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<WeightModel> models{
        WeightModel::power_law(0.3), WeightModel::power_law(0.5),
        WeightModel::power_law(0.8), WeightModel::theta_one_log(2.0)};
    const CovPair pairs[4] = {CovPair::UU, CovPair::RU, CovPair::UR,
                              CovPair::MM};
    RngStream rng(opt.seed, kStreamIdentity);
    std::ostringstream csv;
    csv << "case,family,theta,gamma,pair,tau,t,direct,identity,rel_err\n";
    double max_rel = 0.0;
    bool ok = true;
    for (int cse = 0; cse < 50; ++cse) {
        const WeightModel& w = models[rng.next_u64() % 4];
        double t = std::pow(10.0, 4.0 * rng.uniform01());
        double tau = t * std::pow(10.0, -2.0 * rng.uniform01());
        for (CovPair pr : pairs) {
            double probe =
                moments::poisson_cov(w, pr, tau, t, Route::Direct, 1e-8 * (1.0 + t))
                    .value;
            double tol = std::max(1e-13, 1e-10 * std::abs(probe));
            double direct =
                moments::poisson_cov(w, pr, tau, t, Route::Direct, tol).value;
            double ident =
                moments::poisson_cov(w, pr, tau, t, Route::Identity, tol).value;
            double rel = std::abs(direct - ident) /
                         std::max({std::abs(direct), std::abs(ident), 1e-300});
            max_rel = std::max(max_rel, rel);
            if (!(rel <= 1e-8)) ok = false;
            csv << cse << ',' << family_name(w) << ',' << num(w.theta()) << ','
                << num(w.gamma()) << ',' << moments::pair_name(pr) << ','
                << num(tau) << ',' << num(t) << ',' << num(direct) << ','
                << num(ident) << ',' << num(rel) << '\n';
        }
    }
    d.csv["identity_routes.csv"] = csv.str();
    d.seconds[1] = now_minus(t0);
    bool in_time = d.seconds[1] < 30.0;
    d.ok[1] = ok && in_time;
    d.detail[1] = "200 comparisons, max rel err = " + brief(max_rel) +
                  (in_time ? "" : ", over 30 s budget");
}

// ---- criterion 3: convergence of poisson_cov / beta(n) to the limit --------

void stage_limit_scan(const AcceptanceOptions&, SuiteData& d) {
    auto t0 = std::chrono::steady_clock::now();
    const std::array<std::pair<double, double>, 3> pts{
        {{0.2, 0.5}, {0.5, 1.0}, {1.0, 1.0}}};
    std::ostringstream csv;
    csv << "family,theta,pair,tau,t,n,value,limit,rel_gap\n";
    bool ok = true;
    double worst_gap8 = 0.0;
    std::string worst_label;
    for (double theta : {0.3, 0.5, 0.8}) {
        WeightModel w = WeightModel::power_law(theta);
        for (LimitPair lp : limits::all_pairs()) {
            CovPair cp = cov_pair_of(lp);
            for (auto [tau, t] : pts) {
                double lim = limits::limit_cov(theta, lp, tau, t);
                double gap2 = 0.0, gap8 = 0.0;
                for (double n : {1e2, 1e8}) {
                    double tol = 1e-6 * w.beta(n) * std::max(std::abs(lim), 1e-2);
                    double val =
                        moments::poisson_cov(w, cp, n * tau, n * t, Route::Direct, tol)
                            .value /
                        w.beta(n);
                    double gap = std::abs(val - lim) / std::abs(lim);
                    (n < 1e3 ? gap2 : gap8) = gap;
                    csv << "power_law," << num(theta) << ','
                        << limits::pair_name(lp) << ',' << num(tau) << ','
                        << num(t) << ',' << num(n) << ',' << num(val) << ','
                        << num(lim) << ',' << num(gap) << '\n';
                }
                if (!(gap8 < gap2 && gap8 < 0.05)) ok = false;
                if (gap8 > worst_gap8) {
                    worst_gap8 = gap8;
                    worst_label = std::string(limits::pair_name(lp)) + " theta=" +
                                  brief(theta);
                }
            }
        }
    }
    // theta = 1: the mu cross-covariances, under the mixed sqrt(beta alpha)
    // scale, must shrink monotonically toward zero (they decay like
    // 1/sqrt(log n), so slowly that only the trend is testable)
    WeightModel w1 = WeightModel::theta_one_log(2.0);
    const LimitPair cross[4] = {LimitPair::RhoMu, LimitPair::MuRho,
                                LimitPair::UpsMu, LimitPair::MuUps};
    double first = 0.0, last = 0.0;
    for (LimitPair lp : cross) {
        CovPair cp = cov_pair_of(lp);
        for (auto [tau, t] : pts) {
            double prev = std::numeric_limits<double>::infinity();
            for (double n : {1e2, 1e4, 1e6, 1e8}) {
                double tol = 1e-8 * (1.0 + n);
                double scaled =
                    std::abs(moments::poisson_cov(w1, cp, n * tau, n * t,
                                                  Route::Direct, tol)
                                 .value) /
                    (std::sqrt(w1.beta(n)) *
                     std::sqrt(static_cast<double>(w1.alpha(n))));
                csv << "theta_one_log,1," << limits::pair_name(lp) << ','
                    << num(tau) << ',' << num(t) << ',' << num(n) << ','
                    << num(scaled) << ",0," << num(scaled) << '\n';
                if (!(scaled < prev)) ok = false;
                if (n == 1e2) first = scaled;
                if (n == 1e8) last = scaled;
                prev = scaled;
            }
        }
    }
    d.csv["limit_scan.csv"] = csv.str();
    d.seconds[2] = now_minus(t0);
    bool in_time = d.seconds[2] < 300.0;
    d.ok[2] = ok && in_time;
    d.detail[2] = "worst gap at n=1e8: " + brief(worst_gap8) + " (" +
                  worst_label + "); theta=1 scaled cross-cov " + brief(first) +
                  " -> " + brief(last) + (in_time ? "" : ", over 5 min budget");
}

// ---- criterion 4: poissonized Monte Carlo vs exact series ------------------

void stage_mc_vs_exact(const AcceptanceOptions& opt, int threads, SuiteData& d) {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg{WeightModel::power_law(0.5),
                         SimMode::Poissonized,
                         1e4,
                         default_grid(),
                         10000,
                         opt.seed,
                         threads,
                         UrnSampler::kDefaultHeadSize};
    PathMatrix pm = run_experiment(cfg);
    std::vector<CovCell> cells = covariance_cells(pm, cfg.model);
    CellSummary s = summarize_cells(cells, 4.0);
    std::ostringstream csv;
    write_cov_csv(csv, cells, cfg.n);
    d.csv["cov_poissonized_theta05_n10000.csv"] = csv.str();
    d.seconds[3] = now_minus(t0);
    bool in_time = d.seconds[3] < 600.0;
    d.ok[3] = s.frac_within >= 0.95 && in_time;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "%zu/%zu cells within 4 SE (%.1f%%), max|z| = %.2f%s",
                  s.within, s.total, 100.0 * s.frac_within, s.max_abs_z,
                  in_time ? "" : ", over 10 min budget");
    d.detail[3] = buf;
}

// ---- criterion 5: discrete Monte Carlo vs the limit, trend test ------------

void stage_mc_vs_limit(const AcceptanceOptions& opt, int threads, SuiteData& d) {
    auto t0 = std::chrono::steady_clock::now();
    const double tiers[3] = {1e3, 1e4, 1e5};
    double gap[3] = {0, 0, 0}, se_at[3] = {0, 0, 0};
    for (int k = 0; k < 3; ++k) {
        ExperimentConfig cfg{WeightModel::power_law(0.5),
                             SimMode::Discrete,
                             tiers[k],
                             default_grid(),
                             5000,
                             opt.seed,
                             threads,
                             UrnSampler::kDefaultHeadSize};
        PathMatrix pm = run_experiment(cfg);
        std::vector<CovCell> cells = covariance_cells(pm, cfg.model);
        for (const CovCell& c : cells)
            if (std::isfinite(c.gap) && c.gap > gap[k]) {
                gap[k] = c.gap;
                se_at[k] = c.se;
            }
        std::ostringstream csv;
        write_cov_csv(csv, cells, cfg.n);
        char name[64];
        std::snprintf(name, sizeof name, "cov_discrete_theta05_n%.0f.csv",
                      tiers[k]);
        d.csv[name] = csv.str();
        if (k == 2) d.gauss_paths = std::move(pm);
        d.trend_gap[k] = gap[k];
    }
    bool trend_ok =
        gap[1] <= gap[0] + 2.0 * std::hypot(se_at[0], se_at[1]) &&
        gap[2] <= gap[1] + 2.0 * std::hypot(se_at[1], se_at[2]);

    // theta = 1 regime: the same protocol, gating the mu cross-covariances
    // against zero; their true scaled values decay only like 1/sqrt(log n)
    WeightModel w1 = WeightModel::theta_one_log(2.0);
    double worst_z = 0.0;
    for (int k = 0; k < 3; ++k) {
        ExperimentConfig cfg{w1,       SimMode::Discrete, tiers[k],
                             default_grid(), 5000,       opt.seed,
                             threads,  UrnSampler::kDefaultHeadSize};
        PathMatrix pm = run_experiment(cfg);
        std::vector<CovCell> cells = covariance_cells(pm, cfg.model);
        for (const CovCell& c : cells) {
            bool mu_cross = (c.comp_a == 2) != (c.comp_b == 2);
            if (mu_cross) worst_z = std::max(worst_z, std::abs(c.z));
        }
        std::ostringstream csv;
        write_cov_csv(csv, cells, cfg.n);
        char name[64];
        std::snprintf(name, sizeof name, "cov_discrete_log1_n%.0f.csv",
                      tiers[k]);
        d.csv[name] = csv.str();
    }
    bool theta1_ok = worst_z <= 4.0;
    // the exact series says these cells are not yet near zero at n=1e5
    double n5 = 1e5, tol5 = 1e-8 * (1.0 + n5);
    double mix = std::sqrt(w1.beta(n5)) *
                 std::sqrt(static_cast<double>(w1.alpha(n5)));
    double srm =
        moments::poisson_cov(w1, CovPair::RM, n5, n5, Route::Direct, tol5).value /
        mix;
    double sum_ =
        moments::poisson_cov(w1, CovPair::UM, n5, n5, Route::Direct, tol5).value /
        mix;
    d.seconds[4] = now_minus(t0);
    bool in_time = d.seconds[4] < 1800.0;
    d.ok[4] = trend_ok && theta1_ok && in_time;
    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "max gap %.3g -> %.3g -> %.3g (%s); theta=1 mu-cross max|z| "
                  "= %.1f (series at tau=t=n: rho_mu %.3f, ups_mu %.3f)%s",
                  gap[0], gap[1], gap[2], trend_ok ? "trend ok" : "trend broken",
                  worst_z, srm, sum_, in_time ? "" : ", over 30 min budget");
    d.detail[4] = buf;
}

// ---- criterion 6: gaussianity of the normalized marginals ------------------

void stage_gaussianity(const AcceptanceOptions&, SuiteData& d) {
    auto t0 = std::chrono::steady_clock::now();
    const PathMatrix& pm = d.gauss_paths;
    std::ostringstream csv;
    csv << "comp,t,n,mean,sd,skewness,excess_kurtosis,skew_band,kurt_band,ok\n";
    bool ok = pm.reps > 0;
    double worst_skew = 0.0, worst_kurt = 0.0;
    const char* comps[3] = {"rho", "ups", "mu"};
    for (std::size_t j : {std::size_t(4), std::size_t(9)}) {
        for (int comp = 0; comp < 3; ++comp) {
            MomentDiagnostics g = gaussianity(pm, comp, j);
            worst_skew = std::max(worst_skew, std::abs(g.skewness));
            worst_kurt = std::max(worst_kurt, std::abs(g.excess_kurtosis));
            if (!g.gaussian_ok) ok = false;
            csv << comps[comp] << ',' << num(pm.grid[j]) << ',' << num(pm.n)
                << ',' << num(g.mean) << ',' << num(g.sd) << ','
                << num(g.skewness) << ',' << num(g.excess_kurtosis) << ','
                << num(g.skew_limit) << ',' << num(g.kurt_limit) << ','
                << (g.gaussian_ok ? 1 : 0) << '\n';
        }
    }
    d.csv["gaussianity.csv"] = csv.str();
    d.seconds[5] = now_minus(t0);
    d.ok[5] = ok;
    MomentDiagnostics band = gaussianity(pm, 0, 9);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "max|skew| = %.4f (band %.4f), max|exkurt| = %.4f (band %.4f)",
                  worst_skew, band.skew_limit, worst_kurt, band.kurt_limit);
    d.detail[5] = buf;
}

// ---- criterion 7: uniform lemma-bound ratios --------------------------------

void stage_lemma_bounds(const AcceptanceOptions&, SuiteData& d) {
    auto t0 = std::chrono::steady_clock::now();
    WeightModel w = WeightModel::power_law(0.5);
    std::vector<double> ns{1e3, 1e4, 1e5, 1e6, 1e7};
    std::vector<double> ds{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    d.lemma21 = lemma_scan(w, LemmaKind::L21, ns, ds);
    d.lemma23 = lemma_scan(w, LemmaKind::L23, ns, ds);
    double s21 = lemma_sup(d.lemma21), s23 = lemma_sup(d.lemma23);
    std::ostringstream csv;
    csv << "kind,n,delta,ratio\n";
    for (const LemmaRow& r : d.lemma21)
        csv << "occupancy_growth," << num(r.n) << ',' << num(r.delta) << ','
            << num(r.ratio) << '\n';
    for (const LemmaRow& r : d.lemma23)
        csv << "missing_mass_increment," << num(r.n) << ',' << num(r.delta)
            << ',' << num(r.ratio) << '\n';
    d.csv["lemma_bounds.csv"] = csv.str();
    d.seconds[6] = now_minus(t0);
    d.ok[6] = std::isfinite(s21) && std::isfinite(s23) &&
              s21 <= kLemmaConstant && s23 <= kLemmaConstant;
    d.detail[6] = "sup ratios " + brief(s21) + " and " + brief(s23) +
                  " vs ceiling " + brief(kLemmaConstant);
}

// ---- criterion 8: self-similarity residuals and PSD of the limit matrix ----

void stage_scaling_psd(const AcceptanceOptions& opt, SuiteData& d) {
    auto t0 = std::chrono::steady_clock::now();
    RngStream rng(opt.seed, kStreamScaling);
    std::ostringstream csv;
    csv << "case,theta,a,tau,t,max_residual\n";
    double worst = 0.0;
    for (int cse = 0; cse < 100; ++cse) {
        double theta = 0.05 + 0.9 * rng.uniform01();
        double a = 0.25 * std::pow(16.0, rng.uniform01());
        double t = 0.25 * std::pow(16.0, rng.uniform01());
        double tau = t * rng.uniform_oo();
        double r = 0.0;
        for (LimitPair lp : limits::all_pairs())
            r = std::max(r, limits::self_similarity_residual(theta, lp, a, tau, t));
        worst = std::max(worst, r);
        csv << cse << ',' << num(theta) << ',' << num(a) << ',' << num(tau)
            << ',' << num(t) << ',' << num(r) << '\n';
        // same tuple in the theta=1 regime, over its nonzero components
        double r1 = 0.0;
        for (LimitPair lp : {LimitPair::RhoRho, LimitPair::UpsUps,
                             LimitPair::RhoUps, LimitPair::MuMu})
            r1 = std::max(r1, limits::self_similarity_residual(1.0, lp, a, tau, t));
        worst = std::max(worst, r1);
        csv << cse << ",1," << num(a) << ',' << num(tau) << ',' << num(t) << ','
            << num(r1) << '\n';
    }
    bool scaling_ok = worst <= 1e-12;
    d.csv["self_similarity.csv"] = csv.str();

    std::ostringstream psd;
    psd << "theta,min_eigenvalue,trace,psd\n";
    bool psd_ok = true;
    double worst_ratio = 0.0;
    for (double theta : {0.3, 0.5, 0.8, 1.0}) {
        LimitMatrixResult res = limits::limit_matrix(theta, default_grid());
        psd_ok = psd_ok && res.psd;
        double tr = res.cov.trace();
        worst_ratio = std::min(worst_ratio, res.min_eigenvalue / tr);
        psd << num(theta) << ',' << num(res.min_eigenvalue) << ',' << num(tr)
            << ',' << (res.psd ? 1 : 0) << '\n';
    }
    d.csv["limit_psd.csv"] = psd.str();
    d.seconds[7] = now_minus(t0);
    d.ok[7] = scaling_ok && psd_ok;
    d.detail[7] = "max residual " + brief(worst) +
                  ", min eigenvalue/trace " + brief(worst_ratio);
}

// ---- criterion 9: coupling distances shrink with n --------------------------

std::pair<double, double> q90_with_half(const std::vector<double>& v) {
    std::vector<double> s(v);
    std::sort(s.begin(), s.end());
    auto m = static_cast<double>(s.size());
    auto at = [&](double r) {
        long i = std::lround(r);
        i = std::clamp<long>(i, 0, static_cast<long>(s.size()) - 1);
        return s[static_cast<std::size_t>(i)];
    };
    double shift = 2.0 * std::sqrt(0.9 * 0.1 * m);
    return {empirical_quantile(v, 0.9),
            0.5 * (at(0.9 * m + shift) - at(0.9 * m - shift))};
}

void stage_coupling(const AcceptanceOptions& opt, int threads, SuiteData& d) {
    auto t0 = std::chrono::steady_clock::now();
    const double tiers[3] = {1e3, 1e4, 1e5};
    double q[3][4], half[3][4];
    std::ostringstream csv;
    csv << "n,metric,q90,band_half\n";
    const char* metric[4] = {"rho", "ups", "mu", "mtilde"};
    for (int k = 0; k < 3; ++k) {
        ExperimentConfig cfg{WeightModel::power_law(0.5),
                             SimMode::Coupled,
                             tiers[k],
                             default_grid(),
                             500,
                             opt.seed,
                             threads,
                             UrnSampler::kDefaultHeadSize};
        PathMatrix pm = run_experiment(cfg);
        for (int comp = 0; comp < 3; ++comp) {
            std::vector<double> sup(pm.reps);
            for (std::size_t r = 0; r < pm.reps; ++r) {
                double s = 0.0;
                const double* a = pm.row(r) + static_cast<std::size_t>(comp) * pm.m;
                const double* b =
                    pm.row_poisson(r) + static_cast<std::size_t>(comp) * pm.m;
                for (std::size_t j = 0; j < pm.m; ++j)
                    s = std::max(s, std::abs(a[j] - b[j]));
                sup[r] = s;
            }
            std::tie(q[k][comp], half[k][comp]) = q90_with_half(sup);
        }
        std::tie(q[k][3], half[k][3]) = q90_with_half(pm.mtilde_gap);
        for (int j = 0; j < 4; ++j)
            csv << num(tiers[k]) << ',' << metric[j] << ',' << num(q[k][j])
                << ',' << num(half[k][j]) << '\n';
    }
    bool ok = true;
    for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 2; ++k)
            if (!(q[k + 1][j] <= q[k][j] + std::hypot(half[k][j], half[k + 1][j])))
                ok = false;
    d.csv["coupling.csv"] = csv.str();
    d.seconds[8] = now_minus(t0);
    d.ok[8] = ok;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "q90 sup rho %.3f -> %.3f -> %.3f, mtilde %.3f -> %.3f -> %.3f",
                  q[0][0], q[1][0], q[2][0], q[0][3], q[1][3], q[2][3]);
    d.detail[8] = buf;
}

SuiteData build_suite(const AcceptanceOptions& opt, int threads,
                      std::ostream* log) {
    SuiteData d;
    auto emit = [&](int idx) {
        if (!log) return;
        char buf[64];
        std::snprintf(buf, sizeof buf, "[%2d] %s %8.1fs  ", idx + 1,
                      d.ok[idx] ? "PASS" : "FAIL", d.seconds[idx]);
        *log << buf << d.detail[idx] << std::endl;
    };
    stage_finite_oracle(opt, d);
    emit(0);
    stage_route_identities(opt, d);
    emit(1);
    stage_limit_scan(opt, d);
    emit(2);
    stage_mc_vs_exact(opt, threads, d);
    emit(3);
    stage_mc_vs_limit(opt, threads, d);
    emit(4);
    stage_gaussianity(opt, d);
    emit(5);
    stage_lemma_bounds(opt, d);
    emit(6);
    stage_scaling_psd(opt, d);
    emit(7);
    stage_coupling(opt, threads, d);
    emit(8);
    return d;
}

void write_artifacts(const AcceptanceOptions& opt, const SuiteData& d) {
    namespace fs = std::filesystem;
    fs::create_directories(opt.out_dir);
    for (const auto& [name, bytes] : d.csv) {
        std::ofstream f(fs::path(opt.out_dir) / name, std::ios::binary);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    if (!opt.plots) return;
    {
        SvgSeries s{"theta=0.5 discrete", {1e3, 1e4, 1e5},
                    {d.trend_gap[0], d.trend_gap[1], d.trend_gap[2]}};
        std::ofstream f(fs::path(opt.out_dir) / "gap_vs_n.svg");
        write_line_chart(f, "max |empirical - limit| covariance gap", "n",
                         "max gap", {s}, true, true);
    }
    for (int kind = 0; kind < 2; ++kind) {
        const auto& rows = kind == 0 ? d.lemma21 : d.lemma23;
        std::map<double, SvgSeries> by_n;
        for (const LemmaRow& r : rows) {
            SvgSeries& s = by_n[r.n];
            if (s.label.empty()) s.label = "n=" + brief(r.n);
            s.x.push_back(r.delta);
            s.y.push_back(r.ratio);
        }
        std::vector<SvgSeries> series;
        for (auto& [n, s] : by_n) series.push_back(std::move(s));
        std::ofstream f(fs::path(opt.out_dir) /
                        (kind == 0 ? "lemma_occupancy_ratio_vs_delta.svg"
                                   : "lemma_missing_mass_ratio_vs_delta.svg"));
        write_line_chart(f,
                         kind == 0 ? "occupancy growth ratio"
                                   : "missing-mass increment ratio",
                         "delta", "ratio / delta^(theta/2)", series, true,
                         false);
    }
}

}  // namespace

bool all_pass(const std::vector<CriterionResult>& results) {
    for (const CriterionResult& r : results)
        if (!r.pass) return false;
    return true;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            std::ostream& log) {
    static const char* names[kStages] = {
        "finite-vector exact law",  "covariance route identities",
        "limit convergence scan",   "poissonized MC vs exact series",
        "discrete MC vs limit",     "marginal gaussianity",
        "uniform lemma bounds",     "self-similarity and PSD",
        "clock coupling distance"};
    unsigned hw = std::thread::hardware_concurrency();
    int t1 = opt.threads > 0 ? opt.threads : static_cast<int>(hw ? hw : 1);
    int t2 = t1 == 1 ? 2 : 1;
    log << "acceptance suite: seed=" << opt.seed << " workers=" << t1
        << " out=" << opt.out_dir << std::endl;

    SuiteData d1 = build_suite(opt, t1, &log);
    write_artifacts(opt, d1);

    std::vector<CriterionResult> results;
    for (int i = 0; i < kStages; ++i)
        results.push_back(
            {i + 1, names[i], d1.ok[i], d1.seconds[i], d1.detail[i]});

    // criterion 10: regenerate every CSV with a different worker count and
    // compare bytes; the second pass is silent
    auto t0 = std::chrono::steady_clock::now();
    SuiteData d2 = build_suite(opt, t2, nullptr);
    std::size_t mismatches = 0;
    std::string first_bad;
    if (d1.csv.size() != d2.csv.size()) ++mismatches;
    for (const auto& [name, bytes] : d1.csv) {
        auto it = d2.csv.find(name);
        if (it == d2.csv.end() || it->second != bytes) {
            ++mismatches;
            if (first_bad.empty()) first_bad = name;
        }
    }
    CriterionResult det;
    det.id = 10;
    det.name = "artifact determinism";
    det.pass = mismatches == 0;
    det.seconds = now_minus(t0);
    char buf[160];
    if (det.pass)
        std::snprintf(buf, sizeof buf,
                      "%zu CSV artifacts byte-identical across %d and %d workers",
                      d1.csv.size(), t1, t2);
    else
        std::snprintf(buf, sizeof buf, "%zu artifact mismatches (first: %s)",
                      mismatches, first_bad.c_str());
    det.detail = buf;
    results.push_back(det);
    {
        char line[64];
        std::snprintf(line, sizeof line, "[10] %s %8.1fs  ",
                      det.pass ? "PASS" : "FAIL", det.seconds);
        log << line << det.detail << std::endl;
    }
    log << (all_pass(results) ? "ACCEPTANCE: PASS" : "ACCEPTANCE: FAIL")
        << std::endl;
    return results;
}

}  // namespace urnflow
