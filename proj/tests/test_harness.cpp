#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "urnflow/harness.hpp"
#include "urnflow/limits.hpp"
#include "urnflow/moments.hpp"

using namespace urnflow;

namespace {

ExperimentConfig small_cfg(SimMode mode, std::size_t reps, int threads) {
    ExperimentConfig cfg{WeightModel::power_law(0.5)};
    cfg.mode = mode;
    cfg.n = 400.0;
    cfg.grid = {0.5, 1.0};
    cfg.replicates = reps;
    cfg.seed = 7;
    cfg.threads = threads;
    cfg.head_size = 4096;
    return cfg;
}

}  // namespace

TEST_CASE("experiment output is exactly centered and well scaled") {
    auto cfg = small_cfg(SimMode::Poissonized, 2000, 0);
    PathMatrix pm = run_experiment(cfg);
    REQUIRE(pm.reps == 2000);
    REQUIRE(pm.m == 2);
    REQUIRE(pm.data.size() == 2000 * 6);
    CHECK(pm.scale_r == doctest::Approx(std::sqrt(cfg.model.beta(400.0))));
    CHECK(pm.scale_m ==
          doctest::Approx(std::sqrt(static_cast<double>(cfg.model.alpha(400.0)))));
    CHECK(pm.acceptance_rate > 0.5);
    // every coordinate is centered at its exact mean: sample means must sit
    // within 4 standard errors of zero, and all entries must be finite
    for (int comp = 0; comp < 3; ++comp) {
        for (std::size_t j = 0; j < 2; ++j) {
            double s = 0, ss = 0;
            for (std::size_t r = 0; r < pm.reps; ++r) {
                double v = pm.coord(r, comp, j);
                REQUIRE(std::isfinite(v));
                s += v;
                ss += v * v;
            }
            double mean = s / static_cast<double>(pm.reps);
            double sd = std::sqrt(ss / static_cast<double>(pm.reps) - mean * mean);
            INFO("comp=" << comp << " j=" << j);
            CHECK(std::abs(mean) <= 4.0 * sd / std::sqrt(double(pm.reps)));
        }
    }
}

TEST_CASE("experiment results do not depend on the thread count") {
    auto one = run_experiment(small_cfg(SimMode::Discrete, 300, 1));
    auto three = run_experiment(small_cfg(SimMode::Discrete, 300, 3));
    CHECK(one.data == three.data);
    auto coupled1 = run_experiment(small_cfg(SimMode::Coupled, 200, 1));
    auto coupled4 = run_experiment(small_cfg(SimMode::Coupled, 200, 4));
    CHECK(coupled1.data == coupled4.data);
    CHECK(coupled1.data_poisson == coupled4.data_poisson);
    CHECK(coupled1.mtilde_gap == coupled4.mtilde_gap);
}

TEST_CASE("experiment validates its configuration") {
    auto cfg = small_cfg(SimMode::Poissonized, 0, 1);
    CHECK_THROWS_AS((void)run_experiment(cfg), std::invalid_argument);
    // theta = 0.8 has p_1 = c < 1/2, so alpha(2) = 0: no normalization exists
    ExperimentConfig tiny{WeightModel::power_law(0.8)};
    tiny.mode = SimMode::Discrete;
    tiny.n = 2.0;
    tiny.grid = {1.0};
    tiny.replicates = 10;
    CHECK_THROWS_AS((void)run_experiment(tiny), std::invalid_argument);
}

TEST_CASE("covariance cells cover every pair once with correct references") {
    auto cfg = small_cfg(SimMode::Poissonized, 500, 0);
    PathMatrix pm = run_experiment(cfg);
    auto cells = covariance_cells(pm, cfg.model);
    // 9 component pairs x m(m+1)/2 ordered grid pairs
    CHECK(cells.size() == 9 * 3);
    for (const auto& c : cells) {
        CHECK(c.tau <= c.t);
        CHECK(std::isfinite(c.empirical));
        CHECK(c.se > 0.0);
        // poissonized mode carries exact finite-n references
        CHECK(std::isfinite(c.exact));
        CHECK(std::isfinite(c.limit));
        CHECK(std::isfinite(c.z));
        CHECK(c.gap == std::abs(c.empirical - c.limit));
    }
    // exact references: normalized cov of rho pair (comp 0,0) at (t_i, t_j)
    // equals poisson_cov(RR, n t_i, n t_j) / beta(n)
    double beta = cfg.model.beta(cfg.n);
    for (const auto& c : cells) {
        if (c.comp_a == 0 && c.comp_b == 0) {
            double want = moments::poisson_cov(cfg.model, CovPair::RR,
                                               cfg.n * c.tau, cfg.n * c.t)
                              .value /
                          beta;
            CHECK(c.exact == doctest::Approx(want).epsilon(1e-10));
        }
        if (c.comp_a == 2 && c.comp_b == 2 && c.i == c.j) {
            double want = moments::poisson_cov(cfg.model, CovPair::MM,
                                               cfg.n * c.tau, cfg.n * c.t)
                              .value /
                          static_cast<double>(cfg.model.alpha(cfg.n));
            CHECK(c.exact == doctest::Approx(want).epsilon(1e-10));
        }
        if (c.comp_a == 0 && c.comp_b == 0) {
            double lim = limits::limit_cov(0.5, LimitPair::RhoRho, c.tau, c.t);
            CHECK(c.limit == doctest::Approx(lim).epsilon(1e-12));
        }
    }
    // a healthy run has most cells within 4 SE
    auto summary = summarize_cells(cells, 4.0);
    CHECK(summary.total == cells.size());
    CHECK(summary.within >= summary.total - 2);
    CHECK(summary.frac_within > 0.8);
    CHECK(summary.max_abs_z >= 0.0);
}

TEST_CASE("empirical covariance agrees with a direct computation") {
    auto cfg = small_cfg(SimMode::Poissonized, 400, 0);
    PathMatrix pm = run_experiment(cfg);
    auto [cov, se] = empirical_cov(pm, 0, 0, 1, 1);
    double s = 0;
    for (std::size_t r = 0; r < pm.reps; ++r)
        s += pm.coord(r, 0, 0) * pm.coord(r, 1, 1);
    CHECK(cov == doctest::Approx(s / static_cast<double>(pm.reps))
                     .epsilon(1e-12));
    CHECK(se > 0.0);
    CHECK_THROWS_AS((void)empirical_cov(pm, 0, 0, 1, 5), std::invalid_argument);
    CHECK_THROWS_AS((void)empirical_cov(pm, 3, 0, 1, 1), std::invalid_argument);
}

TEST_CASE("degenerate coordinates get a zero standard error") {
    // single urn with p = 1: R is constant 1 once any ball lands, M is 0
    ExperimentConfig cfg{WeightModel::finite({1.0})};
    cfg.mode = SimMode::Discrete;
    cfg.n = 50.0;
    cfg.grid = {1.0};
    cfg.replicates = 50;
    cfg.seed = 2;
    cfg.threads = 1;
    PathMatrix pm = run_experiment(cfg);
    auto [cov, se] = empirical_cov(pm, 0, 0, 0, 0);
    CHECK(cov == 0.0);
    CHECK(se == 0.0);
}

TEST_CASE("gaussianity verdict is sound in both directions") {
    // hand-built matrix of true normals must pass
    PathMatrix pm;
    pm.mode = SimMode::Poissonized;
    pm.reps = 5000;
    pm.m = 1;
    pm.grid = {1.0};
    pm.data.resize(pm.reps * 3);
    RngStream rng(123, 0);
    for (auto& v : pm.data) v = rng.normal();
    auto d = gaussianity(pm, 0, 0);
    CHECK(d.gaussian_ok);
    CHECK(std::abs(d.skewness) < d.skew_limit);
    CHECK(std::abs(d.excess_kurtosis) < d.kurt_limit);
    CHECK(d.skew_limit == doctest::Approx(5.0 * std::sqrt(6.0 / 5000.0)));
    CHECK(d.kurt_limit == doctest::Approx(5.0 * std::sqrt(24.0 / 5000.0)));
    CHECK(d.sd == doctest::Approx(1.0).epsilon(0.05));

    // an exponential coordinate (skewness 2) must fail
    for (auto& v : pm.data) v = rng.exponential();
    auto bad = gaussianity(pm, 0, 0);
    CHECK_FALSE(bad.gaussian_ok);
    CHECK(bad.skewness > 1.0);

    // moment bands are meaningless for tiny samples
    pm.reps = 50;
    pm.data.resize(50 * 3);
    CHECK_THROWS_AS((void)gaussianity(pm, 0, 0), std::invalid_argument);
}

TEST_CASE("simulated marginals look gaussian at moderate n") {
    auto cfg = small_cfg(SimMode::Poissonized, 4000, 0);
    cfg.n = 2000.0;
    PathMatrix pm = run_experiment(cfg);
    for (int comp = 0; comp < 2; ++comp) {
        auto d = gaussianity(pm, comp, 1);
        INFO("comp=" << comp << " skew=" << d.skewness
                     << " kurt=" << d.excess_kurtosis);
        CHECK(d.gaussian_ok);
    }
}

TEST_CASE("coupling distances require a coupled run and shrink with n") {
    auto cfg = small_cfg(SimMode::Poissonized, 200, 0);
    PathMatrix pm = run_experiment(cfg);
    CHECK_THROWS_AS((void)coupling_distance(pm), std::invalid_argument);

    auto ccfg = small_cfg(SimMode::Coupled, 300, 0);
    PathMatrix cp = run_experiment(ccfg);
    REQUIRE(cp.mtilde_gap.size() == 300);
    auto cs = coupling_distance(cp);
    CHECK(cs.q90_rho > 0.0);
    CHECK(cs.q90_ups > 0.0);
    CHECK(cs.q90_mu > 0.0);
    CHECK(cs.q90_mtilde >= 0.0);
    CHECK(std::isfinite(cs.q90_rho + cs.q90_ups + cs.q90_mu + cs.q90_mtilde));
}

TEST_CASE("empirical quantile matches order statistics") {
    std::vector<double> v = {5, 1, 4, 2, 3};
    CHECK(empirical_quantile(v, 0.0) == 1.0);
    CHECK(empirical_quantile(v, 1.0) == 5.0);
    CHECK(empirical_quantile(v, 0.5) == 3.0);
    CHECK_THROWS_AS((void)empirical_quantile({}, 0.5), std::invalid_argument);
}

TEST_CASE("lemma ratios behave like the bounds promise") {
    auto w = WeightModel::power_law(0.5);
    // occupancy growth: E R(n delta)/beta(n) ~ delta^theta, so the ratio
    // against delta^{theta/2} tends to delta^{theta/2} -> small with delta
    double r_small = lemma_ratio(w, LemmaKind::L21, 1e4, 1e-4);
    double r_one = lemma_ratio(w, LemmaKind::L21, 1e4, 1.0);
    CHECK(r_small < r_one);
    CHECK(r_one == doctest::Approx(1.77).epsilon(0.05));
    CHECK(lemma_ratio(w, LemmaKind::L23, 1e4, 0.5) > 0.0);
    CHECK(lemma_ratio(w, LemmaKind::L21, 1e4, 0.0) == 0.0);
    CHECK_THROWS_AS((void)lemma_ratio(w, LemmaKind::L21, 1e4, 1.5),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)lemma_ratio(w, LemmaKind::L21, 0.5, 0.5),
                    std::invalid_argument);

    auto rows = lemma_scan(w, LemmaKind::L21, {1e3, 1e4}, {0.01, 0.1, 1.0});
    CHECK(rows.size() == 6);
    double sup = lemma_sup(rows);
    for (const auto& row : rows) CHECK(row.ratio <= sup);
    CHECK(sup < 20.0);  // the recorded uniform constant
}

TEST_CASE("covariance csv layout is stable") {
    CovCell c;
    c.comp_a = 0;
    c.comp_b = 2;
    c.tau = 0.5;
    c.t = 1.0;
    c.empirical = 0.25;
    c.se = 0.125;
    c.exact = 0.25;
    c.limit = 0.5;
    c.z = 0.0;
    c.gap = 0.25;
    std::ostringstream os;
    write_cov_csv(os, {c}, 1000.0);
    CHECK(os.str() ==
          "pair,tau,t,n,empirical,se,exact,limit,z,gap\n"
          "rho_mu,0.5,1,1000,0.25,0.125,0.25,0.5,0,0.25\n");
}
