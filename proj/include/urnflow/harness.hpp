#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "urnflow/sampler.hpp"
#include "urnflow/weights.hpp"

namespace urnflow {

// One Monte Carlo experiment: replicated paths of one model, one mode, one
// grid. Replicate r always uses rng stream id r, so results are bit-identical
// for any thread count.
struct ExperimentConfig {
    WeightModel model;
    SimMode mode = SimMode::Poissonized;
    double n = 1.0e4;
    std::vector<double> grid;
    std::size_t replicates = 1000;
    std::uint64_t seed = 1;
    int threads = 0;  // <= 0 picks hardware concurrency
    std::uint64_t head_size = UrnSampler::kDefaultHeadSize;
};

// Normalized paths, one row per replicate with 3m columns laid out as
// [rho_1..rho_m, ups_1..ups_m, mu_1..mu_m]. Each coordinate is centered at
// its exact finite-time mean (series evaluation, not an asymptotic) and
// scaled by sqrt(beta(n)) for rho, ups and sqrt(alpha(n)) for mu; finite
// models keep unit scaling. Coupled runs fill a second matrix with the
// poissonized leg plus the per-replicate sup distance between the two
// missing-mass clocks.
struct PathMatrix {
    SimMode mode = SimMode::Discrete;
    double n = 0.0;
    std::size_t reps = 0;
    std::size_t m = 0;
    std::vector<double> grid;
    double scale_r = 1.0;  // sqrt(beta(n))
    double scale_m = 1.0;  // sqrt(alpha(n))
    std::vector<double> data;          // reps x 3m
    std::vector<double> data_poisson;  // coupled runs only
    std::vector<double> mtilde_gap;    // coupled: sup_j |mu_tilde - mu*| per rep
    double acceptance_rate = std::numeric_limits<double>::quiet_NaN();

    const double* row(std::size_t r) const { return data.data() + r * 3 * m; }
    const double* row_poisson(std::size_t r) const {
        return data_poisson.data() + r * 3 * m;
    }
    double coord(std::size_t r, int comp, std::size_t j) const {
        return row(r)[static_cast<std::size_t>(comp) * m + j];
    }
};

PathMatrix run_experiment(const ExperimentConfig& cfg);

// Empirical vs exact vs limiting covariance for every ordered component pair
// (rho, ups, mu)^2 and every grid pair t_i <= t_j: 9 * m(m+1)/2 cells.
// `exact` is the poissonized finite-n covariance in normalized units (NaN in
// discrete mode, where no closed finite-n form is evaluated); `limit` is the
// limiting Gaussian covariance at grid times (NaN for finite models); z uses
// exact when finite, otherwise limit; gap = |empirical - limit|.
struct CovCell {
    int comp_a = 0, comp_b = 0;  // 0 rho, 1 ups, 2 mu
    std::size_t i = 0, j = 0;
    double tau = 0, t = 0;
    double empirical = 0, se = 0;
    double exact = std::numeric_limits<double>::quiet_NaN();
    double limit = std::numeric_limits<double>::quiet_NaN();
    double z = 0, gap = std::numeric_limits<double>::quiet_NaN();
};

std::vector<CovCell> covariance_cells(const PathMatrix& paths,
                                      const WeightModel& model);

// Sample covariance of two exactly centered coordinates and its standard
// error (spread of the per-replicate products over sqrt(reps)). SE = 0 marks
// a degenerate cell.
std::pair<double, double> empirical_cov(const PathMatrix& paths, int comp_a,
                                        std::size_t i, int comp_b,
                                        std::size_t j);

// Columns: pair,tau,t,n,empirical,se,exact,limit,z,gap
void write_cov_csv(std::ostream& os, const std::vector<CovCell>& cells,
                   double n, bool header = true);

struct CellSummary {
    std::size_t total = 0;
    std::size_t within = 0;  // |z| <= k_se
    double frac_within = 0;
    double max_abs_z = 0;
    double max_gap = 0;  // over cells with a finite limit
};
CellSummary summarize_cells(const std::vector<CovCell>& cells, double k_se);

// Marginal Gaussianity diagnostics of one normalized coordinate.
struct MomentDiagnostics {
    double mean = 0, sd = 0, skewness = 0, excess_kurtosis = 0;
    double skew_limit = 0, kurt_limit = 0;  // 5 sigma bands for the estimators
    bool gaussian_ok = false;
};
MomentDiagnostics gaussianity(const PathMatrix& paths, int comp, std::size_t j);

// Coupled-run distances: 90% quantile over replicates of the sup (over the
// grid) distance between the discrete and poissonized normalized coordinates,
// and between the two missing-mass clocks of the poissonized leg.
struct CouplingSummary {
    double q90_rho = 0, q90_ups = 0, q90_mu = 0, q90_mtilde = 0;
};
CouplingSummary coupling_distance(const PathMatrix& paths);

double empirical_quantile(std::vector<double> v, double q);

// Uniform-bound diagnostics behind the tightness estimates: L21 is the
// occupancy growth ratio (E R(n delta) / beta(n)) / delta^{theta/2}; L23 is
// the missing-mass increment ratio (Var(M(n t1) - M(n t2)) / alpha(n)) /
// delta^{theta/2}, maximized over window positions t1 with t2 = t1 + delta
// inside (0, 1]. Both stay bounded uniformly in n and delta.
enum class LemmaKind { L21, L23 };

struct LemmaRow {
    double n = 0, delta = 0, ratio = 0;
};

double lemma_ratio(const WeightModel& model, LemmaKind kind, double n,
                   double delta);
std::vector<LemmaRow> lemma_scan(const WeightModel& model, LemmaKind kind,
                                 const std::vector<double>& n_values,
                                 const std::vector<double>& deltas);
double lemma_sup(const std::vector<LemmaRow>& rows);

}  // namespace urnflow
