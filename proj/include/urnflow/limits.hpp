#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace urnflow {

// Limiting covariance component pairs for the vector Gaussian limit
// (rho, upsilon, mu) = scaled (occupied, odd-occupied, missing mass).
// Naming convention: first process at the first (smaller) time.
enum class LimitPair {
    RhoRho, UpsUps, MuMu, RhoUps, UpsRho, RhoMu, MuRho, MuUps, UpsMu
};

struct LimitMatrixResult {
    Eigen::MatrixXd cov;      // 3m x 3m, components (rho, ups, mu) per grid time
    double min_eigenvalue = 0.0;
    bool psd = true;          // min eigenvalue >= -1e-8 * trace
};

namespace limits {

// Closed-form limiting covariance c(tau, t), 0 <= tau <= t, theta in (0,1].
// theta < 1 and theta = 1 are separate regimes with different normalizations;
// no continuity across theta -> 1 is implied.
double limit_cov(double theta, LimitPair pair, double tau, double t);

// Covariance matrix of the 3m-dimensional Gaussian vector on a strictly
// increasing grid in (0,1], with an eigenvalue-based PSD diagnostic.
LimitMatrixResult limit_matrix(double theta, const std::vector<double>& grid);

// |c(a tau, a t) - a^theta c(tau, t)|; the theta = 1 mu-mu component scales
// as a^2 instead (its closed form is tau^2).
double self_similarity_residual(double theta, LimitPair pair, double a,
                                double tau, double t);

const char* pair_name(LimitPair p);
// Accepts the pair_name spellings ("rho_rho", "ups_mu", ...); throws on junk.
LimitPair parse_pair(const std::string& name);
const std::vector<LimitPair>& all_pairs();

}  // namespace limits
}  // namespace urnflow
