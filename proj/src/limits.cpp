#include "urnflow/limits.hpp"

#include <cmath>
#include <stdexcept>

#include "urnflow/numerics.hpp"

namespace urnflow::limits {
namespace {

void require_args(double theta, double tau, double t) {
    if (!(theta > 0.0 && theta <= 1.0))
        throw std::invalid_argument("limit_cov: theta must lie in (0,1]");
    if (!(tau >= 0.0) || !(t >= tau))
        throw std::invalid_argument("limit_cov: requires 0 <= tau <= t");
}

// theta = 1 regime: variances grow like n L*(n) while the missing-mass column
// uses alpha(n); all cross terms with mu vanish in the limit.
double theta_one(LimitPair pair, double tau, double t) {
    switch (pair) {
        case LimitPair::RhoRho: return tau;
        case LimitPair::UpsUps: return 2.0 * tau;
        case LimitPair::MuMu:   return tau * tau;
        case LimitPair::RhoUps: return tau;
        case LimitPair::UpsRho: return tau;
        case LimitPair::RhoMu:
        case LimitPair::MuRho:
        case LimitPair::MuUps:
        case LimitPair::UpsMu:  return 0.0;
    }
    (void)t;
    throw std::logic_error("theta_one: unknown pair");
}

}  // namespace

double limit_cov(double theta, LimitPair pair, double tau, double t) {
    require_args(theta, tau, t);
    if (tau == 0.0) return 0.0;
    if (theta == 1.0) return theta_one(pair, tau, t);
    double g1 = std::tgamma(1.0 - theta);
    double g2 = std::tgamma(2.0 - theta);
    // pow_diff(x, y, e) = x^e - y^e, stable when x ~ y, valid for any e.
    switch (pair) {
        case LimitPair::RhoRho:
            return g1 * pow_diff(t + tau, t, theta);
        case LimitPair::UpsUps:
            return g1 * std::pow(2.0, theta - 2.0) * pow_diff(t + tau, t - tau, theta);
        case LimitPair::MuMu:
            return -theta * g2 * tau * t * pow_diff(t + tau, t, theta - 2.0);
        case LimitPair::RhoUps:
            return 0.5 * g1 * pow_diff(2 * t + tau, 2 * t - tau, theta);
        case LimitPair::UpsRho:
            return 0.5 * g1 * pow_diff(t + 2 * tau, t, theta);
        case LimitPair::RhoMu:
            return theta * g1 * t * pow_diff(t + tau, t, theta - 1.0);
        case LimitPair::MuRho:
            return theta * g1 * tau * pow_diff(t + tau, t, theta - 1.0);
        case LimitPair::MuUps:
            return theta * g1 * 0.5 * tau * pow_diff(2 * t + tau, 2 * t - tau, theta - 1.0);
        case LimitPair::UpsMu:
            return theta * g1 * 0.5 * t * pow_diff(2 * tau + t, t, theta - 1.0);
    }
    throw std::logic_error("limit_cov: unknown pair");
}

LimitMatrixResult limit_matrix(double theta, const std::vector<double>& grid) {
    if (!(theta > 0.0 && theta <= 1.0))
        throw std::invalid_argument("limit_matrix: theta must lie in (0,1]");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        bool ok = grid[i] > 0.0 && grid[i] <= 1.0 && (i == 0 || grid[i] > grid[i - 1]);
        if (!ok)
            throw std::invalid_argument(
                "limit_matrix: grid must be strictly increasing in (0,1]");
    }
    // pair for component c1 of the earlier time vs c2 of the later time;
    // components ordered (rho, ups, mu)
    static const LimitPair table[3][3] = {
        {LimitPair::RhoRho, LimitPair::RhoUps, LimitPair::RhoMu},
        {LimitPair::UpsRho, LimitPair::UpsUps, LimitPair::UpsMu},
        {LimitPair::MuRho, LimitPair::MuUps, LimitPair::MuMu},
    };
    const int m = static_cast<int>(grid.size());
    LimitMatrixResult out;
    out.cov = Eigen::MatrixXd::Zero(3 * m, 3 * m);
    for (int j = 0; j < m; ++j)
        for (int k = j; k < m; ++k)
            for (int c1 = 0; c1 < 3; ++c1)
                for (int c2 = 0; c2 < 3; ++c2) {
                    double v = limit_cov(theta, table[c1][c2], grid[j], grid[k]);
                    out.cov(3 * j + c1, 3 * k + c2) = v;
                    out.cov(3 * k + c2, 3 * j + c1) = v;
                }
    if (m == 0) return out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.cov,
                                                      Eigen::EigenvaluesOnly);
    out.min_eigenvalue = es.eigenvalues().minCoeff();
    out.psd = out.min_eigenvalue >= -1e-8 * out.cov.trace();
    return out;
}

double self_similarity_residual(double theta, LimitPair pair, double a, double tau,
                                double t) {
    if (!(a > 0.0))
        throw std::invalid_argument("self_similarity_residual: a must be positive");
    double scale = (theta == 1.0 && pair == LimitPair::MuMu) ? a * a
                                                             : std::pow(a, theta);
    return std::abs(limit_cov(theta, pair, a * tau, a * t) -
                    scale * limit_cov(theta, pair, tau, t));
}

const char* pair_name(LimitPair p) {
    switch (p) {
        case LimitPair::RhoRho: return "rho_rho";
        case LimitPair::UpsUps: return "ups_ups";
        case LimitPair::MuMu:   return "mu_mu";
        case LimitPair::RhoUps: return "rho_ups";
        case LimitPair::UpsRho: return "ups_rho";
        case LimitPair::RhoMu:  return "rho_mu";
        case LimitPair::MuRho:  return "mu_rho";
        case LimitPair::MuUps:  return "mu_ups";
        case LimitPair::UpsMu:  return "ups_mu";
    }
    return "?";
}

LimitPair parse_pair(const std::string& name) {
    for (LimitPair p : all_pairs())
        if (name == pair_name(p)) return p;
    throw std::invalid_argument("unknown limit pair: " + name);
}

const std::vector<LimitPair>& all_pairs() {
    static const std::vector<LimitPair> pairs = {
        LimitPair::RhoRho, LimitPair::UpsUps, LimitPair::MuMu,
        LimitPair::RhoUps, LimitPair::UpsRho, LimitPair::RhoMu,
        LimitPair::MuRho,  LimitPair::MuUps,  LimitPair::UpsMu,
    };
    return pairs;
}

}  // namespace urnflow::limits
