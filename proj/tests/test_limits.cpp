#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "urnflow/limits.hpp"

using namespace urnflow;
using namespace urnflow::limits;

TEST_CASE("closed forms at hand-checked points") {
    // theta = 1: c_rho_rho(tau, t) = tau
    CHECK(limit_cov(1.0, LimitPair::RhoRho, 0.3, 0.7) == 0.3);
    // theta = 1/2: c_rho_rho(1, 1) = Gamma(1/2) (sqrt(2) - 1)
    CHECK(limit_cov(0.5, LimitPair::RhoRho, 1.0, 1.0) ==
          doctest::Approx(0.73417442372548447512).epsilon(1e-14));
    double g = std::sqrt(M_PI);  // Gamma(1/2)
    CHECK(limit_cov(0.5, LimitPair::RhoRho, 1.0, 1.0) ==
          doctest::Approx(g * (std::sqrt(2.0) - 1.0)).epsilon(1e-14));
    // theta = 1/2 variances at t = 1
    CHECK(limit_cov(0.5, LimitPair::UpsUps, 1.0, 1.0) ==
          doctest::Approx(g * std::pow(2.0, -1.5) * std::sqrt(2.0))
              .epsilon(1e-13));
    CHECK(limit_cov(0.5, LimitPair::MuMu, 1.0, 1.0) ==
          doctest::Approx(0.5 * std::tgamma(1.5) * (1.0 - std::pow(2.0, -1.5)))
              .epsilon(1e-13));
    // theta = 1 closed forms
    CHECK(limit_cov(1.0, LimitPair::UpsUps, 0.4, 0.9) == doctest::Approx(0.8));
    CHECK(limit_cov(1.0, LimitPair::MuMu, 0.4, 0.9) == doctest::Approx(0.16));
    CHECK(limit_cov(1.0, LimitPair::RhoUps, 0.4, 0.9) == doctest::Approx(0.4));
    CHECK(limit_cov(1.0, LimitPair::UpsRho, 0.4, 0.9) == doctest::Approx(0.4));
    CHECK(limit_cov(1.0, LimitPair::RhoMu, 0.4, 0.9) == 0.0);
    CHECK(limit_cov(1.0, LimitPair::MuUps, 0.4, 0.9) == 0.0);
}

TEST_CASE("degenerate time points") {
    for (double theta : {0.3, 0.5, 0.8, 1.0})
        for (auto pair : all_pairs())
            CHECK(limit_cov(theta, pair, 0.0, 1.0) == 0.0);
    // tau = t keeps cross pairs consistent: cov(rho(t), ups(t)) symmetric
    for (double theta : {0.3, 0.8}) {
        CHECK(limit_cov(theta, LimitPair::RhoUps, 1.0, 1.0) ==
              doctest::Approx(limit_cov(theta, LimitPair::UpsRho, 1.0, 1.0))
                  .epsilon(1e-13));
        CHECK(limit_cov(theta, LimitPair::RhoMu, 1.0, 1.0) ==
              doctest::Approx(limit_cov(theta, LimitPair::MuRho, 1.0, 1.0))
                  .epsilon(1e-13));
        CHECK(limit_cov(theta, LimitPair::MuUps, 1.0, 1.0) ==
              doctest::Approx(limit_cov(theta, LimitPair::UpsMu, 1.0, 1.0))
                  .epsilon(1e-13));
    }
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS((void)limit_cov(0.0, LimitPair::RhoRho, 0.5, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)limit_cov(1.5, LimitPair::RhoRho, 0.5, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)limit_cov(0.5, LimitPair::RhoRho, -0.1, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)limit_cov(0.5, LimitPair::RhoRho, 2.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("self similarity holds to rounding across the parameter box") {
    for (double theta : {0.3, 0.5, 0.8}) {
        for (auto pair : all_pairs()) {
            for (double a : {0.25, 1.0, 3.7}) {
                double r = self_similarity_residual(theta, pair, a, 0.4, 0.9);
                INFO(pair_name(pair) << " theta=" << theta << " a=" << a);
                CHECK(r <= 1e-12);
            }
        }
    }
    for (auto pair : {LimitPair::RhoRho, LimitPair::UpsUps, LimitPair::RhoUps,
                      LimitPair::MuMu}) {
        CHECK(self_similarity_residual(1.0, pair, 2.5, 0.4, 0.9) <= 1e-12);
    }
}

TEST_CASE("near-coincident times avoid catastrophic cancellation") {
    // c_ups_ups involves (t+tau)^theta - (t-tau)^theta; at tau ~ t eps this
    // must follow the first-order expansion theta * 2 tau * t^(theta-1) * C.
    double theta = 0.5, t = 1.0;
    double g = std::tgamma(1.0 - theta);
    for (double tau : {1e-9, 1e-12}) {
        double v = limit_cov(theta, LimitPair::UpsUps, tau, t);
        double expect = g * std::pow(2.0, theta - 2.0) * theta * 2.0 * tau *
                        std::pow(t, theta - 1.0);
        CHECK(v == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("limit matrix at theta=1 matches the hand-built block") {
    auto res = limit_matrix(1.0, {0.5});
    REQUIRE(res.cov.rows() == 3);
    REQUIRE(res.cov.cols() == 3);
    CHECK(res.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(res.cov(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(res.cov(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(res.cov(2, 2) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(res.cov(0, 2) == 0.0);
    CHECK(res.cov(1, 2) == 0.0);
    CHECK(res.psd);
}

TEST_CASE("limit matrices are symmetric and positive semidefinite") {
    std::vector<double> grid;
    for (int i = 1; i <= 10; ++i) grid.push_back(i / 10.0);
    for (double theta : {0.3, 0.5, 0.8, 1.0}) {
        auto res = limit_matrix(theta, grid);
        REQUIRE(res.cov.rows() == 30);
        CHECK((res.cov - res.cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(res.psd);
        CHECK(res.min_eigenvalue >= -1e-8 * res.cov.trace());
        // diagonal entries are the marginal variances, all positive
        for (int i = 0; i < res.cov.rows(); ++i) CHECK(res.cov(i, i) > 0.0);
    }
    CHECK_THROWS_AS((void)limit_matrix(0.5, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS((void)limit_matrix(0.5, {0.5, 0.4}), std::invalid_argument);
    CHECK_THROWS_AS((void)limit_matrix(0.5, {1.5}), std::invalid_argument);
}

TEST_CASE("pair names round-trip through the parser") {
    for (auto pair : all_pairs()) {
        CHECK(parse_pair(pair_name(pair)) == pair);
    }
    CHECK(std::string(pair_name(LimitPair::RhoRho)) == "rho_rho");
    CHECK(std::string(pair_name(LimitPair::UpsMu)) == "ups_mu");
    CHECK_THROWS_AS((void)parse_pair("bogus"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_pair(""), std::invalid_argument);
    CHECK(all_pairs().size() == 9);
}
