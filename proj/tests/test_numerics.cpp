#include <doctest.h>

#include <cmath>
#include <vector>

#include "urnflow/numerics.hpp"
#include "urnflow/rng.hpp"

using namespace urnflow;

TEST_CASE("neumaier sum keeps cancelled mass") {
    NeumaierSum s;
    s.add(1.0);
    for (int i = 0; i < 1000000; ++i) s.add(1e-16);
    // naive summation would lose every tiny term below the 1.0
    CHECK(s.value() == doctest::Approx(1.0 + 1e-10).epsilon(1e-12));

    s.reset();
    // alternating large/small pairs cancel exactly
    for (int i = 0; i < 1000; ++i) {
        s.add(1e16);
        s.add(3.25);
        s.add(-1e16);
    }
    CHECK(s.value() == doctest::Approx(3250.0).epsilon(1e-14));
}

TEST_CASE("gauss-kronrod quadrature on smooth integrands") {
    QuadResult q = integrate_gk([](double x) { return x * x; }, 0.0, 1.0);
    CHECK(q.converged);
    CHECK(q.value == doctest::Approx(1.0 / 3.0).epsilon(1e-13));

    q = integrate_gk([](double x) { return std::sin(x); }, 0.0,
                     3.14159265358979323846);
    CHECK(q.converged);
    CHECK(q.value == doctest::Approx(2.0).epsilon(1e-12));

    // integrable peak: exp decays over a long range
    q = integrate_gk([](double x) { return std::exp(-x); }, 0.0, 60.0);
    CHECK(q.value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("pow_diff is exact for separated arguments and stable for close ones") {
    CHECK(pow_diff(2.0, 1.0, 0.5) ==
          doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-15));
    CHECK(pow_diff(9.0, 4.0, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
    // y <= 0 collapses to x^e
    CHECK(pow_diff(4.0, 0.0, 0.5) == doctest::Approx(2.0));

    // x = y(1+h): x^e - y^e = e*h*y^e*(1 + O(h)); naive subtraction would
    // return 0 once h is below machine epsilon of the power
    double y = 7.0, e = 0.3;
    for (double h : {1e-9, 1e-12}) {
        double d = pow_diff(y * (1.0 + h), y, e);
        double lead = e * h * std::pow(y, e);
        CHECK(d == doctest::Approx(lead).epsilon(1e-6));
    }
}

TEST_CASE("sample moments match hand-computed values") {
    // data {0,0,3,3}: mean 1.5, unbiased var 3, skew 0, kurtosis of a
    // two-point symmetric law = -2 (population), estimator uses n/(n-1) style
    std::vector<double> v{0.0, 0.0, 3.0, 3.0};
    MomentStats s = sample_moments(v.data(), v.size());
    CHECK(s.count == 4);
    CHECK(s.mean == doctest::Approx(1.5));
    CHECK(s.variance == doctest::Approx(3.0));
    CHECK(s.skewness == doctest::Approx(0.0));

    // large standard-normal sample: skew ~ 0 +- 5*sqrt(6/n), exkurt likewise
    std::size_t n = 200000;
    std::vector<double> z(n);
    RngStream rng(99, 1);
    for (auto& x : z) x = rng.normal();
    s = sample_moments(z.data(), n);
    CHECK(std::abs(s.mean) < 5.0 / std::sqrt(double(n)));
    CHECK(s.variance == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(s.skewness) < 5.0 * std::sqrt(6.0 / double(n)));
    CHECK(std::abs(s.excess_kurtosis) < 5.0 * std::sqrt(24.0 / double(n)));
}
