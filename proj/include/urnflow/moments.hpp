#pragma once

#include "urnflow/series.hpp"

namespace urnflow {

// Processes on one urn scheme: R occupied urns, U odd-count urns, M missing
// mass (scaled by the clock), Rk exactly-k / RstarK at-least-k occupied urns
// (poissonized only), Mtilde the mixed-clock missing mass Pi(s)*sum p 1{J=0}.
enum class Component { R, U, M, Rk, RstarK, Mtilde };

// cov(X(tau), Y(t)) with X the first letter, Y the second, 0 <= tau <= t.
// Reversed-order pairs (UR, MR, MU vs RU, RM, UM) are distinct quantities.
enum class CovPair { RR, UU, MM, RU, UR, MU, UM, RM, MR };

// Direct: one fused per-urn series, tails differenced at a common split.
// Identity: the reduction to combinations of process means, each evaluated
// with its own split. Agreement of the two is a real cross-check because the
// summation groupings differ.
enum class Route { Direct, Identity };

namespace moments {

// E X(s) for the poissonized scheme; k names the order for Rk / RstarK.
SeriesResult poisson_mean(const WeightModel& w, Component comp, double s,
                          int k = 1, double tol = 1e-10);

// E X_n for the fixed-ball-count chain (R, U, M only).
SeriesResult discrete_mean(const WeightModel& w, Component comp, std::uint64_t n,
                           double tol = 1e-10);

// cov(X(tau), Y(t)), poissonized, 0 <= tau <= t.
SeriesResult poisson_cov(const WeightModel& w, CovPair pair, double tau, double t,
                         Route route = Route::Direct, double tol = 1e-10);

// Var(M(t2) - M(t1)) for 0 <= t1 <= t2, assembled from poisson_cov.
SeriesResult var_M_increment(const WeightModel& w, double t1, double t2,
                             double tol = 1e-10);

const char* component_name(Component c);
const char* pair_name(CovPair p);

}  // namespace moments
}  // namespace urnflow
