#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace urnflow {

struct AcceptanceOptions {
    std::string out_dir = "acceptance_out";
    std::uint64_t seed = 1;
    int threads = 0;   // <= 0 picks hardware concurrency
    bool plots = true;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    std::string detail;  // one line: key numbers, and why when failing
};

// Runs the ten-criterion acceptance suite, streaming one line per criterion
// to `log` and writing CSV (and SVG) artifacts under opt.out_dir. The
// determinism criterion regenerates every CSV with a different worker count
// and byte-compares, so the whole Monte Carlo portion runs twice.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            std::ostream& log);

bool all_pass(const std::vector<CriterionResult>& results);

// Calibrated ceiling for the uniform lemma-bound ratios (criterion: measured
// sups for PowerLaw(0.5) are 1.81 and 0.30; the ceiling leaves an order of
// magnitude of headroom and is part of the acceptance contract).
inline constexpr double kLemmaConstant = 20.0;

}  // namespace urnflow
