// Runs the full acceptance suite and exits 3 if any criterion fails.
// Usage: urnflow_acceptance [--out DIR] [--seed U64] [--threads K]

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>

#include "urnflow/acceptance.hpp"

int main(int argc, char** argv) {
    urnflow::AcceptanceOptions opt;
    for (int i = 1; i + 1 < argc; i += 2) {
        if (std::strcmp(argv[i], "--out") == 0) opt.out_dir = argv[i + 1];
        else if (std::strcmp(argv[i], "--seed") == 0)
            opt.seed = std::strtoull(argv[i + 1], nullptr, 10);
        else if (std::strcmp(argv[i], "--threads") == 0)
            opt.threads = std::atoi(argv[i + 1]);
        else {
            std::cerr << "unknown flag " << argv[i] << '\n';
            return 1;
        }
    }
    std::vector<urnflow::CriterionResult> res =
        urnflow::run_acceptance(opt, std::cout);
    return urnflow::all_pass(res) ? 0 : 3;
}
