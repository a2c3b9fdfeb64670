#include "epcag/acceptance.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

// Runs every acceptance criterion and prints one line per criterion.
int main(int argc, char** argv) {
    epcag::AcceptanceOptions opt;
    if (argc > 1) {
        opt.seed = std::stoull(argv[1]);
    }
    const auto results =
        epcag::run_acceptance(opt, [](const epcag::CriterionResult& r) { std::cout << epcag::format_result(r) << std::endl; });
    int failed = 0;
    for (const auto& r : results) {
        failed += !r.pass;
    }
    std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed" << std::endl;
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
