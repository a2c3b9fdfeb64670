#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace epcag {

/// Outcome of one acceptance criterion.
struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    /// Measured quantities against their thresholds.
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    std::uint64_t seed = 20240611;
    /// Criterion ids to run; all when empty.
    std::vector<int> only;
};

/// Number of acceptance criteria.
inline constexpr int kCriterionCount = 13;

/// Runs the acceptance criteria against closed-form oracles; `on_result` is
/// called as each one finishes. An exception inside a criterion fails it.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options = {},
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "[PASS]  7 manifold decay ... (0.12 s)"
std::string format_result(const CriterionResult& r);

}  // namespace epcag
