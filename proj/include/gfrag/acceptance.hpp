#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace gfrag {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    double seconds = 0.0;
    std::string detail;       ///< one-line human summary
    nlohmann::json data;      ///< criterion-specific numbers for the manifest
};

struct AcceptanceSettings {
    std::uint64_t seed = 20240601;
    unsigned threads = 1;
    /// Multiplies replica counts; values below 1 give a quicker, underpowered run.
    double scale = 1.0;
    std::vector<int> only;  ///< empty = all twelve
};

inline constexpr int kCriterionCount = 12;

CriterionResult run_criterion(int id, const AcceptanceSettings& settings);

/// Runs the selected criteria in order, reporting each as it finishes.
std::vector<CriterionResult> run_acceptance(const AcceptanceSettings& settings,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "[PASS] 7 ac-profile: measured ... target ... tol ... (12.3 s)"
std::string summary_line(const CriterionResult& result);

/// {"settings": ..., "criteria": [...], "passed": n, "failed": n, "all_pass": bool}
nlohmann::json acceptance_manifest(const std::vector<CriterionResult>& results, const AcceptanceSettings& settings);

}  // namespace gfrag
