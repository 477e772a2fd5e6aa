#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "vantage/planner.hpp"

namespace vantage::cli {

/// Exit statuses of the command-line tool.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kUsageError = 2;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Trace document: {"config", "vantages", "residuals", "unseen", "max_gains",
/// "normalized_max_gains", "stop_reason", "final_max_gain", "wall_ms"}.
nlohmann::ordered_json trace_to_json(const PlanTrace& trace, const nlohmann::ordered_json& config);

}  // namespace vantage::cli
