#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dwe/harness/evaluate.hpp"

namespace dwe::harness {

inline constexpr const char* kReportSchema = "dwe-report/1";

/// Layout documented in docs/report_schema.md.
nlohmann::json report_to_json(const EvalReport& report);

/// "config_hash=<hash> seed=<seed>", the first line of every CSV artifact.
std::string provenance_comment(const std::string& config_hash, std::uint64_t seed);

/// Band-power confusion matrices, each at the m with the best overall accuracy for its band set.
std::string table1_csv(const EvalReport& report);
/// Band-power plus coherence confusion matrices, same layout as table1_csv.
std::string table2_csv(const EvalReport& report);
/// RMSE per cluster and mode, mean and std.
std::string table3_csv(const EvalReport& report);
/// Cross-model RMSE, model i (rows) on cluster j (columns).
std::string table4_csv(const EvalReport& report);
/// One row per evaluated session.
std::string sessions_csv(const EvalReport& report);

/// Writes report.json, table1.csv .. table4.csv and sessions.csv into `dir`.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace dwe::harness
