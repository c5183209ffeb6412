#pragma once

#include <filesystem>

#include "json.hpp"
#include "swingup/scoring.hpp"

namespace swingup {

/// Structured score report: summary (performance | robustness | average, in
/// the layout of a controller comparison table), per-criterion breakdown with
/// the formula, and per-perturbation pass rates.
nlohmann::json report_to_json(const ScoreReport& report, const ScoreCriteria& criteria);
ScoreReport report_from_json(const nlohmann::json& doc);

void write_report(const ScoreReport& report, const ScoreCriteria& criteria,
                  const std::filesystem::path& path);
ScoreReport read_report(const std::filesystem::path& path);

nlohmann::json criteria_to_json(const ScoreCriteria& criteria);

}  // namespace swingup
