#include "swingup/report.hpp"

#include <fstream>
#include <stdexcept>

namespace swingup {

namespace {

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> read_optional(const nlohmann::json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace

nlohmann::json criteria_to_json(const ScoreCriteria& c) {
  return {{"weight_swingup_time", c.weight_swingup_time},
          {"norm_swingup_time", c.norm_swingup_time},
          {"weight_torque_integral", c.weight_torque_integral},
          {"norm_torque_integral", c.norm_torque_integral},
          {"weight_energy", c.weight_energy},
          {"norm_energy", c.norm_energy},
          {"weight_peak_torque", c.weight_peak_torque},
          {"norm_peak_torque", c.norm_peak_torque},
          {"weight_peak_velocity", c.weight_peak_velocity},
          {"norm_peak_velocity", c.norm_peak_velocity},
          {"success_window", c.success_window}};
}

nlohmann::json report_to_json(const ScoreReport& r, const ScoreCriteria& criteria) {
  nlohmann::json breakdown = nlohmann::json::array();
  for (const auto& p : r.breakdown)
    breakdown.push_back({{"criterion", p.name},
                         {"value", p.value},
                         {"normalizer", p.normalizer},
                         {"weight", p.weight},
                         {"penalty", p.penalty}});

  nlohmann::json curves = nlohmann::json::array();
  for (const auto& c : r.curves) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : c.points)
      points.push_back({{"magnitude", p.magnitude},
                        {"passes", p.passes},
                        {"trials", p.trials},
                        {"pass_rate", p.pass_rate()}});
    curves.push_back({{"category", to_string(c.category)},
                      {"parameter", c.parameter},
                      {"pass_fraction", c.pass_fraction},
                      {"points", points}});
  }

  return {
      {"summary",
       {{"robustness", optional_number(r.robustness)},
        {"performance", r.performance},
        {"average", optional_number(r.average)}}},
      {"episode",
       {{"success", r.metrics.success},
        {"diverged", r.metrics.diverged},
        {"swingup_time", optional_number(r.metrics.swingup_time)},
        {"torque_integral", r.metrics.torque_integral},
        {"energy", r.metrics.energy},
        {"peak_torque", r.metrics.peak_torque},
        {"peak_velocity", r.metrics.peak_velocity}}},
      {"performance_formula",
       "0 if the tip is not above y_th for the whole success window, else "
       "clamp(1 - sum_k weight_k * min(1, value_k / normalizer_k), 0, 1)"},
      {"criteria", criteria_to_json(criteria)},
      {"breakdown", breakdown},
      {"robustness_formula", "mean over categories of the fraction of passing trials"},
      {"perturbations", curves},
  };
}

ScoreReport report_from_json(const nlohmann::json& doc) {
  ScoreReport r;
  const auto& summary = doc.at("summary");
  r.performance = summary.at("performance").get<double>();
  r.robustness = read_optional(summary.at("robustness"));
  r.average = read_optional(summary.at("average"));
  const auto& ep = doc.at("episode");
  r.metrics.success = ep.at("success").get<bool>();
  r.metrics.diverged = ep.at("diverged").get<bool>();
  r.metrics.swingup_time = read_optional(ep.at("swingup_time"));
  r.metrics.torque_integral = ep.at("torque_integral").get<double>();
  r.metrics.energy = ep.at("energy").get<double>();
  r.metrics.peak_torque = ep.at("peak_torque").get<double>();
  r.metrics.peak_velocity = ep.at("peak_velocity").get<double>();
  for (const auto& p : doc.at("breakdown"))
    r.breakdown.push_back({p.at("criterion").get<std::string>(), p.at("value").get<double>(),
                           p.at("normalizer").get<double>(), p.at("weight").get<double>(),
                           p.at("penalty").get<double>()});
  for (const auto& c : doc.at("perturbations")) {
    CategoryCurve curve{parse_perturbation_category(c.at("category").get<std::string>()),
                        c.at("parameter").get<std::string>(), {},
                        c.at("pass_fraction").get<double>()};
    for (const auto& p : c.at("points"))
      curve.points.push_back(
          {p.at("magnitude").get<double>(), p.at("passes").get<int>(), p.at("trials").get<int>()});
    r.curves.push_back(std::move(curve));
  }
  return r;
}

void write_report(const ScoreReport& report, const ScoreCriteria& criteria,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << report_to_json(report, criteria).dump(2) << '\n';
}

ScoreReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report '" + path.string() + "'");
  return report_from_json(nlohmann::json::parse(in));
}

}  // namespace swingup
