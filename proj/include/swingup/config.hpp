#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "swingup/dynamics.hpp"
#include "swingup/reward.hpp"
#include "swingup/sac.hpp"
#include "swingup/scoring.hpp"
#include "swingup/snes.hpp"

namespace swingup {

/// Invalid experiment configuration. `line()` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct RunConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::string output;  // run directory; --output overrides
};

struct ScoringConfig {
  ScoreCriteria criteria;
  std::vector<PerturbationSpec> perturbations = default_perturbation_suite();
  double action_noise_sigma = 0.01;  // pre-tanh noise of the controller under robustness trials
};

/// Sections: run, model, reward (all keys required), sac, snes, scoring
/// (keys optional, defaults below). Unknown keys are rejected everywhere.
struct ExperimentConfig {
  RunConfig run;
  ModelParams model;
  RewardConfig reward;
  SacConfig sac;
  SnesConfig snes;  // snes.seed is taken from run.seed
  ScoringConfig scoring;

  MlpArchitecture policy_arch() const;
  EpisodeSetup episode_setup() const;
};

ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved document; parse_config(config_to_text(c)) reproduces c.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
std::string config_to_text(const ExperimentConfig& cfg);

/// 1-based line of the key reached by following `path` through the text, or
/// of the deepest ancestor found; 0 when nothing matches.
std::size_t locate_key(std::string_view text, const std::vector<std::string>& path);

}  // namespace swingup
