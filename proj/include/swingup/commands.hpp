#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>

#include "swingup/checkpoint.hpp"
#include "swingup/config.hpp"
#include "swingup/scoring.hpp"

namespace swingup {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

struct CliOptions {
  std::filesystem::path config;
  std::filesystem::path output;
  std::filesystem::path checkpoint;
  std::filesystem::path csv;
  std::optional<std::uint64_t> seed;
  bool robustness = false;
  bool force = false;
};

/// Each command prints progress to `out`, diagnostics to `err`, and returns an exit code.
int cmd_train(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_finetune(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_plot(const CliOptions& opts, std::ostream& out, std::ostream& err);

/// Controller querying the greedy policy every plant step.
Controller greedy_controller(const Policy& policy);
/// Controller with N(0, sigma^2) pre-tanh action noise drawn from its own seeded stream.
Controller noisy_controller(const Policy& policy, double sigma, std::uint64_t seed);

struct Evaluation {
  Trajectory trajectory;
  ScoreReport report;
};

/// Nominal greedy episode plus, optionally, the robustness sweep defined by the config.
Evaluation evaluate_policy(const Policy& policy, const ExperimentConfig& cfg, bool robustness);

}  // namespace swingup
