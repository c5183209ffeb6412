#include "swingup/commands.hpp"

#include <fstream>
#include <memory>
#include <sstream>

#include "swingup/plot.hpp"
#include "swingup/report.hpp"
#include "swingup/sac.hpp"
#include "swingup/snes.hpp"
#include "swingup/trajectory_io.hpp"

namespace fs = std::filesystem;

namespace swingup {

namespace {

class CollisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Run directory with the fixed layout and overwrite protection.
class RunDirectory {
 public:
  RunDirectory(fs::path root, bool force) : root_(std::move(root)), force_(force) {
    for (const char* sub : {"checkpoints", "logs", "reports", "plots"}) fs::create_directories(root_ / sub);
  }

  const fs::path& root() const { return root_; }

  /// Returns root/relative after checking it may be written.
  fs::path claim(const fs::path& relative) const {
    const fs::path p = root_ / relative;
    if (fs::exists(p) && !force_)
      throw CollisionError("refusing to overwrite '" + p.string() + "' (use --force)");
    return p;
  }

  void write_resolved_config(const ExperimentConfig& cfg) const {
    const fs::path p = root_ / "config.resolved";
    const std::string text = config_to_text(cfg);
    if (fs::exists(p) && !force_ && read_file(p) != text)
      throw CollisionError("'" + p.string() +
                           "' holds a different configuration; use a new --output or --force");
    write_text_file(p, text);
  }

 private:
  fs::path root_;
  bool force_;
};

ExperimentConfig resolve_config(const CliOptions& opts) {
  if (opts.config.empty()) throw ConfigError("<cli>", 0, "--config is required");
  ExperimentConfig cfg = load_config(opts.config);
  if (opts.seed) {
    cfg.run.seed = *opts.seed;
    cfg.snes.seed = *opts.seed;
  }
  if (!opts.output.empty()) cfg.run.output = opts.output.string();
  if (cfg.run.output.empty())
    throw ConfigError(opts.config.string(), locate_key(read_file(opts.config), {"run"}),
                      "no output directory: set run.output or pass --output");
  return cfg;
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitRuntimeError;
  } catch (const CsvError& e) {
    err << "csv error: " << e.what() << '\n';
    return kExitRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

void check_architecture(const PolicyCheckpoint& cp, const ExperimentConfig& cfg,
                        const fs::path& checkpoint_path) {
  const Policy policy = cp.policy();
  if (!(policy.arch == cfg.policy_arch())) {
    std::string have, want;
    for (auto n : policy.arch.layer_sizes) have += std::to_string(n) + " ";
    for (auto n : cfg.policy_arch().layer_sizes) want += std::to_string(n) + " ";
    throw ConfigError(checkpoint_path.string(), 0,
                      "policy architecture [" + have + "] (" + std::string(to_string(policy.arch.activation)) +
                          ") does not match the config's [" + want + "] (" +
                          std::string(to_string(cfg.sac.activation)) + ")");
  }
}

}  // namespace

Controller greedy_controller(const Policy& policy) {
  auto shared = std::make_shared<const Policy>(policy);
  return [shared](const State& s) { return act_greedy(*shared, s); };
}

Controller noisy_controller(const Policy& policy, double sigma, std::uint64_t seed) {
  auto shared = std::make_shared<const Policy>(policy);
  auto rng = std::make_shared<Rng>(seed);
  return [shared, rng, sigma](const State& s) {
    const Observation obs = observe(s);
    return noisy_rollout_action(*shared, obs, sigma, *rng);
  };
}

Evaluation evaluate_policy(const Policy& policy, const ExperimentConfig& cfg, bool robustness) {
  const EpisodeSetup setup = cfg.episode_setup();
  Evaluation ev;
  ev.trajectory = run_episode(greedy_controller(policy), setup, std::nullopt, cfg.run.seed);
  std::optional<RobustnessResult> rob;
  if (robustness) {
    const double sigma = cfg.scoring.action_noise_sigma;
    const ControllerFactory factory = [&policy, sigma](std::uint64_t seed) {
      return noisy_controller(policy, sigma, seed);
    };
    rob = robustness_score(factory, setup, cfg.scoring.perturbations, cfg.scoring.criteria, cfg.run.seed);
  }
  ev.report = make_report(ev.trajectory, cfg.reward.y_threshold, cfg.scoring.criteria, rob);
  return ev;
}

int cmd_train(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = resolve_config(opts);
    const RunDirectory run(cfg.run.output, opts.force);
    const fs::path best_path = run.claim("checkpoints/sac_best.ckpt");
    const fs::path final_path = run.claim("checkpoints/sac_final.ckpt");
    const fs::path log_path = run.claim("logs/train.jsonl");
    run.write_resolved_config(cfg);

    std::ofstream log(log_path, std::ios::trunc);
    const LogSink sink = [&](const nlohmann::json& record) {
      log << record.dump() << std::endl;
      if (record["type"] == "eval")
        out << "step " << record["step"] << ": success " << record["success_rate"]
            << ", performance " << record["performance"] << '\n';
    };
    const TrainSetup setup{cfg.model, cfg.reward, cfg.sac, cfg.scoring.criteria, cfg.run.seed};
    TrainingResult result;
    try {
      result = train(setup, sink);
    } catch (const TrainingDiverged& e) {
      log.flush();
      write_text_file(run.root() / "logs" / "train_diagnostic.json", e.diagnostic().dump(2) + "\n");
      throw;
    }
    save_checkpoint(result.best, best_path);
    save_checkpoint(result.final, final_path);
    out << "trained " << result.steps << " steps; best checkpoint " << best_path.string() << '\n';
    return kExitOk;
  });
}

int cmd_finetune(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = resolve_config(opts);
    if (opts.checkpoint.empty()) throw ConfigError("<cli>", 0, "--checkpoint is required");
    const PolicyCheckpoint parent = load_checkpoint(opts.checkpoint);
    check_architecture(parent, cfg, opts.checkpoint);

    const RunDirectory run(cfg.run.output, opts.force);
    const fs::path best_path = run.claim("checkpoints/snes_best.ckpt");
    const fs::path log_path = run.claim("logs/snes.jsonl");
    run.write_resolved_config(cfg);

    std::ofstream log(log_path, std::ios::trunc);
    const auto on_generation = [&](const GenerationRecord& g) {
      const nlohmann::json record = {{"generation", g.generation}, {"best", g.best},
                                     {"mean", g.mean},             {"worst", g.worst},
                                     {"best_ever", g.best_ever},   {"mean_sigma", g.mean_sigma},
                                     {"failures", g.failures}};
      log << record.dump() << std::endl;
      out << "generation " << g.generation << ": best " << g.best << ", mean " << g.mean
          << ", best ever " << g.best_ever << '\n';
    };
    const double y_th = cfg.reward.y_threshold;
    const ScoreCriteria criteria = cfg.scoring.criteria;
    const ScoreFn score = [y_th, criteria](const Trajectory& t) { return performance_score(t, y_th, criteria); };
    const FinetuneResult result = finetune(parent, cfg.episode_setup(), score, cfg.snes, on_generation);
    save_checkpoint(result.best, best_path);
    out << "best fitness " << result.best_fitness << "; checkpoint " << best_path.string() << '\n';
    return kExitOk;
  });
}

int cmd_eval(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = resolve_config(opts);
    if (opts.checkpoint.empty()) throw ConfigError("<cli>", 0, "--checkpoint is required");
    const PolicyCheckpoint cp = load_checkpoint(opts.checkpoint);
    check_architecture(cp, cfg, opts.checkpoint);

    const RunDirectory run(cfg.run.output, opts.force);
    const std::string stem = opts.checkpoint.stem().string();
    const fs::path report_path = run.claim("reports/" + stem + "_report.json");
    const fs::path csv_path = run.claim("reports/" + stem + "_trajectory.csv");
    const fs::path traj_plot = run.claim("plots/" + stem + "_trajectory.svg");
    const fs::path rob_plot = run.claim("plots/" + stem + "_robustness.svg");
    run.write_resolved_config(cfg);

    const Evaluation ev = evaluate_policy(cp.policy(), cfg, opts.robustness);
    write_report(ev.report, cfg.scoring.criteria, report_path);
    write_trajectory_csv(ev.trajectory, csv_path);
    write_text_file(traj_plot, render_trajectory_svg(ev.trajectory, "State and input evolution: " + stem));
    if (opts.robustness)
      write_text_file(rob_plot, render_robustness_svg(ev.report.curves, "Robustness: " + stem));

    out << "Controller | Robustness | Performance | Avg.\n";
    const auto cell = [](const std::optional<double>& v) {
      std::ostringstream s;
      if (v) s << *v; else s << "-";
      return s.str();
    };
    out << stem << " | " << cell(ev.report.robustness) << " | " << ev.report.performance << " | "
        << cell(ev.report.average) << '\n';
    return kExitOk;
  });
}

int cmd_plot(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.csv.empty()) throw ConfigError("<cli>", 0, "a trajectory CSV path is required");
    const Trajectory traj = read_trajectory_csv(opts.csv);
    const fs::path dir = opts.output.empty() ? opts.csv.parent_path() : opts.output / "plots";
    if (!dir.empty()) fs::create_directories(dir);
    const fs::path target = dir / (opts.csv.stem().string() + ".svg");
    if (fs::exists(target) && !opts.force)
      throw CollisionError("refusing to overwrite '" + target.string() + "' (use --force)");
    write_text_file(target, render_trajectory_svg(traj, "State and input evolution: " + opts.csv.stem().string()));
    out << "wrote " << target.string() << '\n';
    return kExitOk;
  });
}

}  // namespace swingup
