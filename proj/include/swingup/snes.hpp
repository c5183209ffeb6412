#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "swingup/checkpoint.hpp"
#include "swingup/gaussian_policy.hpp"
#include "swingup/rng.hpp"
#include "swingup/scoring.hpp"

namespace swingup {

struct SnesConfig {
  int population_size = 40;
  double sigma_init = 0.01;
  double center_lr = 1.0;
  // Step-size learning rates for the shared (mean over dimensions) and the
  // per-dimension parts of the log-sigma update; negative selects
  // (3 + ln d) / (5 sqrt d). Equal values give the plain separable update.
  double tau_global = -1.0;
  double tau_coord = -1.0;
  int generations = 50;
  int fitness_repeats = 3;
  double action_noise_sigma = 0.1;  // pre-tanh action noise during fitness rollouts
  bool final_layer_only = false;
  std::uint64_t seed = 0;

  void validate() const;
  double resolved_tau_global(std::size_t dims) const;
  double resolved_tau_coord(std::size_t dims) const;
};

/// Diagonal Gaussian search distribution.
struct SearchDistribution {
  std::vector<double> theta;
  std::vector<double> sigma;

  void validate() const;
};

struct Candidate {
  std::vector<double> params;  // theta + sigma * noise
  std::vector<double> noise;   // standard-normal draw
};

/// Mirrored sampling: candidates 2i and 2i+1 use noise z and -z.
std::vector<Candidate> sample_population(const SearchDistribution& dist, int n, Rng& rng);

/// Rank-based utilities (best first): max(0, log(n/2 + 1) - log(rank)),
/// normalised to sum to one, minus 1/n. Tied fitnesses share the mean utility
/// of their ranks; non-finite fitness ranks last.
std::vector<double> rank_utilities(std::span<const double> fitness);

SearchDistribution snes_update(const SearchDistribution& dist, const std::vector<Candidate>& samples,
                               std::span<const double> fitness, const SnesConfig& cfg);

/// Greedy action, mapped back through atanh, perturbed by N(0, sigma^2), and
/// squashed again. A greedy action of exactly +-1 is mapped to a pre-tanh
/// value of +-10; `clamped` reports that case.
double noisy_rollout_action(const Policy& policy, std::span<const double> observation,
                            double action_noise_sigma, Rng& rng, bool* clamped = nullptr);

struct GenerationRecord {
  int generation = 0;
  double best = 0.0;
  double mean = 0.0;
  double worst = 0.0;
  double best_ever = 0.0;
  double mean_sigma = 0.0;
  int failures = 0;  // candidates with non-finite fitness
};

/// Fitness of a candidate; must be a pure function of (params, seed).
using FitnessFn = std::function<double(std::span<const double> params, std::uint64_t seed)>;

struct SnesResult {
  std::vector<double> best;
  double best_fitness = 0.0;
  SearchDistribution final_distribution;
  std::vector<GenerationRecord> log;
};

/// Evaluates the initial centre, then runs cfg.generations generations. The
/// returned best is the best-ever candidate (the centre counts). Candidate k of
/// generation g is evaluated with seed derive_seed(cfg.seed, {g, k}).
SnesResult run_snes(const SearchDistribution& initial, const FitnessFn& fitness,
                    const SnesConfig& cfg,
                    const std::function<void(const GenerationRecord&)>& on_generation = {});

/// Episode score used as fitness, e.g. performance_score.
using ScoreFn = std::function<double(const Trajectory&)>;

struct FinetuneResult {
  PolicyCheckpoint best;
  double best_fitness = 0.0;
  std::vector<GenerationRecord> log;
};

/// Evolves the policy parameters of `checkpoint` (other networks are copied
/// through untouched). Fitness is the mean score over cfg.fitness_repeats
/// noisy rollouts; diverged rollouts give non-finite fitness.
FinetuneResult finetune(const PolicyCheckpoint& checkpoint, const EpisodeSetup& setup,
                        const ScoreFn& score, const SnesConfig& cfg,
                        const std::function<void(const GenerationRecord&)>& on_generation = {});

}  // namespace swingup
