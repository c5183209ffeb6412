#include "swingup/snes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "swingup/parallel.hpp"

namespace swingup {

namespace {

constexpr std::uint64_t kSampleStream = 21;
constexpr std::uint64_t kCentreStream = 22;
constexpr double kMaxPreTanh = 10.0;

double default_sigma_rate(std::size_t dims) {
  const double d = static_cast<double>(std::max<std::size_t>(1, dims));
  return (3.0 + std::log(d)) / (5.0 * std::sqrt(d));
}

double sanitize(double f) {
  return std::isfinite(f) ? f : -std::numeric_limits<double>::infinity();
}

}  // namespace

void SnesConfig::validate() const {
  if (population_size < 2 || population_size % 2 != 0)
    throw std::invalid_argument("SnesConfig.population_size must be even and >= 2");
  if (!(sigma_init > 0) || !std::isfinite(sigma_init))
    throw std::invalid_argument("SnesConfig.sigma_init must be > 0");
  if (!(center_lr >= 0) || !std::isfinite(center_lr))
    throw std::invalid_argument("SnesConfig.center_lr must be >= 0");
  if (!std::isfinite(tau_global) || !std::isfinite(tau_coord))
    throw std::invalid_argument("SnesConfig.tau_global/tau_coord must be finite");
  if (generations < 0) throw std::invalid_argument("SnesConfig.generations must be >= 0");
  if (fitness_repeats < 1) throw std::invalid_argument("SnesConfig.fitness_repeats must be >= 1");
  if (!(action_noise_sigma >= 0) || !std::isfinite(action_noise_sigma))
    throw std::invalid_argument("SnesConfig.action_noise_sigma must be >= 0");
}

double SnesConfig::resolved_tau_global(std::size_t dims) const {
  return tau_global < 0 ? default_sigma_rate(dims) : tau_global;
}

double SnesConfig::resolved_tau_coord(std::size_t dims) const {
  return tau_coord < 0 ? default_sigma_rate(dims) : tau_coord;
}

void SearchDistribution::validate() const {
  if (theta.empty() || theta.size() != sigma.size())
    throw std::invalid_argument("search distribution theta/sigma sizes differ or are empty");
  for (double s : sigma)
    if (!(s > 0) || !std::isfinite(s))
      throw std::invalid_argument("search distribution sigma must be strictly positive and finite");
  for (double t : theta)
    if (!std::isfinite(t)) throw std::invalid_argument("search distribution theta must be finite");
}

std::vector<Candidate> sample_population(const SearchDistribution& dist, int n, Rng& rng) {
  dist.validate();
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("population size must be even and >= 2");
  const std::size_t d = dist.theta.size();
  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n / 2; ++k) {
    Candidate plus{std::vector<double>(d), std::vector<double>(d)};
    Candidate minus{std::vector<double>(d), std::vector<double>(d)};
    for (std::size_t i = 0; i < d; ++i) {
      const double z = rng.normal();
      plus.noise[i] = z;
      minus.noise[i] = -z;
      plus.params[i] = dist.theta[i] + dist.sigma[i] * z;
      minus.params[i] = dist.theta[i] - dist.sigma[i] * z;
    }
    out.push_back(std::move(plus));
    out.push_back(std::move(minus));
  }
  return out;
}

std::vector<double> rank_utilities(std::span<const double> fitness) {
  const std::size_t n = fitness.size();
  if (n == 0) return {};
  std::vector<double> f(fitness.begin(), fitness.end());
  for (auto& v : f) v = sanitize(v);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });

  std::vector<double> raw(n);
  double total = 0.0;
  const double top = std::log(static_cast<double>(n) / 2.0 + 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    raw[r] = std::max(0.0, top - std::log(static_cast<double>(r + 1)));
    total += raw[r];
  }
  std::vector<double> by_rank(n);
  for (std::size_t r = 0; r < n; ++r) by_rank[r] = raw[r] / total - 1.0 / static_cast<double>(n);

  std::vector<double> utilities(n);
  for (std::size_t r = 0; r < n;) {
    std::size_t end = r + 1;
    while (end < n && f[order[end]] == f[order[r]]) ++end;
    double shared = 0.0;
    for (std::size_t k = r; k < end; ++k) shared += by_rank[k];
    shared /= static_cast<double>(end - r);
    // An all-tied population has zero total utility.
    if (end - r == n) shared = 0.0;
    for (std::size_t k = r; k < end; ++k) utilities[order[k]] = shared;
    r = end;
  }
  return utilities;
}

SearchDistribution snes_update(const SearchDistribution& dist, const std::vector<Candidate>& samples,
                               std::span<const double> fitness, const SnesConfig& cfg) {
  dist.validate();
  if (samples.size() != fitness.size() || samples.size() != static_cast<std::size_t>(cfg.population_size))
    throw std::invalid_argument("snes_update: samples, fitnesses and population size disagree");
  const std::size_t d = dist.theta.size();
  const std::vector<double> u = rank_utilities(fitness);

  std::vector<double> grad_theta(d, 0.0), grad_sigma(d, 0.0);
  for (std::size_t k = 0; k < samples.size(); k += 2) {
    const auto& za = samples[k].noise;
    const bool paired = k + 1 < samples.size();
    for (std::size_t i = 0; i < d; ++i) {
      // Mirrored partners are summed first so a tied pair cancels exactly.
      double pair = u[k] * za[i];
      double pair_sigma = u[k] * (za[i] * za[i] - 1.0);
      if (paired) {
        const double zb = samples[k + 1].noise[i];
        pair += u[k + 1] * zb;
        pair_sigma += u[k + 1] * (zb * zb - 1.0);
      }
      grad_theta[i] += pair;
      grad_sigma[i] += pair_sigma;
    }
  }

  const double tau_g = cfg.resolved_tau_global(d);
  const double tau_c = cfg.resolved_tau_coord(d);
  double mean_grad_sigma = 0.0;
  for (double g : grad_sigma) mean_grad_sigma += g;
  mean_grad_sigma /= static_cast<double>(d);

  SearchDistribution next = dist;
  for (std::size_t i = 0; i < d; ++i) {
    next.theta[i] = dist.theta[i] + cfg.center_lr * dist.sigma[i] * grad_theta[i];
    const double exponent = tau_g == tau_c
                                ? 0.5 * tau_c * grad_sigma[i]
                                : 0.5 * tau_g * mean_grad_sigma +
                                      0.5 * tau_c * (grad_sigma[i] - mean_grad_sigma);
    next.sigma[i] = dist.sigma[i] * std::exp(exponent);
  }
  return next;
}

double noisy_rollout_action(const Policy& policy, std::span<const double> observation,
                            double action_noise_sigma, Rng& rng, bool* clamped) {
  const double greedy = act_greedy(policy, observation);
  if (clamped) *clamped = false;
  if (action_noise_sigma == 0.0) return greedy;
  double pre_tanh;
  if (std::abs(greedy) >= 1.0) {
    pre_tanh = std::copysign(kMaxPreTanh, greedy);
    if (clamped) *clamped = true;
  } else {
    pre_tanh = std::clamp(atanh_safe(greedy), -kMaxPreTanh, kMaxPreTanh);
  }
  return std::tanh(pre_tanh + action_noise_sigma * rng.normal());
}

SnesResult run_snes(const SearchDistribution& initial, const FitnessFn& fitness,
                    const SnesConfig& cfg,
                    const std::function<void(const GenerationRecord&)>& on_generation) {
  cfg.validate();
  initial.validate();
  SnesResult result;
  result.best = initial.theta;
  result.best_fitness = sanitize(fitness(initial.theta, derive_seed(cfg.seed, {kCentreStream})));
  result.final_distribution = initial;

  SearchDistribution& dist = result.final_distribution;
  const auto n = static_cast<std::size_t>(cfg.population_size);
  for (int g = 0; g < cfg.generations; ++g) {
    const auto gen = static_cast<std::uint64_t>(g);
    Rng rng(derive_seed(cfg.seed, {kSampleStream, gen}));
    const std::vector<Candidate> population = sample_population(dist, cfg.population_size, rng);
    std::vector<double> f(n);
    parallel_for(n, [&](std::size_t k) { f[k] = fitness(population[k].params, derive_seed(cfg.seed, {gen, k})); });

    GenerationRecord rec;
    rec.generation = g;
    rec.best = -std::numeric_limits<double>::infinity();
    rec.worst = std::numeric_limits<double>::infinity();
    std::size_t finite = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(f[k])) {
        ++rec.failures;
        continue;
      }
      ++finite;
      rec.mean += f[k];
      rec.best = std::max(rec.best, f[k]);
      rec.worst = std::min(rec.worst, f[k]);
      if (f[k] > result.best_fitness) {
        result.best_fitness = f[k];
        result.best = population[k].params;
      }
    }
    rec.mean = finite ? rec.mean / static_cast<double>(finite) : 0.0;
    if (!finite) rec.best = rec.worst = 0.0;

    dist = snes_update(dist, population, f, cfg);
    double sigma_sum = 0.0;
    for (double s : dist.sigma) sigma_sum += s;
    rec.mean_sigma = sigma_sum / static_cast<double>(dist.sigma.size());
    rec.best_ever = result.best_fitness;
    result.log.push_back(rec);
    if (on_generation) on_generation(rec);
  }
  return result;
}

FinetuneResult finetune(const PolicyCheckpoint& checkpoint, const EpisodeSetup& setup,
                        const ScoreFn& score, const SnesConfig& cfg,
                        const std::function<void(const GenerationRecord&)>& on_generation) {
  cfg.validate();
  const Policy base = checkpoint.policy();
  const std::size_t begin =
      cfg.final_layer_only ? base.arch.layer_offset(base.arch.layer_count() - 1) : 0;
  const std::size_t dims = base.params.size() - begin;

  SearchDistribution initial{{base.params.begin() + static_cast<std::ptrdiff_t>(begin), base.params.end()},
                             std::vector<double>(dims, cfg.sigma_init)};

  const auto assemble = [&](std::span<const double> evolved) {
    Policy p = base;
    std::copy(evolved.begin(), evolved.end(), p.params.begin() + static_cast<std::ptrdiff_t>(begin));
    return p;
  };

  const FitnessFn fitness = [&](std::span<const double> evolved, std::uint64_t seed) {
    const Policy policy = assemble(evolved);
    double total = 0.0;
    for (int r = 0; r < cfg.fitness_repeats; ++r) {
      const auto repeat = static_cast<std::uint64_t>(r);
      auto rng = std::make_shared<Rng>(derive_seed(seed, {repeat, 0}));
      const Controller controller = [&policy, rng, sigma = cfg.action_noise_sigma](const State& s) {
        const Observation obs = observe(s);
        return noisy_rollout_action(policy, obs, sigma, *rng);
      };
      const Trajectory traj = run_episode(controller, setup, std::nullopt, derive_seed(seed, {repeat, 1}));
      if (traj.diverged) return -std::numeric_limits<double>::infinity();
      total += score(traj);
    }
    return total / static_cast<double>(cfg.fitness_repeats);
  };

  const SnesResult evolved = run_snes(initial, fitness, cfg, on_generation);

  FinetuneResult result;
  if (cfg.generations == 0) {
    result.best = checkpoint;
    result.best_fitness = evolved.best_fitness;
    return result;
  }
  result.best = checkpoint;
  result.best.set_policy(assemble(evolved.best));
  result.best.seed = cfg.seed;
  result.best.metadata["stage"] = "snes";
  result.best.metadata["generations"] = cfg.generations;
  result.best.metadata["best_fitness"] = evolved.best_fitness;
  result.best_fitness = evolved.best_fitness;
  result.log = evolved.log;
  return result;
}

}  // namespace swingup
