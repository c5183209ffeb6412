#include "swingup/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "swingup/report.hpp"

namespace swingup {

ConfigError::ConfigError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
      line_(line) {}

std::size_t locate_key(std::string_view text, const std::vector<std::string>& path) {
  std::size_t best_line = 0, line = 1, level = 0;
  std::size_t depth = 0;
  for (std::size_t i = 0; i < text.size() && level < path.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (depth-- <= level + 1) break;  // left the object that should hold path[level]
    } else if (c == '"') {
      std::string key;
      std::size_t j = i + 1;
      for (; j < text.size() && text[j] != '"'; ++j) {
        if (text[j] == '\\') ++j;
        if (j < text.size()) key += text[j];
      }
      std::size_t k = j + 1;
      while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
      if (k < text.size() && text[k] == ':' && depth == level + 1 && key == path[level]) {
        best_line = line;
        ++level;
      }
      i = j;
    }
  }
  return best_line;
}

namespace {

/// Reads one JSON object section, remembering which keys were consumed.
class Section {
 public:
  Section(const nlohmann::json& node, std::vector<std::string> path, std::string_view text,
          const std::string& source)
      : node_(node), path_(std::move(path)), text_(text), source_(source) {
    if (!node_.is_object()) fail({}, "must be an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    auto full = path_;
    if (!key.empty()) full.push_back(key);
    std::string name;
    for (const auto& p : full) name += (name.empty() ? "" : ".") + p;
    throw ConfigError(source_, locate_key(text_, full), "'" + name + "' " + what);
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  const nlohmann::json& raw(const std::string& key) {
    if (!node_.contains(key)) fail(key, "is missing (required key)");
    used_.insert(key);
    return node_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::uint64_t unsigned_int(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(key, "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    return has(key) ? unsigned_int(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean()) fail(key, "must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  Section child(const std::string& key) {
    raw(key);
    auto p = path_;
    p.push_back(key);
    return Section(node_.at(key), p, text_, source_);
  }

  void reject_unknown() const {
    for (const auto& [key, value] : node_.items())
      if (!used_.contains(key)) fail(key, "is not a recognised key");
  }

  /// Runs `fn` and converts std::invalid_argument into a located error.
  template <typename Fn>
  void check(const std::string& key, Fn&& fn) const {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      fail(key, std::string("is invalid: ") + e.what());
    }
  }

  const std::vector<std::string>& path() const { return path_; }
  std::string_view text() const { return text_; }
  const std::string& source() const { return source_; }
  const nlohmann::json& node() const { return node_; }

 private:
  const nlohmann::json& node_;
  std::vector<std::string> path_;
  std::string_view text_;
  const std::string& source_;
  std::set<std::string> used_;
};

void read_model(Section s, ModelParams& m) {
  s.check("setting", [&] { m.setting = parse_actuation(s.string("setting")); });
  m.m1 = s.number("m1");
  m.m2 = s.number("m2");
  m.l1 = s.number("l1");
  m.l2 = s.number("l2");
  m.r1 = s.number("r1");
  m.r2 = s.number("r2");
  m.I1 = s.number("I1");
  m.I2 = s.number("I2");
  m.b1 = s.number("b1");
  m.b2 = s.number("b2");
  m.cf1 = s.number("cf1");
  m.cf2 = s.number("cf2");
  m.g = s.number("g");
  m.tau_max = s.number("tau_max");
  s.reject_unknown();
  s.check("", [&] { m.validate(); });
}

void read_reward(Section s, RewardConfig& r, const ModelParams& m) {
  r.alpha = s.number("alpha");
  r.beta = s.number("beta");
  r.rho1 = s.number("rho1");
  r.rho2 = s.number("rho2");
  r.phi1 = s.number("phi1");
  r.phi2 = s.number("phi2");
  r.eta = s.number("eta");
  r.y_threshold = s.number("y_th");
  s.reject_unknown();
  s.check("", [&] { r.validate(m); });
}

void read_sac(Section s, SacConfig& c) {
  c.gamma = s.number("gamma", c.gamma);
  c.ent_alpha = s.number("ent_alpha", c.ent_alpha);
  c.auto_entropy = s.boolean("auto_entropy", c.auto_entropy);
  c.target_entropy = s.number("target_entropy", c.target_entropy);
  c.polyak_tau = s.number("polyak_tau", c.polyak_tau);
  c.lr = s.number("lr", c.lr);
  c.batch_size = s.unsigned_int("batch_size", c.batch_size);
  c.buffer_capacity = s.unsigned_int("buffer_capacity", c.buffer_capacity);
  c.control_hz = s.number("control_hz", c.control_hz);
  c.total_steps = s.unsigned_int("total_steps", c.total_steps);
  c.warmup_steps = s.unsigned_int("warmup_steps", c.warmup_steps);
  c.hidden_width = s.unsigned_int("hidden_width", c.hidden_width);
  c.hidden_layers = s.unsigned_int("hidden_layers", c.hidden_layers);
  s.check("activation", [&] {
    c.activation = parse_activation(s.string("activation", std::string(to_string(c.activation))));
  });
  c.episode_seconds = s.number("episode_seconds", c.episode_seconds);
  c.initial_noise = s.number("initial_noise", c.initial_noise);
  c.eval_interval = s.unsigned_int("eval_interval", c.eval_interval);
  c.eval_episodes = s.unsigned_int("eval_episodes", c.eval_episodes);
  c.eval_initial_noise = s.number("eval_initial_noise", c.eval_initial_noise);
  c.log_interval = s.unsigned_int("log_interval", c.log_interval);
  c.stop_success_rate = s.number("stop_success_rate", c.stop_success_rate);
  s.reject_unknown();
  s.check("", [&] { c.validate(); });
}

void read_snes(Section s, SnesConfig& c) {
  c.population_size = static_cast<int>(s.unsigned_int("population_size", static_cast<std::uint64_t>(c.population_size)));
  c.sigma_init = s.number("sigma_init", c.sigma_init);
  c.center_lr = s.number("center_lr", c.center_lr);
  c.tau_global = s.number("tau_global", c.tau_global);
  c.tau_coord = s.number("tau_coord", c.tau_coord);
  c.generations = static_cast<int>(s.unsigned_int("generations", static_cast<std::uint64_t>(c.generations)));
  c.fitness_repeats = static_cast<int>(s.unsigned_int("fitness_repeats", static_cast<std::uint64_t>(c.fitness_repeats)));
  c.action_noise_sigma = s.number("action_noise_sigma", c.action_noise_sigma);
  c.final_layer_only = s.boolean("final_layer_only", c.final_layer_only);
  s.reject_unknown();
  s.check("", [&] { c.validate(); });
}

void read_scoring(Section s, ScoringConfig& c) {
  if (s.has("criteria")) {
    Section k = s.child("criteria");
    auto& cr = c.criteria;
    cr.weight_swingup_time = k.number("weight_swingup_time", cr.weight_swingup_time);
    cr.norm_swingup_time = k.number("norm_swingup_time", cr.norm_swingup_time);
    cr.weight_torque_integral = k.number("weight_torque_integral", cr.weight_torque_integral);
    cr.norm_torque_integral = k.number("norm_torque_integral", cr.norm_torque_integral);
    cr.weight_energy = k.number("weight_energy", cr.weight_energy);
    cr.norm_energy = k.number("norm_energy", cr.norm_energy);
    cr.weight_peak_torque = k.number("weight_peak_torque", cr.weight_peak_torque);
    cr.norm_peak_torque = k.number("norm_peak_torque", cr.norm_peak_torque);
    cr.weight_peak_velocity = k.number("weight_peak_velocity", cr.weight_peak_velocity);
    cr.norm_peak_velocity = k.number("norm_peak_velocity", cr.norm_peak_velocity);
    cr.success_window = k.number("success_window", cr.success_window);
    k.reject_unknown();
    k.check("", [&] { cr.validate(); });
  }
  c.action_noise_sigma = s.number("action_noise_sigma", c.action_noise_sigma);
  if (c.action_noise_sigma < 0) s.fail("action_noise_sigma", "must be >= 0");
  if (s.has("perturbations")) {
    const auto& list = s.raw("perturbations");
    if (!list.is_array()) s.fail("perturbations", "must be an array");
    c.perturbations.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      auto path = s.path();
      path.push_back("perturbations");
      Section p(list[i], path, s.text(), s.source());
      PerturbationSpec spec;
      p.check("category", [&] { spec.category = parse_perturbation_category(p.string("category")); });
      spec.parameter = p.string("parameter", "");
      const auto& mags = p.raw("magnitudes");
      if (!mags.is_array()) p.fail("magnitudes", "must be an array of numbers");
      for (const auto& m : mags) {
        if (!m.is_number()) p.fail("magnitudes", "must be an array of numbers");
        spec.magnitudes.push_back(m.get<double>());
      }
      spec.trials = static_cast<int>(p.unsigned_int("trials", 1));
      p.reject_unknown();
      p.check("", [&] { spec.validate(); });
      c.perturbations.push_back(std::move(spec));
    }
  }
  s.reject_unknown();
}

}  // namespace

MlpArchitecture ExperimentConfig::policy_arch() const {
  return policy_architecture(sac.hidden_width, sac.hidden_layers, sac.activation);
}

EpisodeSetup ExperimentConfig::episode_setup() const {
  return {model, reward, kEpisodeDuration, kEvalDt, 0.0};
}

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line =
        1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ConfigError(source, line, std::string("syntax error: ") + e.what());
  }

  ExperimentConfig cfg;
  Section root(doc, {}, text, source);

  Section run = root.child("run");
  cfg.run.name = run.string("name", cfg.run.name);
  cfg.run.seed = run.unsigned_int("seed");
  cfg.run.output = run.string("output", "");
  run.reject_unknown();

  read_model(root.child("model"), cfg.model);
  read_reward(root.child("reward"), cfg.reward, cfg.model);
  if (root.has("sac")) read_sac(root.child("sac"), cfg.sac);
  if (root.has("snes")) read_snes(root.child("snes"), cfg.snes);
  if (root.has("scoring")) read_scoring(root.child("scoring"), cfg.scoring);
  root.reject_unknown();
  cfg.snes.seed = cfg.run.seed;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  json perturbations = json::array();
  for (const auto& p : c.scoring.perturbations)
    perturbations.push_back({{"category", to_string(p.category)},
                             {"parameter", p.parameter},
                             {"magnitudes", p.magnitudes},
                             {"trials", p.trials}});
  const auto& m = c.model;
  const auto& r = c.reward;
  const auto& s = c.sac;
  const auto& e = c.snes;
  return json{
      {"run", {{"name", c.run.name}, {"seed", c.run.seed}, {"output", c.run.output}}},
      {"model",
       {{"setting", to_string(m.setting)}, {"m1", m.m1}, {"m2", m.m2}, {"l1", m.l1}, {"l2", m.l2},
        {"r1", m.r1}, {"r2", m.r2}, {"I1", m.I1}, {"I2", m.I2}, {"b1", m.b1}, {"b2", m.b2},
        {"cf1", m.cf1}, {"cf2", m.cf2}, {"g", m.g}, {"tau_max", m.tau_max}}},
      {"reward",
       {{"alpha", r.alpha}, {"beta", r.beta}, {"rho1", r.rho1}, {"rho2", r.rho2}, {"phi1", r.phi1},
        {"phi2", r.phi2}, {"eta", r.eta}, {"y_th", r.y_threshold}}},
      {"sac",
       {{"gamma", s.gamma}, {"ent_alpha", s.ent_alpha}, {"auto_entropy", s.auto_entropy},
        {"target_entropy", s.target_entropy}, {"polyak_tau", s.polyak_tau}, {"lr", s.lr},
        {"batch_size", s.batch_size}, {"buffer_capacity", s.buffer_capacity},
        {"control_hz", s.control_hz}, {"total_steps", s.total_steps},
        {"warmup_steps", s.warmup_steps}, {"hidden_width", s.hidden_width},
        {"hidden_layers", s.hidden_layers}, {"activation", to_string(s.activation)},
        {"episode_seconds", s.episode_seconds}, {"initial_noise", s.initial_noise},
        {"eval_interval", s.eval_interval}, {"eval_episodes", s.eval_episodes},
        {"eval_initial_noise", s.eval_initial_noise}, {"log_interval", s.log_interval},
        {"stop_success_rate", s.stop_success_rate}}},
      {"snes",
       {{"population_size", e.population_size}, {"sigma_init", e.sigma_init},
        {"center_lr", e.center_lr}, {"tau_global", e.tau_global}, {"tau_coord", e.tau_coord},
        {"generations", e.generations}, {"fitness_repeats", e.fitness_repeats},
        {"action_noise_sigma", e.action_noise_sigma}, {"final_layer_only", e.final_layer_only}}},
      {"scoring",
       {{"criteria", criteria_to_json(c.scoring.criteria)},
        {"action_noise_sigma", c.scoring.action_noise_sigma},
        {"perturbations", perturbations}}},
  };
}

std::string config_to_text(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

}  // namespace swingup
