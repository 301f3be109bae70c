// Copyright 2026 The backflow authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "backflow/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "backflow/blp.hpp"
#include "backflow/errors.hpp"
#include "backflow/format.hpp"
#include "json.hpp"

namespace backflow {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double parsed = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError("bad numeric value for " + key + ": '" + value + "'");
  }
  return parsed;
}

long parse_long(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long parsed = std::strtol(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError("bad integer value for " + key + ": '" + value + "'");
  }
  return parsed;
}

int parse_int(const std::string& key, const std::string& value) {
  return static_cast<int>(parse_long(key, value));
}

std::vector<int> parse_int_list(const std::string& key,
                                const std::string& value) {
  std::vector<int> result;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    result.push_back(parse_int(key, trim(item)));
  }
  if (result.empty()) {
    throw ConfigError("empty list for " + key);
  }
  return result;
}

std::string join_int_list(const std::vector<int>& values) {
  std::string text;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text += ',';
    text += std::to_string(values[i]);
  }
  return text;
}

void apply_key(RunConfig& cfg, const std::string& key,
               const std::string& value) {
  if (key == "model.gamma_coupling") cfg.gamma_coupling = parse_double(key, value);
  else if (key == "model.lambda_width") cfg.lambda_width = parse_double(key, value);
  else if (key == "model.detuning") cfg.detuning = parse_double(key, value);
  else if (key == "model.horizon") cfg.horizon = parse_double(key, value);
  else if (key == "model.control_bins") cfg.control_bins = parse_int(key, value);
  else if (key == "model.substeps") cfg.substeps = parse_int(key, value);
  else if (key == "model.rate_cap") cfg.rate_cap = parse_double(key, value);
  else if (key == "model.omega_min") cfg.omega_min = parse_double(key, value);
  else if (key == "model.omega_max") cfg.omega_max = parse_double(key, value);
  else if (key == "method") cfg.method = value;
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "env.increment_penalty") cfg.increment_penalty = parse_double(key, value);
  else if (key == "env.amplitude_penalty") cfg.amplitude_penalty = parse_double(key, value);
  else if (key == "env.fixed_omega0") {
    if (value == "none") cfg.fixed_omega0.reset();
    else cfg.fixed_omega0 = parse_double(key, value);
  }
  else if (key == "oct.max_outer_iterations") cfg.oct.max_outer_iterations = parse_int(key, value);
  else if (key == "oct.max_iterations") cfg.oct.max_iterations = parse_int(key, value);
  else if (key == "oct.line_tol_factor") cfg.oct.line_tol_factor = parse_double(key, value);
  else if (key == "oct.fd_step") cfg.oct.fd_step = parse_double(key, value);
  else if (key == "oct.grad_tol") cfg.oct.grad_tol = parse_double(key, value);
  else if (key == "oct.objective_tol") cfg.oct.objective_tol = parse_double(key, value);
  else if (key == "oct.memory_depth") cfg.oct.memory_depth = parse_int(key, value);
  else if (key == "oct.initial_pulse") cfg.oct_initial_pulse = value;
  else if (key == "ppo.clip_eps") cfg.ppo.clip_eps = parse_double(key, value);
  else if (key == "ppo.discount") cfg.ppo.discount = parse_double(key, value);
  else if (key == "ppo.gae_lambda") cfg.ppo.gae_lambda = parse_double(key, value);
  else if (key == "ppo.epochs") cfg.ppo.epochs = parse_int(key, value);
  else if (key == "ppo.minibatch_size") cfg.ppo.minibatch_size = parse_int(key, value);
  else if (key == "ppo.learning_rate") cfg.ppo.learning_rate = parse_double(key, value);
  else if (key == "ppo.rollout_episodes") cfg.ppo.rollout_episodes = parse_int(key, value);
  else if (key == "ppo.total_env_steps") cfg.ppo.total_env_steps = parse_long(key, value);
  else if (key == "ppo.entropy_coef") cfg.ppo.entropy_coef = parse_double(key, value);
  else if (key == "ppo.hidden") cfg.ppo.hidden = parse_int_list(key, value);
  else if (key == "ppo.eval_every_rollouts") cfg.ppo.eval_every_rollouts = parse_int(key, value);
  else if (key == "sac.entropy_temp") cfg.sac.entropy_temp = parse_double(key, value);
  else if (key == "sac.target_update_rate") cfg.sac.target_update_rate = parse_double(key, value);
  else if (key == "sac.discount") cfg.sac.discount = parse_double(key, value);
  else if (key == "sac.replay_capacity") cfg.sac.replay_capacity = parse_long(key, value);
  else if (key == "sac.batch_size") cfg.sac.batch_size = parse_int(key, value);
  else if (key == "sac.learning_rate") cfg.sac.learning_rate = parse_double(key, value);
  else if (key == "sac.gradient_steps") cfg.sac.gradient_steps_per_env_step = parse_int(key, value);
  else if (key == "sac.warmup_steps") cfg.sac.warmup_steps = parse_long(key, value);
  else if (key == "sac.total_env_steps") cfg.sac.total_env_steps = parse_long(key, value);
  else if (key == "sac.hidden") cfg.sac.hidden = parse_int_list(key, value);
  else if (key == "sac.eval_every_steps") cfg.sac.eval_every_steps = parse_long(key, value);
  else throw ConfigError("unknown config key: " + key);
}

std::vector<std::pair<std::string, std::string>> model_entries(
    const RunConfig& c) {
  return {
      {"model.control_bins", std::to_string(c.control_bins)},
      {"model.detuning", format_g17(c.detuning)},
      {"model.gamma_coupling", format_g17(c.gamma_coupling)},
      {"model.horizon", format_g17(c.horizon)},
      {"model.lambda_width", format_g17(c.lambda_width)},
      {"model.omega_max", format_g17(c.omega_max)},
      {"model.omega_min", format_g17(c.omega_min)},
      {"model.rate_cap", format_g17(c.rate_cap)},
      {"model.substeps", std::to_string(c.substeps)},
  };
}

std::vector<std::pair<std::string, std::string>> all_entries(
    const RunConfig& c) {
  auto entries = model_entries(c);
  const std::vector<std::pair<std::string, std::string>> rest = {
      {"env.amplitude_penalty", format_g17(c.amplitude_penalty)},
      {"env.fixed_omega0",
       c.fixed_omega0 ? format_g17(*c.fixed_omega0) : std::string("none")},
      {"env.increment_penalty", format_g17(c.increment_penalty)},
      {"method", c.method},
      {"oct.fd_step", format_g17(c.oct.fd_step)},
      {"oct.grad_tol", format_g17(c.oct.grad_tol)},
      {"oct.initial_pulse", c.oct_initial_pulse},
      {"oct.line_tol_factor", format_g17(c.oct.line_tol_factor)},
      {"oct.max_iterations", std::to_string(c.oct.max_iterations)},
      {"oct.max_outer_iterations", std::to_string(c.oct.max_outer_iterations)},
      {"oct.memory_depth", std::to_string(c.oct.memory_depth)},
      {"oct.objective_tol", format_g17(c.oct.objective_tol)},
      {"ppo.clip_eps", format_g17(c.ppo.clip_eps)},
      {"ppo.discount", format_g17(c.ppo.discount)},
      {"ppo.entropy_coef", format_g17(c.ppo.entropy_coef)},
      {"ppo.epochs", std::to_string(c.ppo.epochs)},
      {"ppo.eval_every_rollouts", std::to_string(c.ppo.eval_every_rollouts)},
      {"ppo.gae_lambda", format_g17(c.ppo.gae_lambda)},
      {"ppo.hidden", join_int_list(c.ppo.hidden)},
      {"ppo.learning_rate", format_g17(c.ppo.learning_rate)},
      {"ppo.minibatch_size", std::to_string(c.ppo.minibatch_size)},
      {"ppo.rollout_episodes", std::to_string(c.ppo.rollout_episodes)},
      {"ppo.total_env_steps", std::to_string(c.ppo.total_env_steps)},
      {"sac.batch_size", std::to_string(c.sac.batch_size)},
      {"sac.discount", format_g17(c.sac.discount)},
      {"sac.entropy_temp", format_g17(c.sac.entropy_temp)},
      {"sac.eval_every_steps", std::to_string(c.sac.eval_every_steps)},
      {"sac.gradient_steps",
       std::to_string(c.sac.gradient_steps_per_env_step)},
      {"sac.hidden", join_int_list(c.sac.hidden)},
      {"sac.learning_rate", format_g17(c.sac.learning_rate)},
      {"sac.replay_capacity", std::to_string(c.sac.replay_capacity)},
      {"sac.target_update_rate", format_g17(c.sac.target_update_rate)},
      {"sac.total_env_steps", std::to_string(c.sac.total_env_steps)},
      {"sac.warmup_steps", std::to_string(c.sac.warmup_steps)},
      {"seed", std::to_string(c.seed)},
  };
  entries.insert(entries.end(), rest.begin(), rest.end());
  std::sort(entries.begin(), entries.end());
  return entries;
}

std::string render_entries(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string text;
  for (const auto& [key, value] : entries) {
    text += key;
    text += '=';
    text += value;
    text += '\n';
  }
  return text;
}

std::string hash_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << content;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir);
}

int support_count(const TrajectoryRecord& rec) {
  int count = 0;
  for (std::size_t k = 0; k + 1 < rec.n_loc.size(); ++k) {
    if (rec.n_loc[k] > 1e-6) ++count;
  }
  return count;
}

RunSummary base_summary(const RunConfig& config) {
  RunSummary summary;
  summary.method = config.method;
  summary.seed = config.seed;
  summary.model_hash = model_hash(config);
  summary.config_hash = config_hash(config);
  return summary;
}

Pulse pulse_from_vector(const RunConfig& config, const Eigen::VectorXd& x) {
  Pulse pulse;
  pulse.bounds = config.bounds();
  pulse.horizon = config.horizon;
  pulse.amplitudes.assign(x.data(), x.data() + x.size());
  return pulse;
}

// Deterministic greedy episode; returns the realized pulse and its merit.
template <typename Policy>
std::pair<Pulse, double> greedy_episode(const RunConfig& config,
                                        const Policy& policy) {
  EnvConfig env_cfg = config.env_config();
  BackflowEnv env(env_cfg);
  Eigen::VectorXd obs = env.reset_eval();
  while (!env.done()) {
    obs = env.step(mean_action(policy, obs)).obs;
  }
  return {env.episode_pulse(), env.episode_merit()};
}

struct LoadedRun {
  RunSummary summary;
  std::vector<double> times;
  std::vector<double> n_loc;
};

LoadedRun load_run(const std::string& dir) {
  LoadedRun run;
  run.summary = load_summary(dir);
  const std::string path = dir + "/trajectory.csv";
  std::ifstream in(path);
  if (!in) throw ConfigError("missing trajectory.csv in " + dir);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::stringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw ConfigError("malformed row in " + path);
    run.times.push_back(std::strtod(cells[1].c_str(), nullptr));
    run.n_loc.push_back(std::strtod(cells[6].c_str(), nullptr));
  }
  return run;
}

}  // namespace

ReservoirParams RunConfig::reservoir() const {
  ReservoirParams params;
  params.gamma_coupling = gamma_coupling;
  params.lambda_width = lambda_width;
  params.detuning = detuning;
  return params;
}

PropagationConfig RunConfig::propagation() const {
  PropagationConfig prop;
  prop.horizon = horizon;
  prop.control_bins = control_bins;
  prop.substeps = substeps;
  prop.rate_cap = rate_cap;
  return prop;
}

Bounds RunConfig::bounds() const { return Bounds{omega_min, omega_max}; }

EnvConfig RunConfig::env_config() const {
  EnvConfig env;
  env.reservoir = reservoir();
  env.propagation = propagation();
  env.bounds = bounds();
  env.increment_penalty = increment_penalty;
  env.amplitude_penalty = amplitude_penalty;
  env.fixed_omega0 = fixed_omega0;
  return env;
}

void RunConfig::validate() const {
  reservoir().validate();
  propagation().validate();
  bounds().validate();
  static const std::vector<std::string> kMethods = {"baseline", "powell",
                                                    "lbfgsb", "ppo", "sac"};
  if (std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end()) {
    throw ConfigError("unknown method: " + method);
  }
  if (oct_initial_pulse != "zero" && oct_initial_pulse != "random") {
    throw ConfigError("oct.initial_pulse must be zero or random");
  }
  if (increment_penalty < 0.0 || amplitude_penalty < 0.0) {
    throw ConfigError("env penalties must be non-negative");
  }
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig config;
  std::stringstream stream(text);
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_number) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(line_number) +
                        ": empty key or value");
    }
    try {
      apply_key(config, key, value);
    } catch (const std::invalid_argument& err) {
      throw ConfigError(err.what());
    }
  }
  return config;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string canonical_config_text(const RunConfig& config) {
  return render_entries(all_entries(config));
}

std::string canonical_model_text(const RunConfig& config) {
  return render_entries(model_entries(config));
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string config_hash(const RunConfig& config) {
  return hash_hex(fnv1a64(canonical_config_text(config)));
}

std::string model_hash(const RunConfig& config) {
  return hash_hex(fnv1a64(canonical_model_text(config)));
}

void save_summary(const RunSummary& summary, const std::string& dir) {
  ordered_json j;
  j["method"] = summary.method;
  j["seed"] = summary.seed;
  j["model_hash"] = summary.model_hash;
  j["config_hash"] = summary.config_hash;
  j["n_tot"] = summary.n_tot;
  j["uncontrolled_n_tot"] = summary.uncontrolled_n_tot;
  j["cost"] = ordered_json{{"objective_evaluations", summary.objective_evaluations},
                           {"env_steps", summary.env_steps},
                           {"episodes", summary.episodes},
                           {"updates", summary.updates}};
  j["n_loc_support"] = summary.n_loc_support;
  j["trace_corrections"] = summary.trace_corrections;
  j["positivity_projections"] = summary.positivity_projections;
  j["termination"] = summary.termination;
  j["artifacts"] = summary.artifacts;
  write_text_file(dir + "/summary.json", j.dump(2) + "\n");
}

RunSummary load_summary(const std::string& dir) {
  std::ifstream in(dir + "/summary.json");
  if (!in) throw ConfigError("missing summary.json in " + dir);
  const ordered_json j = ordered_json::parse(in);
  RunSummary summary;
  summary.method = j.at("method");
  summary.seed = j.at("seed");
  summary.model_hash = j.at("model_hash");
  summary.config_hash = j.at("config_hash");
  summary.n_tot = j.at("n_tot");
  summary.uncontrolled_n_tot = j.at("uncontrolled_n_tot");
  summary.objective_evaluations = j.at("cost").at("objective_evaluations");
  summary.env_steps = j.at("cost").at("env_steps");
  summary.episodes = j.at("cost").at("episodes");
  summary.updates = j.at("cost").at("updates");
  summary.n_loc_support = j.at("n_loc_support");
  summary.trace_corrections = j.at("trace_corrections");
  summary.positivity_projections = j.at("positivity_projections");
  summary.termination = j.at("termination");
  summary.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  return summary;
}

void write_trajectory_csv(const TrajectoryRecord& record,
                          const std::string& path) {
  std::string text = "k,t,Omega,D,Ddot,gamma,n_loc\n";
  for (std::size_t k = 0; k < record.times.size(); ++k) {
    text += std::to_string(k) + ',' + format_g17(record.times[k]) + ',' +
            format_g17(record.omega[k]) + ',' +
            format_g17(record.distances[k]) + ',' +
            format_g17(record.ddot[k]) + ',' + format_g17(record.gamma[k]) +
            ',' + format_g17(record.n_loc[k]) + '\n';
  }
  write_text_file(path, text);
}

double uncontrolled_n_tot(const RunConfig& config) {
  const BackflowObjective objective(config.reservoir(), config.propagation(),
                                    config.bounds());
  return objective(Eigen::VectorXd::Zero(config.control_bins));
}

RunSummary cmd_gamma(const RunConfig& config) {
  config.validate();
  ensure_dir(config.out_dir);
  const auto params = config.reservoir();
  const int grid = 2000;
  std::string csv = "t,gamma\n";
  for (int i = 0; i < grid; ++i) {
    const double t =
        (i == grid - 1) ? config.horizon : i * config.horizon / (grid - 1);
    csv += format_g17(t) + ',' + format_g17(decay_rate(params, t)) + '\n';
  }
  write_text_file(config.out_dir + "/gamma.csv", csv);

  const auto windows = negativity_windows(params, config.horizon, grid);
  ordered_json j;
  j["windows"] = ordered_json::array();
  for (const auto& [start, end] : windows) {
    j["windows"].push_back(ordered_json::array({start, end}));
  }
  write_text_file(config.out_dir + "/windows.json", j.dump(2) + "\n");

  RunSummary summary = base_summary(config);
  summary.method = "gamma";
  summary.artifacts = {"gamma.csv", "windows.json"};
  return summary;
}

RunSummary cmd_baseline(const RunConfig& config) {
  config.validate();
  ensure_dir(config.out_dir);
  const BackflowObjective objective(config.reservoir(), config.propagation(),
                                    config.bounds());
  const auto record =
      objective.trajectory(Eigen::VectorXd::Zero(config.control_bins));
  write_trajectory_csv(record, config.out_dir + "/trajectory.csv");

  RunSummary summary = base_summary(config);
  summary.method = "baseline";
  summary.n_tot = record.n_total;
  summary.uncontrolled_n_tot = record.n_total;
  summary.objective_evaluations = 1;
  summary.n_loc_support = support_count(record);
  summary.trace_corrections = record.trace_corrections;
  summary.positivity_projections = record.positivity_projections;
  summary.artifacts = {"trajectory.csv", "summary.json"};
  save_summary(summary, config.out_dir);
  return summary;
}

RunSummary cmd_oct(const RunConfig& config) {
  config.validate();
  if (config.method != "powell" && config.method != "lbfgsb") {
    throw ConfigError("oct command needs method powell or lbfgsb");
  }
  ensure_dir(config.out_dir);
  const BackflowObjective objective(config.reservoir(), config.propagation(),
                                    config.bounds());
  const Objective f = [&](const Eigen::VectorXd& x) { return objective(x); };

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(config.control_bins);
  if (config.oct_initial_pulse == "random") {
    const Pulse start = random_pulse(config.seed, config.bounds(),
                                     config.control_bins, config.horizon);
    x0 = Eigen::Map<const Eigen::VectorXd>(start.amplitudes.data(),
                                           config.control_bins);
  }

  const OptimizeResult result =
      (config.method == "powell")
          ? powell_optimize(f, x0, config.bounds(), config.oct)
          : lbfgsb_optimize(f, x0, config.bounds(), config.oct);

  std::string conv = "iteration,n_tot,evals\n";
  for (const auto& entry : result.history.entries) {
    conv += std::to_string(entry.iteration) + ',' +
            format_g17(entry.objective) + ',' +
            std::to_string(entry.evaluations) + '\n';
  }
  write_text_file(config.out_dir + "/convergence.csv", conv);

  const Pulse pulse = pulse_from_vector(config, result.x);
  write_pulse_csv(pulse, config.out_dir + "/pulse.csv");
  const auto record = objective.trajectory(result.x);
  write_trajectory_csv(record, config.out_dir + "/trajectory.csv");

  RunSummary summary = base_summary(config);
  summary.n_tot = result.objective;
  summary.uncontrolled_n_tot = uncontrolled_n_tot(config);
  summary.objective_evaluations = result.evaluations;
  summary.n_loc_support = support_count(record);
  summary.trace_corrections = record.trace_corrections;
  summary.positivity_projections = record.positivity_projections;
  summary.termination = result.termination;
  summary.artifacts = {"convergence.csv", "pulse.csv", "trajectory.csv",
                       "summary.json"};
  save_summary(summary, config.out_dir);
  return summary;
}

RunSummary cmd_train(const RunConfig& config) {
  config.validate();
  if (config.method != "ppo" && config.method != "sac") {
    throw ConfigError("train command needs method ppo or sac");
  }
  ensure_dir(config.out_dir);
  const EnvFactory factory = [&config] {
    return std::make_unique<BackflowEnv>(config.env_config());
  };

  RunSummary summary = base_summary(config);
  ConvergenceHistory history;
  Pulse pulse;
  double merit = 0.0;
  if (config.method == "ppo") {
    const auto result = ppo_train(factory, config.ppo, config.seed);
    history = result.history;
    summary.env_steps = result.env_steps;
    summary.episodes = result.episodes;
    summary.updates = result.updates;
    save_policy_checkpoint(result.policy, config.out_dir + "/checkpoint.json");
    std::tie(pulse, merit) = greedy_episode(config, result.policy);
  } else {
    const auto result = sac_train(factory, config.sac, config.seed);
    history = result.history;
    summary.env_steps = result.env_steps;
    summary.episodes = result.episodes;
    summary.updates = result.updates;
    save_policy_checkpoint(result.policy, config.out_dir + "/checkpoint.json");
    std::tie(pulse, merit) = greedy_episode(config, result.policy);
  }

  std::ostringstream conv;
  write_convergence_csv(history, conv);
  write_text_file(config.out_dir + "/convergence.csv", conv.str());
  write_pulse_csv(pulse, config.out_dir + "/pulse.csv");

  const BackflowObjective objective(config.reservoir(), config.propagation(),
                                    config.bounds());
  const Eigen::VectorXd amplitudes = Eigen::Map<const Eigen::VectorXd>(
      pulse.amplitudes.data(), static_cast<Eigen::Index>(pulse.amplitudes.size()));
  const auto record = objective.trajectory(amplitudes);
  write_trajectory_csv(record, config.out_dir + "/trajectory.csv");

  summary.n_tot = merit;
  summary.uncontrolled_n_tot = uncontrolled_n_tot(config);
  summary.n_loc_support = support_count(record);
  summary.trace_corrections = record.trace_corrections;
  summary.positivity_projections = record.positivity_projections;
  summary.artifacts = {"convergence.csv", "checkpoint.json", "pulse.csv",
                       "trajectory.csv", "summary.json"};
  save_summary(summary, config.out_dir);
  return summary;
}

RunSummary cmd_eval(const RunConfig& config, const std::string& checkpoint) {
  config.validate();
  ensure_dir(config.out_dir);
  DiagGaussianPolicy ppo_policy;
  SquashedGaussianPolicy sac_policy;
  const std::string kind =
      load_policy_checkpoint(checkpoint, &ppo_policy, &sac_policy);

  Pulse pulse;
  double merit = 0.0;
  if (kind == "ppo_policy") {
    std::tie(pulse, merit) = greedy_episode(config, ppo_policy);
  } else {
    std::tie(pulse, merit) = greedy_episode(config, sac_policy);
  }

  write_pulse_csv(pulse, config.out_dir + "/pulse.csv");
  const BackflowObjective objective(config.reservoir(), config.propagation(),
                                    config.bounds());
  const Eigen::VectorXd amplitudes = Eigen::Map<const Eigen::VectorXd>(
      pulse.amplitudes.data(), static_cast<Eigen::Index>(pulse.amplitudes.size()));
  const auto record = objective.trajectory(amplitudes);
  write_trajectory_csv(record, config.out_dir + "/trajectory.csv");

  RunSummary summary = base_summary(config);
  summary.method = (kind == "ppo_policy") ? "ppo" : "sac";
  summary.n_tot = merit;
  summary.uncontrolled_n_tot = uncontrolled_n_tot(config);
  summary.env_steps = config.control_bins;
  summary.n_loc_support = support_count(record);
  summary.trace_corrections = record.trace_corrections;
  summary.positivity_projections = record.positivity_projections;
  summary.artifacts = {"pulse.csv", "trajectory.csv", "summary.json"};
  save_summary(summary, config.out_dir);
  return summary;
}

void cmd_report(const std::vector<std::string>& run_dirs,
                const std::string& out_dir) {
  if (run_dirs.empty()) {
    throw ConfigError("report needs at least one run directory");
  }
  std::vector<LoadedRun> runs;
  for (const auto& dir : run_dirs) runs.push_back(load_run(dir));
  for (const auto& run : runs) {
    if (run.summary.model_hash != runs.front().summary.model_hash) {
      throw ConfigError("refusing to mix model hashes " +
                        runs.front().summary.model_hash + " and " +
                        run.summary.model_hash);
    }
  }
  ensure_dir(out_dir);

  // Column labels: method names, deduplicated in input order.
  std::vector<std::string> labels;
  std::map<std::string, int> seen;
  for (const auto& run : runs) {
    const int n = ++seen[run.summary.method];
    labels.push_back(n == 1 ? run.summary.method
                            : run.summary.method + "_" + std::to_string(n));
  }

  std::string comparison =
      "method,n_tot,uncontrolled_n_tot,objective_evaluations,env_steps,"
      "episodes,updates,n_loc_support\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& s = runs[i].summary;
    comparison += labels[i] + ',' + format_g17(s.n_tot) + ',' +
                  format_g17(s.uncontrolled_n_tot) + ',' +
                  std::to_string(s.objective_evaluations) + ',' +
                  std::to_string(s.env_steps) + ',' +
                  std::to_string(s.episodes) + ',' +
                  std::to_string(s.updates) + ',' +
                  std::to_string(s.n_loc_support) + '\n';
  }
  write_text_file(out_dir + "/comparison.csv", comparison);

  const std::size_t rows = runs.front().times.size();
  for (const auto& run : runs) {
    if (run.times.size() != rows) {
      throw ConfigError("trajectory grids differ despite equal model hashes");
    }
  }
  std::string n_loc = "t";
  for (const auto& label : labels) n_loc += ',' + label;
  n_loc += '\n';
  for (std::size_t k = 0; k < rows; ++k) {
    n_loc += format_g17(runs.front().times[k]);
    for (const auto& run : runs) n_loc += ',' + format_g17(run.n_loc[k]);
    n_loc += '\n';
  }
  write_text_file(out_dir + "/n_loc.csv", n_loc);
}

}  // namespace backflow
