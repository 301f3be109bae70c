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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "backflow/env.hpp"
#include "backflow/oct.hpp"
#include "backflow/ppo.hpp"
#include "backflow/sac.hpp"

namespace backflow {

// One run = one flat config file with dotted keys.  Unknown keys are
// rejected; every omitted key takes the default recorded here.
struct RunConfig {
  // model block
  double gamma_coupling = 5.0;
  double lambda_width = 1.0;
  double detuning = 1.0;
  double horizon = 7.0;
  int control_bins = 70;
  int substeps = 20;
  double rate_cap = 5.0;
  double omega_min = -5.0;
  double omega_max = 5.0;

  std::string method = "baseline";  // baseline|powell|lbfgsb|ppo|sac
  std::uint64_t seed = 42;
  std::string out_dir = "out";

  double increment_penalty = 0.0;
  double amplitude_penalty = 0.0;
  std::optional<double> fixed_omega0;

  OCTConfig oct;
  std::string oct_initial_pulse = "zero";  // zero|random

  PPOConfig ppo;
  SACConfig sac;

  ReservoirParams reservoir() const;
  PropagationConfig propagation() const;
  Bounds bounds() const;
  EnvConfig env_config() const;
  void validate() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Sorted key=value lines of the fully resolved config (out_dir excluded);
/// the identity the hashes are computed over.
std::string canonical_config_text(const RunConfig& config);
std::string canonical_model_text(const RunConfig& config);

std::uint64_t fnv1a64(const std::string& text);
std::string config_hash(const RunConfig& config);
std::string model_hash(const RunConfig& config);

struct RunSummary {
  std::string method;
  std::uint64_t seed = 0;
  std::string model_hash;
  std::string config_hash;
  double n_tot = 0.0;
  double uncontrolled_n_tot = 0.0;
  long objective_evaluations = 0;
  long env_steps = 0;
  long episodes = 0;
  long updates = 0;
  int n_loc_support = 0;
  long trace_corrections = 0;
  long positivity_projections = 0;
  std::string termination;
  std::vector<std::string> artifacts;
};

void save_summary(const RunSummary& summary, const std::string& dir);
RunSummary load_summary(const std::string& dir);

void write_trajectory_csv(const TrajectoryRecord& record,
                          const std::string& path);

/// Backflow of the zero pulse under the run's model (projection policy).
double uncontrolled_n_tot(const RunConfig& config);

// Subcommand bodies; each writes its artifacts into config.out_dir and
// returns the summary it stored there.
RunSummary cmd_gamma(const RunConfig& config);
RunSummary cmd_baseline(const RunConfig& config);
RunSummary cmd_oct(const RunConfig& config);
RunSummary cmd_train(const RunConfig& config);
RunSummary cmd_eval(const RunConfig& config, const std::string& checkpoint);
/// Aggregates runs that share a model hash into comparison.csv and n_loc.csv.
void cmd_report(const std::vector<std::string>& run_dirs,
                const std::string& out_dir);

}  // namespace backflow
