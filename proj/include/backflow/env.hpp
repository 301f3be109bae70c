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

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "backflow/dynamics.hpp"
#include "backflow/pulse.hpp"
#include "backflow/rng.hpp"

namespace backflow {

// Observation layout, in order: normalized time t/T, distance D, previous
// slope, decay rate, current amplitude.
struct Observation {
  double normalized_time = 0.0;
  double distance = 1.0;
  double prev_slope = 0.0;
  double decay_rate = 0.0;
  double amplitude = 0.0;

  static constexpr int kDim = 5;
  Eigen::VectorXd vector() const;
};

struct EnvConfig {
  ReservoirParams reservoir;
  PropagationConfig propagation;
  Bounds bounds{-5.0, 5.0};
  double increment_penalty = 0.0;  // weight on (clipped increment)^2
  double amplitude_penalty = 0.0;  // weight on amplitude^2
  std::optional<double> fixed_omega0;  // evaluation mode: no reset draw
  void validate() const;
};

struct Transition {
  Eigen::VectorXd s;
  double a = 0.0;
  double r = 0.0;
  Eigen::VectorXd s_next;
  bool done = false;
};

// Trainer-facing environment interface.
class RlEnv {
 public:
  struct Step {
    Eigen::VectorXd obs;
    double reward = 0.0;
    bool done = false;
  };

  virtual ~RlEnv() = default;
  virtual int observation_dim() const = 0;
  virtual int episode_length() const = 0;
  virtual Bounds action_bounds() const = 0;
  virtual Eigen::VectorXd reset(std::uint64_t seed) = 0;
  /// Deterministic reset for evaluation rollouts.
  virtual Eigen::VectorXd reset_eval() = 0;
  virtual Step step(double action) = 0;
  /// Figure of merit of the last completed episode.
  virtual double episode_merit() const = 0;
};

using EnvFactory = std::function<std::unique_ptr<RlEnv>()>;

// Episodic control of the driven pair: actions are amplitude increments, the
// reward is the clipped distance slope minus the configured penalties.  One
// episode covers all N_c control bins.
class BackflowEnv final : public RlEnv {
 public:
  explicit BackflowEnv(const EnvConfig& config);

  int observation_dim() const override { return Observation::kDim; }
  int episode_length() const override {
    return config_.propagation.control_bins;
  }
  Bounds action_bounds() const override { return config_.bounds; }
  Eigen::VectorXd reset(std::uint64_t seed) override;
  Eigen::VectorXd reset_eval() override;
  Step step(double action) override;
  double episode_merit() const override;

  Observation observation() const { return obs_; }
  bool done() const;
  const std::vector<double>& distance_history() const { return distances_; }
  const std::vector<double>& reward_history() const { return rewards_; }
  const std::vector<double>& amplitude_history() const { return amplitudes_; }
  const EnvConfig& config() const { return config_; }
  /// Applied amplitudes of the last (complete or partial) episode as a pulse.
  Pulse episode_pulse() const;

 private:
  Eigen::VectorXd reset_with_omega0(double omega0);

  EnvConfig config_;
  std::unique_ptr<PairStepper> stepper_;
  Observation obs_;
  int k_ = 0;
  double omega_ = 0.0;
  std::vector<double> distances_;
  std::vector<double> rewards_;
  std::vector<double> amplitudes_;
};

struct EpisodeResult {
  std::vector<Transition> transitions;
  double n_tot = 0.0;
};

/// Runs exactly one episode under the given action rule.
EpisodeResult rollout(RlEnv& env,
                      const std::function<double(const Eigen::VectorXd&)>& policy,
                      std::uint64_t seed);

/// CSV with header k,t,Omega,D,Ddot,gamma,reward for a completed episode.
void write_episode_csv(const BackflowEnv& env, std::ostream& out);

}  // namespace backflow
