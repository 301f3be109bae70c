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

#include "backflow/agents.hpp"
#include "backflow/nn.hpp"

namespace backflow {

struct PPOConfig {
  double clip_eps = 0.2;
  double discount = 0.99;
  double gae_lambda = 0.95;
  int epochs = 10;
  int minibatch_size = 64;
  double learning_rate = 6e-4;
  int rollout_episodes = 10;
  long total_env_steps = 500000;
  double entropy_coef = 0.0;
  std::vector<int> hidden{64, 64};
  double init_log_std = 0.0;
  int eval_every_rollouts = 1;
  void validate() const;
};

struct SurrogateResult {
  double value = 0.0;
  Eigen::VectorXd dlogp;     // d(value)/d(logp_new), per sample
  double clip_fraction = 0.0;
};

/// Clipped surrogate mean over a batch; advantages are expected normalized.
/// Throws NumericError on non-finite ratios.
SurrogateResult ppo_surrogate(const Eigen::VectorXd& logp_new,
                              const Eigen::VectorXd& logp_old,
                              const Eigen::VectorXd& advantages,
                              double clip_eps);

struct PolicyGradient {
  double value = 0.0;           // surrogate plus entropy bonus
  Eigen::VectorXd grad_flat;    // ascent gradient, [mean-net params, log_std]
  double clip_fraction = 0.0;
};

/// Surrogate value and its exact ascent gradient through the Gaussian head;
/// parameters are laid out as the flattened mean net followed by log_std.
PolicyGradient ppo_policy_gradient(const DiagGaussianPolicy& policy,
                                   const Eigen::MatrixXd& states,
                                   const Eigen::VectorXd& actions,
                                   const Eigen::VectorXd& logp_old,
                                   const Eigen::VectorXd& advantages,
                                   double clip_eps, double entropy_coef);

struct PPOResult {
  DiagGaussianPolicy policy;
  DenseNet value_net;
  ConvergenceHistory history;
  long env_steps = 0;
  long episodes = 0;
  long updates = 0;
};

/// On-policy training: rollout collection, GAE, epochs of shuffled
/// minibatch ascent on the clipped surrogate plus value regression.
/// The whole trace is a pure function of (config, seed).
PPOResult ppo_train(const EnvFactory& factory, const PPOConfig& config,
                    std::uint64_t seed);

}  // namespace backflow
