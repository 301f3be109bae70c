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

struct SACConfig {
  double entropy_temp = 0.2;        // tau in the entropy-regularized objective
  double target_update_rate = 0.005;
  double discount = 0.99;
  long replay_capacity = 300000;
  int batch_size = 256;
  double learning_rate = 3e-4;
  int gradient_steps_per_env_step = 1;
  long warmup_steps = 1000;
  long total_env_steps = 500000;
  std::vector<int> hidden{256, 256};
  long eval_every_steps = 1000;
  void validate() const;
};

/// y = r + discount [min(Q1t, Q2t)(s', a') - tau log pi(a'|s')], terminal
/// transitions bootstrap to y = r.  The next actions and their log-densities
/// must be fresh samples from the current policy.
Eigen::VectorXd sac_target(const DenseNet& q1_target, const DenseNet& q2_target,
                           const Eigen::MatrixXd& next_obs,
                           const Eigen::VectorXd& next_actions,
                           const Eigen::VectorXd& next_log_probs,
                           const Eigen::VectorXd& rewards,
                           const std::vector<unsigned char>& terminal,
                           double entropy_temp, double discount);

struct SacQLoss {
  double loss = 0.0;
  Eigen::VectorXd grad_flat;  // descent gradient for the critic parameters
};

/// Mean squared Bellman error of one critic on (obs, action, target) triples.
SacQLoss sac_q_loss(const DenseNet& q, const Eigen::MatrixXd& obs,
                    const Eigen::VectorXd& actions,
                    const Eigen::VectorXd& targets);

struct SacPolicyLoss {
  double loss = 0.0;
  Eigen::VectorXd grad_flat;  // descent gradient for the policy parameters
};

/// mean(tau log pi(a|s) - min_i Q_i(s, a)) with a reparameterized through the
/// squashed head using the supplied standard-normal noise (one entry per
/// column of obs); exact gradients with the noise held fixed.
SacPolicyLoss sac_policy_loss(const SquashedGaussianPolicy& policy,
                              const DenseNet& q1, const DenseNet& q2,
                              const Eigen::MatrixXd& obs,
                              const Eigen::VectorXd& noise,
                              double entropy_temp);

/// target <- rate*online + (1-rate)*target, element-wise.
void soft_update(Eigen::VectorXd& target_params,
                 const Eigen::VectorXd& online_params, double rate);

struct SACResult {
  SquashedGaussianPolicy policy;
  DenseNet q1;
  DenseNet q2;
  ConvergenceHistory history;
  long env_steps = 0;
  long episodes = 0;
  long updates = 0;
};

/// Off-policy training: uniform-random warmup, replay storage, one (or more)
/// gradient steps per environment step, soft target updates, periodic
/// deterministic evaluation.  Pure function of (config, seed).
SACResult sac_train(const EnvFactory& factory, const SACConfig& config,
                    std::uint64_t seed);

}  // namespace backflow
