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

#include "backflow/sac.hpp"

#include <cmath>
#include <stdexcept>

#include "backflow/errors.hpp"

namespace backflow {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

Eigen::MatrixXd critic_input(const Eigen::MatrixXd& obs,
                             const Eigen::VectorXd& actions) {
  Eigen::MatrixXd input(obs.rows() + 1, obs.cols());
  input.topRows(obs.rows()) = obs;
  input.bottomRows(1) = actions.transpose();
  return input;
}

struct SquashedBatch {
  Eigen::VectorXd mu;
  Eigen::VectorXd log_std;       // clamped
  std::vector<bool> std_active;  // clamp not binding
  Eigen::VectorXd pre_squash;    // u = mu + sigma*z
  Eigen::VectorXd tanh_u;
  Eigen::VectorXd actions;
  Eigen::VectorXd log_probs;
};

SquashedBatch squash_batch(const SquashedGaussianPolicy& policy,
                           const Eigen::MatrixXd& head,
                           const Eigen::VectorXd& noise) {
  const Eigen::Index n = head.cols();
  SquashedBatch batch;
  batch.mu = head.row(0).transpose();
  batch.log_std.resize(n);
  batch.std_active.resize(static_cast<std::size_t>(n));
  batch.pre_squash.resize(n);
  batch.tanh_u.resize(n);
  batch.actions.resize(n);
  batch.log_probs.resize(n);
  const double log_scale = std::log(policy.scale());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double raw = head(1, i);
    batch.std_active[static_cast<std::size_t>(i)] =
        raw > kLogStdMin && raw < kLogStdMax;
    const double ls = std::min(std::max(raw, kLogStdMin), kLogStdMax);
    batch.log_std[i] = ls;
    const double u = batch.mu[i] + std::exp(ls) * noise[i];
    batch.pre_squash[i] = u;
    batch.tanh_u[i] = std::tanh(u);
    batch.actions[i] = policy.offset() + policy.scale() * batch.tanh_u[i];
    batch.log_probs[i] = -0.5 * noise[i] * noise[i] - ls - kHalfLog2Pi -
                         log_one_minus_tanh_sq(u) - log_scale;
  }
  return batch;
}

}  // namespace

void SACConfig::validate() const {
  if (!(entropy_temp > 0.0)) {
    throw std::invalid_argument("SACConfig: entropy_temp must be positive");
  }
  if (!(target_update_rate > 0.0 && target_update_rate <= 1.0)) {
    throw std::invalid_argument("SACConfig: target rate must be in (0, 1]");
  }
  if (discount < 0.0 || discount > 1.0) {
    throw std::invalid_argument("SACConfig: discount must be in [0, 1]");
  }
  if (replay_capacity < batch_size) {
    throw std::invalid_argument("SACConfig: capacity must cover a batch");
  }
  if (batch_size < 1 || gradient_steps_per_env_step < 1 ||
      total_env_steps < 1 || eval_every_steps < 1 || warmup_steps < 0) {
    throw std::invalid_argument("SACConfig: counts must be positive");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("SACConfig: learning rate must be positive");
  }
}

Eigen::VectorXd sac_target(const DenseNet& q1_target, const DenseNet& q2_target,
                           const Eigen::MatrixXd& next_obs,
                           const Eigen::VectorXd& next_actions,
                           const Eigen::VectorXd& next_log_probs,
                           const Eigen::VectorXd& rewards,
                           const std::vector<unsigned char>& terminal,
                           double entropy_temp, double discount) {
  const Eigen::Index n = rewards.size();
  if (next_obs.cols() != n || next_actions.size() != n ||
      next_log_probs.size() != n ||
      static_cast<Eigen::Index>(terminal.size()) != n) {
    throw std::invalid_argument("sac_target: batch size mismatch");
  }
  const Eigen::MatrixXd input = critic_input(next_obs, next_actions);
  const Eigen::VectorXd v1 = net_forward(q1_target, input).row(0).transpose();
  const Eigen::VectorXd v2 = net_forward(q2_target, input).row(0).transpose();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (terminal[static_cast<std::size_t>(i)]) {
      y[i] = rewards[i];
    } else {
      y[i] = rewards[i] +
             discount * (std::min(v1[i], v2[i]) -
                         entropy_temp * next_log_probs[i]);
    }
  }
  return y;
}

SacQLoss sac_q_loss(const DenseNet& q, const Eigen::MatrixXd& obs,
                    const Eigen::VectorXd& actions,
                    const Eigen::VectorXd& targets) {
  const Eigen::Index n = actions.size();
  ForwardCache cache;
  const Eigen::VectorXd v =
      net_forward_cached(q, critic_input(obs, actions), cache)
          .row(0)
          .transpose();
  const Eigen::VectorXd err = v - targets;
  SacQLoss result;
  result.loss = err.squaredNorm() / static_cast<double>(n);
  const Eigen::MatrixXd upstream =
      (2.0 / static_cast<double>(n)) * err.transpose();
  result.grad_flat = grads_flatten(net_backward(q, cache, upstream));
  return result;
}

SacPolicyLoss sac_policy_loss(const SquashedGaussianPolicy& policy,
                              const DenseNet& q1, const DenseNet& q2,
                              const Eigen::MatrixXd& obs,
                              const Eigen::VectorXd& noise,
                              double entropy_temp) {
  const Eigen::Index n = obs.cols();
  if (noise.size() != n) {
    throw std::invalid_argument("sac_policy_loss: one noise draw per sample");
  }
  ForwardCache head_cache;
  const Eigen::MatrixXd head =
      net_forward_cached(policy.net, obs, head_cache);
  const SquashedBatch batch = squash_batch(policy, head, noise);

  ForwardCache q1_cache;
  ForwardCache q2_cache;
  const Eigen::MatrixXd q_in = critic_input(obs, batch.actions);
  const Eigen::VectorXd v1 =
      net_forward_cached(q1, q_in, q1_cache).row(0).transpose();
  const Eigen::VectorXd v2 =
      net_forward_cached(q2, q_in, q2_cache).row(0).transpose();

  // dQ/da from whichever critic realizes the minimum, per sample.
  Eigen::MatrixXd mask1 = Eigen::MatrixXd::Zero(1, n);
  Eigen::MatrixXd mask2 = Eigen::MatrixXd::Zero(1, n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    loss += entropy_temp * batch.log_probs[i] - std::min(v1[i], v2[i]);
    (v1[i] <= v2[i] ? mask1 : mask2)(0, i) = 1.0;
  }
  loss /= static_cast<double>(n);
  const Eigen::VectorXd qa =
      (net_input_gradient(q1, q1_cache, mask1) +
       net_input_gradient(q2, q2_cache, mask2))
          .row(obs.rows())
          .transpose();

  Eigen::MatrixXd upstream(2, n);
  const double scale = policy.scale();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double tanh_u = batch.tanh_u[i];
    const double da_du = scale * (1.0 - tanh_u * tanh_u);
    const double dlogp_du = 2.0 * tanh_u;
    const double du_dls = std::exp(batch.log_std[i]) * noise[i];
    const double dmu =
        entropy_temp * dlogp_du - qa[i] * da_du;
    double dls = entropy_temp * (-1.0 + dlogp_du * du_dls) -
                 qa[i] * da_du * du_dls;
    if (!batch.std_active[static_cast<std::size_t>(i)]) dls = 0.0;
    upstream(0, i) = dmu / static_cast<double>(n);
    upstream(1, i) = dls / static_cast<double>(n);
  }

  SacPolicyLoss result;
  result.loss = loss;
  result.grad_flat =
      grads_flatten(net_backward(policy.net, head_cache, upstream));
  return result;
}

void soft_update(Eigen::VectorXd& target_params,
                 const Eigen::VectorXd& online_params, double rate) {
  if (target_params.size() != online_params.size()) {
    throw std::invalid_argument("soft_update: shape mismatch");
  }
  target_params = rate * online_params + (1.0 - rate) * target_params;
}

SACResult sac_train(const EnvFactory& factory, const SACConfig& config,
                    std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  auto env = factory();
  auto eval_env = factory();
  const int obs_dim = env->observation_dim();
  const Bounds bounds = env->action_bounds();

  SACResult result;
  std::vector<int> policy_arch{obs_dim};
  policy_arch.insert(policy_arch.end(), config.hidden.begin(),
                     config.hidden.end());
  policy_arch.push_back(2);
  result.policy.net = make_net(policy_arch, rng, std::numbers::sqrt2, 0.01);
  result.policy.action_low = bounds.lo;
  result.policy.action_high = bounds.hi;

  std::vector<int> critic_arch{obs_dim + 1};
  critic_arch.insert(critic_arch.end(), config.hidden.begin(),
                     config.hidden.end());
  critic_arch.push_back(1);
  result.q1 = make_net(critic_arch, rng);
  result.q2 = make_net(critic_arch, rng);
  DenseNet q1_target = result.q1;
  DenseNet q2_target = result.q2;

  Eigen::VectorXd policy_params = net_flatten(result.policy.net);
  Eigen::VectorXd q1_params = net_flatten(result.q1);
  Eigen::VectorXd q2_params = net_flatten(result.q2);
  Eigen::VectorXd q1t_params = q1_params;
  Eigen::VectorXd q2t_params = q2_params;
  AdamState policy_adam(policy_params.size(), config.learning_rate);
  AdamState q1_adam(q1_params.size(), config.learning_rate);
  AdamState q2_adam(q2_params.size(), config.learning_rate);

  ReplayBuffer buffer(config.replay_capacity);

  auto record_eval = [&] {
    const double merit =
        evaluate_policy(*eval_env, [&](const Eigen::VectorXd& obs) {
          return mean_action(result.policy, obs);
        });
    result.history.rows.push_back(
        {result.env_steps, result.episodes, result.updates, merit});
  };
  record_eval();

  auto update = [&] {
    const auto indices = buffer.sample_indices(rng, config.batch_size);
    const Eigen::Index n = config.batch_size;
    Eigen::MatrixXd obs(obs_dim, n), next_obs(obs_dim, n);
    Eigen::VectorXd actions(n), rewards(n);
    std::vector<unsigned char> terminal(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const Transition& tr = buffer.slot(indices[static_cast<std::size_t>(i)]);
      obs.col(i) = tr.s;
      next_obs.col(i) = tr.s_next;
      actions[i] = tr.a;
      rewards[i] = tr.r;
      terminal[static_cast<std::size_t>(i)] = tr.done ? 1 : 0;
    }

    // Fresh next actions from the current policy.
    Eigen::VectorXd next_noise(n);
    for (Eigen::Index i = 0; i < n; ++i) next_noise[i] = rng.gaussian();
    const Eigen::MatrixXd next_head = net_forward(result.policy.net, next_obs);
    const SquashedBatch next_batch =
        squash_batch(result.policy, next_head, next_noise);
    const Eigen::VectorXd y =
        sac_target(q1_target, q2_target, next_obs, next_batch.actions,
                   next_batch.log_probs, rewards, terminal,
                   config.entropy_temp, config.discount);

    const auto q1_loss = sac_q_loss(result.q1, obs, actions, y);
    const auto q2_loss = sac_q_loss(result.q2, obs, actions, y);
    if (!std::isfinite(q1_loss.loss) || !std::isfinite(q2_loss.loss)) {
      throw NumericError("sac_train: non-finite critic loss at env step " +
                         std::to_string(result.env_steps));
    }
    adam_step(q1_params, q1_loss.grad_flat, q1_adam);
    adam_step(q2_params, q2_loss.grad_flat, q2_adam);
    net_unflatten(result.q1, q1_params);
    net_unflatten(result.q2, q2_params);

    Eigen::VectorXd policy_noise(n);
    for (Eigen::Index i = 0; i < n; ++i) policy_noise[i] = rng.gaussian();
    const auto policy_loss =
        sac_policy_loss(result.policy, result.q1, result.q2, obs, policy_noise,
                        config.entropy_temp);
    if (!std::isfinite(policy_loss.loss)) {
      throw NumericError("sac_train: non-finite policy loss at env step " +
                         std::to_string(result.env_steps));
    }
    adam_step(policy_params, policy_loss.grad_flat, policy_adam);
    net_unflatten(result.policy.net, policy_params);

    soft_update(q1t_params, q1_params, config.target_update_rate);
    soft_update(q2t_params, q2_params, config.target_update_rate);
    net_unflatten(q1_target, q1t_params);
    net_unflatten(q2_target, q2t_params);
    ++result.updates;
  };

  Eigen::VectorXd obs = env->reset(rng.next_u64());
  while (result.env_steps < config.total_env_steps) {
    double action;
    if (result.env_steps < config.warmup_steps) {
      action = rng.uniform(bounds.lo, bounds.hi);
    } else {
      action = sample_action(result.policy, obs, rng).action;
    }
    const auto step = env->step(action);
    Transition tr;
    tr.s = obs;
    tr.a = action;
    tr.r = step.reward;
    tr.s_next = step.obs;
    tr.done = step.done;
    buffer.push(std::move(tr));
    obs = step.obs;
    ++result.env_steps;
    if (step.done) {
      ++result.episodes;
      obs = env->reset(rng.next_u64());
    }

    if (result.env_steps > config.warmup_steps &&
        buffer.size() >= config.batch_size) {
      for (int g = 0; g < config.gradient_steps_per_env_step; ++g) update();
    }
    if (result.env_steps % config.eval_every_steps == 0) {
      record_eval();
    }
  }
  if (result.history.rows.back().env_steps != result.env_steps) {
    record_eval();
  }
  return result;
}

}  // namespace backflow
