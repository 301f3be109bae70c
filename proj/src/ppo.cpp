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

#include "backflow/ppo.hpp"

#include <cmath>
#include <stdexcept>

#include "backflow/errors.hpp"

namespace backflow {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

struct EpisodeData {
  Eigen::MatrixXd states;   // obs_dim x N
  Eigen::VectorXd actions;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd rewards;
};

}  // namespace

void PPOConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) {
    throw std::invalid_argument("PPOConfig: clip_eps must be in (0, 1)");
  }
  if (discount < 0.0 || discount > 1.0 || gae_lambda < 0.0 ||
      gae_lambda > 1.0) {
    throw std::invalid_argument("PPOConfig: discount and lambda in [0, 1]");
  }
  if (epochs < 1 || minibatch_size < 1 || rollout_episodes < 1 ||
      total_env_steps < 1 || eval_every_rollouts < 1) {
    throw std::invalid_argument("PPOConfig: counts must be positive");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("PPOConfig: learning rate must be positive");
  }
}

SurrogateResult ppo_surrogate(const Eigen::VectorXd& logp_new,
                              const Eigen::VectorXd& logp_old,
                              const Eigen::VectorXd& advantages,
                              double clip_eps) {
  if (logp_new.size() != logp_old.size() ||
      logp_new.size() != advantages.size()) {
    throw std::invalid_argument("ppo_surrogate: batch size mismatch");
  }
  const Eigen::Index n = logp_new.size();
  SurrogateResult result;
  result.dlogp = Eigen::VectorXd::Zero(n);
  double acc = 0.0;
  long clipped_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ratio = std::exp(logp_new[i] - logp_old[i]);
    if (!std::isfinite(ratio)) {
      throw NumericError("ppo_surrogate: non-finite probability ratio");
    }
    const double a = advantages[i];
    const double unclipped = ratio * a;
    const bool inside = ratio > 1.0 - clip_eps && ratio < 1.0 + clip_eps;
    const double clipped =
        std::min(std::max(ratio, 1.0 - clip_eps), 1.0 + clip_eps) * a;
    if (!inside) ++clipped_count;
    if (unclipped <= clipped) {
      acc += unclipped;
      result.dlogp[i] = unclipped;  // d(ratio*a)/dlogp = ratio*a
    } else {
      acc += clipped;
      // The min picked the clipped branch; gradient flows only while the
      // ratio is still inside the clip range.
      result.dlogp[i] = inside ? unclipped : 0.0;
    }
  }
  result.value = acc / static_cast<double>(n);
  result.dlogp /= static_cast<double>(n);
  result.clip_fraction =
      static_cast<double>(clipped_count) / static_cast<double>(n);
  return result;
}

PolicyGradient ppo_policy_gradient(const DiagGaussianPolicy& policy,
                                   const Eigen::MatrixXd& states,
                                   const Eigen::VectorXd& actions,
                                   const Eigen::VectorXd& logp_old,
                                   const Eigen::VectorXd& advantages,
                                   double clip_eps, double entropy_coef) {
  const Eigen::Index n = actions.size();
  const double log_std =
      std::min(std::max(policy.log_std, kLogStdMin), kLogStdMax);
  const bool log_std_active =
      policy.log_std > kLogStdMin && policy.log_std < kLogStdMax;
  const double sigma = std::exp(log_std);

  ForwardCache cache;
  const Eigen::VectorXd mu =
      net_forward_cached(policy.mean_net, states, cache).row(0).transpose();
  const Eigen::VectorXd z = (actions - mu) / sigma;
  const Eigen::VectorXd logp_new =
      (-0.5 * z.array().square() - log_std - kHalfLog2Pi).matrix();
  const auto surrogate = ppo_surrogate(logp_new, logp_old, advantages, clip_eps);

  Eigen::MatrixXd upstream(1, n);
  double dlog_std = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    upstream(0, i) = surrogate.dlogp[i] * z[i] / sigma;
    dlog_std += surrogate.dlogp[i] * (z[i] * z[i] - 1.0);
  }
  dlog_std = log_std_active ? dlog_std + entropy_coef : 0.0;

  const auto grads = net_backward(policy.mean_net, cache, upstream);
  const long n_params = policy.mean_net.parameter_count();
  PolicyGradient result;
  result.value = surrogate.value + entropy_coef * (log_std + 0.5 + kHalfLog2Pi);
  result.clip_fraction = surrogate.clip_fraction;
  result.grad_flat.resize(n_params + 1);
  result.grad_flat.head(n_params) = grads_flatten(grads);
  result.grad_flat[n_params] = dlog_std;
  return result;
}

PPOResult ppo_train(const EnvFactory& factory, const PPOConfig& config,
                    std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  auto env = factory();
  auto eval_env = factory();
  const int obs_dim = env->observation_dim();
  const int steps_per_episode = env->episode_length();

  PPOResult result;
  std::vector<int> arch;
  arch.push_back(obs_dim);
  arch.insert(arch.end(), config.hidden.begin(), config.hidden.end());
  arch.push_back(1);
  result.policy.mean_net = make_net(arch, rng, std::numbers::sqrt2, 0.01);
  result.policy.log_std = config.init_log_std;
  result.value_net = make_net(arch, rng, std::numbers::sqrt2, 1.0);

  const long n_policy = result.policy.mean_net.parameter_count();
  Eigen::VectorXd policy_params(n_policy + 1);
  policy_params.head(n_policy) = net_flatten(result.policy.mean_net);
  policy_params[n_policy] = result.policy.log_std;
  Eigen::VectorXd value_params = net_flatten(result.value_net);
  AdamState policy_adam(policy_params.size(), config.learning_rate);
  AdamState value_adam(value_params.size(), config.learning_rate);

  auto sync_policy = [&] {
    net_unflatten(result.policy.mean_net, policy_params.head(n_policy));
    result.policy.log_std = policy_params[n_policy];
  };
  auto record_eval = [&] {
    sync_policy();
    const double merit = evaluate_policy(*eval_env, [&](const Eigen::VectorXd& obs) {
      return mean_action(result.policy, obs);
    });
    result.history.rows.push_back(
        {result.env_steps, result.episodes, result.updates, merit});
  };
  record_eval();

  long rollouts = 0;
  while (result.env_steps < config.total_env_steps) {
    // Collect full episodes on the current policy.
    sync_policy();
    std::vector<EpisodeData> episodes;
    for (int e = 0; e < config.rollout_episodes &&
                    result.env_steps < config.total_env_steps;
         ++e) {
      EpisodeData data;
      data.states.resize(obs_dim, steps_per_episode);
      data.actions.resize(steps_per_episode);
      data.log_probs.resize(steps_per_episode);
      data.rewards.resize(steps_per_episode);
      Eigen::VectorXd obs = env->reset(rng.next_u64());
      for (int k = 0; k < steps_per_episode; ++k) {
        const auto sample = sample_action(result.policy, obs, rng);
        data.states.col(k) = obs;
        data.actions[k] = sample.action;
        data.log_probs[k] = sample.log_prob;
        const auto step = env->step(sample.action);
        data.rewards[k] = step.reward;
        obs = step.obs;
        ++result.env_steps;
      }
      ++result.episodes;
      episodes.push_back(std::move(data));
    }

    // Advantages against the current value function; terminal bootstrap 0.
    const long batch_size =
        static_cast<long>(episodes.size()) * steps_per_episode;
    Eigen::MatrixXd states(obs_dim, batch_size);
    Eigen::VectorXd actions(batch_size);
    Eigen::VectorXd logp_old(batch_size);
    Eigen::VectorXd advantages(batch_size);
    Eigen::VectorXd returns(batch_size);
    long at = 0;
    for (const auto& data : episodes) {
      const Eigen::VectorXd values =
          net_forward(result.value_net, data.states).row(0).transpose();
      const auto gae = compute_gae(data.rewards, values, 0.0, config.discount,
                                   config.gae_lambda);
      states.middleCols(at, steps_per_episode) = data.states;
      actions.segment(at, steps_per_episode) = data.actions;
      logp_old.segment(at, steps_per_episode) = data.log_probs;
      advantages.segment(at, steps_per_episode) = gae.advantages;
      returns.segment(at, steps_per_episode) = gae.returns;
      at += steps_per_episode;
    }
    const double adv_mean = advantages.mean();
    const double adv_std = std::sqrt(
        (advantages.array() - adv_mean).square().sum() /
        static_cast<double>(batch_size));
    advantages = (advantages.array() - adv_mean) / std::max(adv_std, 1e-8);

    std::vector<int> order(static_cast<std::size_t>(batch_size));
    for (long i = 0; i < batch_size; ++i) order[i] = static_cast<int>(i);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      rng.shuffle(order);
      for (long begin = 0; begin < batch_size;
           begin += config.minibatch_size) {
        const long mb =
            std::min<long>(config.minibatch_size, batch_size - begin);
        Eigen::MatrixXd mb_states(obs_dim, mb);
        Eigen::VectorXd mb_actions(mb), mb_logp_old(mb), mb_adv(mb),
            mb_returns(mb);
        for (long i = 0; i < mb; ++i) {
          const int src = order[static_cast<std::size_t>(begin + i)];
          mb_states.col(i) = states.col(src);
          mb_actions[i] = actions[src];
          mb_logp_old[i] = logp_old[src];
          mb_adv[i] = advantages[src];
          mb_returns[i] = returns[src];
        }

        // Policy pass.
        sync_policy();
        const auto policy_grad = ppo_policy_gradient(
            result.policy, mb_states, mb_actions, mb_logp_old, mb_adv,
            config.clip_eps, config.entropy_coef);
        if (!std::isfinite(policy_grad.value)) {
          throw NumericError("ppo_train: non-finite surrogate at env step " +
                             std::to_string(result.env_steps));
        }
        Eigen::VectorXd descent = -policy_grad.grad_flat;
        adam_step(policy_params, descent, policy_adam);

        // Value regression on the fixed returns.
        net_unflatten(result.value_net, value_params);
        ForwardCache vcache;
        const Eigen::VectorXd v =
            net_forward_cached(result.value_net, mb_states, vcache)
                .row(0)
                .transpose();
        const Eigen::VectorXd err = v - mb_returns;
        const double value_loss =
            err.squaredNorm() / static_cast<double>(mb);
        if (!std::isfinite(value_loss)) {
          throw NumericError("ppo_train: non-finite value loss at env step " +
                             std::to_string(result.env_steps));
        }
        Eigen::MatrixXd vupstream =
            (2.0 / static_cast<double>(mb)) * err.transpose();
        const auto vgrads = net_backward(result.value_net, vcache, vupstream);
        Eigen::VectorXd vflat = grads_flatten(vgrads);
        adam_step(value_params, vflat, value_adam);
        ++result.updates;
      }
    }
    net_unflatten(result.value_net, value_params);

    ++rollouts;
    if (rollouts % config.eval_every_rollouts == 0) {
      record_eval();
    }
  }
  sync_policy();
  net_unflatten(result.value_net, value_params);
  if (result.history.rows.empty() ||
      result.history.rows.back().env_steps != result.env_steps) {
    record_eval();
  }
  return result;
}

}  // namespace backflow
