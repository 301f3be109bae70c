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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "backflow/errors.hpp"
#include "backflow/ppo.hpp"
#include "backflow/sac.hpp"
#include "doctest.h"

using namespace backflow;

namespace {

// One-step environment with a known optimal action.
class BanditEnv final : public RlEnv {
 public:
  explicit BanditEnv(double optimum) : optimum_(optimum) {}
  int observation_dim() const override { return 1; }
  int episode_length() const override { return 1; }
  Bounds action_bounds() const override { return {-5.0, 5.0}; }
  Eigen::VectorXd reset(std::uint64_t) override { return zero(); }
  Eigen::VectorXd reset_eval() override { return zero(); }
  Step step(double action) override {
    const double miss = action - optimum_;
    last_reward_ = 1.0 - miss * miss;
    return {zero(), last_reward_, true};
  }
  double episode_merit() const override { return last_reward_; }

 private:
  static Eigen::VectorXd zero() { return Eigen::VectorXd::Zero(1); }
  double optimum_;
  double last_reward_ = 0.0;
};

EnvConfig tiny_env_config() {
  EnvConfig cfg;
  cfg.propagation.control_bins = 10;
  cfg.propagation.substeps = 2;
  return cfg;
}

DenseNet constant_net(const std::vector<int>& sizes, double output) {
  Rng rng(0);
  DenseNet net = make_net(sizes, rng);
  for (auto& w : net.weights) w.setZero();
  for (auto& b : net.biases) b.setZero();
  net.biases.back()[0] = output;
  return net;
}

}  // namespace

TEST_CASE("GAE with lambda zero is the one-step TD error") {
  Eigen::VectorXd rewards(3), values(3);
  rewards << 0.5, -0.2, 1.0;
  values << 0.1, 0.4, -0.3;
  const auto gae = compute_gae(rewards, values, 0.25, 0.9, 0.0);
  for (int k = 0; k < 3; ++k) {
    const double v_next = (k + 1 < 3) ? values[k + 1] : 0.25;
    CHECK(gae.advantages[k] == rewards[k] + 0.9 * v_next - values[k]);
    CHECK(gae.returns[k] == gae.advantages[k] + values[k]);
  }
}

TEST_CASE("GAE with zero discount ignores the future") {
  Eigen::VectorXd rewards(4), values(4);
  rewards << 1.0, 2.0, 3.0, 4.0;
  values << 0.5, 0.5, 0.5, 0.5;
  const auto gae = compute_gae(rewards, values, 9.0, 0.0, 0.7);
  for (int k = 0; k < 4; ++k) {
    CHECK(gae.advantages[k] == rewards[k] - values[k]);
  }
}

TEST_CASE("GAE matches brute-force discounted sums") {
  Eigen::VectorXd rewards(2), values(2);
  rewards << 1.0, 1.0;
  values << 0.5, 0.5;
  const double discount = 0.9, lambda = 1.0;
  const auto gae = compute_gae(rewards, values, 0.0, discount, lambda);
  const double delta1 = 1.0 + 0.9 * 0.0 - 0.5;
  const double delta0 = 1.0 + 0.9 * 0.5 - 0.5;
  CHECK(gae.advantages[1] == doctest::Approx(delta1).epsilon(1e-15));
  CHECK(gae.advantages[0] ==
        doctest::Approx(delta0 + discount * lambda * delta1).epsilon(1e-15));
}

TEST_CASE("undiscounted GAE(1) is total reward minus baseline") {
  Rng rng(2);
  Eigen::VectorXd rewards(5), values(5);
  for (int k = 0; k < 5; ++k) {
    rewards[k] = rng.uniform(-1.0, 1.0);
    values[k] = rng.uniform(-1.0, 1.0);
  }
  const auto gae = compute_gae(rewards, values, 0.0, 1.0, 1.0);
  for (int k = 0; k < 5; ++k) {
    double tail = 0.0;
    for (int j = k; j < 5; ++j) tail += rewards[j];
    CHECK(gae.advantages[k] == doctest::Approx(tail - values[k]).epsilon(1e-12));
  }
}

TEST_CASE("GAE rejects mismatched lengths") {
  CHECK_THROWS_AS(compute_gae(Eigen::VectorXd::Zero(3),
                              Eigen::VectorXd::Zero(4), 0.0, 0.9, 0.9),
                  std::invalid_argument);
}

TEST_CASE("surrogate with unit ratios is the mean advantage") {
  Eigen::VectorXd logp = Eigen::VectorXd::Constant(4, -1.3);
  Eigen::VectorXd adv(4);
  adv << 1.0, -0.5, 0.25, 2.0;
  const auto s = ppo_surrogate(logp, logp, adv, 0.2);
  CHECK(s.value == doctest::Approx(adv.mean()).epsilon(1e-15));
  CHECK(s.clip_fraction == 0.0);
}

TEST_CASE("surrogate clips a large positive-advantage ratio") {
  Eigen::VectorXd logp_new(1), logp_old(1), adv(1);
  logp_new << std::log(1.5);
  logp_old << 0.0;
  adv << 2.0;
  const auto s = ppo_surrogate(logp_new, logp_old, adv, 0.2);
  CHECK(s.value == doctest::Approx(2.4).epsilon(1e-12));
  CHECK(s.dlogp[0] == 0.0);  // saturated clip, no gradient
}

TEST_CASE("surrogate is pessimistic for negative advantages") {
  Eigen::VectorXd logp_new(1), logp_old(1), adv(1);
  logp_new << std::log(0.5);
  logp_old << 0.0;
  adv << -1.0;
  const auto s = ppo_surrogate(logp_new, logp_old, adv, 0.2);
  CHECK(s.value == doctest::Approx(-0.8).epsilon(1e-12));
}

TEST_CASE("surrogate never exceeds the unclipped mean") {
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 16;
    Eigen::VectorXd logp_new(n), logp_old(n), adv(n);
    for (int i = 0; i < n; ++i) {
      logp_new[i] = rng.uniform(-3.0, 1.0);
      logp_old[i] = rng.uniform(-3.0, 1.0);
      adv[i] = rng.uniform(-2.0, 2.0);
    }
    const auto s = ppo_surrogate(logp_new, logp_old, adv, 0.2);
    double unclipped = 0.0;
    for (int i = 0; i < n; ++i) {
      unclipped += std::exp(logp_new[i] - logp_old[i]) * adv[i];
    }
    CHECK(s.value <= unclipped / n + 1e-12);
  }
}

TEST_CASE("surrogate rejects non-finite ratios") {
  Eigen::VectorXd logp_new(1), logp_old(1), adv(1);
  logp_new << 1e9;
  logp_old << 0.0;
  adv << 1.0;
  CHECK_THROWS_AS(ppo_surrogate(logp_new, logp_old, adv, 0.2), NumericError);
}

TEST_CASE("PPO policy gradient matches central finite differences") {
  Rng rng(7);
  DiagGaussianPolicy policy;
  policy.mean_net = make_net({3, 8, 1}, rng, std::numbers::sqrt2, 0.5);
  policy.log_std = -0.4;

  const int n = 12;
  Eigen::MatrixXd states(3, n);
  Eigen::VectorXd actions(n), logp_old(n), adv(n);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < 3; ++r) states(r, i) = rng.gaussian();
    actions[i] = rng.uniform(-2.0, 2.0);
    adv[i] = rng.gaussian();
  }
  for (int i = 0; i < n; ++i) {
    logp_old[i] = log_prob(policy, states.col(i), actions[i]) +
                  rng.uniform(-0.05, 0.05);
  }

  const auto analytic =
      ppo_policy_gradient(policy, states, actions, logp_old, adv, 0.2, 0.01);
  const long n_params = policy.mean_net.parameter_count();
  auto value_at = [&](const Eigen::VectorXd& flat) {
    DiagGaussianPolicy probe = policy;
    net_unflatten(probe.mean_net, flat.head(n_params));
    probe.log_std = flat[n_params];
    return ppo_policy_gradient(probe, states, actions, logp_old, adv, 0.2,
                               0.01)
        .value;
  };
  Eigen::VectorXd flat(n_params + 1);
  flat.head(n_params) = net_flatten(policy.mean_net);
  flat[n_params] = policy.log_std;
  const double h = 1e-6;
  for (int k = 0; k < 40; ++k) {
    const auto i = static_cast<Eigen::Index>(rng.below(flat.size()));
    Eigen::VectorXd p = flat;
    p[i] = flat[i] + h;
    const double up = value_at(p);
    p[i] = flat[i] - h;
    const double down = value_at(p);
    const double fd = (up - down) / (2.0 * h);
    CHECK(std::abs(fd - analytic.grad_flat[i]) <=
          1e-3 * std::max(1e-4, std::abs(fd)));
  }
}

TEST_CASE("replay buffer evicts strictly oldest-first") {
  ReplayBuffer buffer(1000);
  auto make = [](long i) {
    Transition tr;
    tr.s = Eigen::VectorXd::Zero(1);
    tr.s_next = Eigen::VectorXd::Zero(1);
    tr.r = static_cast<double>(i);
    return tr;
  };
  const long total = 1000000;
  for (long i = 0; i < total; ++i) {
    buffer.push(make(i));
    CHECK(buffer.size() <= buffer.capacity());
  }
  double lo = 1e18, hi = -1e18;
  for (long s = 0; s < buffer.size(); ++s) {
    lo = std::min(lo, buffer.slot(s).r);
    hi = std::max(hi, buffer.slot(s).r);
  }
  CHECK(buffer.size() == 1000);
  CHECK(lo == static_cast<double>(total - 1000));
  CHECK(hi == static_cast<double>(total - 1));
}

TEST_CASE("replay buffer refuses to sample when underfilled") {
  ReplayBuffer buffer(10);
  Rng rng(0);
  CHECK_THROWS_AS(buffer.sample_indices(rng, 4), std::logic_error);
}

TEST_CASE("target values follow the entropy-regularized bootstrap") {
  const DenseNet q1t = constant_net({6, 4, 1}, 1.0);
  const DenseNet q2t = constant_net({6, 4, 1}, 3.0);  // min picks q1
  Eigen::MatrixXd next_obs = Eigen::MatrixXd::Zero(5, 1);
  Eigen::VectorXd a(1), logp(1), r(1);
  a << 0.0;
  logp << -0.5;
  r << 0.1;
  const auto y = sac_target(q1t, q2t, next_obs, a, logp, r, {0}, 0.2, 0.99);
  CHECK(y[0] == doctest::Approx(1.189).epsilon(1e-12));

  const auto y_term = sac_target(q1t, q2t, next_obs, a, logp, r, {1}, 0.2, 0.99);
  CHECK(y_term[0] == 0.1);

  const auto y_tau0 = sac_target(q1t, q2t, next_obs, a, logp, r, {0}, 0.0, 0.99);
  CHECK(y_tau0[0] == doctest::Approx(0.1 + 0.99 * 1.0).epsilon(1e-12));
}

TEST_CASE("twin bootstrap is pessimistic") {
  Rng rng(5);
  DenseNet q1t = make_net({6, 8, 1}, rng);
  DenseNet q2t = make_net({6, 8, 1}, rng);
  const int n = 32;
  Eigen::MatrixXd next_obs(5, n);
  Eigen::VectorXd a(n), logp = Eigen::VectorXd::Zero(n),
                  r = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 5; ++k) next_obs(k, i) = rng.gaussian();
    a[i] = rng.uniform(-1.0, 1.0);
  }
  const std::vector<unsigned char> nonterm(n, 0);
  const auto y = sac_target(q1t, q2t, next_obs, a, logp, r, nonterm, 0.0, 1.0);
  Eigen::MatrixXd input(6, n);
  input.topRows(5) = next_obs;
  input.bottomRows(1) = a.transpose();
  const Eigen::VectorXd v1 = net_forward(q1t, input).row(0).transpose();
  const Eigen::VectorXd v2 = net_forward(q2t, input).row(0).transpose();
  for (int i = 0; i < n; ++i) {
    CHECK(y[i] <= v1[i] + 1e-15);
    CHECK(y[i] <= v2[i] + 1e-15);
  }
}

TEST_CASE("soft update arithmetic and geometric convergence") {
  Eigen::VectorXd target = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd online = Eigen::VectorXd::Ones(1);
  soft_update(target, online, 0.005);
  CHECK(target[0] == doctest::Approx(0.005).epsilon(1e-15));

  Eigen::VectorXd t2 = Eigen::VectorXd::Zero(4);
  Eigen::VectorXd o2(4);
  o2 << 1.0, -2.0, 0.5, 3.0;
  double prev = (t2 - o2).norm();
  for (int i = 0; i < 50; ++i) {
    soft_update(t2, o2, 0.1);
    const double now = (t2 - o2).norm();
    CHECK(now == doctest::Approx(0.9 * prev).epsilon(1e-12));
    prev = now;
  }
}

TEST_CASE("critic loss vanishes with zero gradient at the target") {
  Rng rng(9);
  DenseNet q = make_net({6, 8, 1}, rng);
  const int n = 16;
  Eigen::MatrixXd obs(5, n);
  Eigen::VectorXd actions(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 5; ++k) obs(k, i) = rng.gaussian();
    actions[i] = rng.uniform(-1.0, 1.0);
  }
  Eigen::MatrixXd input(6, n);
  input.topRows(5) = obs;
  input.bottomRows(1) = actions.transpose();
  const Eigen::VectorXd y = net_forward(q, input).row(0).transpose();
  const auto loss = sac_q_loss(q, obs, actions, y);
  CHECK(loss.loss == 0.0);
  CHECK(loss.grad_flat.norm() == 0.0);
}

TEST_CASE("SAC policy-loss gradient matches central finite differences") {
  Rng rng(13);
  SquashedGaussianPolicy policy;
  policy.net = make_net({3, 8, 2}, rng, std::numbers::sqrt2, 0.3);
  policy.action_low = -5.0;
  policy.action_high = 5.0;
  DenseNet q1 = make_net({4, 8, 1}, rng);
  DenseNet q2 = make_net({4, 8, 1}, rng);
  // Keep the per-sample argmin stable under parameter perturbations.
  q2.biases.back()[0] += 10.0;

  const int n = 10;
  Eigen::MatrixXd obs(3, n);
  Eigen::VectorXd noise(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) obs(k, i) = rng.gaussian();
    noise[i] = rng.gaussian();
  }

  const auto analytic = sac_policy_loss(policy, q1, q2, obs, noise, 0.2);
  const Eigen::VectorXd flat = net_flatten(policy.net);
  auto loss_at = [&](const Eigen::VectorXd& p) {
    SquashedGaussianPolicy probe = policy;
    net_unflatten(probe.net, p);
    return sac_policy_loss(probe, q1, q2, obs, noise, 0.2).loss;
  };
  const double h = 1e-6;
  for (int k = 0; k < 40; ++k) {
    const auto i = static_cast<Eigen::Index>(rng.below(flat.size()));
    Eigen::VectorXd p = flat;
    p[i] = flat[i] + h;
    const double up = loss_at(p);
    p[i] = flat[i] - h;
    const double down = loss_at(p);
    const double fd = (up - down) / (2.0 * h);
    CHECK(std::abs(fd - analytic.grad_flat[i]) <=
          1e-3 * std::max(1e-4, std::abs(fd)));
  }
}

TEST_CASE("PPO finds the bandit optimum") {
  PPOConfig cfg;
  cfg.hidden = {16, 16};
  cfg.rollout_episodes = 64;
  cfg.minibatch_size = 64;
  cfg.total_env_steps = 20000;
  const auto result = ppo_train(
      [] { return std::make_unique<BanditEnv>(1.7); }, cfg, 42);
  const double mean =
      mean_action(result.policy, Eigen::VectorXd::Zero(1));
  CHECK(std::abs(mean - 1.7) < 0.1);
}

TEST_CASE("PPO training is bit-reproducible") {
  auto run = [] {
    PPOConfig cfg;
    cfg.hidden = {8, 8};
    cfg.rollout_episodes = 2;
    cfg.epochs = 2;
    cfg.total_env_steps = 60;
    return ppo_train(
        [] { return std::make_unique<BackflowEnv>(tiny_env_config()); }, cfg,
        42);
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.history.rows.size() == b.history.rows.size());
  for (std::size_t i = 0; i < a.history.rows.size(); ++i) {
    CHECK(a.history.rows[i].env_steps == b.history.rows[i].env_steps);
    CHECK(a.history.rows[i].eval_n_tot == b.history.rows[i].eval_n_tot);
  }
  CHECK((net_flatten(a.policy.mean_net) - net_flatten(b.policy.mean_net))
            .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("SAC training is bit-reproducible") {
  auto run = [] {
    SACConfig cfg;
    cfg.hidden = {8, 8};
    cfg.batch_size = 16;
    cfg.replay_capacity = 500;
    cfg.warmup_steps = 30;
    cfg.total_env_steps = 120;
    cfg.eval_every_steps = 40;
    return sac_train(
        [] { return std::make_unique<BackflowEnv>(tiny_env_config()); }, cfg,
        42);
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.history.rows.size() == b.history.rows.size());
  for (std::size_t i = 0; i < a.history.rows.size(); ++i) {
    CHECK(a.history.rows[i].eval_n_tot == b.history.rows[i].eval_n_tot);
  }
  CHECK((net_flatten(a.policy.net) - net_flatten(b.policy.net))
            .lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.updates == b.updates);
  CHECK(a.episodes == b.episodes);
}

TEST_CASE("counters are consistent and histories monotone") {
  SACConfig cfg;
  cfg.hidden = {8, 8};
  cfg.batch_size = 16;
  cfg.replay_capacity = 500;
  cfg.warmup_steps = 30;
  cfg.total_env_steps = 100;
  cfg.eval_every_steps = 25;
  const auto r = sac_train(
      [] { return std::make_unique<BackflowEnv>(tiny_env_config()); }, cfg,
      7);
  CHECK(r.env_steps == 100);
  for (std::size_t i = 1; i < r.history.rows.size(); ++i) {
    CHECK(r.history.rows[i].env_steps >= r.history.rows[i - 1].env_steps);
    CHECK(r.history.rows[i].updates >= r.history.rows[i - 1].updates);
    CHECK(r.history.rows[i].episodes >= r.history.rows[i - 1].episodes);
  }
}
