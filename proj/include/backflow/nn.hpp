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
#include <numbers>
#include <string>
#include <vector>

#include "backflow/rng.hpp"

namespace backflow {

// Fully connected network with tanh hidden activations and a linear output
// layer.  Batches are stored column-wise (one sample per column).
struct DenseNet {
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const { return static_cast<int>(weights.front().cols()); }
  int output_dim() const { return static_cast<int>(weights.back().rows()); }
  std::vector<int> sizes() const;
  long parameter_count() const;
};

/// Orthogonally initialized network (scaled QR of a seeded Gaussian draw);
/// biases start at zero.
DenseNet make_net(const std::vector<int>& sizes, Rng& rng,
                  double hidden_gain = std::numbers::sqrt2,
                  double output_gain = 1.0);

Eigen::VectorXd net_forward(const DenseNet& net, const Eigen::VectorXd& input);
Eigen::MatrixXd net_forward(const DenseNet& net, const Eigen::MatrixXd& input);

struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // [0]=input ... [L]=output
};

Eigen::MatrixXd net_forward_cached(const DenseNet& net,
                                   const Eigen::MatrixXd& input,
                                   ForwardCache& cache);

struct NetGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::MatrixXd input;  // dL/dinput, summed over nothing (per column)
};

/// Exact reverse-mode gradients given the cached forward pass; upstream is
/// dL/doutput with one column per sample.
NetGrads net_backward(const DenseNet& net, const ForwardCache& cache,
                      const Eigen::MatrixXd& upstream);

/// dL/dinput only; skips the parameter-gradient products.
Eigen::MatrixXd net_input_gradient(const DenseNet& net,
                                   const ForwardCache& cache,
                                   const Eigen::MatrixXd& upstream);

Eigen::VectorXd net_flatten(const DenseNet& net);
void net_unflatten(DenseNet& net, const Eigen::VectorXd& flat);
Eigen::VectorXd grads_flatten(const NetGrads& grads);

// Bias-corrected adaptive-moment update (descent direction).
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(long n_params = 0, double lr = 3e-4)
      : m(Eigen::VectorXd::Zero(n_params)),
        v(Eigen::VectorXd::Zero(n_params)),
        learning_rate(lr) {}
};

/// In-place parameter update; throws NumericError on non-finite gradients.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               AdamState& state);

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// Unsquashed Gaussian head with a state-independent learned log-std
// (the on-policy agent's policy).  Scalar action.
struct DiagGaussianPolicy {
  DenseNet mean_net;
  double log_std = 0.0;
};

// State-dependent squashed Gaussian head: the network emits [mean, log_std],
// samples squash through tanh and rescale onto [action_low, action_high]
// (the off-policy agent's policy).  Scalar action.
struct SquashedGaussianPolicy {
  DenseNet net;
  double action_low = -5.0;
  double action_high = 5.0;

  double scale() const { return 0.5 * (action_high - action_low); }
  double offset() const { return 0.5 * (action_high + action_low); }
};

struct ActionSample {
  double action = 0.0;
  double log_prob = 0.0;
  double noise = 0.0;      // the standard-normal draw
  double pre_squash = 0.0; // mean + sigma*noise (squashed head only)
};

ActionSample sample_action(const DiagGaussianPolicy& policy,
                           const Eigen::VectorXd& obs, Rng& rng);
ActionSample sample_action(const SquashedGaussianPolicy& policy,
                           const Eigen::VectorXd& obs, Rng& rng);

/// Exact diagonal-Gaussian log-density of an action under the mean net.
double log_prob(const DiagGaussianPolicy& policy, const Eigen::VectorXd& obs,
                double action);
/// Change-of-variables log-density of a squashed, rescaled action.
double log_prob(const SquashedGaussianPolicy& policy,
                const Eigen::VectorXd& obs, double action);

double mean_action(const DiagGaussianPolicy& policy,
                   const Eigen::VectorXd& obs);
double mean_action(const SquashedGaussianPolicy& policy,
                   const Eigen::VectorXd& obs);

/// log(1 - tanh(u)^2), evaluated without cancellation.
double log_one_minus_tanh_sq(double u);

// Versioned JSON checkpoints; parameters survive a round trip bit-exactly.
void save_net_json(const DenseNet& net, const std::string& path);
DenseNet load_net_json(const std::string& path);
void save_policy_checkpoint(const DiagGaussianPolicy& policy,
                            const std::string& path,
                            const std::string& rng_state = "");
void save_policy_checkpoint(const SquashedGaussianPolicy& policy,
                            const std::string& path,
                            const std::string& rng_state = "");
/// Loads either policy kind; exactly one output pointer is filled.
std::string load_policy_checkpoint(const std::string& path,
                                   DiagGaussianPolicy* ppo_out,
                                   SquashedGaussianPolicy* sac_out);

}  // namespace backflow
