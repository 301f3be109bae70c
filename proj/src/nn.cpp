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

#include "backflow/nn.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "backflow/errors.hpp"
#include "json.hpp"

namespace backflow {

namespace {

using nlohmann::json;

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols,
                                Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      m(r, c) = rng.gaussian();
    }
  }
  return m;
}

// Thin orthogonal factor of a Gaussian draw, columns sign-fixed by the R
// diagonal so the result is a deterministic function of the draw.
Eigen::MatrixXd orthogonal_matrix(Eigen::Index rows, Eigen::Index cols,
                                  Rng& rng) {
  const bool tall = rows >= cols;
  const Eigen::Index r = tall ? rows : cols;
  const Eigen::Index c = tall ? cols : rows;
  const Eigen::MatrixXd m = gaussian_matrix(r, c, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
  const Eigen::MatrixXd rfac =
      qr.matrixQR().topLeftCorner(c, c).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < c; ++j) {
    if (rfac(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return tall ? q : Eigen::MatrixXd(q.transpose());
}

json net_to_json(const DenseNet& net) {
  json j;
  j["sizes"] = net.sizes();
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    weights.push_back(std::vector<double>(
        net.weights[l].data(), net.weights[l].data() + net.weights[l].size()));
    biases.push_back(std::vector<double>(
        net.biases[l].data(), net.biases[l].data() + net.biases[l].size()));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j;
}

DenseNet net_from_json(const json& j) {
  const auto sizes = j.at("sizes").get<std::vector<int>>();
  if (sizes.size() < 2) throw std::invalid_argument("net json: bad sizes");
  DenseNet net;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto w = j.at("weights").at(l).get<std::vector<double>>();
    const auto b = j.at("biases").at(l).get<std::vector<double>>();
    const Eigen::Index rows = sizes[l + 1];
    const Eigen::Index cols = sizes[l];
    if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != rows) {
      throw std::invalid_argument("net json: shape mismatch");
    }
    net.weights.emplace_back(
        Eigen::Map<const Eigen::MatrixXd>(w.data(), rows, cols));
    net.biases.emplace_back(
        Eigen::Map<const Eigen::VectorXd>(b.data(), rows));
  }
  return net;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << '\n';
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

double clamp_log_std(double value) {
  return std::min(std::max(value, kLogStdMin), kLogStdMax);
}

// tanh via the vectorized exp kernel: 1 - 2/(e^{2x}+1).  Value-identical to
// std::tanh within a few ulp and its derivative is exactly 1 - t^2, which is
// what the backward pass uses.
Eigen::MatrixXd tanh_activation(const Eigen::MatrixXd& z) {
  return (1.0 - 2.0 / ((2.0 * z).array().exp() + 1.0)).matrix();
}

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2*pi)/2

}  // namespace

std::vector<int> DenseNet::sizes() const {
  std::vector<int> s;
  s.push_back(input_dim());
  for (const auto& w : weights) s.push_back(static_cast<int>(w.rows()));
  return s;
}

long DenseNet::parameter_count() const {
  long n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += weights[l].size() + biases[l].size();
  }
  return n;
}

DenseNet make_net(const std::vector<int>& sizes, Rng& rng, double hidden_gain,
                  double output_gain) {
  if (sizes.size() < 2) {
    throw std::invalid_argument("make_net: need at least input and output");
  }
  for (int s : sizes) {
    if (s < 1) throw std::invalid_argument("make_net: layer sizes must be >= 1");
  }
  DenseNet net;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const bool last = l + 2 == sizes.size();
    const double gain = last ? output_gain : hidden_gain;
    net.weights.push_back(gain *
                          orthogonal_matrix(sizes[l + 1], sizes[l], rng));
    net.biases.push_back(Eigen::VectorXd::Zero(sizes[l + 1]));
  }
  return net;
}

Eigen::MatrixXd net_forward(const DenseNet& net, const Eigen::MatrixXd& input) {
  if (input.rows() != net.input_dim()) {
    throw std::invalid_argument("net_forward: input dimension mismatch");
  }
  Eigen::MatrixXd a = input;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    Eigen::MatrixXd z = net.weights[l] * a;
    z.colwise() += net.biases[l];
    a = (l + 1 < net.weights.size()) ? tanh_activation(z) : z;
  }
  return a;
}

Eigen::VectorXd net_forward(const DenseNet& net, const Eigen::VectorXd& input) {
  return net_forward(net, Eigen::MatrixXd(input)).col(0);
}

Eigen::MatrixXd net_forward_cached(const DenseNet& net,
                                   const Eigen::MatrixXd& input,
                                   ForwardCache& cache) {
  if (input.rows() != net.input_dim()) {
    throw std::invalid_argument("net_forward_cached: input dimension mismatch");
  }
  cache.activations.clear();
  cache.activations.reserve(net.weights.size() + 1);
  cache.activations.push_back(input);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    Eigen::MatrixXd z = net.weights[l] * cache.activations.back();
    z.colwise() += net.biases[l];
    cache.activations.push_back(
        (l + 1 < net.weights.size()) ? tanh_activation(z) : z);
  }
  return cache.activations.back();
}

NetGrads net_backward(const DenseNet& net, const ForwardCache& cache,
                      const Eigen::MatrixXd& upstream) {
  const std::size_t layers = net.weights.size();
  if (cache.activations.size() != layers + 1) {
    throw std::invalid_argument("net_backward: stale forward cache");
  }
  if (upstream.rows() != net.output_dim() ||
      upstream.cols() != cache.activations.back().cols()) {
    throw std::invalid_argument("net_backward: upstream shape mismatch");
  }
  NetGrads grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);
  Eigen::MatrixXd delta = upstream;
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) {
      // Hidden activations are tanh; the cached value is tanh(z).
      delta.array() *= 1.0 - cache.activations[l + 1].array().square();
    }
    grads.weights[l].noalias() = delta * cache.activations[l].transpose();
    grads.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = net.weights[l].transpose() * delta;
    } else {
      grads.input.noalias() = net.weights[0].transpose() * delta;
    }
  }
  return grads;
}

Eigen::MatrixXd net_input_gradient(const DenseNet& net,
                                   const ForwardCache& cache,
                                   const Eigen::MatrixXd& upstream) {
  const std::size_t layers = net.weights.size();
  if (cache.activations.size() != layers + 1) {
    throw std::invalid_argument("net_input_gradient: stale forward cache");
  }
  Eigen::MatrixXd delta = upstream;
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) {
      delta.array() *= 1.0 - cache.activations[l + 1].array().square();
    }
    delta = net.weights[l].transpose() * delta;
  }
  return delta;
}

Eigen::VectorXd net_flatten(const DenseNet& net) {
  Eigen::VectorXd flat(net.parameter_count());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    flat.segment(at, net.weights[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(net.weights[l].data(),
                                          net.weights[l].size());
    at += net.weights[l].size();
    flat.segment(at, net.biases[l].size()) = net.biases[l];
    at += net.biases[l].size();
  }
  return flat;
}

void net_unflatten(DenseNet& net, const Eigen::VectorXd& flat) {
  if (flat.size() != net.parameter_count()) {
    throw std::invalid_argument("net_unflatten: size mismatch");
  }
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    Eigen::Map<Eigen::VectorXd>(net.weights[l].data(), net.weights[l].size()) =
        flat.segment(at, net.weights[l].size());
    at += net.weights[l].size();
    net.biases[l] = flat.segment(at, net.biases[l].size());
    at += net.biases[l].size();
  }
}

Eigen::VectorXd grads_flatten(const NetGrads& grads) {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    total += grads.weights[l].size() + grads.biases[l].size();
  }
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    flat.segment(at, grads.weights[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(grads.weights[l].data(),
                                          grads.weights[l].size());
    at += grads.weights[l].size();
    flat.segment(at, grads.biases[l].size()) = grads.biases[l];
    at += grads.biases[l].size();
  }
  return flat;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  if (!grads.allFinite()) {
    throw NumericError("adam_step: non-finite gradients");
  }
  state.step += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v =
      state.beta2 * state.v +
      (1.0 - state.beta2) * grads.array().square().matrix();
  const double bc1 = 1.0 - std::pow(state.beta1, state.step);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step);
  params.array() -= state.learning_rate * (state.m.array() / bc1) /
                    ((state.v.array() / bc2).sqrt() + state.epsilon);
}

double log_one_minus_tanh_sq(double u) {
  // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
  const double softplus = (u > 15.0) ? std::exp(-2.0 * u)
                                     : std::log1p(std::exp(-2.0 * u));
  return 2.0 * (std::numbers::ln2 - u - softplus);
}

ActionSample sample_action(const DiagGaussianPolicy& policy,
                           const Eigen::VectorXd& obs, Rng& rng) {
  const double mu = net_forward(policy.mean_net, obs)[0];
  const double ls = clamp_log_std(policy.log_std);
  const double sigma = std::exp(ls);
  ActionSample s;
  s.noise = rng.gaussian();
  s.action = mu + sigma * s.noise;
  s.log_prob = -0.5 * s.noise * s.noise - ls - kHalfLog2Pi;
  s.pre_squash = s.action;
  return s;
}

double log_prob(const DiagGaussianPolicy& policy, const Eigen::VectorXd& obs,
                double action) {
  const double mu = net_forward(policy.mean_net, obs)[0];
  const double ls = clamp_log_std(policy.log_std);
  const double sigma = std::exp(ls);
  const double z = (action - mu) / sigma;
  return -0.5 * z * z - ls - kHalfLog2Pi;
}

double mean_action(const DiagGaussianPolicy& policy,
                   const Eigen::VectorXd& obs) {
  return net_forward(policy.mean_net, obs)[0];
}

ActionSample sample_action(const SquashedGaussianPolicy& policy,
                           const Eigen::VectorXd& obs, Rng& rng) {
  const Eigen::VectorXd head = net_forward(policy.net, obs);
  const double mu = head[0];
  const double ls = clamp_log_std(head[1]);
  const double sigma = std::exp(ls);
  ActionSample s;
  s.noise = rng.gaussian();
  s.pre_squash = mu + sigma * s.noise;
  const double tanh_u = std::tanh(s.pre_squash);
  s.action = policy.offset() + policy.scale() * tanh_u;
  s.log_prob = -0.5 * s.noise * s.noise - ls - kHalfLog2Pi -
               log_one_minus_tanh_sq(s.pre_squash) - std::log(policy.scale());
  return s;
}

double log_prob(const SquashedGaussianPolicy& policy,
                const Eigen::VectorXd& obs, double action) {
  const Eigen::VectorXd head = net_forward(policy.net, obs);
  const double mu = head[0];
  const double ls = clamp_log_std(head[1]);
  const double sigma = std::exp(ls);
  double ratio = (action - policy.offset()) / policy.scale();
  ratio = std::min(std::max(ratio, -1.0 + 1e-12), 1.0 - 1e-12);
  const double u = std::atanh(ratio);
  const double z = (u - mu) / sigma;
  return -0.5 * z * z - ls - kHalfLog2Pi - log_one_minus_tanh_sq(u) -
         std::log(policy.scale());
}

double mean_action(const SquashedGaussianPolicy& policy,
                   const Eigen::VectorXd& obs) {
  const Eigen::VectorXd head = net_forward(policy.net, obs);
  return policy.offset() + policy.scale() * std::tanh(head[0]);
}

void save_net_json(const DenseNet& net, const std::string& path) {
  json j;
  j["version"] = 1;
  j["kind"] = "dense_net";
  j["net"] = net_to_json(net);
  write_json_file(j, path);
}

DenseNet load_net_json(const std::string& path) {
  const json j = read_json_file(path);
  if (j.at("kind") != "dense_net") {
    throw std::invalid_argument("not a dense_net checkpoint: " + path);
  }
  return net_from_json(j.at("net"));
}

void save_policy_checkpoint(const DiagGaussianPolicy& policy,
                            const std::string& path,
                            const std::string& rng_state) {
  json j;
  j["version"] = 1;
  j["kind"] = "ppo_policy";
  j["mean_net"] = net_to_json(policy.mean_net);
  j["log_std"] = policy.log_std;
  j["rng_state"] = rng_state;
  write_json_file(j, path);
}

void save_policy_checkpoint(const SquashedGaussianPolicy& policy,
                            const std::string& path,
                            const std::string& rng_state) {
  json j;
  j["version"] = 1;
  j["kind"] = "sac_policy";
  j["net"] = net_to_json(policy.net);
  j["action_low"] = policy.action_low;
  j["action_high"] = policy.action_high;
  j["rng_state"] = rng_state;
  write_json_file(j, path);
}

std::string load_policy_checkpoint(const std::string& path,
                                   DiagGaussianPolicy* ppo_out,
                                   SquashedGaussianPolicy* sac_out) {
  const json j = read_json_file(path);
  const std::string kind = j.at("kind");
  if (kind == "ppo_policy") {
    if (!ppo_out) throw std::invalid_argument("unexpected ppo checkpoint");
    ppo_out->mean_net = net_from_json(j.at("mean_net"));
    ppo_out->log_std = j.at("log_std").get<double>();
  } else if (kind == "sac_policy") {
    if (!sac_out) throw std::invalid_argument("unexpected sac checkpoint");
    sac_out->net = net_from_json(j.at("net"));
    sac_out->action_low = j.at("action_low").get<double>();
    sac_out->action_high = j.at("action_high").get<double>();
  } else {
    throw std::invalid_argument("unknown checkpoint kind: " + kind);
  }
  return kind;
}

}  // namespace backflow
