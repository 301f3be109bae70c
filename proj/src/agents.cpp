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

#include "backflow/agents.hpp"

#include <stdexcept>

#include "backflow/format.hpp"

namespace backflow {

void write_convergence_csv(const ConvergenceHistory& history,
                           std::ostream& out) {
  out << "env_steps,episodes,updates,eval_n_tot\n";
  for (const auto& row : history.rows) {
    out << row.env_steps << ',' << row.episodes << ',' << row.updates << ','
        << format_g17(row.eval_n_tot) << '\n';
  }
}

GaeResult compute_gae(const Eigen::VectorXd& rewards,
                      const Eigen::VectorXd& values, double bootstrap,
                      double discount, double lambda) {
  if (rewards.size() != values.size()) {
    throw std::invalid_argument("compute_gae: need one value per state");
  }
  const Eigen::Index n = rewards.size();
  GaeResult result;
  result.advantages.resize(n);
  result.returns.resize(n);
  double carry = 0.0;
  for (Eigen::Index k = n; k-- > 0;) {
    const double v_next = (k + 1 < n) ? values[k + 1] : bootstrap;
    const double delta = rewards[k] + discount * v_next - values[k];
    carry = delta + discount * lambda * carry;
    result.advantages[k] = carry;
    result.returns[k] = carry + values[k];
  }
  return result;
}

ReplayBuffer::ReplayBuffer(long capacity) : capacity_(capacity) {
  if (capacity < 1) {
    throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  }
  store_.reserve(static_cast<std::size_t>(capacity));
}

void ReplayBuffer::push(Transition transition) {
  if (size_ < capacity_) {
    store_.push_back(std::move(transition));
    ++size_;
  } else {
    store_[static_cast<std::size_t>(cursor_)] = std::move(transition);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<long> ReplayBuffer::sample_indices(Rng& rng, int batch) const {
  if (size_ < batch) {
    throw std::logic_error("ReplayBuffer: not enough transitions to sample");
  }
  std::vector<long> indices(static_cast<std::size_t>(batch));
  for (auto& index : indices) {
    index = static_cast<long>(rng.below(static_cast<std::uint64_t>(size_)));
  }
  return indices;
}

double evaluate_policy(
    RlEnv& env, const std::function<double(const Eigen::VectorXd&)>& act) {
  Eigen::VectorXd obs = env.reset_eval();
  for (int k = 0; k < env.episode_length(); ++k) {
    obs = env.step(act(obs)).obs;
  }
  return env.episode_merit();
}

}  // namespace backflow
