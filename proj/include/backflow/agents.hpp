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
#include <ostream>
#include <vector>

#include "backflow/env.hpp"
#include "backflow/rng.hpp"

namespace backflow {

// Cost counters next to the deterministic-evaluation merit, sampled over the
// course of training.
struct ConvergenceHistory {
  struct Row {
    long env_steps = 0;
    long episodes = 0;
    long updates = 0;
    double eval_n_tot = 0.0;
  };
  std::vector<Row> rows;
};

/// CSV with header env_steps,episodes,updates,eval_n_tot.
void write_convergence_csv(const ConvergenceHistory& history,
                           std::ostream& out);

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

/// Generalized advantage estimation by backward recursion:
/// delta_k = r_k + discount*V_{k+1} - V_k, A_k = delta_k + discount*lambda*
/// A_{k+1}; values holds V(s_0..s_{N-1}) and bootstrap is V(s_N).
GaeResult compute_gae(const Eigen::VectorXd& rewards,
                      const Eigen::VectorXd& values, double bootstrap,
                      double discount, double lambda);

// Fixed-capacity ring store with strictly oldest-first eviction.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(long capacity);

  void push(Transition transition);
  long size() const { return size_; }
  long capacity() const { return capacity_; }
  const Transition& slot(long index) const { return store_[index]; }
  /// Uniform slot indices, with replacement.
  std::vector<long> sample_indices(Rng& rng, int batch) const;

 private:
  long capacity_;
  long size_ = 0;
  long cursor_ = 0;
  std::vector<Transition> store_;
};

/// One deterministic-evaluation episode: reset_eval, greedy actions, merit.
double evaluate_policy(
    RlEnv& env, const std::function<double(const Eigen::VectorXd&)>& act);

}  // namespace backflow
