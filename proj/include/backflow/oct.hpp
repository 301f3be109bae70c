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
#include <string>
#include <vector>

#include "backflow/dynamics.hpp"
#include "backflow/pulse.hpp"

namespace backflow {

using Objective = std::function<double(const Eigen::VectorXd&)>;
using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct OCTConfig {
  int max_outer_iterations = 50;   // Powell
  int max_iterations = 200;        // quasi-Newton
  double line_tol_factor = 1e-4;   // golden-section tolerance per unit width
  double fd_step = -1.0;           // < 0: 1e-3 * amplitude range
  double grad_tol = 1e-8;
  double objective_tol = 1e-10;
  int memory_depth = 10;
  double improvement_tol = 1e-12;
  double direction_tol = 1e-12;
  void validate() const;
};

// Per-outer-iteration snapshots; enough to reproduce convergence plots.
struct ObjectiveHistory {
  struct Entry {
    int iteration;
    double objective;
    Eigen::VectorXd x;
    long evaluations;
  };
  std::vector<Entry> entries;
};

struct OptimizeResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  long evaluations = 0;
  std::string termination;
  ObjectiveHistory history;
};

struct LineSearchResult {
  double lambda = 0.0;
  double value = 0.0;
  long evaluations = 0;
};

/// Derivative-free 1-D maximization over [lo, hi]: golden-section to
/// tolerance tol_factor*(hi-lo) plus one parabolic refinement probe through
/// the best bracket.  Never evaluates outside [lo, hi]; returns the best
/// probed point.  A degenerate interval returns (lo, f(lo)).
LineSearchResult line_search_1d(const std::function<double(double)>& f,
                                double lo, double hi,
                                double tol_factor = 1e-4);

/// Forward differences (f(clip(x + eps e_j)) - f(x)) / eps; components whose
/// perturbation is clipped back onto an active bound come out zero.
Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double eps, const Bounds& bounds);

/// Powell direction-set maximization under box bounds: cyclic bounded line
/// searches along the current directions, then the oldest direction is
/// replaced by the net displacement of the sweep.  Accepted moves only, so
/// the history is non-decreasing.
OptimizeResult powell_optimize(const Objective& f, const Eigen::VectorXd& x0,
                               const Bounds& bounds, const OCTConfig& config);

/// Limited-memory quasi-Newton maximization with component-wise projection
/// onto the box: two-loop recursion over (s, y) pairs, ascent direction H·g,
/// backtracking projected line search.  Supply an analytic gradient to skip
/// the finite-difference path.
OptimizeResult lbfgsb_optimize(const Objective& f, const Eigen::VectorXd& x0,
                               const Bounds& bounds, const OCTConfig& config,
                               const Gradient& gradient = nullptr);

// The control objective: total backflow of the fixed orthogonal initial pair
// under the pulse built from the amplitude vector.  Counts propagations.
class BackflowObjective {
 public:
  BackflowObjective(const ReservoirParams& params,
                    const PropagationConfig& config, const Bounds& bounds);

  double operator()(const Eigen::VectorXd& amplitudes) const;
  TrajectoryRecord trajectory(const Eigen::VectorXd& amplitudes) const;
  Pulse to_pulse(const Eigen::VectorXd& amplitudes) const;

  long evaluations() const { return evaluations_; }
  const Bounds& bounds() const { return bounds_; }
  const PropagationConfig& propagation() const { return config_; }

 private:
  ReservoirParams params_;
  PropagationConfig config_;
  Bounds bounds_;
  mutable long evaluations_ = 0;
};

}  // namespace backflow
