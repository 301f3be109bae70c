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

#include <span>
#include <vector>

#include "backflow/state.hpp"

namespace backflow {

// Samples of a propagated state pair at the control-bin boundaries.  The
// slope at index k is the forward difference (D_{k+1}-D_k)/dt; the final
// entry repeats the last available difference.  n_total is the left Riemann
// sum of the clipped slopes over the first N_c samples.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> distances;
  std::vector<double> ddot;
  std::vector<double> gamma;
  std::vector<double> omega;
  std::vector<double> n_loc;
  double n_total = 0.0;
  long trace_corrections = 0;
  long positivity_projections = 0;
};

/// Trace distance between two qubit states, closed form: for the Hermitian
/// traceless difference with diagonal (a, -a) and off-diagonal b this is
/// sqrt(a^2 + |b|^2).
double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2);

/// Instantaneous backflow rates max(0, (D_{k+1}-D_k)/dt); one entry per
/// adjacent sample pair.
std::vector<double> n_loc_series(std::span<const double> distances, double dt);

/// Total backflow: sum of the clipped forward differences.  Equals the
/// undiscounted reward integral of an episode when the reward penalties are
/// zero.
double n_total(std::span<const double> distances, double dt);

}  // namespace backflow
