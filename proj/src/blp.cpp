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

#include "backflow/blp.hpp"

#include <cmath>
#include <stdexcept>

namespace backflow {

double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  const Matrix2c delta = rho1.matrix() - rho2.matrix();
  const double a = delta(0, 0).real();
  const double b = std::abs(delta(0, 1));
  return std::sqrt(a * a + b * b);
}

namespace {
void check_series(std::span<const double> distances, double dt) {
  if (distances.size() < 2) {
    throw std::invalid_argument("need at least two distance samples");
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("dt must be positive");
  }
}
}  // namespace

std::vector<double> n_loc_series(std::span<const double> distances,
                                 double dt) {
  check_series(distances, dt);
  std::vector<double> rates(distances.size() - 1);
  for (std::size_t k = 0; k + 1 < distances.size(); ++k) {
    rates[k] = std::max(0.0, (distances[k + 1] - distances[k]) / dt);
  }
  return rates;
}

double n_total(std::span<const double> distances, double dt) {
  check_series(distances, dt);
  // Accumulated as rate*dt in sample order so the value is bit-identical to
  // the per-step reward integral of an episode.
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < distances.size(); ++k) {
    total += std::max(0.0, (distances[k + 1] - distances[k]) / dt) * dt;
  }
  return total;
}

}  // namespace backflow
