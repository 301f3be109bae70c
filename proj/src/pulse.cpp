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

#include "backflow/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "backflow/format.hpp"
#include "backflow/rng.hpp"

namespace backflow {

void Bounds::validate() const {
  if (!(lo <= hi)) {
    throw std::invalid_argument("Bounds: lo must not exceed hi");
  }
}

double Bounds::clip(double value) const {
  return std::min(std::max(value, lo), hi);
}

double apply_increment(double value, double increment, const Bounds& bounds) {
  bounds.validate();
  return bounds.clip(value + increment);
}

double Pulse::sample(double t) const {
  if (t < 0.0 || t > horizon) {
    throw std::invalid_argument("Pulse::sample: t outside [0, horizon]");
  }
  const auto n = static_cast<long>(amplitudes.size());
  long j = static_cast<long>(std::floor(t / dt()));
  j = std::min(j, n - 1);  // t == horizon maps into the last bin
  return amplitudes[static_cast<std::size_t>(j)];
}

void Pulse::validate() const {
  bounds.validate();
  if (amplitudes.empty()) {
    throw std::invalid_argument("Pulse: needs at least one bin");
  }
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("Pulse: horizon must be positive");
  }
  for (double a : amplitudes) {
    if (a < bounds.lo || a > bounds.hi) {
      throw std::invalid_argument("Pulse: amplitude outside bounds");
    }
  }
}

Pulse random_pulse(std::uint64_t seed, const Bounds& bounds, int n_bins,
                   double horizon) {
  bounds.validate();
  if (n_bins < 1) {
    throw std::invalid_argument("random_pulse: n_bins must be >= 1");
  }
  Rng rng(seed);
  Pulse pulse;
  pulse.bounds = bounds;
  pulse.horizon = horizon;
  pulse.amplitudes.resize(static_cast<std::size_t>(n_bins));
  for (double& a : pulse.amplitudes) {
    a = rng.uniform(bounds.lo, bounds.hi);
  }
  return pulse;
}

void write_pulse_csv(const Pulse& pulse, std::ostream& out) {
  out << "bin_index,t_start,amplitude\n";
  const double dt = pulse.dt();
  for (int j = 0; j < pulse.bins(); ++j) {
    out << j << ',' << format_g17(j * dt) << ','
        << format_g17(pulse.amplitudes[static_cast<std::size_t>(j)]) << '\n';
  }
}

void write_pulse_csv(const Pulse& pulse, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_pulse_csv(pulse, out);
}

}  // namespace backflow
