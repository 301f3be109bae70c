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

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace backflow {

struct Bounds {
  double lo = -5.0;
  double hi = 5.0;
  void validate() const;
  double clip(double value) const;
  double width() const { return hi - lo; }
};

/// clip(value + increment) onto the amplitude range.
double apply_increment(double value, double increment, const Bounds& bounds);

// Piecewise-constant control field: amplitudes held fixed on N_c equal bins
// over [0, horizon].
struct Pulse {
  std::vector<double> amplitudes;
  Bounds bounds;
  double horizon = 0.0;

  double dt() const { return horizon / static_cast<double>(amplitudes.size()); }
  int bins() const { return static_cast<int>(amplitudes.size()); }

  /// Amplitude at time t in [0, horizon]; t == horizon maps to the last bin.
  double sample(double t) const;

  void validate() const;
};

/// Seeded i.i.d.-uniform amplitudes within bounds; identical seeds give
/// bit-identical pulses.
Pulse random_pulse(std::uint64_t seed, const Bounds& bounds, int n_bins,
                   double horizon);

/// CSV with header bin_index,t_start,amplitude.
void write_pulse_csv(const Pulse& pulse, std::ostream& out);
void write_pulse_csv(const Pulse& pulse, const std::string& path);

}  // namespace backflow
