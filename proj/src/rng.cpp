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

#include "backflow/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace backflow {

double Rng::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(phi);
  has_cached_ = true;
  return r * std::cos(phi);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = engine_();
  while (v >= limit) v = engine_();
  return v % n;
}

void Rng::shuffle(std::vector<int>& indices) {
  for (std::size_t i = indices.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(below(i));
    std::swap(indices[i - 1], indices[j]);
  }
}

std::string Rng::serialize() const {
  std::ostringstream out;
  out << engine_ << ' ' << (has_cached_ ? 1 : 0);
  if (has_cached_) {
    out.precision(17);
    out << ' ' << cached_;
  }
  return out.str();
}

void Rng::deserialize(const std::string& text) {
  std::istringstream in(text);
  int flag = 0;
  in >> engine_ >> flag;
  has_cached_ = flag != 0;
  if (has_cached_) in >> cached_;
  if (!in) throw std::invalid_argument("Rng::deserialize: malformed state");
}

}  // namespace backflow
