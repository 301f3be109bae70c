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
#include <complex>

namespace backflow {

using Matrix2c = Eigen::Matrix2cd;

// Basis convention: index 0 is the ground state |0>, index 1 the excited
// state |1>; sigma_minus lowers |1> to |0>.
Matrix2c sigma_x();
Matrix2c sigma_z();
Matrix2c sigma_minus();
Matrix2c sigma_plus();

/// Smaller eigenvalue of a 2x2 Hermitian matrix, closed form.
double min_eigenvalue(const Matrix2c& m);

/// Nearest physical state: floors negative eigenvalues and renormalizes.
Matrix2c project_to_physical(const Matrix2c& m);

// 2x2 density matrix: Hermitian, unit trace, positive semidefinite within
// the stated tolerances.
class DensityMatrix {
 public:
  DensityMatrix() : m_(Matrix2c::Zero()) { m_(0, 0) = 1.0; }
  explicit DensityMatrix(const Matrix2c& m) : m_(m) { validate(); }

  static DensityMatrix ground();
  static DensityMatrix excited();
  /// State (I + x sx + y sy + z sz)/2; requires x^2+y^2+z^2 <= 1.
  static DensityMatrix from_bloch(double x, double y, double z);

  const Matrix2c& matrix() const { return m_; }

  bool is_valid(double hermiticity_tol = 1e-12, double trace_tol = 1e-9,
                double positivity_tol = 1e-9) const;
  /// Throws std::invalid_argument when is_valid() fails.
  void validate() const;

 private:
  Matrix2c m_;
};

}  // namespace backflow
