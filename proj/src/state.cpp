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

#include "backflow/state.hpp"

#include <cmath>
#include <stdexcept>

namespace backflow {

namespace {
constexpr std::complex<double> kI{0.0, 1.0};
}

Matrix2c sigma_x() {
  Matrix2c m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Matrix2c sigma_z() {
  Matrix2c m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

Matrix2c sigma_minus() {
  Matrix2c m;
  m << 0.0, 1.0, 0.0, 0.0;
  return m;
}

Matrix2c sigma_plus() {
  Matrix2c m;
  m << 0.0, 0.0, 1.0, 0.0;
  return m;
}

double min_eigenvalue(const Matrix2c& m) {
  const double p = m(0, 0).real();
  const double q = m(1, 1).real();
  const double mean = 0.5 * (p + q);
  const double off = std::abs(m(0, 1));
  const double radius = std::hypot(0.5 * (p - q), off);
  return mean - radius;
}

Matrix2c project_to_physical(const Matrix2c& m) {
  Eigen::SelfAdjointEigenSolver<Matrix2c> solver(m);
  Eigen::Vector2d evals = solver.eigenvalues().cwiseMax(0.0);
  const double trace = evals.sum();
  if (trace <= 0.0) {
    Matrix2c ground = Matrix2c::Zero();
    ground(0, 0) = 1.0;
    return ground;
  }
  evals /= trace;
  return solver.eigenvectors() * evals.asDiagonal() *
         solver.eigenvectors().adjoint();
}

DensityMatrix DensityMatrix::ground() { return DensityMatrix{}; }

DensityMatrix DensityMatrix::excited() {
  Matrix2c m = Matrix2c::Zero();
  m(1, 1) = 1.0;
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::from_bloch(double x, double y, double z) {
  if (x * x + y * y + z * z > 1.0 + 1e-12) {
    throw std::invalid_argument("from_bloch: vector outside the Bloch ball");
  }
  // With |1> excited, z = +1 is the excited state.
  Matrix2c m;
  m(0, 0) = 0.5 * (1.0 - z);
  m(1, 1) = 0.5 * (1.0 + z);
  m(1, 0) = 0.5 * (x + kI * y);
  m(0, 1) = std::conj(m(1, 0));
  return DensityMatrix(m);
}

bool DensityMatrix::is_valid(double hermiticity_tol, double trace_tol,
                             double positivity_tol) const {
  if (std::abs(m_(1, 0) - std::conj(m_(0, 1))) > hermiticity_tol) return false;
  if (std::abs(m_(0, 0).imag()) > hermiticity_tol) return false;
  if (std::abs(m_(1, 1).imag()) > hermiticity_tol) return false;
  const double trace = m_(0, 0).real() + m_(1, 1).real();
  if (std::abs(trace - 1.0) > trace_tol) return false;
  return min_eigenvalue(m_) >= -positivity_tol;
}

void DensityMatrix::validate() const {
  if (!is_valid()) {
    throw std::invalid_argument("DensityMatrix: invariants violated");
  }
}

}  // namespace backflow
