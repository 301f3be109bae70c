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

#include "backflow/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "backflow/errors.hpp"

namespace backflow {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

// Yoshida triple-jump coefficients turning a 2nd-order splitting into a
// 4th-order one.
const double kW1 = 1.0 / (2.0 - std::cbrt(2.0));
const double kW0 = 1.0 - 2.0 * kW1;

// log |G(t)| with G(t) = exp(-L t/2) (cosh(d t/2) + (L/d) sinh(d t/2));
// the envelope whose logarithmic derivative gives the decay rate.
double log_abs_envelope(const ReservoirParams& p, double t) {
  const std::complex<double> d = p.d();
  const double lambda = p.lambda_width;
  double log_g;
  if (std::abs(d) * std::abs(t) < 1e-6) {
    log_g = std::log(std::abs(1.0 + lambda * t / 2.0));
  } else {
    const std::complex<double> z = d * (t / 2.0);
    const std::complex<double> g =
        std::cosh(z) + (lambda / d) * std::sinh(z);
    const double mag = std::abs(g);
    if (mag < 1e-300) {
      throw NumericError("substep boundary sits on a decay-rate singularity");
    }
    log_g = std::log(mag);
  }
  return -lambda * t / 2.0 + log_g;
}

// Exact flow of the pure dissipator with integrated rate s: the amplitude
// damping map with e^{-s} population transfer (s may be negative).
void damping_flow(Matrix2c& rho, double s) {
  const double e = std::exp(-s);
  const double eh = std::exp(-0.5 * s);
  const std::complex<double> excited = rho(1, 1);
  rho(0, 0) += (1.0 - e) * excited;
  rho(1, 1) = e * excited;
  rho(0, 1) *= eh;
  rho(1, 0) *= eh;
}

// exp(-i H tau) for H = (Delta/2) sz + (Omega/2) sx, closed form.
Matrix2c drive_unitary(double delta, double omega, double tau) {
  const double w = std::hypot(delta, omega);
  Matrix2c u = Matrix2c::Identity();
  if (w == 0.0) return u;
  const double theta = 0.5 * w * tau;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double nz = delta / w;
  const double nx = omega / w;
  u(0, 0) = c - kI * s * nz;
  u(1, 1) = c + kI * s * nz;
  u(0, 1) = -kI * s * nx;
  u(1, 0) = -kI * s * nx;
  return u;
}

double capped_damping(const ReservoirParams& p, double rate_cap, double ta,
                      double tb) {
  double s = -2.0 * (log_abs_envelope(p, tb) - log_abs_envelope(p, ta));
  if (rate_cap > 0.0) {
    const double limit = rate_cap * p.lambda_width * std::abs(tb - ta);
    s = std::min(std::max(s, -limit), limit);
  }
  return s;
}

// Strang splitting over [ta, tb] (tb < ta allowed): half damping, full
// unitary, half damping; the damping strengths are the exact integrals of
// gamma, clipped by the configured average-rate cap.
void strang_flow(Matrix2c& rho, const ReservoirParams& p, double rate_cap,
                 double omega, double ta, double tb) {
  const double tm = 0.5 * (ta + tb);
  const Matrix2c u = drive_unitary(p.detuning, omega, tb - ta);
  damping_flow(rho, capped_damping(p, rate_cap, ta, tm));
  rho = (u * rho * u.adjoint()).eval();
  damping_flow(rho, capped_damping(p, rate_cap, tm, tb));
}

}  // namespace

std::complex<double> ReservoirParams::d() const {
  return std::sqrt(std::complex<double>(
      lambda_width * lambda_width - 2.0 * gamma_coupling * lambda_width, 0.0));
}

void ReservoirParams::validate() const {
  if (!(gamma_coupling > 0.0)) {
    throw std::invalid_argument("ReservoirParams: Gamma must be positive");
  }
  if (!(lambda_width > 0.0)) {
    throw std::invalid_argument("ReservoirParams: lambda must be positive");
  }
  if (!std::isfinite(detuning)) {
    throw std::invalid_argument("ReservoirParams: detuning must be finite");
  }
}

double decay_rate(const ReservoirParams& params, double t) {
  params.validate();
  if (t < 0.0) {
    throw std::invalid_argument("decay_rate: t must be non-negative");
  }
  const double gl = params.gamma_coupling * params.lambda_width;
  const std::complex<double> d = params.d();
  if (std::abs(d) * t < 1e-6) {
    // sinh/cosh series; removes the 0/0 at d -> 0 and t -> 0.
    return 2.0 * gl * (t / 2.0) / (1.0 + params.lambda_width * t / 2.0);
  }
  const std::complex<double> z = d * (t / 2.0);
  const std::complex<double> sinh_z = std::sinh(z);
  const std::complex<double> denom =
      d * std::cosh(z) + params.lambda_width * sinh_z;
  if (std::abs(denom) < 1e-300) {
    throw NumericError("decay_rate: sampled on a pole of gamma(t)");
  }
  return (2.0 * gl * sinh_z / denom).real();
}

std::vector<std::pair<double, double>> negativity_windows(
    const ReservoirParams& params, double horizon, int grid) {
  if (grid < 100) {
    throw std::invalid_argument("negativity_windows: grid must be >= 100");
  }
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("negativity_windows: horizon must be positive");
  }
  std::vector<std::pair<double, double>> windows;
  const double h = horizon / (grid - 1);
  bool inside = false;
  double start = 0.0;
  double last_negative = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double t = (i == grid - 1) ? horizon : i * h;
    const double g = decay_rate(params, t);
    if (g < 0.0) {
      if (!inside) {
        inside = true;
        start = t;
      }
      last_negative = t;
    } else if (inside) {
      windows.emplace_back(start, last_negative);
      inside = false;
    }
  }
  if (inside) windows.emplace_back(start, last_negative);
  return windows;
}

Matrix2c lindblad_rhs(const DensityMatrix& rho, double t, double omega,
                      const ReservoirParams& params) {
  const double gamma = decay_rate(params, t);
  const Matrix2c& r = rho.matrix();
  const Matrix2c h =
      0.5 * params.detuning * sigma_z() + 0.5 * omega * sigma_x();
  const Matrix2c sm = sigma_minus();
  const Matrix2c sp = sigma_plus();
  const Matrix2c number = sp * sm;
  Matrix2c out = -kI * (h * r - r * h);
  out += gamma * (sm * r * sp - 0.5 * (number * r + r * number));
  return out;
}

void PropagationConfig::validate() const {
  if (control_bins < 1) {
    throw std::invalid_argument("PropagationConfig: control_bins must be >= 1");
  }
  if (substeps < 1) {
    throw std::invalid_argument("PropagationConfig: substeps must be >= 1");
  }
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("PropagationConfig: horizon must be positive");
  }
}

PairStepper::PairStepper(const DensityMatrix& rho1, const DensityMatrix& rho2,
                         const ReservoirParams& params,
                         const PropagationConfig& config)
    : params_(params), config_(config), r1_(rho1.matrix()),
      r2_(rho2.matrix()) {
  params_.validate();
  config_.validate();
  rho1.validate();
  rho2.validate();
}

void PairStepper::substep(Matrix2c& rho, double omega, double t, double h) {
  const double t1 = t + kW1 * h;
  const double t2 = t1 + kW0 * h;
  strang_flow(rho, params_, config_.rate_cap, omega, t, t1);
  strang_flow(rho, params_, config_.rate_cap, omega, t1, t2);
  strang_flow(rho, params_, config_.rate_cap, omega, t2, t + h);

  rho = (0.5 * (rho + rho.adjoint())).eval();
  const double trace = rho(0, 0).real() + rho(1, 1).real();
  if (std::abs(trace - 1.0) > 1e-12) {
    rho /= trace;
    ++trace_corrections_;
  }
  const double lo = min_eigenvalue(rho);
  if (config_.positivity == PositivityPolicy::kSignal) {
    if (lo < -1e-6) {
      throw NumericError(
          "propagation left the physical cone (min eigenvalue " +
          std::to_string(lo) + "); reduce the step or project");
    }
  } else if (lo < -1e-12) {
    rho = project_to_physical(rho);
    ++positivity_projections_;
  }
}

void PairStepper::advance_bin(double omega) {
  const double dt = config_.dt();
  const double h = config_.step();
  const double t0 = bin_ * dt;
  for (int i = 0; i < config_.substeps; ++i) {
    const double t = t0 + i * h;
    substep(r1_, omega, t, h);
    substep(r2_, omega, t, h);
  }
  ++bin_;
}

double PairStepper::distance() const {
  const Matrix2c delta = r1_ - r2_;
  const double a = delta(0, 0).real();
  const double b = std::abs(delta(0, 1));
  return std::sqrt(a * a + b * b);
}

TrajectoryRecord propagate_pair(const DensityMatrix& rho1,
                                const DensityMatrix& rho2, const Pulse& pulse,
                                const ReservoirParams& params,
                                const PropagationConfig& config) {
  pulse.validate();
  if (pulse.bins() != config.control_bins) {
    throw std::invalid_argument(
        "propagate_pair: pulse bins do not match the propagation config");
  }
  if (std::abs(pulse.horizon - config.horizon) > 1e-12) {
    throw std::invalid_argument(
        "propagate_pair: pulse horizon does not match the propagation config");
  }

  PairStepper stepper(rho1, rho2, params, config);
  const int n = config.control_bins;
  const double dt = config.dt();

  TrajectoryRecord rec;
  rec.times.resize(n + 1);
  rec.distances.resize(n + 1);
  rec.gamma.resize(n + 1);
  rec.omega.resize(n + 1);
  rec.distances[0] = stepper.distance();
  for (int k = 0; k <= n; ++k) {
    rec.times[k] = (k == n) ? config.horizon : k * dt;
    rec.gamma[k] = decay_rate(params, rec.times[k]);
    rec.omega[k] = pulse.sample(rec.times[k]);
  }
  for (int k = 0; k < n; ++k) {
    stepper.advance_bin(pulse.amplitudes[static_cast<std::size_t>(k)]);
    rec.distances[k + 1] = stepper.distance();
  }

  rec.ddot.resize(n + 1);
  rec.n_loc.resize(n + 1);
  for (int k = 0; k < n; ++k) {
    rec.ddot[k] = (rec.distances[k + 1] - rec.distances[k]) / dt;
    rec.n_loc[k] = std::max(0.0, rec.ddot[k]);
  }
  rec.ddot[n] = rec.ddot[n - 1];  // final sample repeats the last difference
  rec.n_loc[n] = std::max(0.0, rec.ddot[n]);
  rec.n_total = 0.0;
  for (int k = 0; k < n; ++k) {
    rec.n_total += rec.n_loc[k] * dt;
  }
  rec.trace_corrections = stepper.trace_corrections();
  rec.positivity_projections = stepper.positivity_projections();
  return rec;
}

}  // namespace backflow
