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

#include <complex>
#include <utility>
#include <vector>

#include "backflow/blp.hpp"
#include "backflow/pulse.hpp"
#include "backflow/state.hpp"

namespace backflow {

// Lorentzian reservoir: coupling Gamma, spectral width lambda, detuning
// Delta.  d = sqrt(lambda^2 - 2 Gamma lambda) is real below the coupling
// threshold (Markovian regime) and imaginary above it.
struct ReservoirParams {
  double gamma_coupling = 5.0;
  double lambda_width = 1.0;
  double detuning = 1.0;

  std::complex<double> d() const;
  bool markovian() const { return gamma_coupling < lambda_width / 2.0; }
  void validate() const;
};

/// Time-dependent decay rate
///   gamma(t) = Re[2 G L sinh(d t/2) / (d cosh(d t/2) + L sinh(d t/2))],
/// evaluated in complex arithmetic with a series limit for |d t| < 1e-6.
/// Throws std::invalid_argument for t < 0 and NumericError when t sits on a
/// pole of the rate (denominator magnitude below 1e-300).
double decay_rate(const ReservoirParams& params, double t);

/// Maximal intervals with gamma(t) < 0 on an equispaced grid over
/// [0, horizon]; empty in the Markovian regime.  Requires grid >= 100.
std::vector<std::pair<double, double>> negativity_windows(
    const ReservoirParams& params, double horizon, int grid);

/// Right-hand side -i[H, rho] + gamma(t) (s- rho s+ - 1/2 {s+ s-, rho}) with
/// H = (Delta/2) sz + (Omega/2) sx.  Hermitian and traceless.
Matrix2c lindblad_rhs(const DensityMatrix& rho, double t, double omega,
                      const ReservoirParams& params);

// How the propagator treats states drifting outside the physical cone.
// kSignal: raise NumericError beyond -1e-6 (integration step too coarse or
// the drive hit a decay-rate singularity).  kProject: deterministically
// project onto the nearest physical state (events are counted); this is the
// regularization used by the control objective and the RL environment, where
// every in-bounds pulse must produce a finite trajectory.
enum class PositivityPolicy { kSignal, kProject };

struct PropagationConfig {
  double horizon = 7.0;
  int control_bins = 70;
  int substeps = 20;
  PositivityPolicy positivity = PositivityPolicy::kSignal;
  // Cap on the interval-averaged decay rate used by the propagator, in
  // units of lambda_width; non-positive disables it.  gamma(t) has poles at
  // the opening of every backflow window, and the unbounded through-pole
  // damping/amplification makes the driven time-local model singular; the
  // cap bounds it while leaving any interval with |average gamma| below the
  // cap untouched (pole-free dynamics is exact either way).
  double rate_cap = 5.0;

  double dt() const { return horizon / control_bins; }
  double step() const { return dt() / substeps; }
  void validate() const;
};

// Fixed-step pair propagator stepping one control bin at a time.  Both the
// batch propagate_pair and the RL environment drive this class, so a
// constant-increment policy reproduces the batch trajectory bit-exactly.
//
// Each substep is a 4th-order Yoshida composition of Strang splittings whose
// sub-flows are exact: the constant-Omega unitary in closed form, and the
// amplitude-damping flow with strength s = int gamma dt obtained from the
// closed-form envelope G(t) (s = -2 dlog|G|).  The exact damping integrals
// keep the propagation finite across the poles of gamma(t), where pointwise
// samplers diverge.
class PairStepper {
 public:
  PairStepper(const DensityMatrix& rho1, const DensityMatrix& rho2,
              const ReservoirParams& params, const PropagationConfig& config);

  /// Advances both states across the current control bin at constant omega.
  void advance_bin(double omega);

  double distance() const;
  int bin() const { return bin_; }
  double time() const { return bin_ * config_.dt(); }
  const Matrix2c& state1() const { return r1_; }
  const Matrix2c& state2() const { return r2_; }
  long trace_corrections() const { return trace_corrections_; }
  long positivity_projections() const { return positivity_projections_; }

 private:
  void substep(Matrix2c& rho, double omega, double t_start, double h);

  ReservoirParams params_;
  PropagationConfig config_;
  Matrix2c r1_;
  Matrix2c r2_;
  int bin_ = 0;
  long trace_corrections_ = 0;
  long positivity_projections_ = 0;
};

/// Propagates the pair across all bins of the pulse and records D, its
/// forward-difference slope, gamma, omega and the clipped backflow rate at
/// every bin boundary.
TrajectoryRecord propagate_pair(const DensityMatrix& rho1,
                                const DensityMatrix& rho2, const Pulse& pulse,
                                const ReservoirParams& params,
                                const PropagationConfig& config);

}  // namespace backflow
