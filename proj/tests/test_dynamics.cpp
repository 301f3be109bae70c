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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <vector>

#include "backflow/dynamics.hpp"
#include "backflow/errors.hpp"
#include "backflow/rng.hpp"
#include "doctest.h"

using namespace backflow;

namespace {

ReservoirParams params_for(double gamma, double lambda, double delta = 1.0) {
  ReservoirParams p;
  p.gamma_coupling = gamma;
  p.lambda_width = lambda;
  p.detuning = delta;
  return p;
}

// Cumulative Simpson integral of gamma over [0, T]; prefix values at the
// n_samples equally spaced boundaries, panels_per_bin even.
std::vector<double> cumulative_gamma_integral(const ReservoirParams& p,
                                              double horizon, int bins,
                                              int panels_per_bin) {
  REQUIRE(panels_per_bin % 2 == 0);
  std::vector<double> prefix(bins + 1, 0.0);
  const double dt = horizon / bins;
  for (int k = 0; k < bins; ++k) {
    const double a = k * dt;
    const double h = dt / panels_per_bin;
    double acc = decay_rate(p, a) + decay_rate(p, a + dt);
    for (int i = 1; i < panels_per_bin; ++i) {
      acc += (i % 2 == 1 ? 4.0 : 2.0) * decay_rate(p, a + i * h);
    }
    prefix[k + 1] = prefix[k] + acc * h / 3.0;
  }
  return prefix;
}

Pulse constant_pulse(double value, int bins, double horizon,
                     Bounds bounds = {-5.0, 5.0}) {
  Pulse pulse;
  pulse.amplitudes.assign(bins, value);
  pulse.bounds = bounds;
  pulse.horizon = horizon;
  return pulse;
}

DensityMatrix random_state(Rng& rng) {
  while (true) {
    const double x = rng.uniform(-1.0, 1.0);
    const double y = rng.uniform(-1.0, 1.0);
    const double z = rng.uniform(-1.0, 1.0);
    if (x * x + y * y + z * z <= 1.0) return DensityMatrix::from_bloch(x, y, z);
  }
}

}  // namespace

TEST_CASE("decay rate vanishes at t = 0") {
  CHECK(decay_rate(params_for(5.0, 1.0), 0.0) == 0.0);
}

TEST_CASE("decay rate at the threshold d = 0") {
  // gamma = lambda^2 t / (2 + lambda t) when Gamma = lambda / 2.
  CHECK(decay_rate(params_for(0.5, 1.0), 2.0) == doctest::Approx(0.5).epsilon(1e-12));
  // The complex-arithmetic path agrees with the series limit just above the
  // switch point |d t| = 1e-6.
  const double d_small = 2e-6;
  const double gamma_small = (1.0 - d_small * d_small) / 2.0;
  CHECK(decay_rate(params_for(gamma_small, 1.0), 2.0) ==
        doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("decay rate is negative inside a backflow window") {
  // d = 3i: gamma(t) = 10 sin(1.5 t) / (3 cos(1.5 t) + sin(1.5 t)).
  const double t = 1.5;
  const double expected =
      10.0 * std::sin(1.5 * t) / (3.0 * std::cos(1.5 * t) + std::sin(1.5 * t));
  const double got = decay_rate(params_for(5.0, 1.0), t);
  CHECK(got < 0.0);
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("decay rate rejects negative times") {
  CHECK_THROWS_AS(decay_rate(params_for(1.0, 1.0), -0.1), std::invalid_argument);
}

TEST_CASE("reservoir regime flag") {
  CHECK(params_for(0.3, 1.0).markovian());
  CHECK_FALSE(params_for(5.0, 1.0).markovian());
  CHECK(params_for(0.3, 1.0).d().imag() == 0.0);
  CHECK(params_for(5.0, 1.0).d().real() == doctest::Approx(0.0));
  // d^2 recomputed from the fields.
  const auto d = params_for(5.0, 1.0).d();
  CHECK((d * d).real() == doctest::Approx(1.0 - 10.0).epsilon(1e-14));
}

TEST_CASE("no negativity windows in the Markovian regime") {
  CHECK(negativity_windows(params_for(0.3, 1.0), 10.0, 2000).empty());
}

TEST_CASE("first backflow window matches a fine sign scan") {
  const auto windows = negativity_windows(params_for(5.0, 1.0), 5.0, 4000);
  REQUIRE(!windows.empty());
  // Analytically the window is (pole, zero of sin) = (1.2617, 2.0944).
  CHECK(windows[0].first == doctest::Approx(1.26170).epsilon(2e-3));
  CHECK(windows[0].second == doctest::Approx(2.09440).epsilon(2e-3));
}

TEST_CASE("strong coupling default shows at least three windows") {
  const auto windows = negativity_windows(params_for(5.0, 1.0), 7.0, 2000);
  CHECK(windows.size() >= 3);
}

TEST_CASE("negativity windows precondition on the grid") {
  CHECK_THROWS_AS(negativity_windows(params_for(5.0, 1.0), 7.0, 99),
                  std::invalid_argument);
}

TEST_CASE("lindblad rhs fixes the undriven ground state") {
  const auto rhs =
      lindblad_rhs(DensityMatrix::ground(), 0.7, 0.0, params_for(5.0, 1.0));
  CHECK(rhs.norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("lindblad rhs decays the excited population at rate gamma") {
  const auto p = params_for(0.8, 1.0);
  for (double t : {0.3, 1.0, 2.5}) {
    const auto rhs = lindblad_rhs(DensityMatrix::excited(), t, 0.0, p);
    const double gamma = decay_rate(p, t);
    CHECK(rhs(1, 1).real() == doctest::Approx(-gamma).epsilon(1e-12));
    CHECK(rhs(0, 0).real() == doctest::Approx(gamma).epsilon(1e-12));
  }
}

TEST_CASE("lindblad rhs is traceless and Hermitian on random states") {
  Rng rng(7);
  const auto p = params_for(5.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const auto rho = random_state(rng);
    const double t = rng.uniform(0.0, 7.0);
    const double omega = rng.uniform(-5.0, 5.0);
    const auto rhs = lindblad_rhs(rho, t, omega, p);
    CHECK(std::abs(rhs(0, 0) + rhs(1, 1)) < 1e-12);
    CHECK((rhs - Matrix2c(rhs.adjoint())).norm() < 1e-12);
  }
}

TEST_CASE("undriven distance follows exp(-int gamma), Markovian") {
  const auto p = params_for(0.3, 1.0);
  PropagationConfig cfg;
  cfg.horizon = 7.0;
  cfg.control_bins = 70;
  cfg.substeps = 100;  // h = 1e-3 / lambda
  const auto rec =
      propagate_pair(DensityMatrix::excited(), DensityMatrix::ground(),
                     constant_pulse(0.0, 70, 7.0), p, cfg);
  const auto integral = cumulative_gamma_integral(p, 7.0, 70, 1000);
  double worst = 0.0;
  for (int k = 0; k <= 70; ++k) {
    worst = std::max(worst,
                     std::abs(rec.distances[k] - std::exp(-integral[k])));
  }
  CHECK(worst < 1e-6);
  for (int k = 0; k < 70; ++k) {
    CHECK(rec.distances[k + 1] <= rec.distances[k] + 1e-10);
  }
}

TEST_CASE("undriven oracle holds in the non-Markovian regime before the first pole") {
  // Gamma = 5 lambda puts the first gamma pole at t = 1.2617; stay inside.
  // The rate climbs to ~33 here, so run the propagator uncapped.
  const auto p = params_for(5.0, 1.0);
  PropagationConfig cfg;
  cfg.horizon = 1.2;
  cfg.control_bins = 60;
  cfg.substeps = 20;
  cfg.rate_cap = 0.0;
  const auto rec =
      propagate_pair(DensityMatrix::excited(), DensityMatrix::ground(),
                     constant_pulse(0.0, 60, 1.2), p, cfg);
  const auto integral = cumulative_gamma_integral(p, 1.2, 60, 200);
  for (int k = 0; k <= 60; ++k) {
    CHECK(std::abs(rec.distances[k] - std::exp(-integral[k])) < 1e-6);
  }
}

TEST_CASE("vanishing coupling freezes the distance") {
  const auto p = params_for(1e-14, 1.0);
  PropagationConfig cfg;
  cfg.horizon = 7.0;
  cfg.control_bins = 35;
  cfg.substeps = 10;
  const auto rec =
      propagate_pair(DensityMatrix::excited(), DensityMatrix::ground(),
                     constant_pulse(0.0, 35, 7.0), p, cfg);
  for (double d : rec.distances) {
    CHECK(d == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("identical states stay identical") {
  PropagationConfig cfg;
  cfg.horizon = 7.0;
  cfg.control_bins = 35;
  cfg.substeps = 10;
  cfg.positivity = PositivityPolicy::kProject;
  Rng rng(3);
  const auto rho = random_state(rng);
  const auto rec = propagate_pair(rho, rho, constant_pulse(1.3, 35, 7.0),
                                  params_for(5.0, 1.0), cfg);
  for (double d : rec.distances) {
    CHECK(d < 1e-14);
  }
  CHECK(rec.n_total == 0.0);
}

TEST_CASE("trace and hermiticity preserved for random pulses, both regimes") {
  Rng rng(11);
  for (double gamma : {0.3, 5.0}) {
    const auto p = params_for(gamma, 1.0);
    PropagationConfig cfg;
    cfg.horizon = 7.0;
    cfg.control_bins = 70;
    cfg.substeps = 20;
    cfg.positivity = PositivityPolicy::kProject;
    for (int rep = 0; rep < 5; ++rep) {
      Pulse pulse = constant_pulse(0.0, 70, 7.0);
      for (double& a : pulse.amplitudes) a = rng.uniform(-5.0, 5.0);
      PairStepper stepper(DensityMatrix::excited(), DensityMatrix::ground(), p,
                          cfg);
      for (int k = 0; k < 70; ++k) {
        stepper.advance_bin(pulse.amplitudes[k]);
        for (const Matrix2c* m : {&stepper.state1(), &stepper.state2()}) {
          const double trace = (*m)(0, 0).real() + (*m)(1, 1).real();
          CHECK(std::abs(trace - 1.0) < 1e-9);
          CHECK(std::abs((*m)(1, 0) - std::conj((*m)(0, 1))) < 1e-12);
          CHECK(min_eigenvalue(*m) >= -1e-9);
        }
        CHECK(stepper.distance() <= 1.0 + 1e-9);
      }
    }
  }
}

TEST_CASE("Markovian contraction without drive") {
  const auto p = params_for(0.2, 1.0);
  PropagationConfig cfg;
  cfg.horizon = 10.0;
  cfg.control_bins = 100;
  cfg.substeps = 10;
  Rng rng(5);
  for (int rep = 0; rep < 3; ++rep) {
    const auto rho1 = random_state(rng);
    const auto rho2 = random_state(rng);
    const auto rec =
        propagate_pair(rho1, rho2, constant_pulse(0.0, 100, 10.0), p, cfg);
    for (int k = 0; k < 100; ++k) {
      CHECK(rec.distances[k + 1] <= rec.distances[k] + 1e-10);
    }
  }
}

TEST_CASE("fourth-order convergence on a driven problem") {
  // Pole-free driven configuration; the undriven problem is integrated
  // exactly by the splitting, so the order is measured with a drive on.
  const auto p = params_for(0.3, 1.0);
  Rng rng(17);
  Pulse pulse = constant_pulse(0.0, 14, 7.0);
  for (double& a : pulse.amplitudes) a = rng.uniform(-3.0, 3.0);

  auto run = [&](int substeps) {
    PropagationConfig cfg;
    cfg.horizon = 7.0;
    cfg.control_bins = 14;
    cfg.substeps = substeps;
    return propagate_pair(DensityMatrix::excited(), DensityMatrix::ground(),
                          pulse, p, cfg);
  };
  const auto ref = run(320);
  auto max_err = [&](const TrajectoryRecord& rec) {
    double worst = 0.0;
    for (std::size_t k = 0; k < rec.distances.size(); ++k) {
      worst = std::max(worst, std::abs(rec.distances[k] - ref.distances[k]));
    }
    return worst;
  };
  const double e1 = max_err(run(10));
  const double e2 = max_err(run(20));
  CHECK(e1 / e2 > 10.0);
  CHECK(e1 / e2 < 24.0);
}

TEST_CASE("signal policy raises on positivity loss, project policy does not") {
  const auto p = params_for(5.0, 1.0);
  PropagationConfig cfg;
  cfg.horizon = 7.0;
  cfg.control_bins = 70;
  cfg.substeps = 20;
  cfg.rate_cap = 0.0;  // expose the raw singular model
  // One hot bin ahead of a backflow window injects population that the
  // time-local model amplifies beyond the physical cone.
  Pulse pulse = constant_pulse(0.0, 70, 7.0);
  pulse.amplitudes[11] = 5.0;

  cfg.positivity = PositivityPolicy::kSignal;
  CHECK_THROWS_AS(propagate_pair(DensityMatrix::excited(),
                                 DensityMatrix::ground(), pulse, p, cfg),
                  NumericError);

  cfg.positivity = PositivityPolicy::kProject;
  const auto rec = propagate_pair(DensityMatrix::excited(),
                                  DensityMatrix::ground(), pulse, p, cfg);
  CHECK(rec.positivity_projections > 0);
  for (double d : rec.distances) {
    CHECK(d >= 0.0);
    CHECK(d <= 1.0 + 1e-9);
  }
}

TEST_CASE("the rate cap never touches dynamics below it") {
  // Markovian rates stay far under the default cap, so capped and uncapped
  // runs are bit-identical.
  const auto p = params_for(0.3, 1.0);
  Rng rng(23);
  Pulse pulse = constant_pulse(0.0, 35, 7.0);
  for (double& a : pulse.amplitudes) a = rng.uniform(-3.0, 3.0);
  PropagationConfig capped;
  capped.horizon = 7.0;
  capped.control_bins = 35;
  capped.substeps = 10;
  capped.rate_cap = 5.0;
  PropagationConfig uncapped = capped;
  uncapped.rate_cap = 0.0;
  const auto a = propagate_pair(DensityMatrix::excited(),
                                DensityMatrix::ground(), pulse, p, capped);
  const auto b = propagate_pair(DensityMatrix::excited(),
                                DensityMatrix::ground(), pulse, p, uncapped);
  for (std::size_t k = 0; k < a.distances.size(); ++k) {
    CHECK(a.distances[k] == b.distances[k]);
  }
}

TEST_CASE("the rate cap keeps strong driven dynamics physical") {
  const auto p = params_for(5.0, 1.0);
  PropagationConfig cfg;  // default cap
  cfg.positivity = PositivityPolicy::kProject;
  Rng rng(29);
  Pulse pulse = constant_pulse(0.0, 70, 7.0);
  for (double& a : pulse.amplitudes) a = rng.uniform(-5.0, 5.0);
  const auto rec = propagate_pair(DensityMatrix::excited(),
                                  DensityMatrix::ground(), pulse, p, cfg);
  for (double d : rec.distances) {
    CHECK(d >= 0.0);
    CHECK(d <= 1.0 + 1e-9);
  }
  // A mild constant drive keeps finite backflow under the capped model.
  const auto mild = propagate_pair(DensityMatrix::excited(),
                                   DensityMatrix::ground(),
                                   constant_pulse(0.5, 70, 7.0), p, cfg);
  CHECK(mild.n_total > 0.0);
}

TEST_CASE("propagate_pair validates pulse versus config") {
  PropagationConfig cfg;
  cfg.horizon = 7.0;
  cfg.control_bins = 70;
  cfg.substeps = 20;
  CHECK_THROWS_AS(
      propagate_pair(DensityMatrix::excited(), DensityMatrix::ground(),
                     constant_pulse(0.0, 69, 7.0), params_for(5.0, 1.0), cfg),
      std::invalid_argument);
}

TEST_CASE("record bookkeeping") {
  PropagationConfig cfg;
  cfg.horizon = 7.0;
  cfg.control_bins = 70;
  cfg.substeps = 20;
  const auto p = params_for(5.0, 1.0);
  const auto rec =
      propagate_pair(DensityMatrix::excited(), DensityMatrix::ground(),
                     constant_pulse(0.0, 70, 7.0), p, cfg);
  REQUIRE(rec.times.size() == 71);
  CHECK(rec.times.front() == 0.0);
  CHECK(rec.times.back() == 7.0);
  CHECK(rec.distances[0] == 1.0);
  // ddot is the forward difference; the last entry repeats.
  const double dt = cfg.dt();
  for (int k = 0; k < 70; ++k) {
    CHECK(rec.ddot[k] ==
          doctest::Approx((rec.distances[k + 1] - rec.distances[k]) / dt));
    CHECK(rec.n_loc[k] == std::max(0.0, rec.ddot[k]));
  }
  CHECK(rec.ddot[70] == rec.ddot[69]);
  double total = 0.0;
  for (int k = 0; k < 70; ++k) total += rec.n_loc[k] * dt;
  CHECK(rec.n_total == total);
  CHECK(rec.trace_corrections >= 0);
  CHECK(rec.positivity_projections == 0);
}
