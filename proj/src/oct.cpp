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

#include "backflow/oct.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "backflow/errors.hpp"

namespace backflow {

namespace {

const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;

void check_in_bounds(const Eigen::VectorXd& x, const Bounds& b,
                     const char* who) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] < b.lo || x[j] > b.hi) {
      throw std::invalid_argument(std::string(who) +
                                  ": start point violates the bounds");
    }
  }
}

Eigen::VectorXd project_box(Eigen::VectorXd x, const Bounds& b) {
  for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = b.clip(x[j]);
  return x;
}

// Largest feasible [lo, hi] for x + lambda*d inside the box; empty intervals
// collapse to {0}.
std::pair<double, double> feasible_interval(const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& d,
                                            const Bounds& b) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (d[j] == 0.0) continue;
    const double a = (b.lo - x[j]) / d[j];
    const double c = (b.hi - x[j]) / d[j];
    lo = std::max(lo, std::min(a, c));
    hi = std::min(hi, std::max(a, c));
  }
  if (!(lo < hi)) return {0.0, 0.0};
  // Keep the current point reachable despite rounding.
  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  return {lo, hi};
}

}  // namespace

void OCTConfig::validate() const {
  if (max_outer_iterations < 1 || max_iterations < 1) {
    throw std::invalid_argument("OCTConfig: iteration budgets must be >= 1");
  }
  if (memory_depth < 1) {
    throw std::invalid_argument("OCTConfig: memory depth must be >= 1");
  }
  if (!(line_tol_factor > 0.0)) {
    throw std::invalid_argument("OCTConfig: line tolerance must be positive");
  }
}

LineSearchResult line_search_1d(const std::function<double(double)>& f,
                                double lo, double hi, double tol_factor) {
  LineSearchResult result;
  if (!(hi > lo)) {
    result.lambda = lo;
    result.value = f(lo);
    result.evaluations = 1;
    return result;
  }

  std::vector<std::pair<double, double>> probes;
  auto eval = [&](double lambda) {
    const double v = f(lambda);
    probes.emplace_back(lambda, v);
    ++result.evaluations;
    return v;
  };

  const double tol = tol_factor * (hi - lo);
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  while (b - a > tol) {
    if (fc < fd) {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = eval(d);
    } else {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = eval(c);
    }
  }

  std::sort(probes.begin(), probes.end());
  std::size_t best = 0;
  for (std::size_t i = 1; i < probes.size(); ++i) {
    if (probes[i].second > probes[best].second) best = i;
  }
  // One parabolic probe through the best bracket sharpens interior optima
  // well past the golden-section tolerance.
  if (best > 0 && best + 1 < probes.size()) {
    const auto [x1, f1] = probes[best - 1];
    const auto [x2, f2] = probes[best];
    const auto [x3, f3] = probes[best + 1];
    const double num =
        (x2 - x1) * (x2 - x1) * (f2 - f3) - (x2 - x3) * (x2 - x3) * (f2 - f1);
    const double den = (x2 - x1) * (f2 - f3) - (x2 - x3) * (f2 - f1);
    if (std::abs(den) > 1e-300) {
      const double vertex = x2 - 0.5 * num / den;
      if (std::isfinite(vertex) && vertex > lo && vertex < hi) {
        eval(vertex);
      }
    }
  }

  result.lambda = probes[0].first;
  result.value = probes[0].second;
  for (const auto& [lambda, value] : probes) {
    if (value > result.value) {
      result.lambda = lambda;
      result.value = value;
    }
  }
  return result;
}

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double eps, const Bounds& bounds) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("fd_gradient: eps must be positive");
  }
  const double f0 = f(x);
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double old = xp[j];
    xp[j] = bounds.clip(old + eps);
    g[j] = (xp[j] == old) ? 0.0 : (f(xp) - f0) / eps;
    xp[j] = old;
  }
  return g;
}

OptimizeResult powell_optimize(const Objective& f, const Eigen::VectorXd& x0,
                               const Bounds& bounds, const OCTConfig& config) {
  config.validate();
  bounds.validate();
  check_in_bounds(x0, bounds, "powell_optimize");

  const Eigen::Index n = x0.size();
  OptimizeResult result;
  long evals = 0;
  auto counted = [&](const Eigen::VectorXd& x) {
    ++evals;
    return f(x);
  };

  Eigen::VectorXd x = x0;
  double fx = counted(x);
  result.history.entries.push_back({0, fx, x, evals});

  std::deque<Eigen::VectorXd> directions;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[j] = 1.0;
    directions.push_back(std::move(e));
  }

  result.termination = "max_iterations";
  for (int m = 1; m <= config.max_outer_iterations; ++m) {
    const Eigen::VectorXd x_start = x;
    const double f_start = fx;

    for (const auto& dir : directions) {
      const auto [llo, lhi] = feasible_interval(x, dir, bounds);
      if (!(lhi > llo)) continue;
      const auto ls = line_search_1d(
          [&](double lambda) { return counted(x + lambda * dir); }, llo, lhi,
          config.line_tol_factor);
      if (ls.value > fx) {
        x = project_box(x + ls.lambda * dir, bounds);
        fx = ls.value;
      }
    }

    const Eigen::VectorXd displacement = x - x_start;
    const double improvement = fx - f_start;
    result.history.entries.push_back({m, fx, x, evals});
    if (improvement < config.improvement_tol ||
        displacement.norm() < config.direction_tol) {
      result.termination = "converged";
      break;
    }
    directions.pop_front();
    directions.push_back(displacement);
  }

  result.x = x;
  result.objective = fx;
  result.evaluations = evals;
  return result;
}

OptimizeResult lbfgsb_optimize(const Objective& f, const Eigen::VectorXd& x0,
                               const Bounds& bounds, const OCTConfig& config,
                               const Gradient& gradient) {
  config.validate();
  bounds.validate();
  check_in_bounds(x0, bounds, "lbfgsb_optimize");

  OptimizeResult result;
  long evals = 0;
  auto counted = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    if (!std::isfinite(v)) {
      throw NumericError("lbfgsb_optimize: non-finite objective");
    }
    return v;
  };
  const double eps =
      config.fd_step > 0.0 ? config.fd_step : 1e-3 * bounds.width();
  auto grad = [&](const Eigen::VectorXd& x, double fx_known) {
    Eigen::VectorXd g;
    if (gradient) {
      g = gradient(x);
    } else {
      // Forward differences around the known value; mirrors fd_gradient but
      // reuses f(x) so the evaluation budget stays honest.
      g.resize(x.size());
      Eigen::VectorXd xp = x;
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double old = xp[j];
        xp[j] = bounds.clip(old + eps);
        g[j] = (xp[j] == old) ? 0.0 : (counted(xp) - fx_known) / eps;
        xp[j] = old;
      }
    }
    if (!g.allFinite()) {
      throw NumericError("lbfgsb_optimize: non-finite gradient");
    }
    return g;
  };

  Eigen::VectorXd x = x0;
  double fx = counted(x);
  Eigen::VectorXd g = grad(x, fx);
  result.history.entries.push_back({0, fx, x, evals});

  // Internally minimize -f: s/y pairs live in the minimization convention.
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
  auto two_loop = [&](const Eigen::VectorXd& grad_phi) {
    Eigen::VectorXd q = grad_phi;
    std::vector<double> alpha(pairs.size());
    std::vector<double> rho(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
      const auto& [s, y] = pairs[i];
      rho[i] = 1.0 / y.dot(s);
      alpha[i] = rho[i] * s.dot(q);
      q -= alpha[i] * y;
    }
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& [s, y] = pairs[i];
      const double beta = rho[i] * y.dot(q);
      q += (alpha[i] - beta) * s;
    }
    return q;
  };

  result.termination = "max_iterations";
  for (int m = 1; m <= config.max_iterations; ++m) {
    const Eigen::VectorXd grad_phi = -g;
    const Eigen::VectorXd direction = -two_loop(grad_phi);  // ascent: H g

    // Maximizing line search along the projected ray: a dyadic sweep from
    // twice the box reach down to tiny steps, then a golden refinement
    // around the best coarse step.  A pure backtracking rule cannot leave
    // the zero pulse, where the objective is even and dips before it rises.
    double reach = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (direction[j] > 0.0) {
        reach = std::max(reach, (bounds.hi - x[j]) / direction[j]);
      } else if (direction[j] < 0.0) {
        reach = std::max(reach, (bounds.lo - x[j]) / direction[j]);
      }
    }
    if (!(reach > 0.0)) {
      result.termination = "line_search_exhausted";
      break;
    }
    const auto ray = [&](double eta) {
      return counted(project_box(x + eta * direction, bounds));
    };
    double eta_best = 0.0;
    double f_best = fx;
    double eta_probe = 2.0 * reach;
    for (int k = 0; k <= 26; ++k) {
      const double value = ray(eta_probe);
      if (value > f_best) {
        f_best = value;
        eta_best = eta_probe;
      }
      eta_probe *= 0.5;
    }
    if (eta_best > 0.0) {
      const auto refined = line_search_1d(ray, 0.5 * eta_best,
                                          std::min(2.0 * eta_best, 2.0 * reach),
                                          config.line_tol_factor);
      if (refined.value > f_best) {
        f_best = refined.value;
        eta_best = refined.lambda;
      }
    }
    if (!(eta_best > 0.0)) {
      result.termination = "line_search_exhausted";
      break;
    }
    const Eigen::VectorXd x_new = project_box(x + eta_best * direction, bounds);
    const double f_new = f_best;

    const Eigen::VectorXd g_new = grad(x_new, f_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = -(g_new - g);  // minimization convention
    if (s.dot(y) > 1e-10) {
      pairs.emplace_back(s, y);
      if (pairs.size() > static_cast<std::size_t>(config.memory_depth)) {
        pairs.pop_front();
      }
    }

    const double delta_f = std::abs(f_new - fx);
    x = x_new;
    fx = f_new;
    g = g_new;
    result.history.entries.push_back({m, fx, x, evals});
    if (g.norm() <= config.grad_tol && delta_f <= config.objective_tol) {
      result.termination = "converged";
      break;
    }
  }

  result.x = x;
  result.objective = fx;
  result.evaluations = evals;
  return result;
}

BackflowObjective::BackflowObjective(const ReservoirParams& params,
                                     const PropagationConfig& config,
                                     const Bounds& bounds)
    : params_(params), config_(config), bounds_(bounds) {
  params_.validate();
  config_.validate();
  bounds_.validate();
  // Probe pulses wander across the whole box; the projection policy keeps
  // every evaluation finite in the strong-coupling regime.
  config_.positivity = PositivityPolicy::kProject;
}

Pulse BackflowObjective::to_pulse(const Eigen::VectorXd& amplitudes) const {
  if (amplitudes.size() != config_.control_bins) {
    throw std::invalid_argument(
        "BackflowObjective: amplitude vector length mismatch");
  }
  Pulse pulse;
  pulse.bounds = bounds_;
  pulse.horizon = config_.horizon;
  pulse.amplitudes.assign(amplitudes.data(),
                          amplitudes.data() + amplitudes.size());
  return pulse;
}

double BackflowObjective::operator()(const Eigen::VectorXd& amplitudes) const {
  ++evaluations_;
  return propagate_pair(DensityMatrix::excited(), DensityMatrix::ground(),
                        to_pulse(amplitudes), params_, config_)
      .n_total;
}

TrajectoryRecord BackflowObjective::trajectory(
    const Eigen::VectorXd& amplitudes) const {
  return propagate_pair(DensityMatrix::excited(), DensityMatrix::ground(),
                        to_pulse(amplitudes), params_, config_);
}

}  // namespace backflow
