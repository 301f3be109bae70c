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

#include "backflow/env.hpp"

#include <cmath>
#include <stdexcept>

#include "backflow/blp.hpp"
#include "backflow/format.hpp"

namespace backflow {

Eigen::VectorXd Observation::vector() const {
  Eigen::VectorXd v(kDim);
  v << normalized_time, distance, prev_slope, decay_rate, amplitude;
  return v;
}

void EnvConfig::validate() const {
  reservoir.validate();
  propagation.validate();
  bounds.validate();
  if (increment_penalty < 0.0 || amplitude_penalty < 0.0) {
    throw std::invalid_argument("EnvConfig: penalties must be non-negative");
  }
  if (fixed_omega0 &&
      (*fixed_omega0 < bounds.lo || *fixed_omega0 > bounds.hi)) {
    throw std::invalid_argument("EnvConfig: fixed_omega0 outside bounds");
  }
}

BackflowEnv::BackflowEnv(const EnvConfig& config) : config_(config) {
  config_.validate();
  // Arbitrary in-bounds pulses must yield finite trajectories; project
  // instead of signalling when the singular rate drives a state outside the
  // cone.
  config_.propagation.positivity = PositivityPolicy::kProject;
}

Eigen::VectorXd BackflowEnv::reset_with_omega0(double omega0) {
  stepper_ = std::make_unique<PairStepper>(DensityMatrix::excited(),
                                           DensityMatrix::ground(),
                                           config_.reservoir,
                                           config_.propagation);
  k_ = 0;
  omega_ = omega0;
  distances_.assign(1, stepper_->distance());
  rewards_.clear();
  amplitudes_.clear();
  obs_ = Observation{};
  obs_.distance = distances_[0];
  obs_.decay_rate = decay_rate(config_.reservoir, 0.0);
  obs_.amplitude = omega_;
  return obs_.vector();
}

Eigen::VectorXd BackflowEnv::reset(std::uint64_t seed) {
  if (config_.fixed_omega0) {
    return reset_with_omega0(*config_.fixed_omega0);
  }
  Rng rng(seed);
  return reset_with_omega0(rng.uniform(config_.bounds.lo, config_.bounds.hi));
}

Eigen::VectorXd BackflowEnv::reset_eval() {
  return reset_with_omega0(config_.fixed_omega0.value_or(0.0));
}

bool BackflowEnv::done() const {
  return k_ >= config_.propagation.control_bins;
}

RlEnv::Step BackflowEnv::step(double action) {
  if (!stepper_) {
    throw std::logic_error("BackflowEnv::step before reset");
  }
  if (done()) {
    throw std::logic_error("BackflowEnv::step on a finished episode");
  }
  const double dt = config_.propagation.dt();
  const double omega_prev = omega_;
  omega_ = apply_increment(omega_prev, action, config_.bounds);
  const double clipped_increment = omega_ - omega_prev;

  stepper_->advance_bin(omega_);
  ++k_;
  const double d_prev = distances_.back();
  const double d_now = stepper_->distance();
  distances_.push_back(d_now);
  amplitudes_.push_back(omega_);

  const double slope = (d_now - d_prev) / dt;
  const double reward = std::max(0.0, slope) -
                        config_.increment_penalty * clipped_increment *
                            clipped_increment -
                        config_.amplitude_penalty * omega_ * omega_;
  rewards_.push_back(reward);

  const double t_now =
      (k_ == config_.propagation.control_bins) ? config_.propagation.horizon
                                               : k_ * dt;
  obs_.normalized_time = t_now / config_.propagation.horizon;
  obs_.distance = d_now;
  obs_.prev_slope = slope;
  obs_.decay_rate = decay_rate(config_.reservoir, t_now);
  obs_.amplitude = omega_;

  Step result;
  result.obs = obs_.vector();
  result.reward = reward;
  result.done = done();
  return result;
}

double BackflowEnv::episode_merit() const {
  if (distances_.size() < 2) return 0.0;
  return n_total(distances_, config_.propagation.dt());
}

Pulse BackflowEnv::episode_pulse() const {
  Pulse pulse;
  pulse.bounds = config_.bounds;
  pulse.horizon = config_.propagation.horizon;
  pulse.amplitudes = amplitudes_;
  return pulse;
}

EpisodeResult rollout(
    RlEnv& env, const std::function<double(const Eigen::VectorXd&)>& policy,
    std::uint64_t seed) {
  EpisodeResult result;
  Eigen::VectorXd obs = env.reset(seed);
  const int n = env.episode_length();
  result.transitions.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double action = policy(obs);
    auto step = env.step(action);
    Transition tr;
    tr.s = obs;
    tr.a = action;
    tr.r = step.reward;
    tr.s_next = step.obs;
    tr.done = step.done;
    obs = step.obs;
    result.transitions.push_back(std::move(tr));
  }
  result.n_tot = env.episode_merit();
  return result;
}

void write_episode_csv(const BackflowEnv& env, std::ostream& out) {
  const auto& d = env.distance_history();
  const auto& r = env.reward_history();
  const auto& a = env.amplitude_history();
  const double dt = env.config().propagation.dt();
  out << "k,t,Omega,D,Ddot,gamma,reward\n";
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double t = static_cast<double>(k) * dt;
    const double slope = (d[k + 1] - d[k]) / dt;
    out << k << ',' << format_g17(t) << ',' << format_g17(a[k]) << ','
        << format_g17(d[k]) << ',' << format_g17(slope) << ','
        << format_g17(decay_rate(env.config().reservoir, t)) << ','
        << format_g17(r[k]) << '\n';
  }
}

}  // namespace backflow
