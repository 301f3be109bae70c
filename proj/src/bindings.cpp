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

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "backflow/errors.hpp"
#include "backflow/experiment.hpp"

namespace py = pybind11;
using namespace backflow;

namespace {

DensityMatrix state_from_matrix(const Matrix2c& m) { return DensityMatrix(m); }

EnvFactory factory_for(const EnvConfig& config) {
  return [config] { return std::make_unique<BackflowEnv>(config); };
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quantum-control toolkit: non-Markovian backflow maximization "
            "with classical optimizers and reinforcement learning";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<NumericError>(m, "NumericError");

  // ---- states and reservoir -------------------------------------------
  py::class_<DensityMatrix>(m, "DensityMatrix")
      .def(py::init(&state_from_matrix), py::arg("matrix"))
      .def_static("ground", &DensityMatrix::ground)
      .def_static("excited", &DensityMatrix::excited)
      .def_static("from_bloch", &DensityMatrix::from_bloch, py::arg("x"),
                  py::arg("y"), py::arg("z"))
      .def_property_readonly("matrix",
                             [](const DensityMatrix& s) { return s.matrix(); })
      .def("is_valid", &DensityMatrix::is_valid,
           py::arg("hermiticity_tol") = 1e-12, py::arg("trace_tol") = 1e-9,
           py::arg("positivity_tol") = 1e-9);

  py::class_<ReservoirParams>(m, "ReservoirParams")
      .def(py::init([](double gamma, double lambda, double delta) {
             ReservoirParams p;
             p.gamma_coupling = gamma;
             p.lambda_width = lambda;
             p.detuning = delta;
             p.validate();
             return p;
           }),
           py::arg("gamma_coupling") = 5.0, py::arg("lambda_width") = 1.0,
           py::arg("detuning") = 1.0)
      .def_readonly("gamma_coupling", &ReservoirParams::gamma_coupling)
      .def_readonly("lambda_width", &ReservoirParams::lambda_width)
      .def_readonly("detuning", &ReservoirParams::detuning)
      .def_property_readonly("d", &ReservoirParams::d)
      .def_property_readonly("markovian", &ReservoirParams::markovian);

  py::enum_<PositivityPolicy>(m, "PositivityPolicy")
      .value("SIGNAL", PositivityPolicy::kSignal)
      .value("PROJECT", PositivityPolicy::kProject);

  py::class_<PropagationConfig>(m, "PropagationConfig")
      .def(py::init([](double horizon, int control_bins, int substeps,
                       PositivityPolicy positivity, double rate_cap) {
             PropagationConfig c;
             c.horizon = horizon;
             c.control_bins = control_bins;
             c.substeps = substeps;
             c.positivity = positivity;
             c.rate_cap = rate_cap;
             c.validate();
             return c;
           }),
           py::arg("horizon") = 7.0, py::arg("control_bins") = 70,
           py::arg("substeps") = 20,
           py::arg("positivity") = PositivityPolicy::kSignal,
           py::arg("rate_cap") = 5.0)
      .def_readonly("rate_cap", &PropagationConfig::rate_cap)
      .def_readonly("horizon", &PropagationConfig::horizon)
      .def_readonly("control_bins", &PropagationConfig::control_bins)
      .def_readonly("substeps", &PropagationConfig::substeps)
      .def_property_readonly("dt", &PropagationConfig::dt);

  m.def("decay_rate", &decay_rate, py::arg("params"), py::arg("t"),
        "Time-dependent Lorentzian decay rate gamma(t)");
  m.def("negativity_windows", &negativity_windows, py::arg("params"),
        py::arg("horizon"), py::arg("grid") = 2000,
        "Maximal intervals with gamma(t) < 0");
  m.def("lindblad_rhs", &lindblad_rhs, py::arg("rho"), py::arg("t"),
        py::arg("omega"), py::arg("params"));

  // ---- pulses ----------------------------------------------------------
  py::class_<Bounds>(m, "Bounds")
      .def(py::init([](double lo, double hi) {
             Bounds b{lo, hi};
             b.validate();
             return b;
           }),
           py::arg("lo") = -5.0, py::arg("hi") = 5.0)
      .def_readonly("lo", &Bounds::lo)
      .def_readonly("hi", &Bounds::hi);

  py::class_<Pulse>(m, "Pulse")
      .def(py::init([](std::vector<double> amplitudes, const Bounds& bounds,
                       double horizon) {
             Pulse p;
             p.amplitudes = std::move(amplitudes);
             p.bounds = bounds;
             p.horizon = horizon;
             p.validate();
             return p;
           }),
           py::arg("amplitudes"), py::arg("bounds") = Bounds{},
           py::arg("horizon") = 7.0)
      .def_readonly("amplitudes", &Pulse::amplitudes)
      .def_readonly("horizon", &Pulse::horizon)
      .def("sample", &Pulse::sample, py::arg("t"))
      .def_property_readonly("dt", &Pulse::dt);

  m.def("apply_increment", &apply_increment, py::arg("value"),
        py::arg("increment"), py::arg("bounds"));
  m.def("random_pulse", &random_pulse, py::arg("seed"), py::arg("bounds"),
        py::arg("n_bins"), py::arg("horizon"));

  // ---- propagation and the BLP measure --------------------------------
  py::class_<TrajectoryRecord>(m, "TrajectoryRecord")
      .def_readonly("times", &TrajectoryRecord::times)
      .def_readonly("distances", &TrajectoryRecord::distances)
      .def_readonly("ddot", &TrajectoryRecord::ddot)
      .def_readonly("gamma", &TrajectoryRecord::gamma)
      .def_readonly("omega", &TrajectoryRecord::omega)
      .def_readonly("n_loc", &TrajectoryRecord::n_loc)
      .def_readonly("n_total", &TrajectoryRecord::n_total)
      .def_readonly("trace_corrections", &TrajectoryRecord::trace_corrections)
      .def_readonly("positivity_projections",
                    &TrajectoryRecord::positivity_projections);

  m.def("propagate_pair", &propagate_pair, py::arg("rho1"), py::arg("rho2"),
        py::arg("pulse"), py::arg("params"), py::arg("config"));
  m.def("trace_distance", &trace_distance, py::arg("rho1"), py::arg("rho2"));
  m.def(
      "n_total",
      [](const std::vector<double>& d, double dt) { return n_total(d, dt); },
      py::arg("distances"), py::arg("dt"));
  m.def(
      "n_loc_series",
      [](const std::vector<double>& d, double dt) {
        return n_loc_series(d, dt);
      },
      py::arg("distances"), py::arg("dt"));

  // ---- classical optimization ------------------------------------------
  py::class_<OCTConfig>(m, "OCTConfig")
      .def(py::init<>())
      .def_readwrite("max_outer_iterations", &OCTConfig::max_outer_iterations)
      .def_readwrite("max_iterations", &OCTConfig::max_iterations)
      .def_readwrite("line_tol_factor", &OCTConfig::line_tol_factor)
      .def_readwrite("fd_step", &OCTConfig::fd_step)
      .def_readwrite("grad_tol", &OCTConfig::grad_tol)
      .def_readwrite("objective_tol", &OCTConfig::objective_tol)
      .def_readwrite("memory_depth", &OCTConfig::memory_depth);

  py::class_<ObjectiveHistory::Entry>(m, "HistoryEntry")
      .def_readonly("iteration", &ObjectiveHistory::Entry::iteration)
      .def_readonly("objective", &ObjectiveHistory::Entry::objective)
      .def_readonly("x", &ObjectiveHistory::Entry::x)
      .def_readonly("evaluations", &ObjectiveHistory::Entry::evaluations);

  py::class_<OptimizeResult>(m, "OptimizeResult")
      .def_readonly("x", &OptimizeResult::x)
      .def_readonly("objective", &OptimizeResult::objective)
      .def_readonly("evaluations", &OptimizeResult::evaluations)
      .def_readonly("termination", &OptimizeResult::termination)
      .def_property_readonly("history", [](const OptimizeResult& r) {
        return r.history.entries;
      });

  py::class_<BackflowObjective>(m, "BackflowObjective")
      .def(py::init<const ReservoirParams&, const PropagationConfig&,
                    const Bounds&>(),
           py::arg("params"), py::arg("config"), py::arg("bounds") = Bounds{})
      .def("__call__",
           [](const BackflowObjective& objective, const Eigen::VectorXd& x) {
             return objective(x);
           })
      .def("trajectory", &BackflowObjective::trajectory, py::arg("amplitudes"))
      .def_property_readonly("evaluations", &BackflowObjective::evaluations);

  m.def(
      "powell_optimize",
      [](const std::function<double(const Eigen::VectorXd&)>& f,
         const Eigen::VectorXd& x0, const Bounds& bounds,
         const OCTConfig& config) {
        return powell_optimize(f, x0, bounds, config);
      },
      py::arg("objective"), py::arg("x0"), py::arg("bounds"),
      py::arg("config") = OCTConfig{});
  m.def(
      "lbfgsb_optimize",
      [](const std::function<double(const Eigen::VectorXd&)>& f,
         const Eigen::VectorXd& x0, const Bounds& bounds,
         const OCTConfig& config) {
        return lbfgsb_optimize(f, x0, bounds, config);
      },
      py::arg("objective"), py::arg("x0"), py::arg("bounds"),
      py::arg("config") = OCTConfig{});

  // ---- environment ------------------------------------------------------
  py::class_<EnvConfig>(m, "EnvConfig")
      .def(py::init([](const ReservoirParams& reservoir,
                       const PropagationConfig& propagation,
                       const Bounds& bounds, double increment_penalty,
                       double amplitude_penalty,
                       std::optional<double> fixed_omega0) {
             EnvConfig c;
             c.reservoir = reservoir;
             c.propagation = propagation;
             c.bounds = bounds;
             c.increment_penalty = increment_penalty;
             c.amplitude_penalty = amplitude_penalty;
             c.fixed_omega0 = fixed_omega0;
             c.validate();
             return c;
           }),
           py::arg("reservoir") = ReservoirParams{},
           py::arg("propagation") = PropagationConfig{},
           py::arg("bounds") = Bounds{}, py::arg("increment_penalty") = 0.0,
           py::arg("amplitude_penalty") = 0.0,
           py::arg("fixed_omega0") = std::nullopt);

  py::class_<BackflowEnv>(m, "BackflowEnv")
      .def(py::init<const EnvConfig&>(), py::arg("config") = EnvConfig{})
      .def("reset", &BackflowEnv::reset, py::arg("seed"))
      .def("reset_eval", &BackflowEnv::reset_eval)
      .def("step",
           [](BackflowEnv& env, double action) {
             const auto step = env.step(action);
             return py::make_tuple(step.obs, step.reward, step.done);
           },
           py::arg("action"))
      .def_property_readonly("episode_length", &BackflowEnv::episode_length)
      .def_property_readonly("observation_dim", &BackflowEnv::observation_dim)
      .def_property_readonly("done", &BackflowEnv::done)
      .def_property_readonly("episode_merit", &BackflowEnv::episode_merit)
      .def_property_readonly("distance_history",
                             &BackflowEnv::distance_history)
      .def_property_readonly("reward_history", &BackflowEnv::reward_history)
      .def_property_readonly("amplitude_history",
                             &BackflowEnv::amplitude_history);

  // ---- agents -----------------------------------------------------------
  py::class_<ConvergenceHistory::Row>(m, "ConvergenceRow")
      .def_readonly("env_steps", &ConvergenceHistory::Row::env_steps)
      .def_readonly("episodes", &ConvergenceHistory::Row::episodes)
      .def_readonly("updates", &ConvergenceHistory::Row::updates)
      .def_readonly("eval_n_tot", &ConvergenceHistory::Row::eval_n_tot);

  py::class_<PPOConfig>(m, "PPOConfig")
      .def(py::init<>())
      .def_readwrite("clip_eps", &PPOConfig::clip_eps)
      .def_readwrite("discount", &PPOConfig::discount)
      .def_readwrite("gae_lambda", &PPOConfig::gae_lambda)
      .def_readwrite("epochs", &PPOConfig::epochs)
      .def_readwrite("minibatch_size", &PPOConfig::minibatch_size)
      .def_readwrite("learning_rate", &PPOConfig::learning_rate)
      .def_readwrite("rollout_episodes", &PPOConfig::rollout_episodes)
      .def_readwrite("total_env_steps", &PPOConfig::total_env_steps)
      .def_readwrite("entropy_coef", &PPOConfig::entropy_coef)
      .def_readwrite("hidden", &PPOConfig::hidden);

  py::class_<SACConfig>(m, "SACConfig")
      .def(py::init<>())
      .def_readwrite("entropy_temp", &SACConfig::entropy_temp)
      .def_readwrite("target_update_rate", &SACConfig::target_update_rate)
      .def_readwrite("discount", &SACConfig::discount)
      .def_readwrite("replay_capacity", &SACConfig::replay_capacity)
      .def_readwrite("batch_size", &SACConfig::batch_size)
      .def_readwrite("learning_rate", &SACConfig::learning_rate)
      .def_readwrite("warmup_steps", &SACConfig::warmup_steps)
      .def_readwrite("total_env_steps", &SACConfig::total_env_steps)
      .def_readwrite("hidden", &SACConfig::hidden)
      .def_readwrite("eval_every_steps", &SACConfig::eval_every_steps);

  m.def("compute_gae",
        [](const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
           double bootstrap, double discount, double lambda) {
          const auto result =
              compute_gae(rewards, values, bootstrap, discount, lambda);
          return py::make_tuple(result.advantages, result.returns);
        },
        py::arg("rewards"), py::arg("values"), py::arg("bootstrap"),
        py::arg("discount"), py::arg("gae_lambda"));

  // Training over the backflow environment; returns (history rows,
  // deterministic-evaluation pulse amplitudes, final evaluation merit).
  m.def(
      "ppo_train",
      [](const EnvConfig& env, const PPOConfig& config, std::uint64_t seed) {
        const auto result = ppo_train(factory_for(env), config, seed);
        BackflowEnv eval_env(env);
        Eigen::VectorXd obs = eval_env.reset_eval();
        while (!eval_env.done()) {
          obs = eval_env.step(mean_action(result.policy, obs)).obs;
        }
        return py::make_tuple(result.history.rows,
                              eval_env.amplitude_history(),
                              eval_env.episode_merit());
      },
      py::arg("env"), py::arg("config") = PPOConfig{}, py::arg("seed") = 42);
  m.def(
      "sac_train",
      [](const EnvConfig& env, const SACConfig& config, std::uint64_t seed) {
        const auto result = sac_train(factory_for(env), config, seed);
        BackflowEnv eval_env(env);
        Eigen::VectorXd obs = eval_env.reset_eval();
        while (!eval_env.done()) {
          obs = eval_env.step(mean_action(result.policy, obs)).obs;
        }
        return py::make_tuple(result.history.rows,
                              eval_env.amplitude_history(),
                              eval_env.episode_merit());
      },
      py::arg("env"), py::arg("config") = SACConfig{}, py::arg("seed") = 42);

  // ---- run configs ------------------------------------------------------
  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_static("parse", &parse_config_text, py::arg("text"))
      .def_static("parse_file", &parse_config_file, py::arg("path"))
      .def_readwrite("method", &RunConfig::method)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("out_dir", &RunConfig::out_dir)
      .def_property_readonly("config_hash",
                             [](const RunConfig& c) { return config_hash(c); })
      .def_property_readonly("model_hash",
                             [](const RunConfig& c) { return model_hash(c); });

  m.def("uncontrolled_n_tot", &uncontrolled_n_tot, py::arg("config"));
}
