# Copyright 2026 The backflow authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import numpy as np
import pytest

import backflow as bf


def test_decay_rate_values():
    strong = bf.ReservoirParams(gamma_coupling=5.0, lambda_width=1.0)
    assert bf.decay_rate(strong, 0.0) == 0.0
    t = 1.5
    expected = 10 * math.sin(1.5 * t) / (3 * math.cos(1.5 * t) + math.sin(1.5 * t))
    assert bf.decay_rate(strong, t) == pytest.approx(expected, rel=1e-12)
    threshold = bf.ReservoirParams(gamma_coupling=0.5, lambda_width=1.0)
    assert bf.decay_rate(threshold, 2.0) == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(ValueError):
        bf.decay_rate(strong, -1.0)


def test_negativity_windows():
    strong = bf.ReservoirParams(5.0, 1.0, 1.0)
    windows = bf.negativity_windows(strong, 7.0, 2000)
    assert len(windows) >= 3
    assert windows[0][0] == pytest.approx(1.2617, abs=5e-3)
    markovian = bf.ReservoirParams(0.3, 1.0, 1.0)
    assert bf.negativity_windows(markovian, 7.0, 2000) == []
    assert not strong.markovian
    assert markovian.markovian


def test_trace_distance_and_measure():
    one = bf.DensityMatrix.excited()
    zero = bf.DensityMatrix.ground()
    assert bf.trace_distance(one, zero) == 1.0
    assert bf.trace_distance(one, one) == 0.0
    assert bf.n_total([1.0, 0.8, 0.9, 0.85], 0.1) == pytest.approx(0.1, rel=1e-12)
    assert bf.n_loc_series([0.5, 0.52], 0.1) == pytest.approx([0.2])


def test_propagation_matches_physics():
    params = bf.ReservoirParams(0.3, 1.0, 1.0)
    config = bf.PropagationConfig(horizon=7.0, control_bins=70, substeps=20)
    pulse = bf.Pulse([0.0] * 70, bf.Bounds(-5, 5), 7.0)
    record = bf.propagate_pair(
        bf.DensityMatrix.excited(), bf.DensityMatrix.ground(), pulse, params, config
    )
    d = np.asarray(record.distances)
    assert d[0] == 1.0
    assert np.all(np.diff(d) <= 1e-12)  # Markovian contraction
    assert record.n_total == 0.0


def test_env_rollout_identity():
    env = bf.BackflowEnv()
    obs = env.reset(seed=7)
    assert obs.shape == (5,)
    assert obs[1] == 1.0
    total = 0.0
    dt = 0.1
    while not env.done:
        obs, reward, done = env.step(0.0)
        total += reward * dt
    assert total == env.episode_merit


def test_objective_and_powell_smoke():
    params = bf.ReservoirParams()
    config = bf.PropagationConfig(horizon=7.0, control_bins=10, substeps=4)
    objective = bf.BackflowObjective(params, config, bf.Bounds(-5, 5))
    base = objective(np.zeros(10))
    assert base > 0
    before = objective.evaluations
    oct_cfg = bf.OCTConfig()
    oct_cfg.max_outer_iterations = 1
    result = bf.powell_optimize(objective, np.zeros(10), bf.Bounds(-5, 5), oct_cfg)
    assert result.objective >= base
    assert objective.evaluations - before == result.evaluations


def test_run_config_hashes():
    cfg = bf.RunConfig.parse("model.gamma_coupling = 5.0\nmethod = powell\n")
    other = bf.RunConfig.parse("model.gamma_coupling = 5.0\nmethod = sac\n")
    assert cfg.model_hash == other.model_hash
    assert cfg.config_hash != other.config_hash
    assert bf.uncontrolled_n_tot(cfg) > 0


def test_tiny_ppo_train_runs():
    env = bf.EnvConfig(
        reservoir=bf.ReservoirParams(),
        propagation=bf.PropagationConfig(horizon=7.0, control_bins=10, substeps=2),
    )
    ppo = bf.PPOConfig()
    ppo.hidden = [8, 8]
    ppo.rollout_episodes = 2
    ppo.epochs = 2
    ppo.total_env_steps = 40
    rows, pulse, merit = bf.ppo_train(env, ppo, seed=42)
    rows2, pulse2, merit2 = bf.ppo_train(env, ppo, seed=42)
    assert merit == merit2
    assert [r.eval_n_tot for r in rows] == [r.eval_n_tot for r in rows2]
    assert len(pulse) == 10
