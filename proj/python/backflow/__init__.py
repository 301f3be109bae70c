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

"""Quantum-control toolkit for maximizing non-Markovian information backflow.

The heavy lifting lives in the ``_core`` extension: master-equation
propagation of a driven qubit in a Lorentzian reservoir, the BLP trace-
distance measure, Powell and L-BFGS-B pulse optimization, and PPO/SAC
agents over the episodic control environment.
"""

from ._core import (
    BackflowEnv,
    BackflowObjective,
    Bounds,
    ConfigError,
    DensityMatrix,
    EnvConfig,
    NumericError,
    OCTConfig,
    OptimizeResult,
    PPOConfig,
    PositivityPolicy,
    PropagationConfig,
    Pulse,
    ReservoirParams,
    RunConfig,
    SACConfig,
    TrajectoryRecord,
    apply_increment,
    compute_gae,
    decay_rate,
    lbfgsb_optimize,
    lindblad_rhs,
    n_loc_series,
    n_total,
    negativity_windows,
    powell_optimize,
    ppo_train,
    propagate_pair,
    random_pulse,
    sac_train,
    trace_distance,
    uncontrolled_n_tot,
)

__all__ = [
    "BackflowEnv",
    "BackflowObjective",
    "Bounds",
    "ConfigError",
    "DensityMatrix",
    "EnvConfig",
    "NumericError",
    "OCTConfig",
    "OptimizeResult",
    "PPOConfig",
    "PositivityPolicy",
    "PropagationConfig",
    "Pulse",
    "ReservoirParams",
    "RunConfig",
    "SACConfig",
    "TrajectoryRecord",
    "apply_increment",
    "compute_gae",
    "decay_rate",
    "lbfgsb_optimize",
    "lindblad_rhs",
    "n_loc_series",
    "n_total",
    "negativity_windows",
    "powell_optimize",
    "ppo_train",
    "propagate_pair",
    "random_pulse",
    "sac_train",
    "trace_distance",
    "uncontrolled_n_tot",
]
