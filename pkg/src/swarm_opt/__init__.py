"""Multiagent coordination optimization (MCO) with a PSO baseline.

Modules: :mod:`graph` (topologies), :mod:`objectives` (benchmarks),
:mod:`swarm` (optimizers), :mod:`analysis` (switched linear model),
:mod:`experiments` (statistics and timing) and :mod:`cli`.
"""

from .config import RunConfig
from .graph import Digraph, TopologySchedule, build_graph, laplacian
from .objectives import ObjectiveSpec, get_objective, objective_names
from .swarm import CoeffSample, RunRecord, SwarmParams, SwarmState, run

__version__ = "0.1.0"

__all__ = [
    "CoeffSample",
    "Digraph",
    "ObjectiveSpec",
    "RunConfig",
    "RunRecord",
    "SwarmParams",
    "SwarmState",
    "TopologySchedule",
    "build_graph",
    "get_objective",
    "laplacian",
    "objective_names",
    "run",
]
