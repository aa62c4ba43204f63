"""Flat run configuration shared by the CLI and the experiment helpers.

Keys mirror the command-line flags one to one (``--eval-cost`` is
``eval_cost``).  Precedence: command line, then config file, then defaults.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields
from typing import Optional

import yaml

from .graph import TopologySchedule, build_graph, load_graph
from .objectives import ObjectiveSpec, get_objective
from .swarm import SwarmParams

WORKERS_ENV = "SWARM_OPT_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        if value < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


@dataclass
class RunConfig:
    objective: str = "sphere"
    n: int = 30
    q: int = 30
    algorithm: str = "mco"
    topology: str = "complete"
    topology_file: Optional[str] = None
    schedule: str = "static"  # static | seeded-random
    edge_prob: float = 0.5
    seed: int = 0
    iters: int = 1000
    h: float = 1.0
    coeff_mode: str = "shared"
    omega: Optional[list] = None
    eval_cost: float = 0.0
    workers: Optional[int] = None  # None: $SWARM_OPT_WORKERS or the CPU count
    stagnation_window: int = 100
    clamp_velocity: bool = False
    clamp_position: bool = False
    raw_alg1_sign: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.schedule not in ("static", "seeded-random"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.iters < 0:
            raise ValueError(f"iters must be >= 0, got {self.iters}")
        if self.workers is not None and self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.eval_cost < 0:
            raise ValueError(f"eval_cost must be >= 0, got {self.eval_cost}")
        # building the pieces runs the per-module validation
        self.params()
        self.objective_spec()
        if self.algorithm == "mco":
            self.topology_schedule()

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        unknown = set(data) - set(cls.keys())
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def load(cls, path, overrides: Optional[dict] = None) -> "RunConfig":
        """Read a YAML file and apply ``overrides`` (entries set to None are ignored)."""
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise OSError(f"cannot read config file {path}: {exc.strerror}") from exc
        if not isinstance(data, dict):
            raise ValueError(f"config file {path} must hold a mapping")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_mapping(data)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def resolved_workers(self) -> int:
        return self.workers if self.workers is not None else default_workers()

    def params(self) -> SwarmParams:
        return SwarmParams(
            q=self.q, n=self.n, algorithm=self.algorithm, h=self.h,
            omega=tuple(self.omega) if self.omega is not None else None,
            coeff_mode=self.coeff_mode, max_iters=self.iters,
            stagnation_window=self.stagnation_window,
            clamp_velocity=self.clamp_velocity, clamp_position=self.clamp_position,
            raw_alg1_sign=self.raw_alg1_sign,
        )

    def objective_spec(self) -> ObjectiveSpec:
        try:
            return get_objective(self.objective, self.n, self.eval_cost)
        except KeyError as exc:
            raise ValueError(exc.args[0]) from None

    def topology_schedule(self) -> TopologySchedule:
        if self.topology_file is not None:
            g = load_graph(self.topology_file)
            if g.q != self.q:
                raise ValueError(f"graph file has {g.q} nodes but q={self.q}")
            return TopologySchedule.static(g)
        if self.schedule == "seeded-random":
            return TopologySchedule.seeded_random(self.q, self.edge_prob, self.seed)
        return TopologySchedule.static(build_graph(self.topology, self.q, self.seed, self.edge_prob))
