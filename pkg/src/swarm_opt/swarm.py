"""MCO iteration, the standard PSO baseline, and the run driver.

Every random draw comes from a counter-based stream keyed by
``(seed, purpose, iteration)``; agent ``i`` always reads row ``i`` of a stream,
so the result of a run does not depend on how many workers evaluate it.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .graph import Digraph, TopologySchedule, _philox, laplacian, topology_at
from .objectives import ObjectiveSpec, evaluate_unchecked

# stream purposes
_INIT, _COEFF, _PSO = 10, 11, 12

Coeff = Union[float, np.ndarray]


@dataclass
class SwarmParams:
    q: int = 30
    n: int = 30
    algorithm: str = "mco"
    omega: Optional[tuple] = None  # finite coefficient set; None means U(0, 1)
    h: float = 1.0
    coeff_mode: str = "shared"
    max_iters: int = 1000
    stagnation_window: int = 100
    stagnation_tol: float = 1e-12
    clamp_velocity: bool = False
    clamp_position: bool = False
    raw_alg1_sign: bool = False
    velocity_bounds: Optional[tuple] = None
    inertia: float = 0.7298
    c1: float = 1.49618
    c2: float = 1.49618

    def __post_init__(self):
        if self.q < 2:
            raise ValueError(f"q must be >= 2, got {self.q}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.stagnation_window < 1:
            raise ValueError("stagnation window must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.algorithm not in ("mco", "pso"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.coeff_mode not in ("shared", "per-agent"):
            raise ValueError(f"unknown coefficient mode {self.coeff_mode!r}")
        if self.omega is not None:
            self.omega = tuple(float(w) for w in self.omega)
            if not self.omega or any(not (math.isfinite(w) and w >= 0) for w in self.omega):
                raise ValueError("omega must be a non-empty set of finite non-negative values")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["omega"] = list(self.omega) if self.omega is not None else None
        d["velocity_bounds"] = list(self.velocity_bounds) if self.velocity_bounds is not None else None
        return d


@dataclass(frozen=True)
class CoeffSample:
    """One iteration's coefficients; scalars when shared, length-q arrays per agent."""

    eta: Coeff
    mu: Coeff
    kappa: Coeff
    h: float = 1.0

    def __post_init__(self):
        for name in ("eta", "mu", "kappa"):
            val = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(val)) or np.any(val < 0):
                raise ValueError(f"{name} must be finite and non-negative")
        if not (math.isfinite(self.h) and self.h > 0):
            raise ValueError(f"h must be positive, got {self.h}")

    def kappa_of(self, i: int) -> float:
        return float(self.kappa) if np.ndim(self.kappa) == 0 else float(self.kappa[i])


@dataclass
class SwarmState:
    t: int
    x: np.ndarray
    v: np.ndarray
    fx: np.ndarray
    pbest: np.ndarray
    pbest_f: np.ndarray
    p: np.ndarray
    p_f: float
    best_x: np.ndarray
    best_f: float
    seed: int

    @property
    def q(self) -> int:
        return self.x.shape[0]

    def copy(self) -> "SwarmState":
        return SwarmState(self.t, self.x.copy(), self.v.copy(), self.fx.copy(), self.pbest.copy(),
                          self.pbest_f.copy(), self.p.copy(), self.p_f, self.best_x.copy(),
                          self.best_f, self.seed)

    def stacked(self) -> np.ndarray:
        """State as one vector ``[x_1..x_q, v_1..v_q, p]``."""
        return np.concatenate([self.x.ravel(), self.v.ravel(), self.p])


# --- evaluation -----------------------------------------------------------

_WORKER_OBJ: Optional[ObjectiveSpec] = None


def _init_worker(obj):
    global _WORKER_OBJ
    _WORKER_OBJ = obj


def _eval_chunk(rows):
    return np.array([evaluate_unchecked(_WORKER_OBJ, r) for r in rows], dtype=float)


class Evaluator:
    """Evaluates the objective on every agent position, optionally in worker processes.

    Rows are split into contiguous chunks and gathered in order, and each row
    is evaluated by the same scalar code path, so values are bit-identical for
    any worker count.
    """

    def __init__(self, obj: ObjectiveSpec, workers: int = 1):
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        self.obj = obj
        self.workers = workers
        self._pool = None
        if workers > 1:
            self._pool = ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                             initargs=(obj,))

    def __call__(self, rows: np.ndarray) -> np.ndarray:
        if self._pool is None or len(rows) < 2:
            return np.array([evaluate_unchecked(self.obj, r) for r in rows], dtype=float)
        chunks = np.array_split(rows, min(self.workers, len(rows)))
        return np.concatenate(list(self._pool.map(_eval_chunk, chunks)))

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _velocity_bounds(params: SwarmParams, obj: ObjectiveSpec):
    if params.velocity_bounds is None:
        return obj.lower, obj.upper
    lo, hi = params.velocity_bounds
    return (np.broadcast_to(np.asarray(lo, float), (obj.n,)),
            np.broadcast_to(np.asarray(hi, float), (obj.n,)))


def init_swarm(params: SwarmParams, obj: ObjectiveSpec, seed: int,
               evaluator: Optional[Evaluator] = None) -> SwarmState:
    if obj.n != params.n:
        raise ValueError(f"objective dimension {obj.n} does not match n={params.n}")
    rng = _philox(seed, _INIT, 0)
    q, n = params.q, params.n
    x = obj.lower + (obj.upper - obj.lower) * rng.random((q, n))
    vlo, vhi = _velocity_bounds(params, obj)
    v = vlo + (vhi - vlo) * rng.random((q, n))
    evaluator = evaluator or Evaluator(obj)
    fx = evaluator(x)
    lead = int(np.argmin(fx))
    return SwarmState(0, x, v, fx, x.copy(), fx.copy(), x[lead].copy(), float(fx[lead]),
                      x[lead].copy(), float(fx[lead]), seed)


def sample_coeffs(state: SwarmState, params: SwarmParams) -> CoeffSample:
    rng = _philox(state.seed, _COEFF, state.t)
    shape = (3,) if params.coeff_mode == "shared" else (params.q, 3)
    if params.omega is None:
        draws = rng.random(shape)
    else:
        draws = np.asarray(params.omega)[rng.integers(len(params.omega), size=shape)]
    if params.coeff_mode == "shared":
        eta, mu, kappa = (float(d) for d in draws)
    else:
        eta, mu, kappa = draws[:, 0].copy(), draws[:, 1].copy(), draws[:, 2].copy()
    return CoeffSample(eta, mu, kappa, params.h)


def _as_column(c: Coeff):
    return c if np.ndim(c) == 0 else np.asarray(c, float)[:, None]


def mco_step(state: SwarmState, coeffs: CoeffSample, g: Digraph, obj: ObjectiveSpec,
             params: Optional[SwarmParams] = None,
             evaluator: Optional[Evaluator] = None) -> SwarmState:
    """Advance velocities and positions of all agents from one frozen snapshot.

    ``v_i += h (eta sum_j (v_j - v_i) + mu sum_j (x_j - x_i) + kappa (p - x_i))``
    then ``x_i += h v_i``, the sums running over the neighbours of ``i``.
    With ``params.raw_alg1_sign`` the two neighbour sums change sign.
    Personal and network bests are left to :func:`update_bests`.
    """
    if g.q != state.q:
        raise ValueError(f"graph has {g.q} nodes but the swarm has {state.q} agents")
    C, D = state.x, state.v
    L = laplacian(g)
    sign = 1.0 if (params is not None and params.raw_alg1_sign) else -1.0
    eta, mu, kappa = _as_column(coeffs.eta), _as_column(coeffs.mu), _as_column(coeffs.kappa)
    h = coeffs.h
    with np.errstate(over="ignore", invalid="ignore"):
        v = D + h * (eta * (sign * (L @ D)) + mu * (sign * (L @ C)) + kappa * (state.p - C))
        if params is not None and params.clamp_velocity:
            vlo, vhi = _velocity_bounds(params, obj)
            v = np.clip(v, vlo, vhi)
        x = C + h * v
        if params is not None and params.clamp_position:
            x = np.clip(x, obj.lower, obj.upper)
    evaluator = evaluator or Evaluator(obj)
    new = state.copy()
    new.x, new.v, new.fx = x, v, evaluator(x)
    return new


def update_bests(state: SwarmState, coeffs: CoeffSample, obj: ObjectiveSpec) -> SwarmState:
    """Personal-best and network-best bookkeeping, in ascending agent order.

    For each agent that improved: ``p_i <- x_i``, ``p <- p + kappa (p_i - p)``,
    and ``p <- p_i`` if that is still better.  Closes the iteration (``t += 1``).
    """
    new = state.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(new.q):
            if not new.fx[i] < new.pbest_f[i]:
                continue
            new.pbest[i] = new.x[i]
            new.pbest_f[i] = new.fx[i]
            k = coeffs.kappa_of(i)
            if k != 0.0:
                new.p = new.p + k * (new.pbest[i] - new.p)
                new.p_f = evaluate_unchecked(obj, new.p)
            if new.pbest_f[i] < new.p_f:
                new.p = new.pbest[i].copy()
                new.p_f = float(new.pbest_f[i])
            if new.p_f < new.best_f:
                new.best_x, new.best_f = new.p.copy(), new.p_f
    new.t += 1
    return new


def pso_step(state: SwarmState, obj: ObjectiveSpec, params: SwarmParams,
             evaluator: Optional[Evaluator] = None, rand=None) -> SwarmState:
    """Standard constricted PSO step with global-best topology.

    ``rand`` overrides the ``(r1, r2)`` draws, each of shape ``(q, n)``.
    """
    if rand is None:
        r1, r2 = _philox(state.seed, _PSO, state.t).random((2, state.q, params.n))
    else:
        r1, r2 = rand
    new = state.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        v = (params.inertia * state.v + params.c1 * r1 * (state.pbest - state.x)
             + params.c2 * r2 * (state.p - state.x))
        if params.clamp_velocity:
            vlo, vhi = _velocity_bounds(params, obj)
            v = np.clip(v, vlo, vhi)
        x = state.x + v
        if params.clamp_position:
            x = np.clip(x, obj.lower, obj.upper)
    evaluator = evaluator or Evaluator(obj)
    new.x, new.v, new.fx = x, v, evaluator(x)
    for i in range(new.q):
        if new.fx[i] < new.pbest_f[i]:
            new.pbest[i] = new.x[i]
            new.pbest_f[i] = new.fx[i]
            if new.fx[i] < new.p_f:
                new.p = new.x[i].copy()
                new.p_f = float(new.fx[i])
    if new.p_f < new.best_f:
        new.best_x, new.best_f = new.p.copy(), new.p_f
    new.t += 1
    return new


@dataclass
class RunRecord:
    trace: list
    best_position: np.ndarray
    best_value: float
    seed: int
    duration: float
    iterations: int
    config: dict = field(default_factory=dict)

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "seed": self.seed,
            "iterations": self.iterations,
            "best_value": self.best_value,
            "best_position": [float(v) for v in self.best_position],
            "trace": [float(v) for v in self.trace],
            "config": self.config,
        }
        if include_timing:
            d["duration"] = self.duration
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(list(d["trace"]), np.asarray(d["best_position"], float), d["best_value"],
                   d["seed"], d.get("duration", float("nan")), d["iterations"], d.get("config", {}))

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "best_value"])
        for k, val in enumerate(self.trace):
            w.writerow([k, repr(float(val))])
        return buf.getvalue()


def _stagnated(trace: Sequence[float], window: int, tol: float) -> bool:
    if len(trace) <= window:
        return False
    now, then = trace[-1], trace[-1 - window]
    return abs(now - then) <= tol * max(1.0, abs(now))


def run(params: SwarmParams, obj: ObjectiveSpec, schedule: Optional[TopologySchedule],
        seed: int, workers: int = 1, evaluator: Optional[Evaluator] = None) -> RunRecord:
    """Run MCO or PSO until ``max_iters`` or the best value stagnates.

    Pass an existing ``evaluator`` to reuse its worker pool across runs.
    """
    if params.algorithm == "mco":
        if schedule is None:
            raise ValueError("MCO needs a topology schedule")
        if schedule.q != params.q:
            raise ValueError(f"schedule has {schedule.q} nodes but q={params.q}")
    start = time.perf_counter()
    own = evaluator is None
    ev = Evaluator(obj, workers) if own else evaluator
    try:
        state = init_swarm(params, obj, seed, ev)
        trace = [state.best_f]
        for t in range(params.max_iters):
            if params.algorithm == "mco":
                coeffs = sample_coeffs(state, params)
                state = mco_step(state, coeffs, topology_at(schedule, t), obj, params, ev)
                state = update_bests(state, coeffs, obj)
            else:
                state = pso_step(state, obj, params, ev)
            trace.append(min(state.best_f, trace[-1]))
            if _stagnated(trace, params.stagnation_window, params.stagnation_tol):
                break
    finally:
        if own:
            ev.close()
    config = dict(params.to_dict(), objective=obj.name, eval_cost=obj.eval_cost)
    return RunRecord(trace, state.best_x.copy(), state.best_f, seed,
                     time.perf_counter() - start, len(trace) - 1, config)
