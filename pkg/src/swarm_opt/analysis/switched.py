"""Simulation of the switched linear iteration ``Z[k+1] = P_k Z[k]``.

A schedule entry is ``(coeffs, L, j, branch)`` where ``branch`` is ``"smooth"``
(update matrix ``I + h (A + h Ac)``) or ``"overwrite"`` (``I + B + h^2 Ac``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from ..graph import _philox
from ..swarm import CoeffSample
from .matrices import assemble

BRANCHES = ("smooth", "overwrite")
DIVERGENCE_NORM = 1e12


def _key(c: CoeffSample, L: np.ndarray, j: int, branch: str):
    return (float(c.eta), float(c.mu), float(c.kappa), float(c.h), L.tobytes(), L.shape, j, branch)


def update_matrix(c: CoeffSample, L, j: int, branch: str, n: int) -> np.ndarray:
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")
    sm = assemble(j, c, L, n)
    return sm.a_update() if branch == "smooth" else sm.b_update()


def split_state(Z, n: int, q: int):
    Z = np.asarray(Z)
    nq = n * q
    return Z[:nq].reshape(q, n), Z[nq:2 * nq].reshape(q, n), Z[2 * nq:]


def consensus_measures(Z, n: int, q: int) -> tuple[float, float, float]:
    """(x-spread, ||v||, ||p - mean x||) of a stacked state."""
    x, v, p = split_state(Z, n, q)
    spread = float(np.max(np.abs(x - x[0]))) if q > 1 else 0.0
    return spread, float(np.linalg.norm(v)), float(np.linalg.norm(p - x.mean(axis=0)))


@dataclass
class SwitchedResult:
    status: str  # converged | max_iters | diverged
    iterations: int
    Z: np.ndarray
    x_spread: float
    v_norm: float
    p_gap: float
    trajectory: list = field(default_factory=list, repr=False)

    def in_consensus_kernel(self, tol: float = 1e-8) -> bool:
        return self.x_spread < tol and self.v_norm < tol and self.p_gap < tol

    def to_dict(self) -> dict:
        return {"status": self.status, "iterations": self.iterations, "x_spread": self.x_spread,
                "v_norm": self.v_norm, "p_gap": self.p_gap, "Z": self.Z.tolist()}


Schedule = Union[Callable[[int], tuple], Sequence[tuple]]


def simulate_switched(schedule: Schedule, Z0, n: int, max_iters: int = 100_000,
                      tol: float = 1e-12, record: bool = False) -> SwitchedResult:
    """Iterate the switched system from ``Z0``.

    ``schedule`` is either a callable ``k -> entry`` or a sequence that is
    cycled.  Stops when a step moves the state by less than ``tol``.
    """
    Z = np.array(Z0, dtype=float)
    entry_at = schedule if callable(schedule) else (lambda k, s=tuple(schedule): s[k % len(s)])
    if not callable(schedule) and len(schedule) == 0:
        raise ValueError("schedule is empty")
    first = entry_at(0)
    q = np.asarray(first[1]).shape[0]
    if Z.shape != (2 * n * q + n,):
        raise ValueError(f"Z0 must have length {2 * n * q + n}, got {Z.shape}")

    cache: dict = {}
    traj = [Z.copy()] if record else []
    status = "max_iters"
    k = 0
    while k < max_iters:
        c, L, j, branch = first if k == 0 else entry_at(k)
        L = np.asarray(L, dtype=float)
        key = _key(c, L, j, branch)
        P = cache.get(key)
        if P is None:
            P = cache[key] = update_matrix(c, L, j, branch, n)
        Z_next = P @ Z
        k += 1
        step = np.linalg.norm(Z_next - Z)
        Z = Z_next
        if record:
            traj.append(Z.copy())
        if not np.all(np.isfinite(Z)) or np.linalg.norm(Z) > DIVERGENCE_NORM:
            status = "diverged"
            break
        if step < tol:
            status = "converged"
            break
    spread, vn, gap = consensus_measures(Z, n, q)
    return SwitchedResult(status, k, Z, spread, vn, gap, traj)


def random_switching(omega: Sequence[CoeffSample], L, seed: int,
                     branches: Sequence[str] = BRANCHES, leaders=None) -> Callable[[int], tuple]:
    """Schedule drawing coefficients, leader and branch afresh at every step.

    Step ``k`` reads its own counter-based stream, so the schedule is a pure
    function of ``(seed, k)``.
    """
    omega = list(omega)
    if not omega:
        raise ValueError("omega must be nonempty")
    L = np.asarray(L, dtype=float)
    leaders = list(range(1, L.shape[0] + 1)) if leaders is None else list(leaders)
    branches = list(branches)

    def entry(k: int):
        rng = _philox(seed, 2, k)
        c = omega[int(rng.integers(len(omega)))]
        j = leaders[int(rng.integers(len(leaders)))]
        return c, L, j, branches[int(rng.integers(len(branches)))]

    return entry


def recurring_schedule(base: Callable[[int], tuple], recurring: tuple, period: int) -> Callable[[int], tuple]:
    """Every ``period``-th step uses the fixed entry ``recurring``; others follow ``base``."""
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")

    def entry(k: int):
        return recurring if k % period == period - 1 else base(k)

    return entry
