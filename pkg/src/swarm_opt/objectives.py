"""Benchmark objectives and the objective container used by the optimizers.

All formulas index coordinates from 1 (``i = j + 1`` for array position ``j``).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


def sphere(x):
    return float(np.sum(x * x))


def rosenbrock(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def rastrigin(x):
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def griewank(x):
    i = np.arange(1, x.size + 1)
    return float(np.sum(x * x) / 4000.0 - np.prod(np.cos(x / np.sqrt(i))) + 1.0)


def ackley(x):
    n = x.size
    return float(
        -20.0 * np.exp(-0.2 * np.sqrt(np.sum(x * x) / n))
        - np.exp(np.sum(np.cos(2.0 * np.pi * x)) / n)
        + 20.0
        + math.e
    )


def dejong_f4(x):
    i = np.arange(1, x.size + 1)
    return float(np.sum(i * x**4))


def zakharov(x):
    # termwise form: sum_i [x_i^2 + (0.5 i x_i)^2 + (0.5 i x_i)^4]
    s = 0.5 * np.arange(1, x.size + 1) * x
    return float(np.sum(x * x + s**2 + s**4))


def _levy_terms(x):
    head = np.sin(np.pi * x[0]) ** 2
    tail = (x[-1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * x[-1]) ** 2)
    body = np.sum((x[:-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * x[:-1] + 1.0) ** 2))
    return head, tail, body


def levy_paper(x):
    """Levy variant with the minus sign on the sum; unbounded below."""
    head, tail, body = _levy_terms(x)
    return float(head + tail - body)


def levy_standard(x):
    head, tail, body = _levy_terms(x)
    return float(head + tail + body)


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    """Objective function together with its box and (optional) known optimum.

    ``eval_cost`` is a busy-wait in seconds added to every call; it never
    changes the returned value.
    """

    name: str
    n: int
    lower: np.ndarray
    upper: np.ndarray
    func: Callable[[np.ndarray], float]
    f_star: Optional[float] = None
    x_star: Optional[np.ndarray] = None
    eval_cost: float = 0.0
    min_n: int = field(default=1, repr=False)

    def __post_init__(self):
        if self.n < self.min_n:
            raise ValueError(f"{self.name} needs n >= {self.min_n}, got {self.n}")
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.n,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.n,)).copy()
        if not np.all(lower < upper):
            raise ValueError("lower bounds must be strictly below upper bounds")
        if self.eval_cost < 0:
            raise ValueError(f"eval_cost must be non-negative, got {self.eval_cost}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.x_star is not None:
            object.__setattr__(self, "x_star", np.asarray(self.x_star, dtype=float).reshape(self.n))

    def with_cost(self, eval_cost: float) -> "ObjectiveSpec":
        return ObjectiveSpec(self.name, self.n, self.lower, self.upper, self.func,
                             self.f_star, self.x_star, eval_cost, self.min_n)

    def __call__(self, x) -> float:
        return evaluate(self, x)


def _spin(seconds: float) -> None:
    end = time.perf_counter() + seconds
    while time.perf_counter() < end:
        pass


def evaluate(obj: ObjectiveSpec, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (obj.n,):
        raise ValueError(f"{obj.name}: expected a vector of length {obj.n}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{obj.name}: input contains non-finite entries")
    return evaluate_unchecked(obj, x)


def evaluate_unchecked(obj: ObjectiveSpec, x: np.ndarray) -> float:
    """Evaluate without validation; non-finite points score +inf.

    Used inside the optimizers, where a diverging agent must not abort the run.
    """
    if obj.eval_cost > 0:
        _spin(obj.eval_cost)
    if not np.all(np.isfinite(x)):
        return math.inf
    with np.errstate(over="ignore", invalid="ignore"):
        value = obj.func(x)
    return value if math.isfinite(value) else math.inf


# name -> (function, half-width of the box, f*, x* fill value or None, minimum n)
_REGISTRY = {
    "sphere": (sphere, 30.0, 0.0, 0.0, 1),
    "rosenbrock": (rosenbrock, 30.0, 0.0, 1.0, 2),
    "rastrigin": (rastrigin, 30.0, 0.0, 0.0, 1),
    "griewank": (griewank, 600.0, 0.0, 0.0, 1),
    "ackley": (ackley, 32.768, 0.0, 0.0, 1),
    "dejong-f4": (dejong_f4, 20.0, 0.0, 0.0, 1),
    "zakharov": (zakharov, 10.0, 0.0, 0.0, 1),
    "levy-standard": (levy_standard, 10.0, 0.0, 1.0, 2),
    "levy-paper": (levy_paper, 10.0, None, None, 2),
}

DEFAULT_N = 30


def objective_names() -> list[str]:
    return list(_REGISTRY)


def get_objective(name: str, n: int = DEFAULT_N, eval_cost: float = 0.0) -> ObjectiveSpec:
    try:
        func, half, f_star, fill, min_n = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown objective {name!r}; known: {', '.join(_REGISTRY)}") from None
    if n < min_n:
        raise ValueError(f"{name} needs n >= {min_n}, got {n}")
    x_star = None if fill is None else np.full(n, fill)
    return ObjectiveSpec(name, n, -half, half, func, f_star, x_star, eval_cost, min_n)


def custom_objective(func, n: int, lower, upper, name: str = "custom",
                     f_star=None, x_star=None, eval_cost: float = 0.0) -> ObjectiveSpec:
    """Wrap a user function ``func(x) -> float``.

    The function must be picklable (module level) to run with several workers.
    """
    return ObjectiveSpec(name, n, lower, upper, func, f_star, x_star, eval_cost)


def known_minimum(obj: ObjectiveSpec):
    if obj.f_star is None or obj.x_star is None:
        return None
    return obj.f_star, obj.x_star.copy()
