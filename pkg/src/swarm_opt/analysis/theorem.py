"""Rank/kernel checks on the block matrices and the convergence hypotheses."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..swarm import CoeffSample
from .matrices import SystemMatrices, assemble
from .spectral import (
    eigen_semisimple,
    is_discrete_semistable,
    kernel_basis,
    numeric_rank,
    predicted_spectrum_A,
    predicted_spectrum_B,
    step_bounds,
    subspace_residual,
)


@dataclass
class RankVerdict:
    case: str
    expected_rank: int | None
    rank: int
    kernel_residual: float
    kernel_structure_ok: bool | None
    tol: float

    @property
    def indeterminate(self) -> bool:
        return self.case == "indeterminate"

    @property
    def rank_ok(self) -> bool:
        return self.expected_rank is not None and self.rank == self.expected_rank

    @property
    def kernel_ok(self) -> bool:
        return self.kernel_residual < self.tol

    @property
    def ok(self) -> bool:
        return (not self.indeterminate and self.rank_ok and self.kernel_ok
                and self.kernel_structure_ok is not False)

    def to_dict(self) -> dict:
        return {"case": self.case, "expected_rank": self.expected_rank, "rank": self.rank,
                "rank_ok": self.rank_ok, "kernel_residual": self.kernel_residual,
                "kernel_ok": self.kernel_ok, "kernel_structure_ok": self.kernel_structure_ok,
                "ok": self.ok}


def rank_case(c: CoeffSample, tol: float = 1e-9) -> str:
    """Which closed-form rank applies: ``i`` (mu = kappa = 0), ``ii`` (kappa != 0)
    or ``iii`` (mu != 0, kappa = 0)."""
    if any(0 < abs(v) < tol for v in (c.mu, c.kappa)):
        return "indeterminate"
    if c.kappa != 0:
        return "ii"
    return "iii" if c.mu != 0 else "i"


def consensus_kernel(n: int, q: int) -> np.ndarray:
    """Orthonormal basis of span{(1 (x) e_i, 0, e_i)}: equal positions, zero velocity."""
    K = np.vstack([np.kron(np.ones((q, 1)), np.eye(n)), np.zeros((n * q, n)), np.eye(n)])
    return K / np.sqrt(q + 1)


def check_rank_lemma(sm: SystemMatrices, tol: float = 1e-9) -> RankVerdict:
    c, n, q = sm.coeffs, sm.n, sm.q
    case = rank_case(c, tol)
    expected = {
        "i": n * q,
        "ii": 2 * n * q,
        "iii": n * (q + numeric_rank(sm.L)),
    }.get(case)
    K = kernel_basis(sm.A)
    residual = subspace_residual(K, kernel_basis(sm.a_family()))
    structure = None
    if case == "ii":
        structure = subspace_residual(K, consensus_kernel(n, q)) < tol
    return RankVerdict(case, expected, sm.side - K.shape[1], residual, structure, tol)


def _kernels_agree(P: np.ndarray, rank_tol: float) -> bool:
    lhs = P.T @ P + P.T + P
    rhs = P.T @ P + P @ P
    cut = rank_tol * max(1.0, np.linalg.norm(lhs, 2), np.linalg.norm(rhs, 2)) * P.shape[0]
    return subspace_residual(kernel_basis(lhs, atol=cut), kernel_basis(rhs, atol=cut)) < 1e-6


@dataclass
class TheoremVerdict:
    H1: bool
    H2: bool
    H3: bool
    H4: bool
    bounds_A: list[float] = field(default_factory=list)
    bounds_B: list[float] = field(default_factory=list)
    h_dagger_A: float = float("inf")
    h_dagger_B: float = float("inf")
    offenders: list[complex] = field(default_factory=list)
    norm_A: float = float("nan")
    norm_B: float = float("nan")
    zero_semisimple: bool = False
    semistable_A: bool = False
    semistable_B: bool = False

    @property
    def passed(self) -> bool:
        return self.H1 and self.H2 and self.H3 and self.H4

    @property
    def h_dagger(self) -> float:
        return min(self.h_dagger_A, self.h_dagger_B)

    def to_dict(self) -> dict:
        return {
            "H1": self.H1, "H2": self.H2, "H3": self.H3, "H4": self.H4,
            "passed": self.passed,
            "h_dagger_A": self.h_dagger_A, "h_dagger_B": self.h_dagger_B,
            "bounds_A": self.bounds_A, "bounds_B": self.bounds_B,
            "offenders": [[z.real, z.imag] for z in self.offenders],
            "norm_A": self.norm_A, "norm_B": self.norm_B,
            "zero_semisimple": self.zero_semisimple,
            "semistable_A": self.semistable_A, "semistable_B": self.semistable_B,
        }


def check_theorem_hypotheses(c: CoeffSample, L, n: int, j: int | None = None,
                             tol: float = 1e-9, rank_tol: float = 1e-10,
                             verbatim: bool = False) -> TheoremVerdict:
    """Evaluate the four convergence hypotheses at the given step ``c.h``.

    The eigenvalue conditions use the predicted candidate sets (``verbatim``
    selects the uncorrected lists, see :func:`predicted_spectrum_B`).  With
    ``j=None`` the matrix conditions are checked for every leader index and
    the worst case is reported.
    """
    L = np.asarray(L, dtype=float)
    q = L.shape[0]
    h = c.h
    ba = step_bounds(predicted_spectrum_A(c, L, verbatim), tol)
    bb = step_bounds(predicted_spectrum_B(c, L, verbatim), tol)
    h1 = bool(not ba.offenders and 0 < h < ba.h_dagger)
    h2 = bool(not bb.offenders and 0 < h < bb.h_dagger)

    leaders = range(1, q + 1) if j is None else [j]
    norm_a = norm_b = 0.0
    h4 = True
    semi_a = semi_b = True
    zero_semi = True
    for jj in leaders:
        sm = assemble(jj, c, L, n)
        Ua, Ub = sm.a_update(), sm.b_update()
        norm_a = max(norm_a, np.linalg.norm(Ua, 2))
        norm_b = max(norm_b, np.linalg.norm(Ub, 2))
        I = np.eye(sm.side)
        h4 = h4 and _kernels_agree(Ua - I, rank_tol) and _kernels_agree(Ub - I, rank_tol)
        semi_a = semi_a and is_discrete_semistable(Ua)
        semi_b = semi_b and is_discrete_semistable(Ub)
        zero_semi = zero_semi and eigen_semisimple(sm.a_family(), 0.0)
    h3 = bool(norm_a <= 1 + tol and norm_b <= 1 + tol)
    return TheoremVerdict(
        h1, h2, h3, h4,
        bounds_A=ba.bounds.tolist(), bounds_B=bb.bounds.tolist(),
        h_dagger_A=ba.h_dagger, h_dagger_B=bb.h_dagger,
        offenders=ba.offenders + bb.offenders,
        norm_A=float(norm_a), norm_B=float(norm_b), zero_semisimple=bool(zero_semi),
        semistable_A=bool(semi_a), semistable_B=bool(semi_b),
    )


def h1_supremum(c: CoeffSample, L, h_max: float = 64.0, grid: int = 400,
                verbatim: bool = False) -> float:
    """Smallest step at which the first eigenvalue condition stops holding.

    The candidates move with ``h``, so the bound reported at one step is not a
    threshold for other steps.  This scans a geometric grid on
    ``(1e-6, h_max]`` and bisects the first failing interval; ``inf`` when the
    condition holds on the whole grid.
    """
    L = np.asarray(L, dtype=float)

    def holds(h):
        b = step_bounds(predicted_spectrum_A(replace(c, h=float(h)), L, verbatim))
        return not b.offenders and h < b.h_dagger

    hs = np.geomspace(1e-6, h_max, grid)
    ok = [holds(h) for h in hs]
    if ok[0] is False:
        return 0.0
    if all(ok):
        return float("inf")
    k = ok.index(False)
    lo, hi = hs[k - 1], hs[k]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if holds(mid) else (lo, mid)
    return float(hi)


__all__ = ["RankVerdict", "TheoremVerdict", "check_rank_lemma", "check_theorem_hypotheses",
           "consensus_kernel", "h1_supremum", "rank_case"]
