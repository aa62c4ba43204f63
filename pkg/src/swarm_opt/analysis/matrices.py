"""Block matrices of the switched linear model of MCO.

The stacked state is ``Z = [x_1..x_q, v_1..v_q, p]`` (length ``2nq + n``).
Leader indices ``j`` are 1-based, as in the block notation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..swarm import CoeffSample


def _check_leader(j: int, q: int):
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    if not 1 <= j <= q:
        raise ValueError(f"leader index j must lie in 1..{q}, got {j}")


def build_E(j: int, n: int, q: int) -> np.ndarray:
    """``n x nq`` selector whose ``j``-th block column is ``I_n``."""
    _check_leader(j, q)
    E = np.zeros((n, n * q))
    E[:, (j - 1) * n:j * n] = np.eye(n)
    return E


def build_W(j: int, n: int, q: int) -> np.ndarray:
    return np.kron(np.ones((q, 1)), np.eye(n)) @ build_E(j, n, q)


def _check_laplacian(L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"L must be square, got shape {L.shape}")
    if np.max(np.abs(L.sum(axis=1)), initial=0.0) > 1e-9:
        raise ValueError("L is not a Laplacian: row sums are not zero")
    return L


def _dynamics_row(c: CoeffSample, L: np.ndarray, n: int) -> np.ndarray:
    # [-mu L(x)I - kappa I, -eta L(x)I, kappa 1(x)I]
    q = L.shape[0]
    LI = np.kron(L, np.eye(n))
    return np.hstack([-c.mu * LI - c.kappa * np.eye(n * q), -c.eta * LI,
                      c.kappa * np.kron(np.ones((q, 1)), np.eye(n))])


def build_A(j: int, c: CoeffSample, L, n: int) -> np.ndarray:
    L = _check_laplacian(L)
    q = L.shape[0]
    nq = n * q
    A = np.zeros((2 * nq + n, 2 * nq + n))
    A[:nq, nq:2 * nq] = np.eye(nq)
    A[nq:2 * nq] = _dynamics_row(c, L, n)
    A[2 * nq:, :nq] = c.kappa * build_E(j, n, q)
    A[2 * nq:, 2 * nq:] = -c.kappa * np.eye(n)
    return A


def build_Ac(c: CoeffSample, L, n: int) -> np.ndarray:
    L = _check_laplacian(L)
    nq = n * L.shape[0]
    Ac = np.zeros((2 * nq + n, 2 * nq + n))
    Ac[:nq] = _dynamics_row(c, L, n)
    return Ac


def build_B(j: int, c: CoeffSample, L, n: int) -> np.ndarray:
    L = _check_laplacian(L)
    q = L.shape[0]
    nq = n * q
    B = np.zeros((2 * nq + n, 2 * nq + n))
    B[:nq, nq:2 * nq] = c.h * np.eye(nq)
    B[nq:2 * nq] = c.h * _dynamics_row(c, L, n)
    B[2 * nq:, :nq] = build_E(j, n, q)
    B[2 * nq:, 2 * nq:] = -np.eye(n)
    return B


@dataclass
class SystemMatrices:
    n: int
    q: int
    j: int
    coeffs: CoeffSample
    L: np.ndarray
    A: np.ndarray
    Ac: np.ndarray
    B: np.ndarray
    E: np.ndarray
    W: np.ndarray

    @property
    def h(self) -> float:
        return self.coeffs.h

    @property
    def side(self) -> int:
        return 2 * self.n * self.q + self.n

    def a_family(self) -> np.ndarray:
        """``A + h Ac``."""
        return self.A + self.h * self.Ac

    def b_family(self) -> np.ndarray:
        """``B + h^2 Ac``."""
        return self.B + self.h**2 * self.Ac

    def a_update(self) -> np.ndarray:
        """Iteration matrix ``I + h (A + h Ac)`` (smoothing branch)."""
        return np.eye(self.side) + self.h * self.a_family()

    def b_update(self) -> np.ndarray:
        """Iteration matrix ``I + B + h^2 Ac`` (overwrite branch)."""
        return np.eye(self.side) + self.b_family()


def assemble(j: int, c: CoeffSample, L, n: int) -> SystemMatrices:
    L = _check_laplacian(L)
    q = L.shape[0]
    return SystemMatrices(n, q, j, c, L, build_A(j, c, L, n), build_Ac(c, L, n),
                          build_B(j, c, L, n), build_E(j, n, q), build_W(j, n, q))
