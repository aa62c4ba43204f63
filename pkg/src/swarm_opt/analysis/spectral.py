"""Numeric rank, kernels, eigenvalue structure and predicted spectra."""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from ..swarm import CoeffSample

CLUSTER_TOL = 1e-8


def _as_matrix(M) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {M.shape}")
    return M


def rank_threshold(M, tol=None) -> float:
    """Singular values above this count toward the rank.

    ``tol`` is relative: the threshold is ``tol * sigma_max * max(M.shape)``,
    with machine epsilon as the default.
    """
    M = _as_matrix(M)
    if M.size == 0:
        return 0.0
    s_max = np.linalg.norm(M, 2)
    rel = np.finfo(float).eps if tol is None else tol
    return rel * s_max * max(M.shape)


def numeric_rank(M, tol=None, atol=None) -> int:
    M = _as_matrix(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    cut = rank_threshold(M, tol) if atol is None else atol
    return int(np.sum(s > cut))


def kernel_basis(M, tol=None, atol=None) -> np.ndarray:
    """Orthonormal columns spanning the numeric null space of ``M``."""
    M = _as_matrix(M)
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    cut = rank_threshold(M, tol) if atol is None else atol
    r = int(np.sum(s > cut))
    return vh[r:].conj().T


def subspace_residual(U, V) -> float:
    """Mutual projection residual between two orthonormal bases.

    Zero iff the spans agree; ``inf`` when the dimensions differ.
    """
    U = np.asarray(U)
    V = np.asarray(V)
    if U.shape != V.shape:
        return float("inf")
    if U.shape[1] == 0:
        return 0.0
    r1 = np.linalg.norm(U - V @ (V.conj().T @ U))
    r2 = np.linalg.norm(V - U @ (U.conj().T @ V))
    return float(max(r1, r2))


def same_subspace(U, V, tol: float = 1e-9) -> bool:
    return subspace_residual(U, V) < tol


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    rank: int
    kernel_dim: int
    kernel: np.ndarray
    zero_semisimple: bool | None
    rank_tol: float
    cluster_tol: float = CLUSTER_TOL

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "rank": self.rank,
            "kernel_dim": self.kernel_dim,
            "kernel": self.kernel.tolist() if np.isrealobj(self.kernel) else None,
            "zero_semisimple": self.zero_semisimple,
            "rank_tol": self.rank_tol,
            "cluster_tol": self.cluster_tol,
        }


def spectral_report(M, tol=None, cluster_tol: float = CLUSTER_TOL) -> SpectralReport:
    M = _as_matrix(M)
    K = kernel_basis(M, tol)
    rank = M.shape[1] - K.shape[1]
    semi = None
    if K.shape[1] > 0:
        alg, geo = multiplicities(M, 0.0, tol)
        semi = alg == geo
    return SpectralReport(np.linalg.eigvals(M), rank, K.shape[1], K, semi,
                          rank_threshold(M, tol), cluster_tol)


def multiplicities(M, lam0, tol=None) -> tuple[int, int]:
    """(algebraic, geometric) multiplicity of ``lam0`` as an eigenvalue of ``M``.

    The algebraic multiplicity is the dimension of the generalized eigenspace,
    read off as the stable nullity of successive powers ``N^k`` of
    ``N = M - lam0 I``.  This is less fragile than counting computed
    eigenvalues, which scatter by about sqrt(eps) around a defective one.
    Rounding in ``N`` is relative to ``M``, not to ``N``, so the cutoff for
    ``N^k`` is ``tol * side * max(||M||, |lam0|)^k`` with ``tol = 64 eps``
    by default.
    """
    M = _as_matrix(M)
    side = M.shape[0]
    rel = 64 * np.finfo(float).eps if tol is None else tol
    scale = max(np.linalg.norm(M, 2), abs(lam0)) or 1.0
    N = M - lam0 * np.eye(side)

    def nullity(P, k):
        return side - numeric_rank(P, atol=rel * side * scale**k)

    geo = nullity(N, 1)
    if geo == 0:
        return 0, 0
    alg = geo
    P = N
    for k in range(2, side + 2):
        P = P @ N
        nxt = nullity(P, k)
        if nxt <= alg:
            break
        alg = nxt
    return alg, geo


def eigen_semisimple(M, lam0, tol=None, cluster_tol: float = CLUSTER_TOL) -> bool:
    M = _as_matrix(M)
    eig = np.linalg.eigvals(M)
    alg, geo = multiplicities(M, lam0, tol)
    # defective eigenvalues drift by ~sqrt(cluster_tol); accept that as "present"
    near = eig.size > 0 and np.min(np.abs(eig - lam0)) <= max(cluster_tol, np.sqrt(cluster_tol))
    if geo == 0 or not near:
        raise ValueError(f"{lam0} is not an eigenvalue of the matrix")
    return alg == geo


def is_discrete_semistable(M, tol: float = 1e-8) -> bool:
    M = _as_matrix(M)
    eig = np.linalg.eigvals(M)
    mod = np.abs(eig)
    if np.any(mod > 1 + tol):
        return False
    on_circle = eig[mod >= 1 - tol]
    if on_circle.size == 0:
        return True
    if np.any(np.abs(on_circle - 1) > tol):
        return False
    try:
        return eigen_semisimple(M, 1.0)
    except ValueError:
        # a cluster near 1 without a numeric eigenvector: not exactly 1
        return False


def is_paracontracting(W, tol: float = 1e-8, rank_tol: float = 1e-10) -> bool:
    """Paracontraction test via semistability, the norm bound and a rank identity.

    The three ranks share one absolute threshold so that they are comparable.
    """
    W = np.asarray(W, dtype=float)
    k = W.shape[0]
    I = np.eye(k)
    if np.max(np.abs(W - I)) <= tol or not is_discrete_semistable(W, tol):
        return False
    if np.linalg.norm(W, 2) > 1 + tol:
        return False
    D = W - I
    m1 = W.T @ W - I
    m2 = D.T @ D + D @ D
    m3 = np.hstack([m1, D.T @ D + D.T @ D.T])
    scale = max(1.0, *(np.linalg.norm(m, 2) for m in (m1, m2, m3)))
    cut = rank_tol * scale * k
    r1, r2, r3 = (numeric_rank(m, atol=cut) for m in (m1, m2, m3))
    return r1 == r2 == r3


def semiobservable_family_check(family, C, A_ref, tol: float = 1e-9) -> bool:
    """Compare the intersection of ``ker(C (I - A_k))`` with ``ker(I - A_ref)``.

    Only the supplied (finite) members enter the intersection.
    """
    A_ref = _as_matrix(A_ref)
    C = _as_matrix(C)
    side = A_ref.shape[0]
    if A_ref.shape != (side, side) or C.shape[1] != side:
        raise ValueError("C and A_ref have incompatible dimensions")
    family = [_as_matrix(A) for A in family]
    if not family:
        raise ValueError("the family must have at least one member")
    for A in family:
        if A.shape != (side, side):
            raise ValueError(f"family member of shape {A.shape} does not match {A_ref.shape}")
    I = np.eye(side)
    stacked = np.vstack([C @ (I - A) for A in family])
    return same_subspace(kernel_basis(stacked), kernel_basis(I - A_ref), tol)


def _quad_roots(b, c) -> list[complex]:
    # roots of z^2 + b z + c; exact double roots, unlike a companion eigen-solve
    d = cmath.sqrt(b * b - 4 * c)
    return [(-b + d) / 2, (-b - d) / 2]


def _laplacian_parts(L):
    L = np.asarray(L, dtype=float)
    q = L.shape[0]
    # a defective Laplacian (directed graphs) has scattered eigenvalues; the
    # cluster mean recovers the repeated eigenvalue to near machine precision
    sig = [g.mean() for g in _clusters(np.linalg.eigvals(L), 1e-4)]
    nonzero = [complex(s) for s in sig if abs(s) > 1e-9]
    deficient = numeric_rank(L, tol=1e-9) < q - 1
    return nonzero, deficient


def predicted_spectrum_A(c: CoeffSample, L, verbatim: bool = False) -> np.ndarray:
    """Candidate eigenvalues of ``A + h Ac``.

    The marginal pair from ``z^2 + kappa h z + kappa`` only occurs when the
    graph has more than one connected piece (rank L < q - 1), so it is left out
    otherwise unless ``verbatim`` is set.
    """
    k, h, eta, mu = c.kappa, c.h, c.eta, c.mu
    nonzero, deficient = _laplacian_parts(L)
    cand = [0j, complex(-k)]
    cand += _quad_roots(k * (1 + h), k)
    if deficient or verbatim:
        cand += _quad_roots(k * h, k)
    for s in nonzero:
        cand += _quad_roots(k * h + s * (eta + mu * h), k + s * mu)
    return np.array(cand, dtype=complex)


def b_cubic_roots(c: CoeffSample) -> np.ndarray:
    k, h = c.kappa, c.h
    return np.roots([1.0, 1 + h * h * k, 2 * h * h * k - h * k, h * h * k]).astype(complex)


def predicted_spectrum_B(c: CoeffSample, L, verbatim: bool = False) -> np.ndarray:
    """Candidate eigenvalues of ``B + h^2 Ac``.

    On the consensus subspace the characteristic polynomial factors as
    ``z (z + 1) (z + h^2 kappa)``, so by default the candidates there are
    ``{0, -1, -h^2 kappa}``.  ``verbatim=True`` instead returns the uncorrected
    set, which lists the roots of :func:`b_cubic_roots` in place of
    ``-h^2 kappa`` and always includes the disconnected-graph pair.
    """
    k, h, eta, mu = c.kappa, c.h, c.eta, c.mu
    nonzero, deficient = _laplacian_parts(L)
    cand = [0j, -1 + 0j]
    if verbatim:
        cand += list(b_cubic_roots(c))
    else:
        cand.append(complex(-h * h * k))
    if deficient or verbatim:
        cand += _quad_roots(h * h * k, h * h * k)
    for s in nonzero:
        cand += _quad_roots(k * h * h + s * (eta * h + mu * h * h), k * h * h + s * mu * h * h)
    return np.array(cand, dtype=complex)


def _clusters(values, tol: float) -> list[np.ndarray]:
    """Single-linkage groups of complex values at distance ``tol``."""
    values = np.asarray(values, dtype=complex).ravel()
    label = -np.ones(values.size, dtype=int)
    groups = []
    for start in range(values.size):
        if label[start] >= 0:
            continue
        label[start] = len(groups)
        members, frontier = [start], [start]
        while frontier:
            i = frontier.pop()
            for k in np.flatnonzero((label < 0) & (np.abs(values - values[i]) <= tol)):
                label[k] = len(groups)
                members.append(k)
                frontier.append(k)
        groups.append(values[members])
    return groups


def verify_spectrum_containment(M, predicted, tol: float = 1e-8,
                                cluster_tol: float = 1e-4) -> bool:
    """True iff every eigenvalue of ``M`` is within ``tol`` of a candidate.

    Repeated eigenvalues come back from the dense solver spread out by up to
    sqrt(eps) times the conditioning, so computed eigenvalues are first grouped
    and each group's mean is matched; a group only fails when neither its mean
    nor each individual member lands on a candidate.
    """
    predicted = np.asarray(predicted, dtype=complex).ravel()
    if predicted.size == 0:
        raise ValueError("predicted set must be nonempty")
    eig = np.linalg.eigvals(_as_matrix(M))

    def hit(z):
        return np.min(np.abs(predicted - z)) <= tol

    for group in _clusters(eig, cluster_tol):
        if hit(group.mean()):
            continue
        if not all(hit(z) for z in group):
            return False
    return True


@dataclass
class Bounds:
    """Per-candidate step bounds ``-2 Re(lam) / |lam|^2``."""

    candidates: np.ndarray
    bounds: np.ndarray
    offenders: list = field(default_factory=list)

    @property
    def h_dagger(self) -> float:
        return float(np.min(self.bounds)) if self.bounds.size else float("inf")


def step_bounds(candidates, tol: float = 1e-9) -> Bounds:
    cand = np.asarray(candidates, dtype=complex)
    cand = cand[np.abs(cand) > tol]
    offenders = [complex(z) for z in cand if z.real >= -tol]
    stable = np.array([z for z in cand if z.real < -tol], dtype=complex)
    bounds = -2 * stable.real / np.abs(stable) ** 2 if stable.size else np.zeros(0)
    return Bounds(stable, bounds, offenders)
