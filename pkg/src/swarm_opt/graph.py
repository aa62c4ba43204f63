"""Communication topologies for the agent network.

A :class:`Digraph` is a node-fixed graph with 0/1 adjacency.  Row ``i`` of the
adjacency lists the neighbours of agent ``i`` (``a[i, j] == 1`` means agent
``i`` listens to agent ``j``), so the Laplacian row sums are out-degrees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components

GRAPH_KINDS = ("complete", "ring", "star", "erdos-renyi")


@dataclass(frozen=True, eq=False)
class Digraph:
    """Directed (or undirected) graph on ``q`` fixed nodes.

    Attributes:
        adjacency: ``q x q`` integer matrix with entries in {0, 1} and a zero diagonal.
        directed: when False the adjacency must be symmetric.
    """

    adjacency: np.ndarray
    directed: bool = False

    def __post_init__(self):
        adj = np.asarray(self.adjacency)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] < 1:
            raise ValueError(f"adjacency must be a non-empty square matrix, got shape {adj.shape}")
        if not np.all((adj == 0) | (adj == 1)):
            raise ValueError("adjacency entries must be 0 or 1")
        if np.any(np.diag(adj) != 0):
            raise ValueError("self-loops are not allowed (a_ii must be 0)")
        if not self.directed and not np.array_equal(adj, adj.T):
            raise ValueError("undirected graph requires a symmetric adjacency")
        adj = adj.astype(np.int64)
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @property
    def q(self) -> int:
        return self.adjacency.shape[0]

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])

    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(self.adjacency)
        pairs = zip(rows.tolist(), cols.tolist())
        if self.directed:
            return list(pairs)
        return [(i, j) for i, j in pairs if i < j]

    def permuted(self, perm) -> "Digraph":
        """Relabel nodes so that new node ``k`` is old node ``perm[k]``."""
        perm = np.asarray(perm)
        return Digraph(self.adjacency[np.ix_(perm, perm)], self.directed)

    def __eq__(self, other):
        if not isinstance(other, Digraph):
            return NotImplemented
        return self.directed == other.directed and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash((self.directed, self.adjacency.tobytes(), self.q))

    def to_dict(self) -> dict:
        return {"q": self.q, "directed": self.directed, "edges": [list(e) for e in self.edges()]}

    @classmethod
    def from_dict(cls, data: dict) -> "Digraph":
        q = int(data["q"])
        if q < 1:
            raise ValueError(f"q must be >= 1, got {q}")
        directed = bool(data.get("directed", False))
        adj = np.zeros((q, q), dtype=np.int64)
        for i, j in data.get("edges", []):
            if not (0 <= i < q and 0 <= j < q):
                raise ValueError(f"edge ({i}, {j}) out of range for q={q}")
            adj[i, j] = 1
            if not directed:
                adj[j, i] = 1
        return cls(adj, directed)


def load_graph(path) -> Digraph:
    with open(path) as fh:
        return Digraph.from_dict(json.load(fh))


def save_graph(g: Digraph, path) -> None:
    Path(path).write_text(json.dumps(g.to_dict()) + "\n")


def _philox(seed: int, *counter: int) -> np.random.Generator:
    # Counter-based stream: the key is the seed, the high counter words carry the
    # caller's coordinates, so each (seed, coords) tuple owns a disjoint stream.
    words = [0] * (4 - len(counter)) + [int(c) for c in counter]
    return np.random.Generator(np.random.Philox(key=int(seed) % 2**64, counter=words))


def erdos_renyi(q: int, p: float, rng: np.random.Generator, directed: bool = False) -> Digraph:
    draws = rng.random((q, q))
    if directed:
        adj = (draws < p).astype(np.int64)
    else:
        upper = np.triu(draws < p, k=1)
        adj = (upper | upper.T).astype(np.int64)
    np.fill_diagonal(adj, 0)
    return Digraph(adj, directed)


def build_graph(kind: str, q: int, seed: int = 0, p: float = 0.5, directed: bool = False) -> Digraph:
    """Build one of the stock topologies.

    ``star`` uses node 0 as the hub.  ``directed`` only affects ``erdos-renyi``.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if kind == "complete":
        adj = np.ones((q, q), dtype=np.int64) - np.eye(q, dtype=np.int64)
        return Digraph(adj)
    if kind == "ring":
        adj = np.zeros((q, q), dtype=np.int64)
        if q > 1:
            idx = np.arange(q)
            adj[idx, (idx + 1) % q] = 1
            adj[(idx + 1) % q, idx] = 1
        return Digraph(adj)
    if kind == "star":
        adj = np.zeros((q, q), dtype=np.int64)
        adj[0, 1:] = 1
        adj[1:, 0] = 1
        return Digraph(adj)
    if kind in ("erdos-renyi", "er"):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"edge probability must lie in [0, 1], got {p}")
        return erdos_renyi(q, p, _philox(seed, 0), directed)
    raise ValueError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")


def degree_matrix(g: Digraph) -> np.ndarray:
    return np.diag(g.adjacency.sum(axis=1)).astype(float)


def laplacian(g: Digraph) -> np.ndarray:
    # integer arithmetic first so that L @ 1 == 0 exactly
    adj = g.adjacency
    return (np.diag(adj.sum(axis=1)) - adj).astype(float)


def is_strongly_connected(g: Digraph) -> bool:
    if g.q == 1:
        return True
    n_comp, _ = connected_components(g.adjacency, directed=True, connection="strong")
    return n_comp == 1


def check_laplacian_argument_bound(L, q: int, tol: float = 1e-9) -> bool:
    """True iff every nonzero Laplacian eigenvalue has |arg| <= pi/2 - pi/q.

    Eigenvalues with modulus below ``tol`` are exempt.
    """
    if q < 2:
        raise ValueError(f"the argument bound needs q >= 2, got {q}")
    eig = np.linalg.eigvals(np.asarray(L, dtype=float))
    bound = math.pi / 2 - math.pi / q
    for lam in eig:
        if abs(lam) <= tol:
            continue
        if lam.real < -tol or abs(np.angle(lam)) > bound + tol:
            return False
    return True


@dataclass(frozen=True)
class TopologySchedule:
    """Time-indexed topology over a fixed node set.

    ``mode`` is one of ``static``, ``periodic`` or ``seeded-random``.
    """

    mode: str
    graphs: tuple[Digraph, ...] = ()
    q: int = 0
    p: float = 0.5
    seed: int = 0
    directed: bool = False

    @classmethod
    def static(cls, g: Digraph) -> "TopologySchedule":
        return cls("static", (g,), q=g.q)

    @classmethod
    def periodic(cls, graphs) -> "TopologySchedule":
        graphs = tuple(graphs)
        if not graphs:
            raise ValueError("periodic schedule needs at least one graph")
        q = graphs[0].q
        if any(g.q != q for g in graphs):
            raise ValueError("all graphs in a schedule must share the node count")
        return cls("periodic", graphs, q=q)

    @classmethod
    def seeded_random(cls, q: int, p: float, seed: int, directed: bool = False) -> "TopologySchedule":
        if q < 1:
            raise ValueError(f"q must be >= 1, got {q}")
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"edge probability must lie in [0, 1], got {p}")
        return cls("seeded-random", (), q=q, p=p, seed=seed, directed=directed)


def topology_at(s: TopologySchedule, t: int) -> Digraph:
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if s.mode == "static":
        return s.graphs[0]
    if s.mode == "periodic":
        if not s.graphs:
            raise ValueError("periodic schedule needs at least one graph")
        return s.graphs[t % len(s.graphs)]
    if s.mode == "seeded-random":
        return erdos_renyi(s.q, s.p, _philox(s.seed, 1, t), s.directed)
    raise ValueError(f"unknown schedule mode {s.mode!r}")
