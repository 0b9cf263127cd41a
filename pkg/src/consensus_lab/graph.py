"""Communication graphs, state-dependent Laplacians and connectivity queries."""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .weights import WeightFunction

FIXED = "fixed-links"
STATE_DEPENDENT = "state-dependent-links"


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected link pattern G; weights come from the state at use time.

    In state-dependent mode every pair is a candidate link, present exactly
    when the weight is positive.
    """

    n: int
    link_indicator: np.ndarray
    topology_mode: str = FIXED

    def __post_init__(self):
        G = np.asarray(self.link_indicator, dtype=float)
        if self.n < 1 or G.shape != (self.n, self.n):
            raise ValueError(f"link matrix must be {self.n}x{self.n}, got {G.shape}")
        if not np.array_equal(G, G.T):
            raise ValueError("link matrix must be symmetric")
        if np.any(np.diag(G) != 0) or not np.all((G == 0) | (G == 1)):
            raise ValueError("link matrix must be 0/1 with zero diagonal")
        if self.topology_mode not in (FIXED, STATE_DEPENDENT):
            raise ValueError(f"unknown topology mode {self.topology_mode!r}")
        G.setflags(write=False)
        object.__setattr__(self, "link_indicator", G)

    @classmethod
    def from_edges(cls, n: int, edges) -> WeightedGraph:
        G = np.zeros((n, n))
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at {i}")
            G[i, j] = G[j, i] = 1.0
        return cls(n, G)

    @classmethod
    def complete(cls, n: int) -> WeightedGraph:
        return cls(n, np.ones((n, n)) - np.eye(n))

    @classmethod
    def path(cls, n: int) -> WeightedGraph:
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def state_dependent(cls, n: int) -> WeightedGraph:
        return cls(n, np.ones((n, n)) - np.eye(n), STATE_DEPENDENT)

    @property
    def links(self) -> np.ndarray:
        """G as used by the protocols (all-ones off-diagonal when state-dependent)."""
        return self.link_indicator

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.link_indicator))
        return list(zip(i.tolist(), j.tolist()))

    def neighbors(self, i: int) -> list[int]:
        return np.flatnonzero(self.link_indicator[i]).tolist()

    @property
    def max_degree(self) -> int:
        return int(self.link_indicator.sum(axis=1).max())

    def is_complete(self) -> bool:
        return bool(np.all(self.link_indicator + np.eye(self.n) == 1))

    def __eq__(self, other):
        return (
            isinstance(other, WeightedGraph)
            and self.n == other.n
            and self.topology_mode == other.topology_mode
            and np.array_equal(self.link_indicator, other.link_indicator)
        )

    def __hash__(self):
        return hash((self.n, self.topology_mode, self.link_indicator.tobytes()))


@dataclass(frozen=True, eq=False)
class LaplacianMatrix:
    entries: np.ndarray
    weight_snapshot: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def squared_distances(x: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - x[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def weight_matrix(G: np.ndarray, x: np.ndarray, weight: WeightFunction) -> np.ndarray:
    """a_ij = G_ij * alpha(||x_i - x_j||^2) for an (n, m) position array."""
    return G * weight(squared_distances(x))


def laplacian_from_weights(A: np.ndarray) -> np.ndarray:
    return np.diag(A.sum(axis=1)) - A


def _positions(positions) -> np.ndarray:
    x = getattr(positions, "x", positions)
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def build_laplacian(graph: WeightedGraph, positions, weight: WeightFunction) -> LaplacianMatrix:
    x = _positions(positions)
    if x.shape[0] != graph.n:
        raise ValueError(f"positions have {x.shape[0]} agents, graph has {graph.n}")
    A = weight_matrix(graph.links, x, weight)
    return LaplacianMatrix(laplacian_from_weights(A), A)


def _entries(L) -> np.ndarray:
    return np.asarray(getattr(L, "entries", L), dtype=float)


def algebraic_connectivity(L) -> float:
    """Second-smallest eigenvalue of a symmetric Laplacian (0.0 for n = 1)."""
    M = _entries(L)
    if M.shape[0] < 2:
        return 0.0
    return float(np.linalg.eigvalsh(M)[1])


def lambda2_lower_bound(graph: WeightedGraph, weight: WeightFunction, distance_bound: float) -> float:
    """alpha(B^2) * lambda_2 of the unit-weight Laplacian.

    Lower-bounds lambda_2(L_x) whenever every pairwise distance is at most B.
    Only meaningful for weights that are positive everywhere.
    """
    if weight.compact:
        raise ValueError("lower bound is vacuous for compactly supported weights")
    if distance_bound < 0:
        raise ValueError("distance bound must be nonnegative")
    unit = laplacian_from_weights(graph.links)
    return float(weight(np.array(distance_bound**2))) * algebraic_connectivity(unit)


def _split_flow(G: np.ndarray, s: int, t: int) -> int:
    """Max number of internally vertex-disjoint s-t paths.

    Unit-capacity max flow on the vertex-split digraph: node v becomes
    v_in = 2v, v_out = 2v+1 with a unit arc between them (uncapacitated for
    s and t).
    """
    n = G.shape[0]
    cap: dict[tuple[int, int], int] = {}
    adj: list[list[int]] = [[] for _ in range(2 * n)]

    def arc(u, v, c):
        if (u, v) not in cap:
            adj[u].append(v)
            adj[v].append(u)
            cap.setdefault((v, u), 0)
        cap[(u, v)] = c

    for v in range(n):
        arc(2 * v, 2 * v + 1, n if v in (s, t) else 1)
    for u, v in zip(*np.nonzero(G)):
        arc(2 * int(u) + 1, 2 * int(v), 1)

    source, sink = 2 * s + 1, 2 * t
    flow = 0
    while True:
        parent = {source: source}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v in adj[u]:
                if v not in parent and cap[(u, v)] > 0:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            return flow
        v = sink
        while v != source:
            u = parent[v]
            cap[(u, v)] -= 1
            cap[(v, u)] += 1
            v = u
        flow += 1


def count_disjoint_paths(graph: WeightedGraph, i: int, j: int) -> int:
    if i == j:
        raise ValueError("endpoints must differ")
    if not (0 <= i < graph.n and 0 <= j < graph.n):
        raise ValueError(f"vertex out of range for n={graph.n}")
    return _split_flow(graph.links, i, j)


def vertex_connectivity(graph: WeightedGraph) -> int:
    """kappa(G); n-1 for complete graphs, 0 for a single vertex or a disconnected graph."""
    if graph.n == 1:
        return 0
    if graph.is_complete():
        return graph.n - 1
    G = graph.links
    return min(
        _split_flow(G, i, j) for i, j in itertools.combinations(range(graph.n), 2) if G[i, j] == 0
    )


def components(G: np.ndarray) -> list[list[int]]:
    n = G.shape[0]
    seen = [False] * n
    out = []
    for start in range(n):
        if seen[start]:
            continue
        comp, stack = [], [start]
        seen[start] = True
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in np.flatnonzero(G[u]):
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        out.append(sorted(comp))
    return out


def is_connected(graph_or_links) -> bool:
    G = getattr(graph_or_links, "links", graph_or_links)
    return len(components(np.asarray(G))) == 1


def count_disconnected_pairs(graph_or_links) -> int:
    """Unordered pairs {i, j} with no i-j path."""
    G = np.asarray(getattr(graph_or_links, "links", graph_or_links))
    n = G.shape[0]
    connected = sum(len(c) * (len(c) - 1) // 2 for c in components(G))
    return n * (n - 1) // 2 - connected


def active_links(x, weight: WeightFunction) -> np.ndarray:
    """State-dependent link pattern: pair linked iff alpha(dist^2) > 0 exactly."""
    x = _positions(x)
    G = (weight(squared_distances(x)) > 0).astype(float)
    np.fill_diagonal(G, 0.0)
    return G


def read_edge_list(source, n: int | None = None) -> WeightedGraph:
    """Parse "i j" lines (0-indexed); blank lines and '#' comments are skipped."""
    text = Path(source).read_text() if isinstance(source, Path) else str(source)
    edges = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        a, b = line.split()
        edges.append((int(a), int(b)))
    size = n if n is not None else (1 + max((max(e) for e in edges), default=0))
    return WeightedGraph.from_edges(size, edges)


def write_edge_list(graph: WeightedGraph) -> str:
    return "".join(f"{i} {j}\n" for i, j in graph.edges())
