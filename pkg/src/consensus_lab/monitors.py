"""Energy and Lyapunov functions, disagreement vectors, consensus detection."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Law, ProtocolSpec, SystemState, TrajectoryRecord
from .graph import (
    WeightedGraph,
    algebraic_connectivity,
    laplacian_from_weights,
    squared_distances,
    weight_matrix,
)
from .weights import WeightFunction, integral_weight, staircase_w

MONITORS = (
    "V_half_p2",
    "V_ct2_static",
    "V_ct2_dynamic",
    "V1_integral",
    "V_dt2",
    "W_staircase",
    "lambda2_current",
    "max_pairwise_dist",
    "max_speed",
)


@dataclass(frozen=True, eq=False)
class DisagreementState:
    p: np.ndarray
    q: np.ndarray | None = None


def disagreement(state: SystemState) -> DisagreementState:
    """Subtract the agent mean (projection onto the consensus subspace)."""
    p = state.x - state.x.mean(axis=0)
    q = None if state.v is None else state.v - state.v.mean(axis=0)
    return DisagreementState(p, q)


def _links(graph: WeightedGraph, spec: ProtocolSpec | None) -> np.ndarray:
    if spec is not None and spec.law.state_dependent:
        return np.ones((graph.n, graph.n)) - np.eye(graph.n)
    return graph.links


def pair_integrals(G: np.ndarray, x: np.ndarray, weight: WeightFunction, r: float = 0.0) -> float:
    """sum_{i,j} G_ij w(||x_i - x_j||^2) over ordered pairs (r = 0: exact integral)."""
    iu = np.triu_indices(x.shape[0], k=1)
    s = squared_distances(x)[iu]
    g = G[iu]
    mask = g != 0
    if not mask.any():
        return 0.0
    vals = staircase_w(weight, r, s[mask]) if r > 0 else integral_weight(weight, s[mask])
    return 2.0 * float(np.sum(g[mask] * vals))


def _need(cond: bool, monitor_id: str, what: str):
    if not cond:
        raise ValueError(f"monitor {monitor_id} needs {what}")


def evaluate_monitor(
    monitor_id: str,
    graph: WeightedGraph,
    weight: WeightFunction,
    spec: ProtocolSpec | None,
    state: SystemState,
    staircase_r: float = 0.0,
) -> float:
    G = _links(graph, spec)
    x, v = state.x, state.v
    if monitor_id == "V_half_p2":
        p = disagreement(state).p
        return 0.5 * float(np.sum(p * p))
    if monitor_id == "V_ct2_static":
        _need(spec is not None and spec.k is not None and v is not None, monitor_id, "gain k and velocities")
        kx = spec.k * x + v
        return float(np.sum(kx * kx) + np.sum(v * v)) + pair_integrals(G, x, weight)
    if monitor_id == "V_ct2_dynamic":
        _need(v is not None, monitor_id, "velocities")
        q = disagreement(state).q
        return float(np.sum(q * q)) + 0.5 * pair_integrals(G, x, weight)
    if monitor_id == "V1_integral":
        return 0.5 * pair_integrals(G, x, weight)
    if monitor_id == "V_dt2":
        _need(
            spec is not None and spec.law in (Law.DT2_FIXED, Law.DT2_STATEDEP) and v is not None,
            monitor_id,
            "a second-order discrete-time law with velocities",
        )
        k1, k2, k3 = spec.k1, spec.k2, spec.k3
        y = k2 * x + k1 * v
        return float(np.sum(y * y) + k1 * np.sum(v * v)) + 0.5 * k3 * (k1 + 1 - k2) * pair_integrals(
            G, x, weight, staircase_r
        )
    if monitor_id == "W_staircase":
        return 0.5 * pair_integrals(G, x, weight, staircase_r)
    if monitor_id == "lambda2_current":
        return algebraic_connectivity(laplacian_from_weights(weight_matrix(G, x, weight)))
    if monitor_id == "max_pairwise_dist":
        return max_pairwise_distance(x)
    if monitor_id == "max_speed":
        _need(v is not None, monitor_id, "velocities")
        return float(np.max(np.linalg.norm(v, axis=1)))
    raise ValueError(f"unknown monitor {monitor_id!r}; known: {', '.join(MONITORS)}")


def max_pairwise_distance(x: np.ndarray) -> float:
    if x.shape[0] < 2:
        return 0.0
    return math.sqrt(float(np.max(squared_distances(x))))


@dataclass(frozen=True)
class Verdict:
    kind: str  # consensus | clustered | diverged | undecided
    value: tuple[float, ...] | None = None
    average: bool | None = None
    clusters: int | None = None

    def __str__(self):
        if self.kind == "consensus":
            return f"consensus{' (average)' if self.average else ''}"
        if self.kind == "clustered":
            return f"clustered ({self.clusters} clusters)"
        return self.kind


def single_linkage(x: np.ndarray, threshold: float) -> list[list[int]]:
    """Groups of agents chained by links shorter than ``threshold``."""
    close = squared_distances(x) < threshold * threshold
    n = x.shape[0]
    label = list(range(n))

    def find(i):
        while label[i] != i:
            label[i] = label[label[i]]
            i = label[i]
        return i

    for i, j in zip(*np.nonzero(np.triu(close, 1))):
        a, b = find(int(i)), find(int(j))
        if a != b:
            label[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def _clustered(x: np.ndarray, pos_tol: float) -> list[list[int]] | None:
    groups = single_linkage(x, pos_tol)
    for g in groups:
        if max_pairwise_distance(x[g]) >= pos_tol:
            return None
    for a in range(len(groups)):
        for b in range(a + 1, len(groups)):
            gap = math.sqrt(float(np.min(np.sum((x[groups[a]][:, None] - x[groups[b]][None]) ** 2, axis=-1))))
            if gap <= 10 * pos_tol:
                return None
    return groups


def detect_consensus(
    trajectory: TrajectoryRecord, pos_tol: float = 1e-3, vel_tol: float = 1e-3, tail: float = 0.05
) -> Verdict:
    """Classify the end of a trajectory.

    Every sample in the final ``tail`` fraction must pass.  "clustered" also
    requires the partition to be the same across that window (and speeds
    below ``vel_tol`` for second-order runs), so a flock that is still
    flying apart counts as undecided.
    """
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    if trajectory.diverged:
        return Verdict("diverged")
    count = max(1, math.ceil(tail * len(trajectory)))
    window = range(len(trajectory) - count, len(trajectory))
    slow = trajectory.v is None or all(
        float(np.max(np.linalg.norm(trajectory.v[i], axis=1))) < vel_tol for i in window
    )
    final = trajectory.x[-1]
    if slow and all(max_pairwise_distance(trajectory.x[i]) < pos_tol for i in window):
        value = final.mean(axis=0)
        start = trajectory.x[0].mean(axis=0)
        return Verdict(
            "consensus",
            tuple(float(c) for c in value),
            average=bool(np.linalg.norm(value - start) < pos_tol),
        )
    if slow:
        parts = [_clustered(trajectory.x[i], pos_tol) for i in window]
        if parts[-1] is not None and len(parts[-1]) >= 2 and all(p == parts[-1] for p in parts):
            return Verdict("clustered", clusters=len(parts[-1]))
    return Verdict("undecided")
