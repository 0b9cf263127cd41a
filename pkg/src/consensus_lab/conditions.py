"""Sufficient conditions for consensus: gain bounds, initial-state inequalities, predicted agreement points.

Every inequality is strict; equality reports ``holds=False``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Law, ProtocolSpec, SystemState
from .graph import WeightedGraph, active_links, count_disconnected_pairs, vertex_connectivity
from .monitors import disagreement, pair_integrals
from .weights import WeightFunction, integral_weight, staircase_w

CRITERIA = ("COR1", "THM4", "THM5", "THM8", "THM9", "THM10", "THM11")
GAINS = "GAINS"
SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class ConditionReport:
    criterion: str
    lhs: float
    rhs: float
    holds: bool
    staircase_r: float | None = None
    notes: str = ""
    parts: tuple[ConditionReport, ...] = field(default=())

    def to_dict(self) -> dict:
        d = {
            "criterion": self.criterion,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "holds": self.holds,
            "staircase_r": self.staircase_r,
        }
        if self.notes:
            d["notes"] = self.notes
        if self.parts:
            d["parts"] = [p.to_dict() for p in self.parts]
        return d

    def line(self) -> str:
        r = "" if self.staircase_r is None else f" r={self.staircase_r:g}"
        verdict = "holds" if self.holds else "fails"
        tail = f"  # {self.notes}" if self.notes else ""
        return f"{self.criterion}{r}: lhs={self.lhs:.10g} rhs={self.rhs:.10g} {verdict}{tail}"


def _strict(name, lhs, rhs, **kw) -> ConditionReport:
    return ConditionReport(name, float(lhs), float(rhs), bool(lhs < rhs), **kw)


def check_gain_constraints(spec: ProtocolSpec, weight: WeightFunction, graph: WeightedGraph) -> ConditionReport:
    """Gain bounds for the discrete-time laws.

    Fixed-link laws use the maximum degree of G; state-dependent laws use n-1.
    """
    law = spec.law
    if law.continuous:
        raise ValueError(f"{law.value}: no gain bound applies to continuous-time laws")
    degree = graph.n - 1 if law.state_dependent else graph.max_degree
    a0 = weight.alpha0
    if law in (Law.DT1_FIXED, Law.DT1_STATEDEP):
        bound = 1.0 / (degree * a0) if degree > 0 else math.inf
        return _strict(GAINS, spec.h, bound, notes=f"h < 1/({degree}*alpha(0))")
    k1, k2, k3 = spec.k1, spec.k2, spec.k3
    damping = _strict("k2", k2, min(2.0, k1 + 1.0), notes="k2 < min{2, k1+1}")
    margin = k1 - k2 + 1.0
    if degree == 0:
        bound = math.inf
    elif margin <= 0:
        bound = -math.inf
    else:
        bound = min(
            k2 * (2.0 - k2) / (2.0 * degree * a0 * k1 * margin),
            k2 / (degree * a0 * (k1 + 1.0)),
        )
    coupling = _strict("k3", k3, bound, notes=f"degree bound {degree}")
    return ConditionReport(
        GAINS, float(k3), float(bound), damping.holds and coupling.holds, parts=(damping, coupling)
    )


def symmetric_profile(x: np.ndarray, tol: float = SYMMETRY_TOL) -> bool:
    """Scalar opinions whose sorted mirror pairs (i, n+1-i) share one midpoint."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        if x.shape[1] != 1:
            return False
        x = x[:, 0]
    s = np.sort(x)
    return bool(np.all(np.abs(s + s[::-1] - (s[0] + s[-1])) < tol))


def check_initial_condition(
    criterion: str,
    graph: WeightedGraph,
    weight: WeightFunction,
    initial: SystemState,
    staircase_r: float = 0.0,
    spec: ProtocolSpec | None = None,
) -> ConditionReport:
    """Evaluate one initial-state inequality literally.

    COR1 uses the fixed link graph and its vertex connectivity; the rest are
    state-dependent criteria over all pairs.  THM9 also needs the DT2 gains
    from ``spec``.
    """
    criterion = criterion.upper()
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}; known: {', '.join(CRITERIA)}")
    n = initial.n
    x = initial.x
    complete = np.ones((n, n)) - np.eye(n)
    stair = criterion in ("THM8", "THM9", "THM11")
    r = float(staircase_r) if stair else None
    if stair and not 0 <= r < weight.support:
        raise ValueError(f"{criterion} needs 0 <= r < R^2 = {weight.support:g}, got r={r:g}")
    if criterion != "COR1" and not weight.compact:
        raise ValueError(f"{criterion} needs a compactly supported weight (finite R)")
    R2 = weight.support

    if criterion == "COR1":
        if initial.v is None:
            raise ValueError("COR1 needs initial velocities")
        d = disagreement(initial)
        lhs = float(np.sum(d.q * d.q)) + 0.5 * pair_integrals(graph.links, d.p, weight)
        total = integral_weight(weight, math.inf)
        kappa = vertex_connectivity(graph)
        if math.isinf(total):
            return ConditionReport(
                criterion, lhs, math.inf, True, notes="vacuously holds: the weight integral diverges, so no initial-energy bound is needed"
            )
        return _strict(criterion, lhs, kappa * total, notes=f"kappa={kappa}")

    if criterion in ("THM10", "THM11"):
        if initial.m != 1 or not symmetric_profile(x):
            raise ValueError(f"{criterion} needs symmetrically distributed scalar opinions")
        if n <= 3:
            cut = count_disconnected_pairs(active_links(x, weight))
            return ConditionReport(
                criterion, float(cut), 1.0, cut < 1, r, notes="n <= 3: holds iff the initial graph is connected"
            )
        pairs = 2 * n - 3
    else:
        pairs = n - 1

    if criterion in ("THM4", "THM5", "THM10"):
        lhs = 0.5 * pair_integrals(complete, x, weight)
        if criterion == "THM5":
            if initial.v is None:
                raise ValueError("THM5 needs initial velocities")
            lhs += float(np.sum(initial.v * initial.v))
        return _strict(criterion, lhs, pairs * integral_weight(weight, R2))

    W0 = 0.5 * pair_integrals(complete, x, weight, r)
    wR = float(staircase_w(weight, r, R2))
    if criterion in ("THM8", "THM11"):
        return _strict(criterion, W0, pairs * wR, staircase_r=r)

    if spec is None or spec.law not in (Law.DT2_FIXED, Law.DT2_STATEDEP) or initial.v is None:
        raise ValueError("THM9 needs DT2 gains and initial velocities")
    k1, k2, k3 = spec.k1, spec.k2, spec.k3
    v = initial.v
    c = (k1 + 1.0 - k2) * k3
    lhs = (
        k2 * k2 * float(np.sum(x * x))
        + 2.0 * k1 * k2 * float(np.sum(x * v))
        + (k1 * k1 + k1) * float(np.sum(v * v))
        + c * W0
    )
    return _strict(criterion, lhs, c * pairs * wR, staircase_r=r)


def predict_consensus_state(spec: ProtocolSpec, initial: SystemState) -> np.ndarray:
    """Agreement point implied by the conserved quantity of each law."""
    law = spec.law
    n = initial.n
    xsum = initial.x.sum(axis=0)
    if not law.second_order:
        return xsum / n
    vsum = initial.v.sum(axis=0)
    if law in (Law.CT2_STATIC, Law.CT2_STATEDEP):
        return (vsum + spec.k * xsum) / (n * spec.k)
    if law in (Law.DT2_FIXED, Law.DT2_STATEDEP):
        U0 = vsum / spec.k3 + spec.k2 / (spec.k1 * spec.k3) * xsum
        return spec.k1 * spec.k3 / (n * spec.k2) * U0
    if np.allclose(vsum, 0.0, atol=1e-12):
        return xsum / n
    raise ValueError(
        f"{law.value}: total velocity {vsum.tolist()} is conserved and nonzero, so the group drifts; "
        "no fixed agreement point"
    )
