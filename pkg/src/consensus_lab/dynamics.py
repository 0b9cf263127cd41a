"""Agent dynamics under the nine consensus laws.

Continuous-time laws are integrated with fixed-step classical RK4, the
weights being re-evaluated at every stage.  Discrete-time laws apply their
one-step map exactly.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .graph import WeightedGraph, weight_matrix
from .weights import WeightFunction

BLOWUP_LIMIT = 1e12


class Law(str, enum.Enum):
    CT1_FIXED = "CT1-fixed"
    CT2_STATIC = "CT2-static"
    CT2_DYNAMIC = "CT2-dynamic"
    CT1_STATEDEP = "CT1-statedep"
    CT2_STATEDEP = "CT2-statedep"
    DT1_FIXED = "DT1-fixed"
    DT2_FIXED = "DT2-fixed"
    DT1_STATEDEP = "DT1-statedep"
    DT2_STATEDEP = "DT2-statedep"

    @property
    def continuous(self) -> bool:
        return self.value.startswith("CT")

    @property
    def second_order(self) -> bool:
        return self.value[2] == "2"

    @property
    def state_dependent(self) -> bool:
        return self.value.endswith("statedep")


# gains each law needs
_GAINS = {
    Law.CT1_FIXED: (),
    Law.CT2_STATIC: ("k",),
    Law.CT2_DYNAMIC: (),
    Law.CT1_STATEDEP: (),
    Law.CT2_STATEDEP: ("k",),
    Law.DT1_FIXED: ("h",),
    Law.DT2_FIXED: ("k1", "k2", "k3"),
    Law.DT1_STATEDEP: ("h",),
    Law.DT2_STATEDEP: ("k1", "k2", "k3"),
}


@dataclass(frozen=True)
class ProtocolSpec:
    law: Law
    k: float | None = None
    k1: float | None = None
    k2: float | None = None
    k3: float | None = None
    h: float | None = None
    dt: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "law", Law(self.law))
        for name in _GAINS[self.law]:
            val = getattr(self, name)
            if val is None or not val > 0:
                raise ValueError(f"{self.law.value} needs a positive gain {name}, got {val}")
        if self.law.continuous and not self.dt > 0:
            raise ValueError("dt must be positive for continuous-time laws")

    @property
    def gains(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in _GAINS[self.law]}

    def to_dict(self) -> dict:
        d = {"law": self.law.value, **self.gains}
        if self.law.continuous:
            d["dt"] = self.dt
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ProtocolSpec:
        return cls(**d)


def _as_matrix(a, n: int | None = None) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"state must be (n, m), got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"expected {n} agents, got {arr.shape[0]}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SystemState:
    """Positions x (n, m) and optional velocities v (n, m)."""

    x: np.ndarray
    v: np.ndarray | None = None

    def __post_init__(self):
        x = _as_matrix(self.x)
        object.__setattr__(self, "x", x)
        if self.v is not None:
            v = _as_matrix(self.v, x.shape[0])
            if v.shape != x.shape:
                raise ValueError(f"velocity shape {v.shape} does not match positions {x.shape}")
            object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def m(self) -> int:
        return self.x.shape[1]

    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x)) and (self.v is None or np.all(np.isfinite(self.v))))

    def translated(self, shift) -> SystemState:
        return SystemState(self.x + np.asarray(shift, dtype=float), self.v)

    def __eq__(self, other):
        if not isinstance(other, SystemState):
            return NotImplemented
        if (self.v is None) != (other.v is None):
            return False
        return np.array_equal(self.x, other.x) and (self.v is None or np.array_equal(self.v, other.v))


class IntegrationBlowup(RuntimeError):
    """Raised when the state leaves the finite range; carries the partial trajectory."""

    def __init__(self, time: float, trajectory: TrajectoryRecord | None = None):
        super().__init__(f"state diverged at t={time:g}")
        self.time = time
        self.trajectory = trajectory


def _links(spec: ProtocolSpec, graph: WeightedGraph) -> np.ndarray:
    if spec.law.state_dependent:
        return np.ones((graph.n, graph.n)) - np.eye(graph.n)
    return graph.links


def _check(spec: ProtocolSpec, graph: WeightedGraph, weight: WeightFunction, state: SystemState):
    if state.n != graph.n:
        raise ValueError(f"state has {state.n} agents, graph has {graph.n}")
    if spec.law.second_order and state.v is None:
        raise ValueError(f"{spec.law.value} is second-order and needs velocities")
    if not spec.law.second_order and state.v is not None:
        raise ValueError(f"{spec.law.value} is first-order; state must not carry velocities")
    if spec.law.continuous and not weight.continuous:
        raise ValueError(f"{weight.family} is discontinuous; use it with a discrete-time law")


def _rhs_input(law: Law, G, weight, x, v, spec: ProtocolSpec) -> np.ndarray:
    A = weight_matrix(G, x, weight)
    deg = A.sum(axis=1)[:, None]
    Lx = deg * x - A @ x
    if law in (Law.CT1_FIXED, Law.CT1_STATEDEP):
        return -Lx
    if law in (Law.CT2_STATIC, Law.CT2_STATEDEP):
        return -spec.k * v - Lx
    if law is Law.CT2_DYNAMIC:
        return -(deg * v - A @ v) - Lx
    if law in (Law.DT1_FIXED, Law.DT1_STATEDEP):
        return -spec.h * Lx
    return -spec.k2 * v - spec.k3 * Lx


def control_input(spec: ProtocolSpec, graph: WeightedGraph, weight: WeightFunction, state: SystemState) -> np.ndarray:
    """Control u (n, m) of the selected law at ``state``."""
    _check(spec, graph, weight, state)
    return _rhs_input(spec.law, _links(spec, graph), weight, state.x, state.v, spec)


def step_continuous(spec: ProtocolSpec, graph: WeightedGraph, weight: WeightFunction, state: SystemState) -> SystemState:
    if not spec.law.continuous:
        raise ValueError(f"{spec.law.value} is a discrete-time law")
    _check(spec, graph, weight, state)
    x, v = _rk4(spec, _links(spec, graph), weight, state.x, state.v)
    return SystemState(x, v)


def _rk4(spec, G, weight, x, v):
    dt, law = spec.dt, spec.law
    if v is None:
        def f(y):
            return _rhs_input(law, G, weight, y, None, spec)

        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), None

    def g(y, w):
        return w, _rhs_input(law, G, weight, y, w, spec)

    a1, b1 = g(x, v)
    a2, b2 = g(x + 0.5 * dt * a1, v + 0.5 * dt * b1)
    a3, b3 = g(x + 0.5 * dt * a2, v + 0.5 * dt * b2)
    a4, b4 = g(x + dt * a3, v + dt * b3)
    return (
        x + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4),
        v + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4),
    )


def _map(spec, G, weight, x, v):
    u = _rhs_input(spec.law, G, weight, x, v, spec)
    if v is None:
        return x + u, None
    return x + spec.k1 * v, v + u


def step_discrete(spec: ProtocolSpec, graph: WeightedGraph, weight: WeightFunction, state: SystemState) -> SystemState:
    if spec.law.continuous:
        raise ValueError(f"{spec.law.value} is a continuous-time law")
    _check(spec, graph, weight, state)
    x, v = _map(spec, _links(spec, graph), weight, state.x, state.v)
    return SystemState(x, v)


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    x: np.ndarray  # (samples, n, m)
    v: np.ndarray | None = None
    monitors: dict[str, np.ndarray] = field(default_factory=dict)
    diverged: bool = False
    blowup_time: float | None = None

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> SystemState:
        return SystemState(self.x[i], None if self.v is None else self.v[i])

    @property
    def initial(self) -> SystemState:
        return self.state(0)

    @property
    def final(self) -> SystemState:
        return self.state(-1)


def step_count(spec: ProtocolSpec, horizon: float) -> int:
    """Number of steps covering ``horizon`` (a duration for CT laws, a step count for DT laws)."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if spec.law.continuous:
        return int(round(horizon / spec.dt))
    if float(horizon) != int(horizon):
        raise ValueError("discrete-time horizon must be a whole number of steps")
    return int(horizon)


def simulate(
    spec: ProtocolSpec,
    graph: WeightedGraph,
    weight: WeightFunction,
    initial: SystemState,
    horizon: float,
    sample_every: float | None = None,
    monitors=(),
    staircase_r: float = 0.0,
) -> TrajectoryRecord:
    """Iterate the law from ``initial`` and record samples.

    ``horizon`` and ``sample_every`` are durations for continuous-time laws
    and step counts for discrete-time laws.  The final step is always
    sampled.  On divergence an :class:`IntegrationBlowup` is raised with the
    samples gathered so far attached.
    """
    from .monitors import evaluate_monitor

    _check(spec, graph, weight, initial)
    steps = step_count(spec, horizon)
    if sample_every is None:
        every = 1
    else:
        every = max(1, step_count(spec, sample_every)) if spec.law.continuous else max(1, int(sample_every))
    G = _links(spec, graph)
    scale = spec.dt if spec.law.continuous else 1.0
    advance = _rk4 if spec.law.continuous else _map
    monitors = list(monitors)

    times, xs, vs = [], [], []
    mon: dict[str, list[float]] = {name: [] for name in monitors}

    def record(i, x, v):
        times.append(i * scale)
        xs.append(x)
        vs.append(v)
        st = SystemState(x, v)
        for name in monitors:
            mon[name].append(evaluate_monitor(name, graph, weight, spec, st, staircase_r))

    def bundle(diverged=False, at=None):
        return TrajectoryRecord(
            times=np.array(times),
            x=np.array(xs),
            v=None if initial.v is None else np.array(vs),
            monitors={k: np.array(val) for k, val in mon.items()},
            diverged=diverged,
            blowup_time=at,
        )

    x, v = initial.x, initial.v
    record(0, x, v)
    for i in range(1, steps + 1):
        x, v = advance(spec, G, weight, x, v)
        big = np.max(np.abs(x), initial=0.0)
        if v is not None:
            big = max(big, np.max(np.abs(v), initial=0.0))
        if not math.isfinite(big) or big > BLOWUP_LIMIT:
            raise IntegrationBlowup(i * scale, bundle(True, i * scale))
        if i % every == 0 or i == steps:
            record(i, x, v)
    return bundle()


def with_gain(spec: ProtocolSpec, **changes) -> ProtocolSpec:
    return replace(spec, **changes)
