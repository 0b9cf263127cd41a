"""Scenario configurations: builtin experiments, initial-state generators, YAML files.

Scenario file schema (YAML)::

    name: opinion-dt-pass
    graph: {kind: state-dependent}          # or complete, or {kind: edges, edges: [[0, 1], ...]}
    weight: {family: step-confidence, R: 1.0, c: 1.0}
    protocol: {law: DT1-statedep, h: 0.0667}
    initial: {kind: evenly-spaced, n: 15, d: 0.08, origin: 0.0}
    horizon: 300                            # time for CT laws, steps for DT laws
    sample_every: 1
    monitors: [W_staircase, max_pairwise_dist]
    staircase_r: [0.1]
    conditions: [GAINS, THM11]
    expect: consensus                       # consensus | no-consensus | null
    notes: ""

Initial-state kinds: ``explicit`` (``x`` and optional ``v`` as nested
lists), ``evenly-spaced`` (``n``, ``d``, ``origin``), ``random-box`` (``n``,
``m``, ``low``, ``high``, ``seed``, optional ``velocity_low`` /
``velocity_high`` / ``center_velocities``) and ``symmetric-random`` (``n``, ``seed``, ``gap_low``,
``gap_high``, ``origin``).
"""
from __future__ import annotations

import copy
import hashlib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .conditions import check_initial_condition
from .dynamics import ProtocolSpec, SystemState
from .graph import WeightedGraph
from .weights import WeightFunction, weight_from_dict

PRNG = "numpy PCG64 (numpy.random.default_rng)"


def evenly_spaced_opinions(n: int, d: float, origin: float = 0.0) -> SystemState:
    if n < 1 or not d > 0:
        raise ValueError("need n >= 1 and d > 0")
    return SystemState(origin + d * np.arange(n, dtype=float))


def random_initial(
    n: int,
    m: int,
    low: float,
    high: float,
    seed: int,
    with_velocities: bool = False,
    velocity_low: float = -1.0,
    velocity_high: float = 1.0,
    center_velocities: bool = False,
) -> SystemState:
    """Uniform coordinates in [low, high]^m (velocities in their own box).

    ``center_velocities`` subtracts the mean velocity after the draw, so the
    total momentum is zero.
    """
    if not high >= low:
        raise ValueError("empty box")
    rng = np.random.default_rng(seed)
    x = rng.uniform(low, high, size=(n, m))
    v = None
    if with_velocities:
        v = rng.uniform(velocity_low, velocity_high, size=(n, m))
        if center_velocities:
            v = v - v.mean(axis=0)
    return SystemState(x, v)


def symmetric_random(n: int, seed: int, gap_low: float = 0.0, gap_high: float = 2.0, origin: float = 0.0) -> SystemState:
    """Scalar opinions with mirror-symmetric random gaps."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    half = rng.uniform(gap_low, gap_high, size=(n - 1 + 1) // 2)
    gaps = np.concatenate((half, half[: (n - 1) // 2][::-1]))
    return SystemState(origin + np.concatenate(([0.0], np.cumsum(gaps))))


def make_initial(spec: dict) -> SystemState:
    kind = spec["kind"]
    params = {k: v for k, v in spec.items() if k != "kind"}
    if kind == "explicit":
        return SystemState(np.array(params["x"], dtype=float), None if params.get("v") is None else np.array(params["v"], dtype=float))
    if kind == "evenly-spaced":
        return evenly_spaced_opinions(**params)
    if kind == "random-box":
        vel = any(k.startswith("velocity_") for k in params)
        return random_initial(with_velocities=vel, **params)
    if kind == "symmetric-random":
        return symmetric_random(**params)
    raise ValueError(f"unknown initial-state kind {kind!r}")


def make_graph(spec: dict, n: int) -> WeightedGraph:
    kind = spec["kind"]
    if kind == "complete":
        return WeightedGraph.complete(n)
    if kind == "state-dependent":
        return WeightedGraph.state_dependent(n)
    if kind == "edges":
        return WeightedGraph.from_edges(n, [tuple(e) for e in spec["edges"]])
    raise ValueError(f"unknown graph kind {kind!r}")


@dataclass
class Instance:
    graph: WeightedGraph
    weight: WeightFunction
    spec: ProtocolSpec
    initial: SystemState


@dataclass
class ScenarioConfig:
    name: str
    graph: dict
    weight: dict
    protocol: dict
    initial: dict
    horizon: float
    sample_every: float
    monitors: list = field(default_factory=list)
    staircase_r: list = field(default_factory=lambda: [0.0])
    conditions: list = field(default_factory=list)
    expect: str | None = None
    notes: str = ""

    def build(self) -> Instance:
        initial = make_initial(self.initial)
        return Instance(
            make_graph(self.graph, initial.n),
            weight_from_dict(self.weight),
            ProtocolSpec.from_dict(self.protocol),
            initial,
        )

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))

    @classmethod
    def from_dict(cls, d: dict) -> ScenarioConfig:
        return cls(**copy.deepcopy(d))

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None, width=120)

    @classmethod
    def loads(cls, text: str) -> ScenarioConfig:
        data = yaml.safe_load(text)
        if not isinstance(data, dict):
            raise ValueError("scenario file must hold a mapping")
        return cls.from_dict(data)

    def checksum(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    def with_changes(self, **changes) -> ScenarioConfig:
        return replace(copy.deepcopy(self), **changes)


def load_scenario(path) -> ScenarioConfig:
    return ScenarioConfig.loads(Path(path).read_text())


def save_scenario(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(cfg.dumps())


CS_INITIAL = {
    "kind": "random-box", "n": 6, "m": 2, "low": 0.0, "high": 0.5, "seed": 7,
    "velocity_low": -1.0, "velocity_high": 1.0, "center_velocities": True,
}
# shared by both H values of the dynamic-protocol pair
CS_DYNAMIC_INITIAL = {
    "kind": "random-box", "n": 6, "m": 2, "low": 0.0, "high": 0.5, "seed": 1,
    "velocity_low": -3.0, "velocity_high": 3.0, "center_velocities": True,
}
CS_DT_INITIAL = {
    "kind": "random-box", "n": 6, "m": 2, "low": 0.0, "high": 10.0, "seed": 11,
    "velocity_low": -1.0, "velocity_high": 1.0,
}
RENDEZVOUS_CT_INITIAL = {
    "kind": "random-box", "n": 6, "m": 2, "low": 0.0, "high": 0.5, "seed": 3,
    "velocity_low": -0.2, "velocity_high": 0.2,
}
RENDEZVOUS_DT_INITIAL = {
    "kind": "random-box", "n": 6, "m": 2, "low": -0.1, "high": 0.1, "seed": 5,
    "velocity_low": -0.02, "velocity_high": 0.02,
}
SMOOTHED = {"family": "smoothed-confidence", "c": 1.0, "R": 1.0, "eps": 0.1}
STEP = {"family": "step-confidence", "R": 1.0, "c": 1.0}
LINEAR_NOTE = (
    "alpha(s) = 25 - 10 s reaches zero at s = 2.5 (R ~ 1.581); a cutoff radius R = 1.5 "
    "(R^2 = 2.25) would end the support earlier. Built with the formula's own root; the THM11 "
    "verdicts at r = 0 and r = 1.8 are the same under either cutoff"
)


def _opinion_ct(name, d, expect):
    return ScenarioConfig(
        name=name,
        graph={"kind": "state-dependent"},
        weight=dict(SMOOTHED),
        protocol={"law": "CT1-statedep", "dt": 0.01},
        initial={"kind": "evenly-spaced", "n": 20, "d": d, "origin": 0.0},
        horizon=50.0,
        sample_every=0.1,
        monitors=["W_staircase", "max_pairwise_dist"],
        staircase_r=[0.0],
        conditions=["THM4", "THM10"],
        expect=expect,
    )


def _opinion_dt(name, d, expect):
    return ScenarioConfig(
        name=name,
        graph={"kind": "state-dependent"},
        weight=dict(STEP),
        protocol={"law": "DT1-statedep", "h": 1.0 / 15.0},
        initial={"kind": "evenly-spaced", "n": 15, "d": d, "origin": 0.0},
        horizon=300,
        sample_every=1,
        monitors=["W_staircase", "max_pairwise_dist"],
        staircase_r=[0.1],
        conditions=["GAINS", "THM8", "THM11"],
        expect=expect,
    )


def _cs_dynamic(name, H, expect):
    return ScenarioConfig(
        name=name,
        graph={"kind": "complete"},
        weight={"family": "cucker-smale", "H": H, "beta": 3.0},
        protocol={"law": "CT2-dynamic", "dt": 0.002},
        initial=dict(CS_DYNAMIC_INITIAL),
        horizon=100.0,
        sample_every=0.1,
        monitors=["V_ct2_dynamic", "max_pairwise_dist", "max_speed"],
        conditions=["COR1"],
        expect=expect,
        notes="dt = 0.002: with H = 150 the linearised coupling near consensus reaches n*H = 900, "
        "beyond the RK4 stability limit at dt = 0.01",
    )


def _builtins() -> dict[str, ScenarioConfig]:
    table = [
        ScenarioConfig(
            name="cs-ct2-static",
            graph={"kind": "complete"},
            weight={"family": "cucker-smale", "H": 1.0, "beta": 3.0},
            protocol={"law": "CT2-static", "k": 1.0, "dt": 0.01},
            initial=dict(CS_INITIAL),
            horizon=100.0,
            sample_every=0.1,
            monitors=["V_ct2_static", "max_pairwise_dist", "max_speed"],
            conditions=[],
            expect="consensus",
        ),
        ScenarioConfig(
            name="cs-dt2",
            graph={"kind": "complete"},
            weight={"family": "cucker-smale", "H": 1.0, "beta": 1.0},
            protocol={"law": "DT2-fixed", "k1": 1.0, "k2": 1.5, "k3": 0.14},
            initial=dict(CS_DT_INITIAL),
            horizon=2000,
            sample_every=10,
            monitors=["V_dt2", "max_pairwise_dist", "max_speed"],
            staircase_r=[0.0],
            conditions=["GAINS"],
            expect="consensus",
        ),
        _cs_dynamic("cs-ct2-dynamic-fail", 1.0, "no-consensus"),
        _cs_dynamic("cs-ct2-dynamic-pass", 150.0, "consensus"),
        _opinion_ct("opinion-ct-fail", 0.2, "no-consensus"),
        _opinion_ct("opinion-ct-pass", 0.05, "consensus"),
        _opinion_dt("opinion-dt-fail", 0.35, "no-consensus"),
        _opinion_dt("opinion-dt-pass", 0.08, "consensus"),
        ScenarioConfig(
            name="opinion-dt-linear",
            graph={"kind": "state-dependent"},
            weight={"family": "linear-decay", "intercept": 25.0, "slope": 10.0, "cutoff": None},
            protocol={"law": "DT1-statedep", "h": 1.0 / (25.0 * 20)},
            initial={"kind": "evenly-spaced", "n": 20, "d": 0.07, "origin": 0.0},
            horizon=300,
            sample_every=1,
            monitors=["W_staircase", "max_pairwise_dist"],
            staircase_r=[0.0, 1.8],
            conditions=["GAINS", "THM11"],
            expect="consensus",
            notes=LINEAR_NOTE,
        ),
        ScenarioConfig(
            name="rendezvous-ct",
            graph={"kind": "state-dependent"},
            weight=dict(SMOOTHED),
            protocol={"law": "CT2-statedep", "k": 1.0, "dt": 0.01},
            initial=dict(RENDEZVOUS_CT_INITIAL),
            horizon=50.0,
            sample_every=0.1,
            monitors=["V_ct2_static", "max_pairwise_dist", "max_speed"],
            conditions=["THM5"],
            expect="consensus",
        ),
        ScenarioConfig(
            name="rendezvous-dt",
            graph={"kind": "state-dependent"},
            weight=dict(STEP),
            protocol={"law": "DT2-statedep", "k1": 1.0, "k2": 1.5, "k3": 0.14},
            initial=dict(RENDEZVOUS_DT_INITIAL),
            horizon=2000,
            sample_every=10,
            monitors=["V_dt2", "max_pairwise_dist", "max_speed"],
            staircase_r=[0.1],
            conditions=["GAINS", "THM9"],
            expect="consensus",
        ),
    ]
    return {cfg.name: cfg for cfg in table}


BUILTINS = _builtins()
ALIASES = {
    "cs-ct2-dynamic": "cs-ct2-dynamic-pass",
    "opinion-ct": "opinion-ct-pass",
    "opinion-dt": "opinion-dt-pass",
    "rendezvous": "rendezvous-ct",
}

# builtins whose initial draw must (or must not) satisfy a criterion
_PINNED = {
    "cs-ct2-dynamic-pass": ("COR1", 0.0, True),
    "cs-ct2-dynamic-fail": ("COR1", 0.0, False),
    "rendezvous-ct": ("THM5", 0.0, True),
    "rendezvous-dt": ("THM9", 0.1, True),
}


def builtin_names() -> list[str]:
    return list(BUILTINS)


def build_builtin(name: str) -> ScenarioConfig:
    name = ALIASES.get(name, name)
    try:
        cfg = copy.deepcopy(BUILTINS[name])
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; builtins: {', '.join(BUILTINS)}") from None
    if name in _PINNED:
        criterion, r, want = _PINNED[name]
        inst = cfg.build()
        report = check_initial_condition(criterion, inst.graph, inst.weight, inst.initial, r, inst.spec)
        if report.holds != want:
            raise RuntimeError(
                f"{name}: pinned initial state gives {criterion} holds={report.holds}, expected {want}; "
                "change the seed"
            )
    return cfg


def resolve(scenario) -> ScenarioConfig:
    """A builtin name, an alias, or a path to a scenario file."""
    if isinstance(scenario, ScenarioConfig):
        return scenario
    key = str(scenario)
    if key in BUILTINS or key in ALIASES:
        return build_builtin(key)
    path = Path(key)
    if path.is_file():
        return load_scenario(path)
    raise ValueError(f"{key!r} is neither a builtin scenario nor a readable file")
