"""Command-line entry point: ``consensus-lab {run,check,sweep,list}``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .conditions import CRITERIA, GAINS, ConditionReport, check_gain_constraints, check_initial_condition, predict_consensus_state
from .dynamics import IntegrationBlowup, TrajectoryRecord, simulate
from .monitors import detect_consensus, max_pairwise_distance
from .scenarios import ALIASES, BUILTINS, ScenarioConfig, resolve

OUTPUT_ENV = "CONSENSUS_LAB_OUTPUT"
STAIRCASE_CRITERIA = ("THM8", "THM9", "THM11")
SWEEP_PARAMETERS = ("d", "H", "staircase_r", "h")


class ConfigError(Exception):
    """Malformed input: the only thing that maps to a nonzero exit."""


@dataclass
class RunSummary:
    scenario: str
    verdict: str
    clusters: int | None
    final_max_pairwise_distance: float
    predicted: list[float] | None
    observed: list[float] | None
    abs_error: float | None
    conditions: list[dict] = field(default_factory=list)
    expect: str | None = None
    checksum: str = ""
    blowup_time: float | None = None
    notes: str = ""
    wall_clock_s: float = 0.0

    def to_json(self) -> str:
        # wall-clock time is left out so identical runs give identical files
        d = asdict(self)
        d.pop("wall_clock_s")
        return json.dumps(d, indent=2, sort_keys=False) + "\n"

    def text(self) -> str:
        lines = [f"scenario: {self.scenario}", f"verdict: {self.verdict}"]
        if self.expect:
            lines.append(f"expected: {self.expect}")
        lines.append(f"final max pairwise distance: {self.final_max_pairwise_distance:.6g}")
        if self.predicted is not None:
            lines.append(f"predicted consensus value: {_fmt_vec(self.predicted)}")
        if self.observed is not None:
            lines.append(f"observed consensus value: {_fmt_vec(self.observed)}")
        if self.abs_error is not None:
            lines.append(f"absolute error: {self.abs_error:.3g}")
        for c in self.conditions:
            lines.append("condition " + _report_text(c))
        return "\n".join(lines)


def _fmt_vec(v) -> str:
    return "(" + ", ".join(f"{c:.10g}" for c in v) + ")"


def _num(v) -> str:
    return format(v, ".10g") if isinstance(v, (int, float)) else str(v)


def _report_text(d: dict) -> str:
    r = "" if d.get("staircase_r") is None else f" r={d['staircase_r']:g}"
    if "error" in d:
        return f"{d['criterion']}{r}: error: {d['error']}"
    verdict = "holds" if d["holds"] else "fails"
    tail = f"  # {d['notes']}" if d.get("notes") else ""
    return f"{d['criterion']}{r}: lhs={_num(d['lhs'])} rhs={_num(d['rhs'])} {verdict}{tail}"


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_json_safe(v) for v in x]
    return x


def _g17(x: float) -> str:
    return format(float(x), ".17g")


# -- configuration overrides -------------------------------------------------


def apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    changes = {}
    if getattr(args, "dt", None) is not None:
        protocol = dict(cfg.protocol, dt=args.dt)
        changes["protocol"] = protocol
    if getattr(args, "horizon", None) is not None:
        changes["horizon"] = args.horizon
    if getattr(args, "seed", None) is not None:
        if "seed" not in cfg.initial:
            raise ConfigError(f"{cfg.name}: initial state kind {cfg.initial['kind']!r} takes no seed")
        changes["initial"] = dict(cfg.initial, seed=args.seed)
    if getattr(args, "staircase_r", None):
        changes["staircase_r"] = list(args.staircase_r)
    return cfg.with_changes(**changes) if changes else cfg


def _resolve(name: str) -> ScenarioConfig:
    try:
        return resolve(name)
    except (ValueError, KeyError, TypeError, OSError) as exc:
        raise ConfigError(str(exc)) from exc
    except Exception as exc:  # yaml errors and the like
        raise ConfigError(f"cannot read scenario {name!r}: {exc}") from exc


def _build(cfg: ScenarioConfig):
    try:
        return cfg.build()
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"{cfg.name}: {exc}") from exc


# -- condition evaluation ----------------------------------------------------


def evaluate_conditions(cfg: ScenarioConfig, inst, criteria=None, radii=None) -> list[dict]:
    """One report per (criterion, r); failures of applicability are reported, not raised."""
    criteria = cfg.conditions if criteria is None else criteria
    radii = cfg.staircase_r if radii is None else radii
    out = []
    for crit in criteria:
        crit = crit.upper()
        if crit == GAINS:
            out.append(_safe(GAINS, None, lambda: check_gain_constraints(inst.spec, inst.weight, inst.graph)))
            continue
        if crit not in CRITERIA:
            out.append({"criterion": crit, "staircase_r": None, "error": "unknown criterion"})
            continue
        for r in radii if crit in STAIRCASE_CRITERIA else [None]:
            out.append(
                _safe(
                    crit,
                    r,
                    lambda c=crit, r=r: check_initial_condition(
                        c, inst.graph, inst.weight, inst.initial, 0.0 if r is None else r, inst.spec
                    ),
                )
            )
    return out


def _safe(crit, r, fn) -> dict:
    try:
        report: ConditionReport = fn()
    except ValueError as exc:
        return {"criterion": crit, "staircase_r": r, "error": str(exc)}
    return report.to_dict()


# -- run ---------------------------------------------------------------------


def run_scenario(cfg: ScenarioConfig, pos_tol=1e-3, vel_tol=1e-3) -> tuple[RunSummary, TrajectoryRecord]:
    inst = _build(cfg)
    started = time.perf_counter()
    r_monitor = max(cfg.staircase_r) if cfg.staircase_r else 0.0
    try:
        traj = simulate(inst.spec, inst.graph, inst.weight, inst.initial, cfg.horizon, cfg.sample_every, cfg.monitors, r_monitor)
    except IntegrationBlowup as exc:
        traj = exc.trajectory
    except ValueError as exc:
        raise ConfigError(f"{cfg.name}: {exc}") from exc
    verdict = detect_consensus(traj, pos_tol, vel_tol)
    try:
        predicted = [float(c) for c in predict_consensus_state(inst.spec, inst.initial)]
    except ValueError:
        predicted = None
    observed = list(verdict.value) if verdict.value is not None else None
    err = None
    if predicted is not None and observed is not None:
        err = float(np.max(np.abs(np.array(predicted) - np.array(observed))))
    summary = RunSummary(
        scenario=cfg.name,
        verdict=verdict.kind,
        clusters=verdict.clusters,
        final_max_pairwise_distance=max_pairwise_distance(traj.x[-1]),
        predicted=predicted,
        observed=observed,
        abs_error=err,
        conditions=[_json_safe(c) for c in evaluate_conditions(cfg, inst)],
        expect=cfg.expect,
        checksum=cfg.checksum(),
        blowup_time=traj.blowup_time,
        notes=cfg.notes,
    )
    summary.wall_clock_s = time.perf_counter() - started
    return summary, traj


def trajectory_header(traj: TrajectoryRecord) -> list[str]:
    _, n, m = traj.x.shape
    cols = ["time"] + [f"x_{i}_{d}" for i in range(n) for d in range(m)]
    if traj.v is not None:
        cols += [f"v_{i}_{d}" for i in range(n) for d in range(m)]
    return cols + list(traj.monitors)


def write_trajectory(traj: TrajectoryRecord, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(traj))
        mons = list(traj.monitors.values())
        for i, t in enumerate(traj.times):
            row = [_g17(t)] + [_g17(c) for c in traj.x[i].ravel()]
            if traj.v is not None:
                row += [_g17(c) for c in traj.v[i].ravel()]
            row += [_g17(m[i]) for m in mons]
            w.writerow(row)


def _output_dir(args) -> Path:
    out = args.output or os.environ.get(OUTPUT_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_run(args) -> int:
    cfg = apply_overrides(_resolve(args.scenario), args)
    summary, traj = run_scenario(cfg, args.pos_tol, args.vel_tol)
    out = _output_dir(args)
    write_trajectory(traj, out / "trajectory.csv")
    (out / "summary.json").write_text(summary.to_json())
    print(summary.text())
    print(f"wall clock: {summary.wall_clock_s:.3f} s", file=sys.stderr)
    return 0


def cmd_check(args) -> int:
    cfg = apply_overrides(_resolve(args.scenario), args)
    inst = _build(cfg)
    criteria = args.criteria or cfg.conditions
    reports = [_json_safe(r) for r in evaluate_conditions(cfg, inst, criteria)]
    for r in reports:
        print(_report_text(r))
    if args.output or os.environ.get(OUTPUT_ENV):
        payload = {"scenario": cfg.name, "reports": reports}
        (_output_dir(args) / "check.json").write_text(json.dumps(payload, indent=2) + "\n")
    return 0


def vary(cfg: ScenarioConfig, parameter: str, value: float) -> ScenarioConfig:
    """Copy of ``cfg`` with one swept parameter replaced."""
    if parameter == "d":
        if cfg.initial.get("kind") != "evenly-spaced":
            raise ConfigError(f"{cfg.name}: d applies to evenly spaced opinions only")
        return cfg.with_changes(initial=dict(cfg.initial, d=value))
    if parameter == "H":
        if cfg.weight.get("family") != "cucker-smale":
            raise ConfigError(f"{cfg.name}: H applies to the Cucker-Smale weight only")
        return cfg.with_changes(weight=dict(cfg.weight, H=value))
    if parameter == "h":
        if "h" not in cfg.protocol:
            raise ConfigError(f"{cfg.name}: h applies to first-order discrete-time laws only")
        return cfg.with_changes(protocol=dict(cfg.protocol, h=value))
    if parameter == "staircase_r":
        if not any(c.upper() in STAIRCASE_CRITERIA for c in cfg.conditions):
            raise ConfigError(f"{cfg.name}: no staircase criterion to sweep r over")
        return cfg.with_changes(staircase_r=[value])
    raise ConfigError(f"unknown sweep parameter {parameter!r}; choose from {', '.join(SWEEP_PARAMETERS)}")


def sweep(cfg: ScenarioConfig, parameter: str, values, pos_tol=1e-3, vel_tol=1e-3) -> list[dict]:
    rows = []
    for value in sorted(values):
        summary, _ = run_scenario(vary(cfg, parameter, value), pos_tol, vel_tol)
        row = {parameter: value}
        for c in summary.conditions:
            key = c["criterion"] if c.get("staircase_r") is None else f"{c['criterion']}@r={c['staircase_r']:g}"
            row[key] = "error" if "error" in c else ("holds" if c["holds"] else "fails")
        row["verdict"] = summary.verdict
        rows.append(row)
    return rows


def cmd_sweep(args) -> int:
    cfg = apply_overrides(_resolve(args.scenario), args)
    vary(cfg, args.parameter, 0.0 if not args.values else args.values[0])  # applicability check
    rows = sweep(cfg, args.parameter, args.values, args.pos_tol, args.vel_tol)
    header = [args.parameter]
    for row in rows:
        header += [k for k in row if k not in header]
    out = _output_dir(args)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (_g17(v) if isinstance(v, float) else v) for k, v in row.items()})
    for row in rows:
        print(", ".join(f"{k}={v}" for k, v in row.items()))
    return 0


def cmd_list(args) -> int:
    if args.show:
        print(_resolve(args.show).dumps(), end="")
        return 0
    reverse = {}
    for alias, target in ALIASES.items():
        reverse.setdefault(target, []).append(alias)
    for name, cfg in BUILTINS.items():
        extra = f"  (alias: {', '.join(reverse[name])})" if name in reverse else ""
        print(f"{name:22s} {cfg.protocol['law']:13s} {cfg.weight['family']}{extra}")
    return 0


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="consensus-lab", description="State-dependent consensus protocol simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sim=True):
        p.add_argument("scenario", help="builtin name, alias, or path to a YAML scenario file")
        p.add_argument("--output", help=f"output directory (default: ${OUTPUT_ENV} or the working directory)")
        p.add_argument("--seed", type=int, help="seed for random initial states")
        p.add_argument("--staircase-r", type=float, action="append", dest="staircase_r", help="staircase grid width (repeatable)")
        if sim:
            p.add_argument("--dt", type=float, help="RK4 step for continuous-time laws")
            p.add_argument("--horizon", type=float, help="duration (CT) or number of steps (DT)")
            p.add_argument("--pos-tol", type=float, default=1e-3, help="max pairwise position spread for a consensus verdict")
            p.add_argument("--vel-tol", type=float, default=1e-3, help="max velocity norm for a consensus verdict")

    p = sub.add_parser("run", help="simulate a scenario; writes trajectory.csv and summary.json")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="evaluate consensus criteria on the initial state")
    common(p, sim=False)
    p.add_argument("criteria", nargs="*", help=f"criteria ({GAINS}, {', '.join(CRITERIA)}); default: the scenario's own")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="vary one parameter; writes sweep.csv")
    common(p)
    p.add_argument("parameter", choices=SWEEP_PARAMETERS)
    p.add_argument("values", nargs="*", type=float)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("list", help="list builtin scenarios")
    p.add_argument("--show", metavar="NAME", help="print one scenario as YAML")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
