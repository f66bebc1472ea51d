"""Command-line sweeps that regenerate the figure data as CSV.

Example::

    eh-underlay --preset fig4 --out fig4.csv
    eh-underlay --sweep gamma_th_dbm -90 -30 7 --mu-g 1e-5 --out custom.csv

Powers are given in dBm (thresholds, noise) or dBW (primary transmitter) and
channel means as linear gains. Every run is seeded, so the same command line
writes the same CSV bytes.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import SystemParams, dbm_to_watts, dbw_to_watts, watts_to_dbm, watts_to_dbw
from .montecarlo import ScenarioResult, run_scenario

__all__ = [
    "CSV_COLUMNS",
    "TRACE_COLUMNS",
    "SWEEP_AXES",
    "POLICIES",
    "PRESETS",
    "ExperimentPlan",
    "PointResult",
    "UsageError",
    "build_parser",
    "parse_args",
    "apply_setting",
    "run_plan",
    "format_rows",
    "write_csv",
    "main",
]

CSV_COLUMNS = (
    "preset", "sweep_axis", "sweep_value", "policy", "lambda", "avg_rate_bps_hz", "p_he_dbm",
    "outage_fraction", "epsilon", "gamma_th_dbm", "pt_dbw", "mu_x", "mu_y", "mu_g", "mu_z",
    "m_slots", "m_train", "seed",
)
TRACE_COLUMNS = (
    "preset", "sweep_value", "curve", "policy", "slot_index", "x", "y", "g", "z",
    "alpha", "indicator", "rate_bps_hz", "tx_power_w",
)
SWEEP_AXES = ("mu_g", "mu_z", "epsilon", "gamma_th_dbm", "mu_x", "mu_y", "pt_dbw")
POLICIES = ("optimal", "fixed", "unconstrained")
_LOG_AXES = {"mu_g", "mu_z", "mu_x", "mu_y"}


class UsageError(ValueError):
    """Bad command line; the message names the offending flag."""


def apply_setting(params: SystemParams, axis: str, value: float) -> SystemParams:
    """Return ``params`` with one I/O-unit setting applied."""
    if axis == "gamma_th_dbm":
        return dataclasses.replace(params, gamma_th=float(dbm_to_watts(value)))
    if axis == "pt_dbw":
        return dataclasses.replace(params, pt=float(dbw_to_watts(value)))
    if axis == "noise_dbm":
        return dataclasses.replace(params, noise=float(dbm_to_watts(value)))
    if axis in ("mu_x", "mu_y", "mu_g", "mu_z", "epsilon"):
        return dataclasses.replace(params, **{axis: float(value)})
    raise UsageError(f"unknown parameter {axis!r}")


@dataclass(frozen=True)
class ExperimentPlan:
    base: SystemParams
    sweep_axis: str
    sweep_values: tuple[float, ...]
    policies: tuple[str, ...] = POLICIES
    output_path: Path | None = None
    preset: str = "custom"
    # each curve is a set of overrides applied on top of ``base``
    curves: tuple[tuple[tuple[str, float], ...], ...] = ((),)
    trace: int = 0
    in_sample: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.sweep_axis not in SWEEP_AXES:
            raise UsageError(f"--sweep: unknown axis {self.sweep_axis!r}, choose from {', '.join(SWEEP_AXES)}")
        vals = np.asarray(self.sweep_values, dtype=float)
        if vals.size == 0:
            raise UsageError("--sweep: no sweep values")
        if not np.all(np.isfinite(vals)):
            raise UsageError("--sweep: sweep values must be finite")
        steps = np.diff(vals)
        if vals.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise UsageError("--sweep: sweep values must be strictly ordered")
        bad = [p for p in self.policies if p not in POLICIES]
        if bad or not self.policies:
            raise UsageError(f"--policies: unknown policy {bad[0] if bad else ''!r}")
        self.points()  # rejects invalid parameter combinations up front

    def curve_params(self, curve) -> SystemParams:
        params = self.base
        for axis, value in curve:
            params = apply_setting(params, axis, value)
        return params

    def points(self) -> list[tuple[int, float, SystemParams]]:
        out = []
        for ci, curve in enumerate(self.curves):
            base = self.curve_params(curve)
            for v in self.sweep_values:
                try:
                    out.append((ci, float(v), apply_setting(base, self.sweep_axis, v)))
                except ValueError as exc:
                    raise UsageError(f"--sweep: {exc}") from None
        return out


@dataclass(frozen=True)
class PointResult:
    curve: int
    sweep_value: float
    params: SystemParams
    result: ScenarioResult


# Values stated in the figure captions are pinned; sweep ranges and curve
# families the captions leave open are documented choices (see README).
PRESETS: dict[str, dict] = {
    "fig3": dict(
        base=dict(gamma_th_dbm=-90.0, epsilon=0.01, pt_dbw=30.0),
        sweep=("mu_g", tuple(np.geomspace(1e-8, 1e-2, 7))),
        curves=(
            (("mu_x", 1e-3), ("mu_y", 1e-9), ("mu_z", 1e-9)),  # best case
            (("mu_x", 1e-3), ("mu_y", 1e-6), ("mu_z", 1e-9)),  # interference-limited receiver
            (("mu_x", 1e-5), ("mu_y", 1e-6), ("mu_z", 1e-6)),  # worst case
        ),
    ),
    "fig4": dict(
        base=dict(gamma_th_dbm=-90.0, epsilon=0.01, pt_dbw=30.0, mu_x=1e-3, mu_y=1e-7),
        sweep=("mu_g", tuple(np.geomspace(1e-10, 1e-8, 5))),
        curves=((("mu_z", 1e-7),), (("mu_z", 1e-8),), (("mu_z", 1e-9),)),
    ),
    "fig5": dict(
        base=dict(gamma_th_dbm=-90.0, pt_dbw=30.0, mu_x=1e-5, mu_y=1e-7, mu_z=1e-6),
        sweep=("epsilon", (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99)),
        curves=((("mu_g", 1e-5),), (("mu_g", 1e-4),), (("mu_g", 1e-3),)),
    ),
    "fig6": dict(
        base=dict(epsilon=0.01, pt_dbw=30.0, mu_x=1e-5, mu_y=1e-7, mu_z=1e-6),
        sweep=("gamma_th_dbm", tuple(np.linspace(-90.0, -30.0, 13))),
        curves=((("mu_g", 1e-7),), (("mu_g", 1e-6),), (("mu_g", 1e-5),)),
    ),
}


def _sweep_values(axis: str, spec: list[str]) -> tuple[float, ...]:
    if len(spec) == 1:
        return tuple(float(v) for v in spec[0].split(",") if v.strip())
    if len(spec) == 3:
        start, stop, n = float(spec[0]), float(spec[1]), int(spec[2])
        if n < 1:
            raise UsageError("--sweep: point count must be positive")
        if axis in _LOG_AXES:
            if start <= 0 or stop <= 0:
                raise UsageError("--sweep: channel-mean sweeps need positive bounds")
            return tuple(np.geomspace(start, stop, n))
        return tuple(np.linspace(start, stop, n))
    raise UsageError("--sweep expects AXIS START STOP POINTS or AXIS V1,V2,...")


def _curve(text: str) -> tuple[tuple[str, float], ...]:
    items = []
    for part in text.split(","):
        key, sep, value = part.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in ("mu_x", "mu_y", "mu_g", "mu_z", "epsilon", "gamma_th_dbm", "pt_dbw"):
            raise UsageError(f"--curve: cannot parse {part!r}")
        items.append((key, float(value)))
    return tuple(items)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="eh-underlay", description="Optimal harvest/transmit time sharing for an underlay cognitive radio link.")
    p.add_argument("--preset", choices=sorted(PRESETS), help="figure parameterization to start from")
    p.add_argument("--sweep", nargs="+", metavar="ARG", help="AXIS START STOP POINTS, or AXIS V1,V2,...")
    p.add_argument("--mu-x", type=float)
    p.add_argument("--mu-y", type=float)
    p.add_argument("--mu-g", type=float)
    p.add_argument("--mu-z", type=float)
    p.add_argument("--gamma-th-dbm", type=float)
    p.add_argument("--noise-dbm", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--pt-dbw", type=float)
    p.add_argument("--slots", type=int, help="evaluation slots M (default 10000)")
    p.add_argument("--train-slots", type=int, help="training slots (default: same as --slots)")
    p.add_argument("--seed", type=int)
    p.add_argument("--policies", default=",".join(POLICIES), help="comma list of optimal,fixed,unconstrained")
    p.add_argument("--curve", action="append", metavar="K=V[,K=V...]",
                   help="repeatable curve override group, e.g. mu_x=1e-3,mu_y=1e-9,mu_z=1e-9")
    p.add_argument("--out", type=Path, help="CSV destination (default: no file)")
    p.add_argument("--trace", type=int, default=0, metavar="N", help="also write the first N slots of every run")
    p.add_argument("--in-sample", action="store_true", help="calibrate lambda on the evaluation slots")
    p.add_argument("--workers", type=int, default=1)
    return p


_NUMERIC = re.compile(r"^-(\d|\.\d|inf)")


def parse_args(argv) -> ExperimentPlan:
    # argparse reads "-90,-60" as an option; a leading space keeps it a value
    argv = [" " + a if _NUMERIC.match(a) else a for a in argv]
    args = build_parser().parse_args(argv)
    preset = PRESETS.get(args.preset) if args.preset else None

    if args.epsilon is not None and not 0.0 < args.epsilon < 1.0:
        raise UsageError(f"--epsilon must lie in (0, 1), got {args.epsilon}")
    for flag in ("slots", "train_slots"):
        v = getattr(args, flag)
        if v is not None and v < 1:
            raise UsageError(f"--{flag.replace('_', '-')} must be a positive integer")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    if args.trace < 0:
        raise UsageError("--trace must be non-negative")

    base = SystemParams()
    settings = dict(preset["base"]) if preset else {}
    for flag in ("mu_x", "mu_y", "mu_g", "mu_z", "epsilon", "gamma_th_dbm", "pt_dbw", "noise_dbm"):
        v = getattr(args, flag)
        if v is not None:
            settings[flag] = v
    try:
        for axis, value in settings.items():
            base = apply_setting(base, axis, value)
        base = dataclasses.replace(
            base,
            m_slots=args.slots if args.slots is not None else base.m_slots,
            m_train=args.train_slots if args.train_slots is not None else (args.slots or base.m_slots),
            seed=args.seed if args.seed is not None else base.seed,
        )
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    if args.sweep:
        axis = args.sweep[0]
        if axis not in SWEEP_AXES:
            raise UsageError(f"--sweep: unknown axis {axis!r}, choose from {', '.join(SWEEP_AXES)}")
        try:
            values = _sweep_values(axis, args.sweep[1:])
        except ValueError as exc:
            raise UsageError(f"--sweep: {exc}") from None
    elif preset:
        axis, values = preset["sweep"]
    else:
        raise UsageError("--sweep is required without --preset")

    if args.curve:
        curves = tuple(_curve(c) for c in args.curve)
    elif preset:
        # explicit flags and the swept axis win over the preset's curve overrides
        explicit = {k for k in settings if getattr(args, k, None) is not None} | {axis}
        curves = tuple(tuple((k, v) for k, v in c if k not in explicit) for c in preset["curves"])
        curves = tuple(dict.fromkeys(curves))
    else:
        curves = ((),)

    policies = tuple(p.strip() for p in args.policies.split(",") if p.strip())
    return ExperimentPlan(
        base=base,
        sweep_axis=axis,
        sweep_values=tuple(float(v) for v in values),
        policies=policies,
        output_path=args.out,
        preset=args.preset or "custom",
        curves=curves,
        trace=args.trace,
        in_sample=args.in_sample,
        workers=args.workers,
    )


def run_plan(plan: ExperimentPlan) -> list[PointResult]:
    """Run every (curve, sweep value) point, recalibrating lambda at each."""
    points = plan.points()

    def work(point):
        ci, value, params = point
        res = run_scenario(params, in_sample=plan.in_sample, trace=plan.trace)
        return PointResult(ci, value, params, res)

    if plan.workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            return list(pool.map(work, points))
    return [work(p) for p in points]


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isinf(value):
        return "-inf" if value < 0 else "inf"
    return repr(value)


def format_rows(plan: ExperimentPlan, results: list[PointResult]) -> list[list[str]]:
    rows = []
    for pr in results:
        p = pr.params
        for name in plan.policies:
            m = pr.result.metrics[name]
            lam = pr.result.calibration.lam if name == "optimal" else 0.0
            rows.append([_fmt(v) for v in (
                plan.preset, plan.sweep_axis, pr.sweep_value, name, lam, m.avg_rate, m.p_he_dbm,
                m.outage_fraction, p.epsilon, watts_to_dbm(p.gamma_th), watts_to_dbw(p.pt),
                p.mu_x, p.mu_y, p.mu_g, p.mu_z, p.m_slots, p.m_train, p.seed,
            )])
    return rows


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    try:
        Path(path).write_text(buf.getvalue(), encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _trace_rows(plan: ExperimentPlan, results: list[PointResult]) -> list[list[str]]:
    rows = []
    for pr in results:
        for name in plan.policies:
            for rec in pr.result.metrics[name].trace:
                d, s = rec.draw, rec.decision
                rows.append([_fmt(v) for v in (
                    plan.preset, pr.sweep_value, pr.curve, name, rec.slot_index, d.x, d.y, d.g, d.z,
                    s.alpha, s.indicator, s.rate, s.tx_power,
                )])
    return rows


def trace_path(out: Path) -> Path:
    return out.with_name(out.stem + "_trace.csv")


def summary(plan: ExperimentPlan, results: list[PointResult]) -> str:
    lines = [f"preset={plan.preset} axis={plan.sweep_axis} M={plan.base.m_slots} seed={plan.base.seed}"]
    head = f"{'curve':>5} {plan.sweep_axis:>13} {'policy':>13} {'rate':>11} {'P_HE[dBm]':>10} {'outage':>8} {'lambda':>10}"
    lines.append(head)
    for pr in results:
        for name in plan.policies:
            m = pr.result.metrics[name]
            lam = pr.result.calibration.lam if name == "optimal" else 0.0
            lines.append(
                f"{pr.curve:>5} {pr.sweep_value:>13.4g} {name:>13} {m.avg_rate:>11.4g} "
                f"{m.p_he_dbm:>10.2f} {m.outage_fraction:>8.4f} {lam:>10.4g}"
            )
    return "\n".join(lines)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        plan = parse_args(argv)
    except UsageError as exc:
        print(f"eh-underlay: error: {exc}", file=sys.stderr)
        return 2
    try:
        results = run_plan(plan)
        if plan.output_path is not None:
            write_csv(plan.output_path, CSV_COLUMNS, format_rows(plan, results))
            if plan.trace:
                write_csv(trace_path(plan.output_path), TRACE_COLUMNS, _trace_rows(plan, results))
    except (OSError, ValueError) as exc:
        print(f"eh-underlay: error: {exc}", file=sys.stderr)
        return 1
    print(summary(plan, results))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
