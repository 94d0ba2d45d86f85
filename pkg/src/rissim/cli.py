"""Command-line entry point: ``rissim heatmap | run | compare``.

Errors print a single ``ERROR <code>: <reason>`` line to stderr and exit with
2 (bad input), 3 (I/O failure) or 4 (incomparable runs).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .errors import ParseError, ReceiverSetMismatch, RissimError, ValidationError
from .metrics import FRACTION, MetricsReport, build_report, compare_policies
from .policy import Policy, PolicyKind, TimelineConfig, run_simulation
from .propagation import GridSpec, PropagationParams, Summation, coverage_grid, grid_to_csv, grid_to_pgm
from .scene import ReceiverRole, Scene, apply_ris_angle, canonical_scene_text, load_scene

EXIT_INPUT, EXIT_IO, EXIT_MISMATCH = 2, 3, 4
BUNDLED_SCENES = {"canonical.scene": canonical_scene_text}


class CliError(Exception):
    def __init__(self, code: str, message: str, exit_code: int):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.exists() and p.name in BUNDLED_SCENES and p.parent == Path("."):
        return BUNDLED_SCENES[p.name]()
    try:
        return p.read_text(encoding="utf-8")
    except OSError as e:
        raise CliError("IOError", f"cannot read {path}: {e.strerror}", EXIT_IO) from None


def _write(path: Path, data) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(data, bytes):
            path.write_bytes(data)
        else:
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(data)
    except OSError as e:
        raise CliError("IOError", f"cannot write {path}: {e.strerror}", EXIT_IO) from None


def _load(path: str) -> Scene:
    return load_scene(_read_text(path))


def _params(args) -> PropagationParams:
    kw = {}
    if args.max_order is not None:
        kw["max_order"] = args.max_order
    if args.reflection_loss is not None:
        kw["reflection_loss_db"] = args.reflection_loss
    if args.summation is not None:
        kw["summation"] = Summation(args.summation)
    if args.noise_floor is not None:
        kw["noise_floor_dbm"] = args.noise_floor
    try:
        return PropagationParams(**kw)
    except ValueError as e:
        raise CliError("ValidationError", str(e), EXIT_INPUT) from None


def _apply_receiver_overrides(scene: Scene, only: Optional[str], roles: List[str]) -> Scene:
    for item in roles:
        name, sep, rest = item.partition("=")
        role_s, _, thr = rest.partition(":")
        try:
            role = ReceiverRole(role_s)
            threshold = float(thr) if thr else None
        except ValueError:
            raise CliError("ValidationError", f"--role {item!r}: expected NAME=ROLE[:THRESHOLD_DBM]", EXIT_INPUT) from None
        if not sep:
            raise CliError("ValidationError", f"--role {item!r}: expected NAME=ROLE[:THRESHOLD_DBM]", EXIT_INPUT)
        scene = scene.with_role(name, role, threshold)
    if only:
        scene = scene.with_receivers([n.strip() for n in only.split(",") if n.strip()])
    return scene


def cmd_heatmap(args) -> int:
    scene = apply_ris_angle(_load(args.scene), args.angle)
    params = _params(args)
    grid = GridSpec(args.spacing, scene.bounds)
    values = coverage_grid(scene, grid, params)
    out = Path(args.out)
    _write(out.with_suffix(".csv"), grid_to_csv(values))
    _write(out.with_suffix(".pgm"), grid_to_pgm(values, params.noise_floor_dbm, scene.tx.power_dbm))
    ny, nx = values.shape
    print(f"grid {nx}x{ny} cells, spacing {args.spacing:g} m, RIS angle {args.angle:g} deg")
    print(f"min {values.min():.2f} dBm  max {values.max():.2f} dBm")
    for r in scene.receivers:
        i, j = grid.cell_of(r.position)
        print(f"receiver {r.name} cell ({i},{j}): {values[i, j]:.2f} dBm")
    print(f"wrote {out.with_suffix('.csv')} and {out.with_suffix('.pgm')}")
    return 0


def _summary(scene: Scene, trace, report: MetricsReport, params: PropagationParams, timeline: TimelineConfig) -> str:
    lines = [
        f"policy: {trace.policy}",
        f"slots: {len(trace)} (dwell {timeline.dwell_slots}, probe dwell {timeline.probe_dwell}, probe slots {trace.probe_slots})",
        f"propagation: max_order={params.max_order} reflection_loss={params.reflection_loss_db:g} dB "
        f"summation={params.summation.value} noise_floor={params.noise_floor_dbm:g} dBm",
    ]
    if trace.selection is not None:
        angles = ", ".join(f"{a:g}" for a in trace.selection.angles)
        flag = "" if trace.selection.feasible else " (INFEASIBLE: no angle set meets every requirement)"
        lines.append(f"selected angles: {{{angles}}} size {len(trace.selection.angles)}{flag}")
    lines.append("")
    for r in scene.receivers:
        frac = report.values[r.name][FRACTION]
        verb = "below" if r.role is ReceiverRole.INTERFERED else "at or above"
        lines.append(f"{r.name} ({r.role.value}): requirement met {100 * frac:.2f}% of the time ({verb} {r.threshold_dbm:g} dBm)")
    lines.append("")
    lines.append(report.to_table())
    return "\n".join(lines)


def cmd_run(args) -> int:
    scene = _apply_receiver_overrides(_load(args.scene), args.only, args.role or [])
    try:
        policy = Policy.parse(args.policy)
        timeline = TimelineConfig(
            total_slots=args.total_slots, dwell_slots=args.dwell_slots, probe_dwell=args.probe_dwell
        )
    except ValueError as e:
        raise CliError("ValidationError", str(e), EXIT_INPUT) from None
    if policy.kind is PolicyKind.STATIC:
        apply_ris_angle(scene, policy.angle)
    params = _params(args)
    try:
        trace = run_simulation(scene, policy, timeline, params)
    except ValueError as e:
        if isinstance(e, RissimError):
            raise
        raise CliError("ValidationError", str(e), EXIT_INPUT) from None
    report = build_report(trace, scene.receivers, args.linear_mean, scene.digest())

    out = Path(args.out)
    _write(out / "trace.csv", trace.to_csv())
    _write(out / "metrics.csv", report.to_csv())
    summary = _summary(scene, trace, report, params, timeline)
    _write(out / "summary.txt", summary)
    manifest = {
        "scene_digest": scene.digest(),
        "receivers": list(scene.receiver_names),
        "roles": {r.name: r.role.value for r in scene.receivers},
        "policy": str(policy),
        "linear_mean": bool(args.linear_mean),
        "selected_angles": list(trace.selection.angles) if trace.selection else None,
    }
    _write(out / "run.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(summary, end="")
    return 0


def _load_run(path: str):
    d = Path(path)
    try:
        manifest = json.loads(_read_text(str(d / "run.json")))
        report = MetricsReport.from_csv(_read_text(str(d / "metrics.csv")))
    except (ValueError, KeyError) as e:
        raise CliError("ParseError", f"{d}: not a run directory ({e})", EXIT_INPUT) from None
    report.scene_digest = manifest.get("scene_digest")
    report.labels = manifest.get("roles", {})
    return manifest, report


def cmd_compare(args) -> int:
    ma, ra = _load_run(args.run_a)
    mb, rb = _load_run(args.run_b)
    if ma.get("roles") != mb.get("roles"):
        raise ReceiverSetMismatch("runs use different receiver sets or roles")
    delta = compare_policies(ra, rb)
    _write(Path(args.out), delta.to_csv())
    print(f"delta = {ma.get('policy')} ({args.run_a}) - {mb.get('policy')} ({args.run_b})")
    print(delta.to_table(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rissim", description="2D RIS propagation and control-policy simulator")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def prop_flags(p):
        g = p.add_argument_group("propagation overrides")
        g.add_argument("--max-order", type=int)
        g.add_argument("--reflection-loss", type=float, help="dB per bounce")
        g.add_argument("--summation", choices=[s.value for s in Summation])
        g.add_argument("--noise-floor", type=float, help="dBm")

    h = sub.add_parser("heatmap", help="render a coverage grid as CSV + PGM")
    h.add_argument("scene")
    h.add_argument("--angle", type=float, default=0.0, help="RIS angle in degrees")
    h.add_argument("--spacing", type=float, default=0.1, help="cell size in meters")
    h.add_argument("--out", default="heatmap", help="output path stem (.csv and .pgm are appended)")
    prop_flags(h)
    h.set_defaults(func=cmd_heatmap)

    r = sub.add_parser("run", help="simulate one policy and write trace, metrics and summary")
    r.add_argument("scene")
    r.add_argument("--policy", required=True, help="static:<angle> | periodic | context:all-best | context:minimal-cover")
    r.add_argument("--total-slots", type=int, default=TimelineConfig.total_slots)
    r.add_argument("--dwell-slots", type=int, default=TimelineConfig.dwell_slots)
    r.add_argument("--probe-dwell", type=int, default=TimelineConfig.probe_dwell)
    r.add_argument("--only", help="comma-separated receivers to keep")
    r.add_argument("--role", action="append", metavar="NAME=ROLE[:THRESHOLD]", help="override a receiver's role")
    r.add_argument("--linear-mean", action="store_true", help="average power in mW instead of dBm")
    r.add_argument("--out", required=True, help="output directory")
    prop_flags(r)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="metric deltas between two run directories (A - B)")
    c.add_argument("run_a")
    c.add_argument("run_b")
    c.add_argument("--out", default="compare.csv")
    c.set_defaults(func=cmd_compare)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"ERROR {e.code}: {e}", file=sys.stderr)
        return e.exit_code
    except ReceiverSetMismatch as e:
        print(f"ERROR {e.code}: {e}", file=sys.stderr)
        return EXIT_MISMATCH
    except (RissimError, ParseError, ValidationError) as e:
        print(f"ERROR {e.code}: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
