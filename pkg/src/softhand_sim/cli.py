"""Command-line front end: ``softhand-sim {fk,workspace,grasp,bench,calibrate}``.

Exit codes: 0 ok, 2 input validation, 3 I/O, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import __version__
from .calibration import (
    TARGET_FINGER_FORCE,
    TARGET_HOLDING_FORCE,
    CalibrationError,
    calibrate,
)
from .grasp_engine import DEFAULT_JITTER, DEFAULT_STEP, ClosureError, close_hand, overall_success_rate, run_bench
from .hand_model import HandConfig, HandSpecError, default_bpi_config, dump_hand_spec, load_hand_spec
from .kinematics import KinematicsError, coupled_clamped, couple_angles, finger_fk
from .objects import BUILTINS, CorpusError, default_corpus, load_corpus, resolve_object
from .report import (
    bench_csv,
    bench_svg,
    contacts_csv,
    finger_side_svg,
    pose_svg,
    report_summary,
    trace_csv,
)
from .tendon_drive import TendonConfigError
from .workspace import cloud_csv, cloud_svg, rest_cloud, sample_workspace, stats_table, workspace_stats

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunManifest:
    subcommand: str
    config_path: Optional[str]
    seed: Optional[int]
    output_directory: str
    version: str
    timestamp: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _load_config(path: Optional[str]) -> HandConfig:
    return default_bpi_config() if path is None else load_hand_spec(path)


def _prepare_out(path: Optional[str]) -> Optional[Path]:
    if path is None:
        return None
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write_test"
    probe.write_text("", encoding="utf-8")
    probe.unlink()
    return out


def _write(out: Path, name: str, text: str) -> None:
    (out / name).write_text(text, encoding="utf-8", newline="")


def _manifest(out: Path, args: argparse.Namespace, seed: Optional[int] = None) -> None:
    manifest = RunManifest(
        subcommand=args.command,
        config_path=args.config,
        seed=seed,
        output_directory=str(out),
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    _write(out, "manifest.json", manifest.to_json())


# --------------------------------------------------------------------------- subcommands

def cmd_fk(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.finger not in config.finger_names:
        raise UsageError(f"--finger: unknown finger {args.finger!r}; fingers: {', '.join(config.finger_names)}")
    finger = config.finger(args.finger)
    if (args.theta2_deg is None) != (args.theta3_deg is None):
        raise UsageError("give both --theta2-deg and --theta3-deg, or neither")
    theta1 = math.radians(args.theta1_deg)
    if not 0.0 <= theta1 <= finger.limits_rad[0] + 1e-12:
        raise UsageError(f"--theta1-deg must lie in [0, {finger.joints[0].limit_angle_deg}]")
    note = ""
    if args.theta2_deg is None:
        raw = np.array([theta1, *couple_angles(theta1, finger.joints)])
        angles = coupled_clamped(theta1, finger)
        if np.any(raw > angles):
            note = "coupled angles clamped at joint limits"
    else:
        angles = np.radians([args.theta1_deg, args.theta2_deg, args.theta3_deg])
    root = finger_fk(finger, angles, frame="root")
    hand = finger_fk(finger, angles, frame="hand")
    deg = np.degrees(angles)
    print(f"finger: {finger.name}")
    print(f"theta_deg: MCP={deg[0]:.6g} PIP={deg[1]:.6g} DIP={deg[2]:.6g}" + (f"  ({note})" if note else ""))
    print("point,root_x_mm,root_y_mm,root_z_mm,hand_x_mm,hand_y_mm,hand_z_mm")
    names = ("MCP", "PIP", "DIP", "tip")
    for name, pr, ph in zip(names, root.joint_positions, hand.joint_positions):
        print(",".join([name, *(f"{v:.4f}" for v in pr), *(f"{v:.4f}" for v in ph)]))
    out = _prepare_out(args.out)
    if out is not None:
        _write(out, "fk_side.svg", finger_side_svg(root))
        _manifest(out, args)
    return EXIT_OK


def cmd_workspace(args: argparse.Namespace) -> int:
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    config = _load_config(args.config)
    out = _prepare_out(args.out)
    cloud = sample_workspace(config, args.samples, args.seed)
    stats = workspace_stats(cloud)
    rest = workspace_stats(rest_cloud(config))
    _write(out, "workspace.csv", cloud_csv(cloud))
    _write(out, "workspace.svg", cloud_svg(cloud))
    _write(out, "workspace_stats.csv", stats_table(stats))
    _manifest(out, args, args.seed)
    print(f"samples: {cloud.n} per finger, seed {args.seed}")
    print(stats_table(stats), end="")
    print(f"thumb_opposition_overlap_mm3: {stats.overlap_volume:.1f}")
    print(f"rest_span_mm: {rest.thumb_little_centroid_distance:.3f}")
    return EXIT_OK


def cmd_grasp(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    try:
        obj = resolve_object(args.object)
    except CorpusError as exc:
        raise UsageError(str(exc)) from exc
    if not args.step > 0:
        raise UsageError("--step must be > 0")
    out = _prepare_out(args.out)
    report, trace = close_hand(config, obj, step=args.step)
    print(report_summary(report), end="")
    if out is not None:
        _write(out, "trace.csv", trace_csv(config, trace))
        _write(out, "contacts.csv", contacts_csv(report))
        _write(out, "grasp.svg", pose_svg(config, report.final_state, obj, title=f"final pose: {report.object_name}"))
        _manifest(out, args)
    return EXIT_OK


def _parse_jitter(text: str) -> tuple:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError("--jitter must be 'MM,DEG'") from None
    if len(parts) != 2 or min(parts) < 0:
        raise UsageError("--jitter must be two non-negative numbers 'MM,DEG'")
    return parts[0], parts[1]


def cmd_bench(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    jitter = _parse_jitter(args.jitter)
    corpus = default_corpus() if args.corpus is None else load_corpus(args.corpus)
    out = _prepare_out(args.out)
    rows = run_bench(config, corpus, trials=args.trials, pose_jitter=jitter, seed=args.seed)
    table = bench_csv(rows)
    print(table, end="")
    print(f"overall_success_rate: {overall_success_rate(rows):.3f}")
    if out is not None:
        _write(out, "bench.csv", table)
        _write(out, "bench.svg", bench_svg(rows))
        _manifest(out, args, args.seed)
    return EXIT_OK


def _curve_csv(curve: Sequence[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pulley_radius_mm", "efficiency", "holding_force_N", "finger_force_N"])
    for row in curve:
        w.writerow([f"{v:.6f}" for v in row])
    return buf.getvalue()


def cmd_calibrate(args: argparse.Namespace) -> int:
    if not (args.target_holding_force > 0 and args.target_finger_force > 0):
        raise UsageError("calibration targets must be > 0")
    config = _load_config(args.config)
    out = _prepare_out(args.out)
    try:
        result = calibrate(config, args.target_holding_force, args.target_finger_force)
    except CalibrationError as exc:
        if out is not None:
            _write(out, "calibration_curve.csv", _curve_csv(exc.curve))
            _manifest(out, args)
        raise
    print(f"pulley_radius_mm: {result.pulley_radius:.4f}")
    print(f"efficiency: {result.efficiency:.4f}")
    print(f"holding_force_N: {result.holding_force:.3f} (target {result.target_holding}, "
          f"residual {100 * result.holding_residual:+.2f}%)")
    print(f"finger_force_N: {result.finger_force:.3f} (target {result.target_finger}, "
          f"residual {100 * result.finger_residual:+.2f}%)")
    if out is not None:
        _write(out, "calibrated_hand.yaml", dump_hand_spec(result.config))
        _write(out, "calibration_curve.csv", _curve_csv(result.curve))
        _manifest(out, args)
    return EXIT_OK


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="softhand-sim", description="BPI SoftHand kinematics and grasp simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="hand-spec YAML (default: built-in BPI SoftHand)")

    p = sub.add_parser("fk", help="finger forward kinematics")
    common(p)
    p.add_argument("--finger", required=True)
    p.add_argument("--theta1-deg", type=float, required=True)
    p.add_argument("--theta2-deg", type=float)
    p.add_argument("--theta3-deg", type=float)
    p.add_argument("--out", help="directory for the side-view SVG")
    p.set_defaults(func=cmd_fk)

    p = sub.add_parser("workspace", help="Monte Carlo fingertip workspace")
    common(p)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_workspace)

    p = sub.add_parser("grasp", help="close the hand on one object")
    common(p)
    p.add_argument("--object", required=True, help=f"builtin ({', '.join(sorted(BUILTINS))}), 'none' or a YAML file")
    p.add_argument("--step", type=float, default=DEFAULT_STEP)
    p.add_argument("--out")
    p.set_defaults(func=cmd_grasp)

    p = sub.add_parser("bench", help="grasp benchmark over an object corpus")
    common(p)
    p.add_argument("--corpus", help="corpus YAML (default: built-in 14-object corpus)")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--jitter", default=f"{DEFAULT_JITTER[0]:g},{DEFAULT_JITTER[1]:g}", help="pose jitter 'MM,DEG'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("calibrate", help="fit pulley radius and efficiency to force targets")
    common(p)
    p.add_argument("--target-holding-force", type=float, default=TARGET_HOLDING_FORCE)
    p.add_argument("--target-finger-force", type=float, default=TARGET_FINGER_FORCE)
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)
    return parser


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    func: Callable[[argparse.Namespace], int] = args.func
    try:
        return func(args)
    except (CalibrationError, ClosureError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERICAL, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    except (UsageError, HandSpecError, CorpusError, KinematicsError, TendonConfigError, ValueError) as exc:
        return _fail(EXIT_VALIDATION, str(exc))


if __name__ == "__main__":
    sys.exit(main())
