"""Acceptance criteria, one test each. Every test prints a single PASS/FAIL line."""

from __future__ import annotations

import time
import warnings
from dataclasses import replace

import numpy as np
import pytest

from softhand_sim.calibration import TARGET_FINGER_FORCE, TARGET_HOLDING_FORCE, holding_force
from softhand_sim.geometry import Box, Capsule, Sphere
from softhand_sim.grasp_engine import (
    BISECTION_TOL,
    GraspObject,
    close_hand,
    overall_success_rate,
    run_bench,
    single_finger_press,
)
from softhand_sim.hand_model import JointParams, load_hand_spec
from softhand_sim.kinematics import couple_angles, fingertips, joint_ratios, rest_dimensions
from softhand_sim.objects import builtin, default_corpus
from softhand_sim.report import bench_csv
from softhand_sim.workspace import cloud_csv, sample_workspace


def verdict(capsys, number: int, name: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n[acceptance {number}] {'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


def test_1_coupling_oracle(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        m1, m2, m3 = rng.uniform(1.0, 10.0, 3)
        t1 = np.radians(rng.uniform(0.0, 90.0))
        joints = [JointParams(j, coupling_m=m) for j, m in zip(("MCP", "PIP", "DIP"), (m1, m2, m3))]
        got = couple_angles(t1, joints)
        t2 = (1.08 + abs((m1 - m2) / m2)) * t1
        t3 = ((1.08 + abs((m1 - m2) / m2)) + abs((m3 - m2) / m3)) * t2
        for g, want in zip(got, (t2, t3)):
            worst = max(worst, abs(g - want) / max(abs(want), 1e-300))
    dt = time.perf_counter() - t0
    verdict(capsys, 1, "coupling formula", worst <= 1e-9 and dt < 1.0,
            f"max rel err {worst:.2e} (tol 1e-9), {dt:.3f} s (limit 1 s)")


def test_2_rest_geometry(capsys, config):
    d = rest_dimensions(config)
    ok = (abs(d["overall_length"] - 200.0) <= 5.0 and abs(d["span"] - 215.0) <= 5.0
          and d["middle_finger_length"] == pytest.approx(115.0, abs=1e-9))
    verdict(capsys, 2, "rest-pose geometry", ok,
            f"overall {d['overall_length']:.2f} mm (200 +- 5), span {d['span']:.2f} mm (215 +- 5), "
            f"straight finger {d['middle_finger_length']:.6f} mm (115)")


def test_3_free_closure(capsys, config):
    t0 = time.perf_counter()
    report, trace = close_hand(config, None)
    dt = time.perf_counter() - t0
    limits = np.array([f.limits_rad for f in config.fingers])
    at_limit = float(np.abs(report.final_state.angles - limits).max())
    # oracle: each joint follows ratio * progress, saturating independently at its limit
    dev = 0.0
    for fi, f in enumerate(config.fingers):
        r, lim = joint_ratios(f), limits[fi]
        ang = trace.angles[:, fi]
        s = (ang / r).max(axis=1, keepdims=True)
        dev = max(dev, float(np.abs(ang - np.minimum(r * s, lim)).max()))
    ok = at_limit < 1e-9 and dev <= BISECTION_TOL and not report.contacts and dt < 5.0
    verdict(capsys, 3, "free closure", ok,
            f"final |angle - limit| {at_limit:.1e} rad, trajectory deviation {dev:.1e} rad "
            f"(tol {BISECTION_TOL:g}), {len(trace.records)} records, {dt:.2f} s (limit 5 s)")


def test_4_step_refinement(capsys, config):
    worst, changed = 0.0, []
    for obj in default_corpus():
        a, _ = close_hand(config, obj, step=0.05)
        b, _ = close_hand(config, obj, step=0.025)
        if a.fingers_in_contact != b.fingers_in_contact:
            changed.append(obj.name)
        worst = max(worst, float(np.abs(a.final_state.angles - b.final_state.angles).max()))
    verdict(capsys, 4, "step refinement", not changed and worst < 2e-3,
            f"contact-count changes {changed or 'none'}, max angle change {worst:.1e} rad (tol 2e-3)")


def test_5_spool_signature(capsys, config):
    report, _ = close_hand(config, builtin("large_spool"))
    flex = np.degrees(report.final_state.angles.sum(axis=1))
    li, ix = config.finger_index("little"), config.finger_index("index")
    x_little = report.last_contact_displacement("little")
    x_index = report.last_contact_displacement("index")
    ok = flex[li] > flex[ix] and x_little is not None and x_index is not None and x_little > x_index
    verdict(capsys, 5, "adaptive synergy on spool", ok,
            f"flexion little {flex[li]:.1f} deg vs index {flex[ix]:.1f} deg, "
            f"last contact little x={x_little or float('nan'):.3f} mm vs index x={x_index or float('nan'):.3f} mm")


def test_6_contact_pattern(capsys, config):
    # diameters: sphere 60, spools 80/52, wrap 54, detergent 70, tape 96 mm
    large = ("sphere60", "large_spool", "small_spool", "wrap", "detergent", "tape")
    thin = ("card3mm", "usb_stick")
    counts = {n: close_hand(config, builtin(n))[0].fingers_in_contact for n in large + thin}
    ok = all(counts[n] >= 4 for n in large) and all(counts[n] <= 2 for n in thin)
    verdict(capsys, 6, "contact-count pattern", ok,
            ", ".join(f"{n}={c}" for n, c in counts.items()) + " (large >= 4, thin <= 2)")


def test_7_force_calibration(capsys, cli_calibration):
    code, out = cli_calibration
    cfg = load_hand_spec(out / "calibrated_hand.yaml")
    hold = holding_force(cfg)
    press = single_finger_press(cfg, "little")
    ok = (code == 0 and abs(hold / TARGET_HOLDING_FORCE - 1) <= 0.10
          and abs(press / TARGET_FINGER_FORCE - 1) <= 0.20 and cfg.actuator.max_torque == 4.5)
    eff = cfg.fingers[0].joints[0].efficiency
    verdict(capsys, 7, "force calibration", ok,
            f"pulley {cfg.actuator.pulley_radius:.2f} mm, efficiency {eff:.4f}: holding {hold:.2f} N "
            f"(19.8 +- 10%), little press {press:.2f} N (5.5 +- 20%), torque {cfg.actuator.max_torque} N*m")


def test_8_bench_success(capsys, config):
    rows = run_bench(config, default_corpus(), trials=5)
    rate = overall_success_rate(rows)
    verdict(capsys, 8, "bench success rate", 0.70 <= rate <= 0.90,
            f"{rate:.1%} over {sum(r.trials for r in rows)} trials (70% to 90%)")


def _random_object(rng: np.random.Generator, i: int) -> GraspObject:
    cx, cy = rng.uniform(-30, 30), rng.uniform(60, 120)
    if i % 3 == 0:
        prim = Sphere((cx, cy, rng.uniform(15, 45)), rng.uniform(15, 45))
    elif i % 3 == 1:
        r = rng.uniform(8, 35)
        prim = Capsule((cx - 60, cy, r), (cx + 60, cy, r), r)
    else:
        prim = Box((cx, cy, rng.uniform(5, 30)), tuple(rng.uniform([5, 5, 3], [40, 40, 25])),
                   (0.0, 0.0, rng.uniform(-30, 30)))
    return GraspObject(f"random{i}", (prim,), 100.0)


def test_9_determinism_and_invariants(capsys, config):
    t0 = time.perf_counter()
    same_ws = cloud_csv(sample_workspace(config, 500, 9)) == cloud_csv(sample_workspace(config, 500, 9))
    corpus = [builtin("mouse"), builtin("tape"), builtin("card")]
    same_bench = (bench_csv(run_bench(config, corpus, trials=2, seed=4, threads=1))
                  == bench_csv(run_bench(config, corpus, trials=2, seed=4, threads=3)))
    rng = np.random.default_rng(2024)
    failures = []
    lengths = [f.length for f in config.fingers]
    roots = [np.asarray(f.mount_position) for f in config.fingers]
    for i in range(100):
        obj = _random_object(rng, i)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            report, trace = close_hand(config, obj, step=0.1)
        x, ang = trace.displacements, trace.angles
        if not (np.all(np.diff(x) > 0) and np.all(np.diff(ang, axis=0) >= -1e-12)):
            failures.append(f"{obj.name}: non-monotone")
        if np.any(trace.tensions < 0):
            failures.append(f"{obj.name}: negative tension")
        for fi, f in enumerate(config.fingers):
            reach = np.linalg.norm(fingertips(f, ang[:, fi]) - roots[fi], axis=1).max()
            if reach > lengths[fi] + 1e-9:
                failures.append(f"{obj.name}: {f.name} beyond reach")
            for c in report.contacts_of(f.name):
                k = int(np.searchsorted(x, c.displacement - 1e-12))
                if c.phalanx > 0 and np.any(ang[k:, fi, :c.phalanx] != ang[k, fi, :c.phalanx]):
                    failures.append(f"{obj.name}: {f.name} blocked joint moved")
    dt = time.perf_counter() - t0
    ok = same_ws and same_bench and not failures and dt < 60.0
    verdict(capsys, 9, "determinism and invariants", ok,
            f"workspace identical={same_ws}, bench identical={same_bench}, "
            f"{len(failures)} property violations in 100 closures, {dt:.1f} s (limit 60 s)")
