"""Exit criteria. Each test prints one PASS/FAIL line in the terminal summary."""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from hybrik_kit import harness
from hybrik_kit.bodymodel import rest_pose_from_shape, shaped_vertices, skin
from hybrik_kit.harness import ExperimentConfig, sample_pose, stretched_chain
from hybrik_kit.hybrik import solve, solve_root_rotation
from hybrik_kit.metrics import mpjpe, pa_mpjpe, pve
from hybrik_kit.rotmath import (
    angle_to_pair,
    compose_twist_swing,
    extract_twist_swing,
    random_rotations,
    swing_between,
    twist_about,
)


def record(name, checks, elapsed, limit):
    checks = dict(checks)
    checks[f"runtime {elapsed:.2f}s < {limit}s"] = elapsed < limit
    ok = all(checks.values())
    detail = "; ".join(f"{k}: {'ok' if v else 'FAILED'}" for k, v in checks.items())
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {name} -- {detail}")
    failed = [k for k, v in checks.items() if not v]
    assert not failed, f"{name}: {failed}"


def test_c1_round_trip_exactness(model):
    start = time.perf_counter()
    worst = {"naive": 0.0, "adaptive": 0.0}
    rng = np.random.default_rng(100)
    for chunk in range(10):
        beta = rng.normal(size=10)
        template = rest_pose_from_shape(model, beta)
        _, target, twists, _ = sample_pose(model, beta, seed=[100, chunk], n=100)
        for mode in worst:
            report = solve(model.tree, template, target, twists, mode=mode)
            worst[mode] = max(worst[mode], float(report.per_joint_error.max()))
    elapsed = time.perf_counter() - start
    record(
        "C1 round-trip exactness (1000 poses)",
        {f"{m} max err {e:.2e} mm < 1e-6": e < 1e-6 for m, e in worst.items()},
        elapsed,
        10,
    )


def test_c2_jitter_ordering(model):
    start = time.perf_counter()
    cfg = ExperimentConfig(seed=0, trials=100, jitter_mm=(20.0,), jitter_kind="uniform")
    table, per = harness.jitter_experiment(cfg, model)
    elapsed = time.perf_counter() - start
    naive, adaptive = table[20.0]["naive"], table[20.0]["adaptive"]
    wins = int(np.sum(per[20.0]["adaptive"] < per[20.0]["naive"]))
    record(
        "C2 jitter ordering at +-20 mm",
        {
            f"adaptive {adaptive:.2f} < naive {naive:.2f} mm": adaptive < naive,
            f"adaptive wins {wins}/100 >= 95": wins >= 95,
            f"ratio {naive / adaptive:.3f} > 1.2": naive / adaptive > 1.2,
        },
        elapsed,
        30,
    )


def _stretched_chain_errors():
    tree, template, target = stretched_chain(5, 10.0)
    twists = angle_to_pair(np.zeros(4))
    naive = solve(tree, template, target, twists, triple=None, mode="naive")
    adaptive = solve(tree, template, target, twists, triple=None, mode="adaptive")
    return naive.per_joint_error[1:], adaptive.per_joint_error[1:]


def test_c3_accumulation_law_naive():
    start = time.perf_counter()
    naive, _ = _stretched_chain_errors()
    elapsed = time.perf_counter() - start
    ok = np.allclose(naive, [10, 20, 30, 40], rtol=0, atol=1e-9)
    record("C3a naive accumulation on 4-bone chain", {f"naive {np.round(naive, 9).tolist()} == [10,20,30,40]": ok}, elapsed, 1)


def test_c3_accumulation_law_adaptive():
    start = time.perf_counter()
    _, adaptive = _stretched_chain_errors()
    elapsed = time.perf_counter() - start
    ok = np.allclose(adaptive, [10, 10, 10, 10], rtol=0, atol=1e-9)
    record(
        "C3b adaptive localisation on 4-bone chain",
        {f"adaptive {np.round(adaptive, 9).tolist()} == [10,10,10,10]": ok},
        elapsed,
        1,
    )


def test_c4_twist_invariance_of_joints(model):
    start = time.perf_counter()
    cfg = ExperimentConfig(seed=0, trials=100)
    _, per = harness.twist_sensitivity_experiment(cfg, model)
    elapsed = time.perf_counter() - start
    moved = float(np.abs(per["random"]["reconstructed"] - per["gt"]["reconstructed"]).max())
    worse = int(np.sum(per["random"]["pve"] > per["gt"]["pve"]))
    record(
        "C4 twist invariance of joints",
        {
            f"joint change {moved:.2e} mm < 1e-9": moved < 1e-9,
            f"PVE random > PVE gt in {worse}/100": worse == 100,
        },
        elapsed,
        10,
    )


def test_c5_root_rotation_optimality():
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    n = 1000
    template = np.zeros((n, 4, 3))
    template[:, 1:] = rng.normal(0, 150, (n, 3, 3))
    G = random_rotations(rng, n)
    clean = template @ np.swapaxes(G, -1, -2)
    noisy = clean + rng.normal(0, 20, clean.shape)
    noisy[:, 0] = 0.0
    idx = (1, 2, 3)
    exact_err = float(np.abs(solve_root_rotation(template, clean, idx) - G).max())
    R0 = solve_root_rotation(template, noisy, idx)
    proper = bool(np.allclose(np.linalg.det(R0), 1.0, atol=1e-12))
    beaten = 0
    for i in rng.choice(n, 20, replace=False):
        T0, P0 = template[i, 1:], noisy[i, 1:]
        obj = np.sum((P0 - T0 @ R0[i].T) ** 2)
        samples = random_rotations(rng, 100_000)
        best = np.sum((P0 - T0 @ np.swapaxes(samples, -1, -2)) ** 2, axis=(-2, -1)).min()
        beaten += obj <= best
    elapsed = time.perf_counter() - start
    record(
        "C5 root-rotation optimality",
        {
            f"noise-free recovery {exact_err:.1e} <= 1e-8": exact_err <= 1e-8,
            f"objective <= best of 1e5 random on {beaten}/20": beaten == 20,
            "all proper rotations": proper,
        },
        elapsed,
        60,
    )


def test_c6_decomposition_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(6)
    n = 100_000
    t = rng.normal(size=(n, 3))
    p = rng.normal(size=(n, 3))
    phi = angle_to_pair(rng.uniform(-np.pi, np.pi, n))
    R = compose_twist_swing(t, p, phi)
    that = t / np.linalg.norm(t, axis=-1, keepdims=True)
    phat = p / np.linalg.norm(p, axis=-1, keepdims=True)
    dir_err = float(np.abs(np.einsum("nij,nj->ni", R, that) - phat).max())
    tw = twist_about(t, phi)
    fix_err = float((np.abs(np.einsum("nij,nj->ni", tw, t) - t).max(axis=-1) / np.linalg.norm(t, axis=-1)).max())
    sw, back = extract_twist_swing(R, t)
    rt_err = max(float(np.abs(sw - swing_between(t, p)).max()), float(np.abs(back - phi).max()))
    elapsed = time.perf_counter() - start
    record(
        "C6 twist-swing decomposition (1e5 samples)",
        {
            f"direction err {dir_err:.1e} <= 1e-9": dir_err <= 1e-9,
            f"twist axis err {fix_err:.1e} <= 1e-9": fix_err <= 1e-9,
            f"round trip err {rt_err:.1e} <= 1e-8": rt_err <= 1e-8,
        },
        elapsed,
        10,
    )


@pytest.mark.filterwarnings("ignore:shape coefficient magnitude")
def test_c7_shape_linearity(model):
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    T0 = rest_pose_from_shape(model, np.zeros(10))
    for _ in range(50):
        b1, b2 = rng.normal(size=(2, 10))
        a, b = rng.uniform(-2, 2, 2)
        lhs = rest_pose_from_shape(model, a * b1 + b * b2) - T0
        rhs = a * (rest_pose_from_shape(model, b1) - T0) + b * (rest_pose_from_shape(model, b2) - T0)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    elapsed = time.perf_counter() - start
    record("C7 shape linearity", {f"max deviation {worst:.1e} mm <= 1e-9": worst <= 1e-9}, elapsed, 1)


def test_c8_metric_sanity(model):
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        gt = rng.normal(0, 300, (14, 3))
        pred = gt + rng.normal(0, 25, gt.shape)
        ref = pa_mpjpe(pred, gt)
        G = random_rotations(rng)
        moved = rng.uniform(0.3, 3.0) * pred @ G.T + rng.normal(0, 1000, 3)
        worst = max(worst, abs(float(pa_mpjpe(moved, gt)) - float(ref)))
    mesh = skin(model, rng.normal(size=10), random_rotations(rng, 24))
    joints = rest_pose_from_shape(model, np.zeros(10))
    zero = mpjpe(joints, joints) == 0 and mpjpe(joints, joints, root_align=False) == 0 and pve(mesh, mesh) == 0
    elapsed = time.perf_counter() - start
    record(
        "C8 metric sanity",
        {f"PA invariance {worst:.1e} mm < 1e-9": worst < 1e-9, "MPJPE/PVE zero on identical inputs": bool(zero)},
        elapsed,
        5,
    )
