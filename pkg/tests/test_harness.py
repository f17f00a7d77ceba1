import math

import numpy as np
import pytest

from hybrik_kit import harness
from hybrik_kit.harness import (
    ConfigError,
    ExperimentConfig,
    accumulation_check,
    gen_random_pose,
    jitter,
    sample_pose,
    twist_distribution,
)
from hybrik_kit.rotmath import angle_to_pair, compose_twist_swing, pair_to_angle


def test_gen_random_pose_deterministic(model):
    beta = np.zeros(10)
    a = gen_random_pose(model, beta, seed=5)
    b = gen_random_pose(model, beta, seed=5)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    c = gen_random_pose(model, beta, seed=6)
    assert not np.array_equal(a[1], c[1])


def test_gen_random_pose_zero_ranges_is_rest_pose(model, template):
    _, joints, twists = gen_random_pose(model, np.zeros(10), seed=1, twist_range=0.0, swing_range=0.0)
    np.testing.assert_allclose(joints, template, atol=1e-9)
    np.testing.assert_allclose(twists, angle_to_pair(np.zeros(23)), atol=1e-12)


def test_extracted_twists_match_sampled(model):
    _, _, pairs, angles = sample_pose(model, np.zeros(10), seed=9, twist_range=3.0, n=200)
    np.testing.assert_allclose(pair_to_angle(pairs), angles, atol=1e-9)


def test_root_triple_joints_only_twist(model, template):
    rotations, joints, _, _ = sample_pose(model, np.zeros(10), seed=4, n=10)
    for name in ("spine1", "left_hip", "right_hip"):
        k = model.tree.index(name)
        bone = template[k] - template[0]
        np.testing.assert_allclose(
            np.einsum("bij,j->bi", rotations[:, k], bone), np.broadcast_to(bone, (10, 3)), atol=1e-9
        )


def test_jitter_kinds(rng):
    joints = np.zeros((1000, 24, 3))
    u = jitter(rng, joints, 20.0, "uniform")
    assert np.abs(u).max() <= 20.0 and np.all(u[:, 0] == 0)
    b = jitter(rng, joints, 20.0, "ball", include_root=True)
    assert np.linalg.norm(b, axis=-1).max() <= 20.0 and np.any(b[:, 0] != 0)
    g = jitter(rng, joints, 20.0, "gaussian")
    assert np.std(g[:, 1:]) == pytest.approx(20 / math.sqrt(3), rel=0.05)


def test_config_validation():
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_dict({"trials": 0})
    assert exc.value.field == "trials"
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_dict({"jitter_mm": [-1]})
    assert exc.value.field == "jitter_mm"
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_dict({"nonsense": 1})
    assert exc.value.field == "nonsense"
    cfg = ExperimentConfig.from_dict({"jitter_mm": 20})
    assert cfg.jitter_mm == (20.0,)


def test_jitter_experiment_zero_jitter_exact(model):
    cfg = ExperimentConfig(trials=10, jitter_mm=(0.0,))
    table, _ = harness.jitter_experiment(cfg, model)
    assert table[0.0]["naive"] < 1e-6 and table[0.0]["adaptive"] < 1e-6


def test_jitter_experiment_thread_independent(model):
    cfg1 = ExperimentConfig(trials=12, jitter_mm=(20.0,), threads=1)
    cfg3 = ExperimentConfig(trials=12, jitter_mm=(20.0,), threads=3)
    _, a = harness.jitter_experiment(cfg1, model)
    _, b = harness.jitter_experiment(cfg3, model)
    for mode in ("naive", "adaptive"):
        assert np.array_equal(a[20.0][mode], b[20.0][mode])


def test_jitter_gaussian_switch_orders_modes(model):
    cfg = ExperimentConfig(trials=50, jitter_mm=(20.0,), jitter_kind="gaussian")
    table, _ = harness.jitter_experiment(cfg, model)
    assert table[20.0]["adaptive"] < table[20.0]["naive"]


def test_twist_sensitivity(model):
    cfg = ExperimentConfig(trials=10)
    table, per = harness.twist_sensitivity_experiment(cfg, model)
    assert table["gt"]["joint_err"] < 1e-6 and table["gt"]["pve"] < 1e-6
    assert table["random"]["joint_err"] < 1e-6
    assert np.all(per["random"]["pve"] > per["gt"]["pve"])
    assert table["random"]["eval_err"] > table["gt"]["eval_err"]
    assert table["gt"]["twist_err_deg"] < 1e-6 < table["random"]["twist_err_deg"]
    np.testing.assert_allclose(per["random"]["reconstructed"], per["gt"]["reconstructed"], atol=1e-9)


def test_distribution_identity_poses(model):
    poses = np.broadcast_to(np.eye(3), (20, 24, 3, 3))
    hist = twist_distribution(poses, model)
    assert len(hist) == 23
    for h in hist.values():
        zero = np.flatnonzero(h["centers"] == 0)[0]
        assert h["counts"][zero] == 20 and h["counts"].sum() == 20


def test_distribution_fixed_twist_on_one_joint(model, template):
    k = model.tree.index("left_elbow")
    poses = np.broadcast_to(np.eye(3), (5, 24, 3, 3)).copy()
    bone = template[k] - template[model.tree.parents[k]]
    poses[:, k] = compose_twist_swing(bone, bone, angle_to_pair(np.radians(30.0)))
    hist = twist_distribution(poses, model)
    h = hist["left_elbow"]
    assert h["counts"][np.flatnonzero(h["centers"] == 30)[0]] == 5
    assert h["counts"].sum() == 5
    assert hist["left_knee"]["counts"][np.flatnonzero(h["centers"] == 0)[0]] == 5


def test_distribution_sampled_range(model):
    lim = np.radians(30.0)
    poses = sample_pose(model, np.zeros(10), seed=2, twist_range=lim, n=300)[0]
    hist = twist_distribution(poses, model)
    for h in hist.values():
        assert -30.0 <= h["min_deg"] and h["max_deg"] <= 30.0
        outside = np.abs(h["centers"]) > 30.0
        assert h["counts"][outside].sum() == 0


def test_accumulation_depth4():
    res = accumulation_check(4, 10.0)
    np.testing.assert_allclose(res["naive"], [10, 20, 30], atol=1e-9)
    np.testing.assert_allclose(res["naive"], res["naive_predicted"], atol=1e-9)
    # own mismatch measured from the reconstructed parent
    np.testing.assert_allclose(res["adaptive"], res["adaptive_predicted"], atol=1e-9)


def test_accumulation_trivial_cases():
    res = accumulation_check(5, 0.0)
    for v in res.values():
        np.testing.assert_allclose(v, 0, atol=1e-12)
    res = accumulation_check(2, 10.0)
    np.testing.assert_allclose(res["naive"], [10.0], atol=1e-9)
    np.testing.assert_allclose(res["adaptive"], [10.0], atol=1e-9)


def test_manifest_records_choices():
    cfg = ExperimentConfig(seed=3)
    m = harness.manifest("jitter", cfg, files=["jitter.csv"])
    assert m["seed"] == 3 and m["jitter_model"]["kind"] == "uniform"
    assert m["jitter_model"]["root_jittered"] is False
    assert m["config"]["trials"] == 100 and m["version"]
