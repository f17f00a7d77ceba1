"""Synthetic experiments for the twist-and-swing IK solvers.

* ``jitter_experiment`` - naive vs adaptive robustness to noisy joints.
* ``twist_sensitivity_experiment`` - effect of the twist source on joints
  and mesh.
* ``twist_distribution`` - per-joint histograms of twist angles.
* ``accumulation_check`` - closed-form error laws on a stretched chain.

Every trial draws from its own generator seeded with ``(seed, trial)``, so
results do not depend on how trials are scheduled across threads.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .bodymodel import load_model, regress_joints, rest_pose_from_shape, skin
from .errors import ParseError
from .hybrik import MODES, solve
from .kinematics import KinematicTree, bone_vectors, fk
from .metrics import mpjpe, pve
from .rotmath import (
    angle_to_pair,
    compose_twist_swing,
    extract_twist_swing,
    fallback_axis,
    pair_to_angle,
    rodrigues,
    wrap_angle,
)

JITTER_KINDS = ("uniform", "gaussian", "ball")
POSE_SOURCES = ("random", "identity")


class ConfigError(ParseError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    seed: int = 0
    trials: int = 100
    jitter_mm: tuple = (0.0, 10.0, 20.0, 30.0)
    jitter_kind: str = "uniform"
    jitter_root: bool = False
    modes: tuple = MODES
    model: str = None
    output: str = None
    twist_range: float = math.pi / 2
    swing_range: float = math.pi / 2
    beta_std: float = 1.0
    chain_depth: int = 5
    eps_mm: float = 10.0
    bin_deg: float = 5.0
    pose_source: str = "random"
    threads: int = 1

    def __post_init__(self):
        if isinstance(self.jitter_mm, (int, float)):
            self.jitter_mm = (self.jitter_mm,)
        self.jitter_mm = tuple(float(j) for j in self.jitter_mm)
        self.modes = tuple(self.modes)
        checks = [
            ("seed", isinstance(self.seed, int) and not isinstance(self.seed, bool), "must be an integer"),
            ("trials", isinstance(self.trials, int) and self.trials >= 1, "must be an integer >= 1"),
            ("jitter_mm", all(j >= 0 and math.isfinite(j) for j in self.jitter_mm), "levels must be >= 0"),
            ("jitter_kind", self.jitter_kind in JITTER_KINDS, f"must be one of {JITTER_KINDS}"),
            ("modes", bool(self.modes) and all(m in MODES for m in self.modes), f"entries must be in {MODES}"),
            ("twist_range", 0 <= self.twist_range < math.pi, "must lie in [0, pi)"),
            ("swing_range", 0 <= self.swing_range < math.pi, "must lie in [0, pi)"),
            ("beta_std", self.beta_std >= 0, "must be >= 0"),
            ("chain_depth", isinstance(self.chain_depth, int) and self.chain_depth >= 2, "must be an integer >= 2"),
            ("bin_deg", self.bin_deg > 0, "must be > 0"),
            ("pose_source", self.pose_source in POSE_SOURCES, f"must be one of {POSE_SOURCES}"),
            ("threads", isinstance(self.threads, int) and self.threads >= 1, "must be an integer >= 1"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigError(name, msg)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config", "must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown config field")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError("config", str(exc)) from exc

    def to_dict(self):
        d = asdict(self)
        d["jitter_mm"] = list(self.jitter_mm)
        d["modes"] = list(self.modes)
        return d


# ---------------------------------------------------------------------------
# pose synthesis


def _twist_bounds(twist_range):
    if np.isscalar(twist_range):
        return -float(twist_range), float(twist_range)
    lo, hi = twist_range
    return float(lo), float(hi)


def sample_pose(model, beta, seed, twist_range=math.pi / 2, swing_range=math.pi / 2,
                root_range=None, n=None, rigid=("spine1", "left_hip", "right_hip")):
    """Random pose plus the raw sampled twist angles.

    Returns ``(rotations, target, twists, twist_angles)``. Each non-root bone
    swings by an angle uniform in ``[0, swing_range]`` about a uniformly
    random axis perpendicular to it, then twists by an angle uniform in
    ``twist_range``. Joints named in ``rigid`` only twist, keeping them rigid
    with the root as the root registration assumes. The root rotates by an
    angle uniform in ``[0, root_range]`` (default ``swing_range``) about a
    uniform random axis.
    """
    rng = np.random.default_rng(seed)
    tree = model.tree
    K = tree.n_joints
    batch = () if n is None else (n,)
    lo, hi = _twist_bounds(twist_range)
    root_range = swing_range if root_range is None else root_range

    template = rest_pose_from_shape(model, beta)
    bones = bone_vectors(tree, template)[..., 1:, :]
    bones = np.broadcast_to(bones, batch + (K - 1, 3))

    root_axis = rng.standard_normal(batch + (3,))
    root_axis /= np.linalg.norm(root_axis, axis=-1, keepdims=True)
    root_angle = rng.uniform(0.0, root_range, batch)

    # random unit axis in the plane perpendicular to each bone
    u = fallback_axis(bones)
    w = np.cross(bones / np.linalg.norm(bones, axis=-1, keepdims=True), u)
    psi = rng.uniform(0.0, 2 * np.pi, batch + (K - 1,))
    axis = np.cos(psi)[..., None] * u + np.sin(psi)[..., None] * w
    swing = rng.uniform(0.0, swing_range, batch + (K - 1,))
    rigid_idx = [tree.index(j) - 1 for j in rigid if j in tree.names]
    swing[..., rigid_idx] = 0.0
    twist = rng.uniform(lo, hi, batch + (K - 1,))

    targets = np.einsum("...kij,...kj->...ki", rodrigues(axis, swing), bones)
    rotations = np.empty(batch + (K, 3, 3))
    rotations[..., 0, :, :] = rodrigues(root_axis, root_angle)
    rotations[..., 1:, :, :] = compose_twist_swing(bones, targets, angle_to_pair(twist))
    joints = fk(tree, template, rotations)
    _, pairs = extract_twist_swing(rotations[..., 1:, :, :], bones)
    return rotations, joints, pairs, twist


def gen_random_pose(model, beta, seed, twist_range=math.pi / 2, swing_range=math.pi / 2,
                    root_range=None, n=None):
    """``(rotations, target joints, twist pairs)`` for a random pose.

    The twist pairs are extracted back from the generated rotations. See
    :func:`sample_pose` for the sampling distributions.
    """
    rotations, joints, pairs, _ = sample_pose(
        model, beta, seed, twist_range, swing_range, root_range, n
    )
    return rotations, joints, pairs


def jitter(rng, joints, magnitude, kind="uniform", include_root=False):
    """Add bounded noise to joints.

    ``uniform`` draws each coordinate from ``[-m, m]``; ``gaussian`` uses the
    same per-coordinate variance (``sigma = m / sqrt(3)``); ``ball`` draws
    each joint offset uniformly from a ball of radius ``m``.
    """
    joints = np.asarray(joints, dtype=float)
    if kind == "uniform":
        noise = rng.uniform(-magnitude, magnitude, joints.shape)
    elif kind == "gaussian":
        noise = rng.normal(0.0, magnitude / math.sqrt(3.0), joints.shape)
    elif kind == "ball":
        d = rng.standard_normal(joints.shape)
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        r = magnitude * rng.uniform(0.0, 1.0, joints.shape[:-1]) ** (1 / 3)
        noise = d * r[..., None]
    else:
        raise ValueError(f"unknown jitter kind {kind!r}")
    if not include_root:
        noise[..., 0, :] = 0.0
    return joints + noise


# ---------------------------------------------------------------------------
# experiments


def _trial_inputs(model, cfg, i):
    beta = np.random.default_rng([cfg.seed, i, 1]).normal(0.0, cfg.beta_std, model.n_betas)
    rotations, joints, pairs, angles = sample_pose(
        model, beta, [cfg.seed, i], cfg.twist_range, cfg.swing_range
    )
    return beta, rotations, joints, pairs, angles


def _map_trials(fn, cfg):
    if cfg.threads == 1:
        results = [fn(i) for i in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(cfg.threads) as pool:
            results = list(pool.map(fn, range(cfg.trials)))
    return [np.stack(col) for col in zip(*results)]


def _model(cfg, model):
    return model if model is not None else load_model(cfg.model)


def jitter_experiment(cfg, model=None):
    """Naive vs adaptive joint error under input jitter.

    Returns ``(table, per_trial)``: ``table[j][mode]`` is the mean over
    trials of the root-aligned MPJPE between the reconstructed joints and the
    unperturbed target, ``per_trial[j][mode]`` the per-trial values.
    """
    model = _model(cfg, model)
    tree = model.tree

    def one(i):
        beta, _, joints, pairs, _ = _trial_inputs(model, cfg, i)
        template = rest_pose_from_shape(model, beta)
        noisy = [
            jitter(np.random.default_rng([cfg.seed, i, 2, li]), joints, j, cfg.jitter_kind, cfg.jitter_root)
            for li, j in enumerate(cfg.jitter_mm)
        ]
        return template, joints, pairs, np.stack(noisy)

    template, joints, pairs, noisy = _map_trials(one, cfg)
    table, per_trial = {}, {}
    for li, j in enumerate(cfg.jitter_mm):
        table[j], per_trial[j] = {}, {}
        for mode in cfg.modes:
            report = solve(tree, template, noisy[:, li], pairs, mode=mode)
            err = mpjpe(report.reconstructed, joints, root_align=True)
            per_trial[j][mode] = err
            table[j][mode] = float(err.mean())
    return table, per_trial


def twist_sensitivity_experiment(cfg, model=None, regressor="lsp14", mode="adaptive"):
    """Solve with ground-truth and with uniform random twists.

    Returns ``(table, per_trial)`` keyed by twist source (``"gt"``,
    ``"random"``); each entry holds ``joint_err`` (solver joints vs target),
    ``eval_err`` (regressed evaluation joints), ``pve`` and ``twist_err_deg``.
    """
    model = _model(cfg, model)
    tree = model.tree
    eval_reg = model.eval_regressors.get(regressor) if regressor else None

    def one(i):
        beta, rotations, joints, pairs, angles = _trial_inputs(model, cfg, i)
        rnd = np.random.default_rng([cfg.seed, i, 3]).uniform(-np.pi, np.pi, angles.shape)
        return beta, rotations, joints, pairs, angles, rnd

    beta, rotations, joints, pairs, angles, rnd = _map_trials(one, cfg)
    template = rest_pose_from_shape(model, beta)
    gt_mesh = skin(model, beta, rotations)
    table, per_trial = {}, {}
    for source, twist in (("gt", pairs), ("random", angle_to_pair(rnd))):
        report = solve(tree, template, joints, twist, mode=mode)
        mesh = skin(model, beta, report.rotations)
        res = {
            "joint_err": report.per_joint_error.mean(axis=-1),
            "pve": pve(mesh, gt_mesh),
            "twist_err_deg": np.degrees(
                np.abs(wrap_angle(pair_to_angle(twist) - angles))
            ).mean(axis=-1),
            "reconstructed": report.reconstructed,
        }
        if eval_reg is not None:
            res["eval_err"] = mpjpe(
                regress_joints(eval_reg, mesh), regress_joints(eval_reg, gt_mesh), root_align=False
            )
        per_trial[source] = res
        table[source] = {k: float(v.mean()) for k, v in res.items() if k != "reconstructed"}
    return table, per_trial


def extract_twist_angles(tree, template, rotations):
    """Twist angle (radians) of every relative rotation about its template bone."""
    bones = bone_vectors(tree, template)[..., 1:, :]
    rotations = np.asarray(rotations, dtype=float)
    _, pairs = extract_twist_swing(rotations[..., 1:, :, :], bones)
    return pair_to_angle(pairs)


def twist_distribution(poses, model, beta=None, bin_deg=5.0):
    """Per-joint histogram of twist angles in degrees.

    Bins have width ``bin_deg`` and are centred on its multiples, so a zero
    twist lands in the bin centred on 0. Returns ``{joint name: {"centers",
    "counts", "min_deg", "max_deg"}}`` for every non-root joint.
    """
    poses = np.asarray(poses, dtype=float)
    if poses.ndim == 3:
        poses = poses[None]
    if poses.shape[0] == 0:
        raise ValueError("no poses given")
    beta = np.zeros(model.n_betas) if beta is None else beta
    template = rest_pose_from_shape(model, beta)
    deg = np.degrees(extract_twist_angles(model.tree, template, poses))
    half = int(math.ceil(180.0 / bin_deg))
    centers = bin_deg * np.arange(-half, half + 1)
    edges = np.append(centers - bin_deg / 2, centers[-1] + bin_deg / 2)
    out = {}
    for k, name in enumerate(model.tree.names[1:]):
        col = deg[:, k]
        counts, _ = np.histogram(col, bins=edges)
        out[name] = {
            "centers": centers,
            "counts": counts,
            "min_deg": float(col.min()),
            "max_deg": float(col.max()),
        }
    return out


def stretched_chain(chain_depth, eps_mm, bone_mm=100.0):
    """Straight chain along +y and a copy with every bone ``eps_mm`` longer."""
    tree = KinematicTree.chain(chain_depth)
    steps = np.arange(chain_depth, dtype=float)[:, None]
    up = np.array([[0.0, 1.0, 0.0]])
    return tree, steps * bone_mm * up, steps * (bone_mm + eps_mm) * up


def accumulation_check(chain_depth, eps_mm, bone_mm=100.0):
    """Measured vs closed-form per-joint errors on a stretched straight chain.

    Naive errors equal the sum of the bone mismatches from the root down to
    each joint; adaptive errors equal the joint's own mismatch. Arrays cover
    the non-root joints.
    """
    tree, template, target = stretched_chain(chain_depth, eps_mm, bone_mm)
    twists = angle_to_pair(np.zeros(chain_depth - 1))
    naive = solve(tree, template, target, twists, triple=None, mode="naive")
    adaptive = solve(tree, template, target, twists, triple=None, mode="adaptive")
    own = np.abs(naive.bone_eps[1:])
    return {
        "naive": naive.per_joint_error[1:],
        "adaptive": adaptive.per_joint_error[1:],
        "naive_predicted": np.cumsum(own),
        "adaptive_predicted": np.abs(adaptive.bone_eps[1:]),
    }


def distribution_poses(cfg, model=None):
    """Rotation sets used by the distribution benchmark."""
    model = _model(cfg, model)
    K = model.tree.n_joints
    if cfg.pose_source == "identity":
        return np.broadcast_to(np.eye(3), (cfg.trials, K, 3, 3)).copy()
    zero = np.zeros(model.n_betas)
    return np.stack([
        sample_pose(model, zero, [cfg.seed, i], cfg.twist_range, cfg.swing_range)[0]
        for i in range(cfg.trials)
    ])


def manifest(experiment, cfg, files=(), extra=None):
    m = {
        "experiment": experiment,
        "library": "hybrik_kit",
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "jitter_model": {
            "kind": cfg.jitter_kind,
            "per_coordinate": cfg.jitter_kind != "ball",
            "root_jittered": cfg.jitter_root,
        },
        "mpjpe_protocol": "root-aligned",
        "files": list(files),
    }
    if extra:
        m.update(extra)
    return m
