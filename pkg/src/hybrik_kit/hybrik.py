"""Analytical-neural inverse kinematics via twist-and-swing decomposition.

Both solvers walk the tree root-first. For every joint the target bone is
brought into the parent's frame, the swing is solved in closed form and the
supplied twist angle is applied about the template bone. The naive variant
forms target bones from the input parent joint; the adaptive variant uses
the parent joint it has just reconstructed, so bone-length mismatches do not
propagate to descendants.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTarget, DegenerateTriple, LengthMismatch, ZeroLengthVector
from .kinematics import _check_joints, bone_vectors
from .rotmath import swing_between, twist_about

DEFAULT_TRIPLE = ("spine1", "left_hip", "right_hip")
TARGET_TOL = 1e-9
COLLINEAR_TOL = 1e-6
MODES = ("naive", "adaptive")


@dataclass
class SolveReport:
    """Result of one IK solve; arrays may carry leading batch dimensions.

    ``bone_eps`` is signed: positive when the target bone is longer than the
    template bone. Its absolute value is the per-step mismatch magnitude.
    """

    mode: str
    rotations: np.ndarray
    global_rotations: np.ndarray
    reconstructed: np.ndarray
    per_joint_error: np.ndarray
    bone_eps: np.ndarray
    degenerate: np.ndarray
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def mean_error(self):
        return self.per_joint_error.mean(axis=-1)

    @property
    def flagged_joints(self):
        """Indices of joints whose swing fell back to the anti-parallel convention in any frame."""
        flags = self.degenerate.reshape(-1, self.degenerate.shape[-1]).any(axis=0)
        return [int(k) for k in np.flatnonzero(flags)]


def resolve_triple(tree, triple=DEFAULT_TRIPLE):
    """Map a triple of joint names or indices to indices."""
    if triple is None:
        return None
    idx = tuple(tree.index(j) if isinstance(j, str) else int(j) for j in triple)
    if len(idx) != 3 or len(set(idx)) != 3 or 0 in idx:
        raise DegenerateTriple(f"root triple must be three distinct non-root joints, got {idx}")
    if any(not 0 < i < tree.n_joints for i in idx):
        raise DegenerateTriple(f"root triple index out of range: {idx}")
    return idx


def solve_root_rotation(template, target, triple):
    """Rotation best aligning the root-relative triple of ``template`` to ``target``.

    ``template`` and ``target`` are ``(..., K, 3)`` joint arrays and ``triple``
    three joint indices. The SVD of the 3x3 cross-covariance gives
    ``R0 = V diag(1, 1, det(V U^T)) U^T``, which minimises
    ``||P0 - R T0||_F`` over proper rotations.
    """
    template = np.asarray(template, dtype=float)
    target = np.asarray(target, dtype=float)
    idx = list(triple)
    T0 = template[..., idx, :] - template[..., :1, :]
    P0 = target[..., idx, :] - target[..., :1, :]
    _check_triple(T0)

    # rows are points, so T0^T P0 is the cross-covariance with points as columns
    H = np.swapaxes(T0, -1, -2) @ P0
    U, _, Vt = np.linalg.svd(H)
    V = np.swapaxes(Vt, -1, -2)
    Ut = np.swapaxes(U, -1, -2)
    d = np.sign(np.linalg.det(V @ Ut))
    d = np.where(d == 0, 1.0, d)
    D = np.broadcast_to(np.eye(3), d.shape + (3, 3)).copy()
    D[..., 2, 2] = d
    return V @ D @ Ut


def _check_triple(T0):
    norms = np.linalg.norm(T0, axis=-1)
    if np.any(norms < 1e-12):
        raise DegenerateTriple("root triple joint coincides with the root")
    best = np.zeros(T0.shape[:-2])
    for i, j in ((0, 1), (0, 2), (1, 2)):
        c = np.linalg.norm(np.cross(T0[..., i, :], T0[..., j, :]), axis=-1)
        best = np.maximum(best, c / (norms[..., i] * norms[..., j]))
    if np.any(best < COLLINEAR_TOL):
        raise DegenerateTriple("root triple is collinear in the template")


def _run(tree, template, target, twists, triple, adaptive):
    template = _check_joints(tree, template, "template")
    target = _check_joints(tree, target, "target")
    twists = np.asarray(twists, dtype=float)
    K = tree.n_joints
    if twists.ndim < 2 or twists.shape[-2:] != (K - 1, 2):
        raise LengthMismatch(f"twists have shape {twists.shape}, expected (..., {K - 1}, 2)")
    batch = np.broadcast_shapes(template.shape[:-2], target.shape[:-2], twists.shape[:-2])

    tbones = np.broadcast_to(bone_vectors(tree, template), batch + (K, 3))
    tlen = np.linalg.norm(tbones, axis=-1)
    short = np.flatnonzero((tlen[..., 1:] < 1e-12).reshape(-1, K - 1).any(axis=0))
    if short.size:
        raise ZeroLengthVector(f"template bone of joint {tree.names[short[0] + 1]!r} has zero length")
    target = np.broadcast_to(target, batch + (K, 3))
    template = np.broadcast_to(template, batch + (K, 3))
    twists = np.broadcast_to(twists, batch + (K - 1, 2))

    triple = resolve_triple(tree, triple)
    if triple is None:
        R0 = np.broadcast_to(np.eye(3), batch + (3, 3))
    else:
        R0 = solve_root_rotation(template, target, triple)

    rel = np.empty(batch + (K, 3, 3))
    glob = np.empty(batch + (K, 3, 3))
    q = np.empty(batch + (K, 3))
    eps = np.zeros(batch + (K,))
    flags = np.zeros(batch + (K,), dtype=bool)
    rel[..., 0, :, :] = R0
    glob[..., 0, :, :] = R0
    q[..., 0, :] = template[..., 0, :]

    for k in range(1, K):
        pa = tree.parents[k]
        base = q[..., pa, :] if adaptive else target[..., pa, :]
        d = target[..., k, :] - base
        dlen = np.linalg.norm(d, axis=-1)
        if np.any(dlen < TARGET_TOL):
            raise DegenerateTarget(
                f"target joint {tree.names[k]!r} coincides with its parent "
                f"({'reconstructed' if adaptive else 'input'}) position"
            )
        # R^-1 = R^T for the parent's global rotation
        p_vec = np.einsum("...ji,...j->...i", glob[..., pa, :, :], d)
        sw, deg = swing_between(tbones[..., k, :], p_vec, return_flags=True)
        tw = twist_about(tbones[..., k, :], twists[..., k - 1, :])
        rel[..., k, :, :] = sw @ tw
        glob[..., k, :, :] = glob[..., pa, :, :] @ rel[..., k, :, :]
        q[..., k, :] = (
            np.einsum("...ij,...j->...i", glob[..., k, :, :], tbones[..., k, :]) + q[..., pa, :]
        )
        eps[..., k] = dlen - tlen[..., k]
        flags[..., k] = deg

    return SolveReport(
        mode="adaptive" if adaptive else "naive",
        rotations=rel,
        global_rotations=glob,
        reconstructed=q,
        per_joint_error=np.linalg.norm(target - q, axis=-1),
        bone_eps=eps,
        degenerate=flags,
    )


def hybrik_naive(tree, template, target, twists, triple=DEFAULT_TRIPLE):
    """Naive solver: target bones are ``p_k - p_pa(k)``.

    ``twists`` holds ``(cos, sin)`` pairs for joints 1..K-1. Pass
    ``triple=None`` to keep the root rotation at the identity instead of
    registering it from the root triple.
    """
    return _run(tree, template, target, twists, triple, adaptive=False)


def hybrik_adaptive(tree, template, target, twists, triple=DEFAULT_TRIPLE):
    """Adaptive solver: target bones are ``p_k - q_pa(k)`` with ``q`` rebuilt on the fly."""
    return _run(tree, template, target, twists, triple, adaptive=True)


def solve(tree, template, target, twists, triple=DEFAULT_TRIPLE, mode="adaptive"):
    """Translate the target so its root sits on the template root, then solve.

    The applied translation is stored in ``report.translation``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    template = _check_joints(tree, template, "template")
    target = _check_joints(tree, target, "target")
    shift = template[..., :1, :] - target[..., :1, :]
    solver = hybrik_adaptive if mode == "adaptive" else hybrik_naive
    report = solver(tree, template, target + shift, twists, triple)
    report.translation = shift[..., 0, :]
    return report
