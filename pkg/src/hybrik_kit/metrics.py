"""Pose and mesh error metrics (millimetres)."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration, LengthMismatch

COLLINEAR_TOL = 1e-9


@dataclass
class MetricReport:
    mpjpe: float
    pa_mpjpe: float
    per_joint: np.ndarray
    pve: float = None


def _pair(pred, gt, what="joints"):
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape[-1] != 3 or gt.shape[-1] != 3 or pred.shape[-2] != gt.shape[-2]:
        raise LengthMismatch(f"{what} shapes differ: {pred.shape} vs {gt.shape}")
    return pred, gt


def per_joint_error(pred, gt, root_align=True, root=0):
    pred, gt = _pair(pred, gt)
    if root_align:
        pred = pred - pred[..., root : root + 1, :]
        gt = gt - gt[..., root : root + 1, :]
    return np.linalg.norm(pred - gt, axis=-1)


def mpjpe(pred, gt, root_align=True, root=0):
    """Mean per-joint position error, optionally after matching the root joints."""
    return per_joint_error(pred, gt, root_align, root).mean(axis=-1)


def similarity_align(pred, gt):
    """Least-squares similarity transform (rotation, translation, uniform
    scale) of ``pred`` onto ``gt``; returns the transformed ``pred``."""
    pred, gt = _pair(pred, gt)
    mu_p = pred.mean(axis=-2, keepdims=True)
    mu_g = gt.mean(axis=-2, keepdims=True)
    X = pred - mu_p
    Y = gt - mu_g
    for arr in (X, Y):
        s = np.linalg.svd(arr, compute_uv=False)
        if np.any(s[..., 1] <= COLLINEAR_TOL * s[..., 0]):
            raise DegenerateConfiguration("point set is collinear or coincident")
    H = np.swapaxes(X, -1, -2) @ Y
    U, S, Vt = np.linalg.svd(H)
    V = np.swapaxes(Vt, -1, -2)
    Ut = np.swapaxes(U, -1, -2)
    d = np.sign(np.linalg.det(V @ Ut))
    d = np.where(d == 0, 1.0, d)
    S = S.copy()
    S[..., 2] *= d
    V[..., :, 2] *= d[..., None]
    R = V @ Ut
    scale = S.sum(axis=-1) / np.sum(X * X, axis=(-2, -1))
    return scale[..., None, None] * (X @ np.swapaxes(R, -1, -2)) + mu_g


def pa_mpjpe(pred, gt):
    """MPJPE after similarity (Procrustes) alignment of ``pred`` onto ``gt``."""
    aligned = similarity_align(pred, gt)
    return np.linalg.norm(aligned - np.asarray(gt, dtype=float), axis=-1).mean(axis=-1)


def pve(pred_mesh, gt_mesh):
    """Mean per-vertex Euclidean distance, no alignment."""
    pred_mesh, gt_mesh = _pair(pred_mesh, gt_mesh, "meshes")
    return np.linalg.norm(pred_mesh - gt_mesh, axis=-1).mean(axis=-1)


def evaluate(pred, gt, pred_mesh=None, gt_mesh=None, root_align=True):
    per_joint = per_joint_error(pred, gt, root_align)
    return MetricReport(
        mpjpe=float(per_joint.mean()),
        pa_mpjpe=float(pa_mpjpe(pred, gt)),
        per_joint=per_joint,
        pve=None if pred_mesh is None else float(pve(pred_mesh, gt_mesh)),
    )
