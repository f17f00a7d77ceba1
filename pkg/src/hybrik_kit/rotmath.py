"""Rotation algebra on 3x3 matrices.

All functions broadcast over leading dimensions: vectors are ``(..., 3)``,
rotations ``(..., 3, 3)`` and twist angles ``(..., 2)`` arrays holding
``(cos, sin)`` pairs.

Conventions
-----------
* A positive twist is a right-handed rotation about the bone direction
  (parent to child).
* ``swing_between`` returns the identity for parallel inputs and a half turn
  about a fixed perpendicular axis for anti-parallel inputs. That axis is
  ``normalize(t x e_i)`` where ``e_i`` is the basis vector for the smallest
  ``|t_i|``.
"""

import numpy as np

from .errors import DegeneratePair, NonUnitAxis, ZeroLengthVector

ZERO_NORM = 1e-12
PARALLEL_TOL = 1e-9
UNIT_TOL = 1e-9


def skew(v):
    """Cross-product matrix ``[v]x`` with ``skew(v) @ u == cross(v, u)``."""
    v = np.asarray(v, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    zero = np.zeros_like(x)
    return np.stack(
        [
            np.stack([zero, -z, y], axis=-1),
            np.stack([z, zero, -x], axis=-1),
            np.stack([-y, x, zero], axis=-1),
        ],
        axis=-2,
    )


def _rodrigues_cs(axis, c, s):
    # axis assumed unit; c, s broadcast against axis[..., 0]
    K = skew(axis)
    K2 = K @ K
    c = np.asarray(c, dtype=float)[..., None, None]
    s = np.asarray(s, dtype=float)[..., None, None]
    return np.eye(3) + s * K + (1.0 - c) * K2


def rodrigues(axis, angle):
    """Rotation of ``angle`` radians about the unit vector ``axis``."""
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis, axis=-1)
    if np.any(np.abs(norm - 1.0) > UNIT_TOL):
        raise NonUnitAxis(f"axis norm deviates from 1: {np.max(np.abs(norm - 1.0)):.3g}")
    angle = np.asarray(angle, dtype=float)
    return _rodrigues_cs(axis, np.cos(angle), np.sin(angle))


def _check_nonzero(v, what):
    norm = np.linalg.norm(v, axis=-1)
    if np.any(~(norm >= ZERO_NORM)):
        raise ZeroLengthVector(f"{what} has norm below {ZERO_NORM:g}")
    return norm


def fallback_axis(t):
    """Deterministic unit axis perpendicular to ``t``."""
    t = np.asarray(t, dtype=float)
    idx = np.argmin(np.abs(t), axis=-1)
    e = np.eye(3)[idx]
    n = np.cross(t, e)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def swing_between(t, p, return_flags=False):
    """Minimal rotation carrying the direction of ``t`` onto that of ``p``.

    The axis is ``t x p`` normalised and the angle comes from the dot and
    cross products. With ``return_flags`` a boolean array marking inputs that
    fell back to the anti-parallel convention is also returned.
    """
    t = np.asarray(t, dtype=float)
    p = np.asarray(p, dtype=float)
    nt = _check_nonzero(t, "template vector")
    np_ = _check_nonzero(p, "target vector")
    t, p = np.broadcast_arrays(t, p)
    nt, np_ = np.broadcast_arrays(nt, np_)

    cross = np.cross(t, p)
    ncross = np.linalg.norm(cross, axis=-1)
    scale = nt * np_
    cos_a = np.sum(t * p, axis=-1) / scale
    sin_a = ncross / scale

    degenerate = ncross < PARALLEL_TOL * scale
    anti = degenerate & (cos_a < 0)

    safe = np.where(degenerate, 1.0, ncross)[..., None]
    axis = cross / safe
    if np.any(anti):
        axis = np.where(anti[..., None], fallback_axis(t), axis)
    cos_a = np.where(degenerate, np.where(anti, -1.0, 1.0), cos_a)
    sin_a = np.where(degenerate, 0.0, sin_a)

    R = _rodrigues_cs(axis, cos_a, sin_a)
    if return_flags:
        return R, anti
    return R


def normalize_pair(phi):
    """Rescale ``(cos, sin)`` pairs to unit length.

    Pairs whose squared norm lies outside ``[0.5, 2]`` are rejected.
    """
    phi = np.asarray(phi, dtype=float)
    sq = np.sum(phi * phi, axis=-1)
    if np.any(~((sq >= 0.5) & (sq <= 2.0))):
        raise DegeneratePair("twist pair has squared norm outside [0.5, 2]")
    return phi / np.sqrt(sq)[..., None]


def twist_about(t, phi):
    """Rotation by the twist angle ``phi = (cos, sin)`` about ``t`` itself."""
    t = np.asarray(t, dtype=float)
    nt = _check_nonzero(t, "twist axis")
    phi = normalize_pair(phi)
    c, s = phi[..., 0], phi[..., 1]
    K = skew(t)
    nt = nt[..., None, None]
    return (
        np.eye(3)
        + (s[..., None, None] / nt) * K
        + ((1.0 - c)[..., None, None] / nt**2) * (K @ K)
    )


def compose_twist_swing(t, p, phi):
    """Relative rotation ``swing(t -> p) @ twist(t, phi)``."""
    return swing_between(t, p) @ twist_about(t, phi)


def _vee(A):
    return np.stack([A[..., 2, 1], A[..., 0, 2], A[..., 1, 0]], axis=-1)


def twist_pair(R_tw, t):
    """``(cos, sin)`` of a rotation ``R_tw`` known to fix ``t``."""
    t = np.asarray(t, dtype=float)
    n = t / np.linalg.norm(t, axis=-1, keepdims=True)
    c = (np.trace(R_tw, axis1=-2, axis2=-1) - 1.0) / 2.0
    s = np.sum(_vee(R_tw - np.swapaxes(R_tw, -1, -2)) * n, axis=-1) / 2.0
    pair = np.stack([c, s], axis=-1)
    return pair / np.linalg.norm(pair, axis=-1, keepdims=True)


def extract_twist_swing(R, t):
    """Split ``R`` into ``(swing, phi)`` so that ``swing @ twist_about(t, phi) == R``."""
    R = np.asarray(R, dtype=float)
    t = np.asarray(t, dtype=float)
    _check_nonzero(t, "bone vector")
    Rt = np.einsum("...ij,...j->...i", R, t)
    swing = swing_between(t, Rt)
    R_tw = np.swapaxes(swing, -1, -2) @ R
    return swing, twist_pair(R_tw, t)


def angle_to_pair(angle):
    angle = np.asarray(angle, dtype=float)
    return np.stack([np.cos(angle), np.sin(angle)], axis=-1)


def pair_to_angle(phi):
    """Angle in ``(-pi, pi]`` of a (possibly slightly unnormalised) pair."""
    phi = normalize_pair(phi)
    angle = np.arctan2(phi[..., 1], phi[..., 0])
    # atan2 returns -pi for (-1, -0.0)
    return np.where(angle == -np.pi, np.pi, angle)


def wrap_angle(angle):
    """Wrap radians into ``(-pi, pi]``."""
    a = np.asarray(angle, dtype=float)
    w = np.mod(a + np.pi, 2 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


def is_rotation(R, tol=1e-8):
    R = np.asarray(R, dtype=float)
    eye_err = np.abs(np.swapaxes(R, -1, -2) @ R - np.eye(3)).max(axis=(-2, -1))
    det_err = np.abs(np.linalg.det(R) - 1.0)
    return (eye_err <= tol) & (det_err <= tol)


def random_rotations(rng, size=None):
    """Uniformly distributed rotations (Haar measure) via unit quaternions."""
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    q = rng.standard_normal(shape + (4,))
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)], -1),
            np.stack([2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)], -1),
            np.stack([2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)], -1),
        ],
        axis=-2,
    )
