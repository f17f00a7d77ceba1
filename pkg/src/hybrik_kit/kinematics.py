"""Kinematic trees and forward kinematics.

Joint positions are ``(..., K, 3)`` arrays in millimetres and relative
rotations ``(..., K, 3, 3)``. Entry 0 of a rotation set is the global root
rotation; entry ``k`` rotates the bone from ``parent[k]`` to ``k`` relative to
the parent's frame.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import KinematicsError, LengthMismatch


@dataclass(frozen=True)
class KinematicTree:
    """Parent array in topological (root-first) order.

    ``parents[0]`` must be ``-1`` and ``parents[k] < k`` for every other joint.
    """

    parents: tuple
    names: tuple = None

    def __post_init__(self):
        parents = tuple(int(p) for p in self.parents)
        if not parents or parents[0] != -1:
            raise KinematicsError("joint 0 must be the root (parent -1)")
        for k, p in enumerate(parents[1:], start=1):
            if not 0 <= p < k:
                raise KinematicsError(
                    f"joint {k} has parent {p}; parents must precede children"
                )
        names = self.names
        if names is None:
            names = tuple(f"joint_{k}" for k in range(len(parents)))
        names = tuple(str(n) for n in names)
        if len(names) != len(parents):
            raise LengthMismatch(f"{len(names)} names for {len(parents)} joints")
        if len(set(names)) != len(names):
            raise KinematicsError("joint names must be unique")
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "names", names)

    @property
    def n_joints(self):
        return len(self.parents)

    def __len__(self):
        return len(self.parents)

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no joint named {name!r}") from None

    def ancestors(self, k):
        """Ancestors of ``k`` ordered from parent up to the root."""
        out = []
        p = self.parents[k]
        while p >= 0:
            out.append(p)
            p = self.parents[p]
        return out

    @cached_property
    def children(self):
        kids = [[] for _ in self.parents]
        for k, p in enumerate(self.parents[1:], start=1):
            kids[p].append(k)
        return tuple(tuple(c) for c in kids)

    @cached_property
    def depth(self):
        d = [0] * len(self.parents)
        for k in range(1, len(self.parents)):
            d[k] = d[self.parents[k]] + 1
        return tuple(d)

    @classmethod
    def chain(cls, n):
        return cls(tuple(range(-1, n - 1)))


def _check_joints(tree, joints, what="joints"):
    joints = np.asarray(joints, dtype=float)
    if joints.ndim < 2 or joints.shape[-2:] != (tree.n_joints, 3):
        raise LengthMismatch(
            f"{what} has shape {joints.shape}, expected (..., {tree.n_joints}, 3)"
        )
    return joints


def _check_rotations(tree, rotations):
    rotations = np.asarray(rotations, dtype=float)
    if rotations.ndim < 3 or rotations.shape[-3:] != (tree.n_joints, 3, 3):
        raise LengthMismatch(
            f"rotations have shape {rotations.shape}, expected (..., {tree.n_joints}, 3, 3)"
        )
    return rotations


def bone_vectors(tree, joints):
    """``joints[k] - joints[parent[k]]``; the root entry is zero."""
    joints = _check_joints(tree, joints)
    par = np.array((0,) + tree.parents[1:])
    bones = joints - joints[..., par, :]
    bones[..., 0, :] = 0.0
    return bones


def bone_lengths(tree, joints):
    """Length of each bone in mm; entry 0 (the root) is 0."""
    return np.linalg.norm(bone_vectors(tree, joints), axis=-1)


def global_rotations(tree, rotations):
    rotations = _check_rotations(tree, rotations)
    out = np.empty_like(rotations)
    out[..., 0, :, :] = rotations[..., 0, :, :]
    for k in range(1, tree.n_joints):
        out[..., k, :, :] = out[..., tree.parents[k], :, :] @ rotations[..., k, :, :]
    return out


def fk(tree, template, rotations, return_global=False):
    """Pose the rest template with relative rotations.

    The root stays at ``template[0]``; every other joint is its parent's
    posed position plus the template bone rotated by the joint's global
    rotation.
    """
    template = _check_joints(tree, template, "template")
    rotations = _check_rotations(tree, rotations)
    glob = global_rotations(tree, rotations)
    bones = bone_vectors(tree, template)
    shape = np.broadcast_shapes(template.shape, glob.shape[:-1])
    q = np.empty(shape)
    q[..., 0, :] = template[..., 0, :]
    for k in range(1, tree.n_joints):
        q[..., k, :] = (
            np.einsum("...ij,...j->...i", glob[..., k, :, :], bones[..., k, :])
            + q[..., tree.parents[k], :]
        )
    if return_global:
        return q, glob
    return q


def check_ik_condition(tree, template, target, rotations):
    """Per-joint residual (mm) of ``p_k - p_pa = R_k (t_k - t_pa)``.

    The root residual is ``|p_0 - t_0|``.
    """
    template = _check_joints(tree, template, "template")
    target = _check_joints(tree, target, "target")
    glob = global_rotations(tree, rotations)
    rotated = np.einsum("...kij,...kj->...ki", glob, bone_vectors(tree, template))
    res = np.linalg.norm(bone_vectors(tree, target) - rotated, axis=-1)
    res[..., 0] = np.linalg.norm(target[..., 0, :] - template[..., 0, :], axis=-1)
    return res
