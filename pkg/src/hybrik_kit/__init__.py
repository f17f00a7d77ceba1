"""Hybrid analytical-neural inverse kinematics toolkit."""

from .bodymodel import BodyModel, load_model, regress_joints, rest_pose_from_shape, skin
from .hybrik import SolveReport, hybrik_adaptive, hybrik_naive, solve, solve_root_rotation
from .kinematics import KinematicTree, bone_lengths, check_ik_condition, fk, global_rotations
from .rotmath import (
    angle_to_pair,
    compose_twist_swing,
    extract_twist_swing,
    pair_to_angle,
    rodrigues,
    skew,
    swing_between,
    twist_about,
)

__version__ = "0.1.0"
