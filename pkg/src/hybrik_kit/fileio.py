"""Pose file and numeric text formatting.

A pose file is a JSON object with ``format_version`` 1 and any of
``joints`` (K x 3, mm), ``rotations`` (K x 9 row-major relative matrices),
``twists`` (K-1 ``[cos, sin]`` pairs) and ``beta``. Numbers are written with
9 significant digits unless full precision is requested.
"""

import json
import math
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ParseError

FORMAT_VERSION = 1
POSE_FIELDS = ("joints", "rotations", "twists", "beta")


def round_sig(x, digits=9):
    """Round a float to ``digits`` significant digits (``None`` keeps it exact)."""
    x = float(x)
    if digits is None or not math.isfinite(x):
        return x
    return float(f"{x:.{digits}g}")


def to_plain(obj, digits=9):
    """Convert numpy containers to JSON-ready lists with rounded floats."""
    if isinstance(obj, dict):
        return {k: to_plain(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist(), digits)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(obj, digits)
    return obj


def dumps(obj, digits=9):
    return json.dumps(to_plain(obj, digits), indent=1) + "\n"


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc


def read_pose(path, n_joints, n_betas=10, require=()):
    """Load and validate a pose file against a model's joint and beta counts.

    Returns a dict holding numpy arrays; rotations come back as ``(K, 3, 3)``.
    """
    d = read_json(path)
    if not isinstance(d, dict):
        raise ParseError("pose file must be a JSON object")
    if d.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"unsupported pose format_version {d.get('format_version')!r}")
    if "joints" not in d and "rotations" not in d:
        raise ParseError("pose file needs 'joints' or 'rotations'")
    for name in require:
        if name not in d:
            raise ParseError(f"pose file is missing field {name!r}")
    shapes = {
        "joints": (n_joints, 3),
        "rotations": (n_joints, 9),
        "twists": (n_joints - 1, 2),
        "beta": (n_betas,),
    }
    out = {}
    for name in POSE_FIELDS:
        if name not in d:
            continue
        try:
            arr = np.asarray(d[name], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"field {name!r} is not numeric: {exc}") from exc
        if arr.shape != shapes[name]:
            raise DimensionMismatch(f"field {name!r} has shape {arr.shape}, expected {shapes[name]}")
        if not np.all(np.isfinite(arr)):
            raise ParseError(f"field {name!r} contains non-finite values")
        out[name] = arr.reshape(n_joints, 3, 3) if name == "rotations" else arr
    return out


def pose_document(joints=None, rotations=None, twists=None, beta=None, **extra):
    d = {"format_version": FORMAT_VERSION}
    if joints is not None:
        d["joints"] = np.asarray(joints)
    if rotations is not None:
        rotations = np.asarray(rotations)
        d["rotations"] = rotations.reshape(rotations.shape[0], 9)
    if twists is not None:
        d["twists"] = np.asarray(twists)
    if beta is not None:
        d["beta"] = np.asarray(beta)
    d.update(extra)
    return d


def write_text(path, text):
    if path is None or str(path) == "-":
        import sys

        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
