"""Parametric body model: shape blend offsets, joint regression and linear
blend skinning.

The model is the SMPL structure without pose-dependent correctives: a mean
mesh plus a linear shape basis, a vertex-to-joint regressor for the rest
skeleton and per-vertex skinning weights over the kinematic tree.

Model files are JSON documents (``format_version`` 1) with fields ``names``,
``parents``, ``mean_vertices`` (N x 3), ``shape_basis`` as
``{"dims": [N, 3, B], "data": [...]}`` flattened row-major,
``joint_regressor`` (K x N), ``skin_weights`` (N x K), optional
``eval_regressors`` (name -> J x N) and optional ``faces``. Lengths are mm.
"""

import json
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ParseError
from .kinematics import KinematicTree, fk

FORMAT_VERSION = 1
BETA_WARN = 5.0
ROW_SUM_TOL = 1e-6
BUNDLED = "toy_biped.json"


@dataclass(frozen=True)
class BodyModel:
    tree: KinematicTree
    mean_vertices: np.ndarray
    shape_basis: np.ndarray
    joint_regressor: np.ndarray
    skin_weights: np.ndarray
    eval_regressors: dict = field(default_factory=dict)
    faces: np.ndarray = None

    def __post_init__(self):
        K = self.tree.n_joints
        mv = np.asarray(self.mean_vertices, dtype=float)
        if mv.ndim != 2 or mv.shape[1] != 3:
            raise DimensionMismatch(f"mean_vertices must be N x 3, got {mv.shape}")
        N = mv.shape[0]
        if N < K:
            raise DimensionMismatch(f"{N} vertices is fewer than {K} joints")
        sb = np.asarray(self.shape_basis, dtype=float)
        if sb.ndim != 3 or sb.shape[:2] != (N, 3):
            raise DimensionMismatch(f"shape_basis must be {N} x 3 x B, got {sb.shape}")
        jr = _weights(self.joint_regressor, (K, N), "joint_regressor")
        sw = _weights(self.skin_weights, (N, K), "skin_weights")
        ev = {
            str(name): _weights(reg, (None, N), f"eval_regressors[{name}]")
            for name, reg in (self.eval_regressors or {}).items()
        }
        faces = None if self.faces is None else np.asarray(self.faces, dtype=int)
        for name, arr in [("mean_vertices", mv), ("shape_basis", sb)]:
            if not np.all(np.isfinite(arr)):
                raise DimensionMismatch(f"{name} contains non-finite values")
            arr.flags.writeable = False
        for name, value in [
            ("mean_vertices", mv),
            ("shape_basis", sb),
            ("joint_regressor", jr),
            ("skin_weights", sw),
            ("eval_regressors", ev),
            ("faces", faces),
        ]:
            object.__setattr__(self, name, value)

    @property
    def n_vertices(self):
        return self.mean_vertices.shape[0]

    @property
    def n_betas(self):
        return self.shape_basis.shape[2]


def _weights(w, shape, name):
    w = np.array(w, dtype=float)
    rows, cols = shape
    if w.ndim != 2 or w.shape[1] != cols or (rows is not None and w.shape[0] != rows):
        raise DimensionMismatch(f"{name} has shape {w.shape}, expected {shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DimensionMismatch(f"{name} has negative or non-finite entries")
    if np.any(np.abs(w.sum(axis=1) - 1.0) > ROW_SUM_TOL):
        raise DimensionMismatch(f"{name} rows must sum to 1")
    w.flags.writeable = False
    return w


def check_beta(model, beta):
    beta = np.asarray(beta, dtype=float)
    if beta.shape[-1:] != (model.n_betas,):
        raise DimensionMismatch(f"beta has shape {beta.shape}, expected (..., {model.n_betas})")
    if not np.all(np.isfinite(beta)):
        raise DimensionMismatch("beta contains non-finite values")
    if np.any(np.abs(beta) > BETA_WARN):
        warnings.warn(f"shape coefficient magnitude above {BETA_WARN}", stacklevel=3)
    return beta


def shaped_vertices(model, beta):
    """Rest-pose mesh ``mean + basis . beta``."""
    beta = check_beta(model, beta)
    return model.mean_vertices + np.einsum("ncb,...b->...nc", model.shape_basis, beta)


def regress_joints(regressor, vertices):
    regressor = np.asarray(regressor, dtype=float)
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim < 2 or vertices.shape[-1] != 3 or regressor.shape[-1] != vertices.shape[-2]:
        raise DimensionMismatch(
            f"regressor {regressor.shape} does not match vertices {vertices.shape}"
        )
    return regressor @ vertices


def rest_pose_from_shape(model, beta):
    """Rest skeleton for shape ``beta``: the joint regressor applied to the shaped mesh."""
    return regress_joints(model.joint_regressor, shaped_vertices(model, beta))


def skin(model, beta, rotations):
    """Posed mesh by linear blend skinning.

    Each vertex moves to ``sum_k w_vk (R_k (v - t_k) + q_k)`` where ``R_k`` are
    the global joint rotations and ``q_k`` the forward-kinematics joints.
    """
    rotations = np.asarray(rotations, dtype=float)
    K = model.tree.n_joints
    if rotations.shape[-3:] != (K, 3, 3):
        raise DimensionMismatch(f"rotations have shape {rotations.shape}, expected (..., {K}, 3, 3)")
    verts = shaped_vertices(model, beta)
    template = regress_joints(model.joint_regressor, verts)
    q, glob = fk(model.tree, template, rotations, return_global=True)
    offset = q - np.einsum("...kij,...kj->...ki", glob, template)
    blended = np.einsum("nk,...kij->...nij", model.skin_weights, glob)
    return np.einsum("...nij,...nj->...ni", blended, verts) + model.skin_weights @ offset


# ---------------------------------------------------------------------------
# file I/O


def model_to_dict(model):
    d = {
        "format_version": FORMAT_VERSION,
        "names": list(model.tree.names),
        "parents": list(model.tree.parents),
        "mean_vertices": model.mean_vertices.tolist(),
        "shape_basis": {
            "dims": list(model.shape_basis.shape),
            "data": model.shape_basis.ravel().tolist(),
        },
        "joint_regressor": model.joint_regressor.tolist(),
        "skin_weights": model.skin_weights.tolist(),
        "eval_regressors": {k: v.tolist() for k, v in model.eval_regressors.items()},
    }
    if model.faces is not None:
        d["faces"] = model.faces.tolist()
    return d


def model_from_dict(d):
    if not isinstance(d, dict):
        raise ParseError("model document must be a JSON object")
    if d.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"unsupported model format_version {d.get('format_version')!r}")
    for key in ("names", "parents", "mean_vertices", "shape_basis", "joint_regressor", "skin_weights"):
        if key not in d:
            raise ParseError(f"model is missing field {key!r}")
    sb = d["shape_basis"]
    try:
        dims = [int(x) for x in sb["dims"]]
        basis = np.asarray(sb["data"], dtype=float)
        if len(dims) != 3 or basis.size != np.prod(dims):
            raise DimensionMismatch(f"shape_basis data has {basis.size} values for dims {dims}")
        basis = basis.reshape(dims)
        tree = KinematicTree(tuple(d["parents"]), tuple(d["names"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DimensionMismatch):
            raise
        raise ParseError(f"malformed model: {exc}") from exc
    return BodyModel(
        tree=tree,
        mean_vertices=d["mean_vertices"],
        shape_basis=basis,
        joint_regressor=d["joint_regressor"],
        skin_weights=d["skin_weights"],
        eval_regressors=d.get("eval_regressors") or {},
        faces=d.get("faces"),
    )


def load_model(path=None):
    """Load a model file; ``None`` loads the bundled toy biped."""
    try:
        if path is None:
            text = resources.files("hybrik_kit.data").joinpath(BUNDLED).read_text()
        else:
            text = Path(path).read_text()
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(d)


def save_model(model, path):
    Path(path).write_text(json.dumps(model_to_dict(model)))


# ---------------------------------------------------------------------------
# bundled toy biped

BIPED_NAMES = (
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
    "left_hand", "right_hand",
)
BIPED_PARENTS = (-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21)

# left side, y up, z forward; right side is mirrored in x
_LEFT_JOINTS = {
    "pelvis": (0, 0, 0),
    "left_hip": (90, -80, 0),
    "spine1": (0, 110, -10),
    "left_knee": (105, -460, 5),
    "spine2": (0, 250, 0),
    "left_ankle": (100, -860, -30),
    "spine3": (0, 310, 10),
    "left_foot": (115, -920, 90),
    "neck": (0, 520, -10),
    "left_collar": (75, 425, 0),
    "head": (0, 610, 40),
    "left_shoulder": (180, 445, -10),
    "left_elbow": (440, 440, -25),
    "left_wrist": (690, 445, -15),
    "left_hand": (775, 440, -10),
}
_RADIUS = {
    "pelvis": 110, "spine1": 105, "spine2": 100, "spine3": 110, "neck": 50,
    "head": 80, "hip": 75, "knee": 55, "ankle": 40, "foot": 35, "collar": 55,
    "shoulder": 50, "elbow": 40, "wrist": 30, "hand": 25,
}
RING = 6
LSP14 = (
    "right_ankle", "right_knee", "right_hip", "left_hip", "left_knee",
    "left_ankle", "right_wrist", "right_elbow", "right_shoulder",
    "left_shoulder", "left_elbow", "left_wrist", "neck", "head",
)


def _biped_joints():
    out = []
    for name in BIPED_NAMES:
        if name.startswith("right_"):
            x, y, z = _LEFT_JOINTS["left_" + name[6:]]
            out.append((-x, y, z))
        else:
            out.append(_LEFT_JOINTS[name])
    return np.array(out, dtype=float)


def _radius(name):
    return float(_RADIUS[name.split("_", 1)[-1]])


def _ring(center, direction, radius, phase):
    d = direction / np.linalg.norm(direction)
    e = np.eye(3)[np.argmin(np.abs(d))]
    u = np.cross(d, e)
    u /= np.linalg.norm(u)
    w = np.cross(d, u)
    ang = phase + 2 * np.pi * np.arange(RING) / RING
    return center + radius * (np.cos(ang)[:, None] * u + np.sin(ang)[:, None] * w)


def build_toy_biped():
    """Procedural 24-joint biped with 558 vertices.

    Every joint owns a ring of six vertices centred on it (the joint
    regressor averages that ring) and every bone carries three rings at a
    quarter, half and three quarters of its length.
    """
    tree = KinematicTree(BIPED_PARENTS, BIPED_NAMES)
    joints = _biped_joints()
    K = tree.n_joints
    verts, centers, weights, owner = [], [], [], []
    joint_ring = {}

    def add_ring(center, direction, radius, w, own, phase=0.0):
        start = len(verts)
        for v in _ring(center, direction, radius, phase):
            verts.append(v)
            centers.append(center)
            weights.append(w)
            owner.append(own)
        return list(range(start, start + RING))

    for k, name in enumerate(BIPED_NAMES):
        w = np.zeros(K)
        if k == 0:
            direction = np.array([0.0, 1.0, 0.0])
            w[0] = 1.0
        else:
            direction = joints[k] - joints[tree.parents[k]]
            kids = tree.children[k]
            if kids:
                w[k] = w[kids[0]] = 0.5
            else:
                w[k] = 1.0
        joint_ring[k] = add_ring(joints[k], direction, _radius(name), w, k)

    mid_ring = {}
    for k in range(1, K):
        pa = tree.parents[k]
        d = joints[k] - joints[pa]
        r0, r1 = _radius(BIPED_NAMES[pa]), _radius(BIPED_NAMES[k])
        for s in (0.25, 0.5, 0.75):
            w = np.zeros(K)
            if s == 0.25:
                w[k], w[pa] = 0.7, 0.3
            else:
                w[k] = 1.0
            idx = add_ring(joints[pa] + s * d, d, (1 - s) * r0 + s * r1, w, k, phase=0.3)
            if s == 0.5:
                mid_ring[k] = idx

    verts = np.array(verts)
    centers = np.array(centers)
    owner = np.array(owner)
    N = len(verts)

    regressor = np.zeros((K, N))
    for k, idx in joint_ring.items():
        regressor[k, idx] = 1.0 / RING

    lsp = np.zeros((len(LSP14), N))
    for row, name in enumerate(LSP14):
        k = BIPED_NAMES.index(name)
        lsp[row, joint_ring[k]] = 0.5 / RING
        # two adjacent off-axis vertices make the landmark sensitive to twist
        lsp[row, mid_ring[k][:2]] = 0.25

    basis = np.zeros((N, 3, 10))
    x, y, z = verts.T
    basis[:, :, 0] = 0.04 * verts
    basis[:, 1, 1] = 0.05 * np.minimum(y, 0.0)
    basis[:, :, 2] = 0.1 * (verts - centers)
    upper = y > 350
    basis[upper, 0, 3] = 0.05 * x[upper]
    basis[:, 1, 4] = 0.05 * np.maximum(y, 0.0)
    basis[y < 0, 0, 5] = 0.08 * x[y < 0]
    torso = np.isin(owner, [0, 3, 6, 9])
    basis[torso, 2, 6] = 0.15 * (verts - centers)[torso, 2]
    head = np.isin(owner, [12, 15])
    basis[head, :, 7] = 0.1 * (verts[head] - joints[12])
    arm = np.abs(x) > 180
    basis[arm, 0, 8] = 0.06 * (x[arm] - np.sign(x[arm]) * 180)
    basis[:, :, 9] = 6.0 * np.sin(verts[:, [1, 2, 0]] / 150.0)

    return BodyModel(
        tree=tree,
        mean_vertices=verts,
        shape_basis=basis,
        joint_regressor=regressor,
        skin_weights=np.array(weights),
        eval_regressors={"lsp14": lsp},
    )


if __name__ == "__main__":
    save_model(build_toy_biped(), Path(__file__).parent / "data" / BUNDLED)
