"""Command-line interface: ``fk``, ``solve``, ``skin`` and ``bench``.

Exit codes: 0 on success, 2 for parse or validation errors, 3 for numeric
degeneracies. Errors are reported on stderr as a one-line JSON object with
``error`` (the exception class) and ``message``.
"""

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .bodymodel import load_model, rest_pose_from_shape, skin
from .errors import KinematicsError, ParseError
from .fileio import dumps, pose_document, read_json, read_pose, round_sig, write_text
from .hybrik import solve
from .kinematics import fk


def _digits(args):
    return None if args.full_precision else 9


def _load(args, require):
    model = load_model(args.model)
    pose = read_pose(args.pose, model.tree.n_joints, model.n_betas, require=require)
    return model, pose


def cmd_fk(args):
    model, pose = _load(args, ("rotations", "beta"))
    template = rest_pose_from_shape(model, pose["beta"])
    joints = fk(model.tree, template, pose["rotations"])
    doc = pose_document(joints=joints, beta=pose["beta"])
    write_text(args.out, dumps(doc, _digits(args)))


def cmd_solve(args):
    model, pose = _load(args, ("joints", "twists", "beta"))
    template = rest_pose_from_shape(model, pose["beta"])
    report = solve(model.tree, template, pose["joints"], pose["twists"], mode=args.mode)
    doc = pose_document(
        joints=report.reconstructed,
        rotations=report.rotations,
        twists=pose["twists"],
        beta=pose["beta"],
        mode=report.mode,
        per_joint_error=report.per_joint_error,
        mean_error=float(report.mean_error),
        bone_eps=report.bone_eps,
        translation=report.translation,
        degenerate_joints=[model.tree.names[k] for k in report.flagged_joints],
    )
    write_text(args.out, dumps(doc, _digits(args)))


def cmd_skin(args):
    model, pose = _load(args, ("rotations", "beta"))
    vertices = skin(model, pose["beta"], pose["rotations"])
    doc = {"format_version": 1, "vertices": vertices}
    if model.faces is not None:
        doc["faces"] = model.faces
    write_text(args.out, dumps(doc, _digits(args)))


def _csv(header, rows, digits):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([round_sig(v, digits) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _bench_tables(kind, cfg, digits):
    model = load_model(cfg.model)
    extra = {}
    if kind == "jitter":
        table, per_trial = harness.jitter_experiment(cfg, model)
        rows = []
        for j, by_mode in table.items():
            for mode, mean in by_mode.items():
                row = [j, mode, mean]
                if {"naive", "adaptive"} <= set(by_mode):
                    wins = int(np.sum(per_trial[j]["adaptive"] < per_trial[j]["naive"]))
                    row.append(wins)
                else:
                    row.append("")
                rows.append(row)
        return _csv(["jitter_mm", "mode", "mpjpe_mm", "adaptive_wins"], rows, digits), extra
    if kind == "twist":
        mode = cfg.modes[-1]
        table, _ = harness.twist_sensitivity_experiment(cfg, model, mode=mode)
        rows = [
            [src, mode, t["joint_err"], t.get("eval_err", ""), t["pve"], t["twist_err_deg"]]
            for src, t in table.items()
        ]
        header = ["twist_source", "mode", "joint_err_mm", "eval_joint_err_mm", "pve_mm", "twist_err_deg"]
        return _csv(header, rows, digits), extra
    if kind == "accumulation":
        res = harness.accumulation_check(cfg.chain_depth, cfg.eps_mm)
        rows = [
            [k + 1, *(float(res[c][k]) for c in ("naive", "adaptive", "naive_predicted", "adaptive_predicted"))]
            for k in range(cfg.chain_depth - 1)
        ]
        header = ["joint", "naive_mm", "adaptive_mm", "naive_predicted_mm", "adaptive_predicted_mm"]
        return _csv(header, rows, digits), extra
    if kind == "distribution":
        poses = harness.distribution_poses(cfg, model)
        hist = harness.twist_distribution(poses, model, bin_deg=cfg.bin_deg)
        rows = []
        for name, h in hist.items():
            for c, n in zip(h["centers"], h["counts"]):
                if n:
                    rows.append([name, float(c), int(n)])
        extra["twist_range_deg"] = {
            name: [round_sig(h["min_deg"], digits), round_sig(h["max_deg"], digits)]
            for name, h in hist.items()
        }
        return _csv(["joint", "bin_center_deg", "count"], rows, digits), extra
    raise ParseError(f"unknown bench experiment {kind!r}")


def cmd_bench(args):
    raw = read_json(args.config)
    if not isinstance(raw, dict):
        raise harness.ConfigError("config", "must be a JSON object")
    raw = dict(raw)
    version = raw.pop("format_version", 1)
    if version != 1:
        raise ParseError(f"unsupported config format_version {version!r}")
    if args.threads is not None:
        raw["threads"] = args.threads
    cfg = harness.ExperimentConfig.from_dict(raw)
    digits = _digits(args)
    text, extra = _bench_tables(args.experiment, cfg, digits)
    out_dir = args.out or cfg.output
    if out_dir is None:
        sys.stdout.write(text)
        return
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_name = f"{args.experiment}.csv"
    (out_dir / csv_name).write_text(text)
    man = harness.manifest(args.experiment, cfg, files=[csv_name], extra=extra)
    (out_dir / f"{args.experiment}_manifest.json").write_text(json.dumps(man, indent=1, sort_keys=True) + "\n")


def build_parser():
    parser = argparse.ArgumentParser(prog="hybrik-kit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, pose=True):
        p.add_argument("--model", default=None, help="model JSON file (default: bundled toy biped)")
        if pose:
            p.add_argument("pose", help="input pose JSON file")
        p.add_argument("-o", "--out", default=None, help="output path (default: stdout)")
        p.add_argument("--full-precision", action="store_true",
                       help="write shortest round-trippable floats instead of 9 significant digits")

    p = sub.add_parser("fk", help="forward kinematics from rotations and beta")
    common(p)
    p.set_defaults(func=cmd_fk)

    p = sub.add_parser("solve", help="inverse kinematics from joints, twists and beta")
    common(p)
    p.add_argument("--mode", choices=("naive", "adaptive"), default="adaptive")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("skin", help="posed mesh from rotations and beta")
    common(p)
    p.set_defaults(func=cmd_skin)

    p = sub.add_parser("bench", help="run a synthetic experiment")
    p.add_argument("experiment", choices=("jitter", "twist", "accumulation", "distribution"))
    p.add_argument("config", help="experiment config JSON file")
    p.add_argument("-o", "--out", default=None, help="output directory (overrides config 'output')")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--full-precision", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except KinematicsError as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, harness.ConfigError):
            err["field"] = exc.field
        sys.stderr.write(json.dumps(err) + "\n")
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
