"""Command-line interface.

Subcommands mirror the library surfaces: fk, transmission, calibrate,
retarget, metrics, workspace, synth, serve.  Every subcommand takes
--model; the packaged nominal hand is the default.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np
import yaml

from . import nominal_model_path
from .kinematics import forward_keypoints
from .metrics import manipulability_volumes, opposability_volume, reachable_tip_cloud
from .model import FINGER_NAMES, KEYPOINT_IDS, NUM_JOINTS, load_model
from .retarget import (
    NAMED_KEY_SETS,
    RetargetConfig,
    calibrate,
    load_profile,
    save_profile,
)
from .synthetic import generate_recording, joint_script_csv
from .trajectory import (
    FrameParseError,
    read_frames,
    replay,
    write_frames,
    write_trajectory_csv,
)
from .transmission import joints_to_motors, motors_to_joints


def _load_model_arg(args):
    path = args.model or str(nominal_model_path())
    return load_model(path)


def _parse_vector(text: str, n: int = NUM_JOINTS) -> np.ndarray:
    values = [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    if len(values) != n:
        raise SystemExit(f"expected {n} comma-separated values, got {len(values)}")
    return np.asarray(values)


def cmd_fk(args) -> int:
    model = _load_model_arg(args)
    q = _parse_vector(args.q)
    points = forward_keypoints(q, model)
    writer = csv.writer(sys.stdout)
    writer.writerow(["finger", "point", "x", "y", "z"])
    for (i, j), row in zip(KEYPOINT_IDS, points):
        name = "wrist" if j == 0 else FINGER_NAMES[i]
        writer.writerow([name, j] + [repr(float(v)) for v in row])
    return 0


def cmd_transmission(args) -> int:
    model = _load_model_arg(args)
    convert = joints_to_motors if args.inverse else motors_to_joints
    in_prefix, out_prefix = ("q", "m") if args.inverse else ("m", "q")
    with open(args.input, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SystemExit("empty input file")
        expected = [f"{in_prefix}{i}" for i in range(NUM_JOINTS)]
        if [h.strip() for h in header] != expected:
            raise SystemExit(
                f"input header must be {','.join(expected)}"
            )
        writer = csv.writer(sys.stdout)
        writer.writerow([f"{out_prefix}{i}" for i in range(NUM_JOINTS)])
        for row in reader:
            vec = np.asarray([float(x) for x in row])
            if vec.shape != (NUM_JOINTS,):
                raise SystemExit(f"row with {vec.shape[0]} values")
            writer.writerow([repr(float(x)) for x in convert(vec, model)])
    return 0


def cmd_calibrate(args) -> int:
    model = _load_model_arg(args)
    frames = read_frames(args.frame)
    if not frames:
        raise SystemExit("reference frame file is empty")
    profile = calibrate(frames[0], model)
    save_profile(profile, args.out)
    print(f"calibrated: 20 ratios written to {args.out}")
    return 0


def _retarget_config(args) -> RetargetConfig:
    keys = NAMED_KEY_SETS[args.keys]()
    return RetargetConfig(keys=keys, beta=args.beta)


def cmd_retarget(args) -> int:
    model = _load_model_arg(args)
    profile = load_profile(args.calib, model)
    stream = read_frames(args.infile)
    traj = replay(stream, profile, _retarget_config(args), model)
    write_trajectory_csv(traj, args.out)
    print(f"{len(traj.points)} frames solved, {traj.rejected} rejected "
          f"-> {args.out}")
    return 0


def _pose_from_arg(args, model) -> np.ndarray:
    if "," in args.pose:
        return _parse_vector(args.pose)
    poses_path = args.poses
    if poses_path is None:
        from importlib.resources import files

        poses_path = str(files("dexhand.data") / "poses.yaml")
    with open(poses_path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    poses = doc.get("poses", {})
    if args.pose not in poses:
        raise SystemExit(
            f"unknown pose {args.pose!r}; file defines {sorted(poses)}"
        )
    return np.asarray(poses[args.pose], dtype=float)


def cmd_metrics(args) -> int:
    model = _load_model_arg(args)
    q = _pose_from_arg(args, model)
    label = args.pose if "," not in args.pose else "custom"
    report = manipulability_volumes(q, model, args.finger, label)
    writer = csv.writer(sys.stdout)
    writer.writerow(["finger", "pose", "linear_volume_m3", "angular_volume",
                     "linear_sv1", "linear_sv2", "linear_sv3",
                     "angular_sv1", "angular_sv2", "angular_sv3"])
    writer.writerow(
        [FINGER_NAMES[report.finger], report.pose_label,
         repr(report.linear_volume), repr(report.angular_volume)]
        + [repr(float(s)) for s in report.linear_singular_values]
        + [repr(float(s)) for s in report.angular_singular_values]
    )
    return 0


def cmd_workspace(args) -> int:
    model = _load_model_arg(args)
    voxel = args.voxel / 1000.0
    writer = csv.writer(sys.stdout)
    writer.writerow(["finger", "volume_m3", "volume_mm3",
                     "intersection_voxels", "samples", "voxel_mm", "seed"])
    for finger in range(1, 5):
        rep = opposability_volume(model, finger, samples=args.samples,
                                  voxel=voxel, seed=args.seed)
        writer.writerow([
            FINGER_NAMES[finger], repr(rep.volume), repr(rep.volume * 1e9),
            rep.intersection_voxels, args.samples, args.voxel, args.seed,
        ])
    if args.dump:
        dump_dir = Path(args.dump)
        dump_dir.mkdir(parents=True, exist_ok=True)
        for finger in range(5):
            cloud = reachable_tip_cloud(model, finger, args.samples, args.seed)
            out = dump_dir / f"{FINGER_NAMES[finger]}_tips.xyz"
            np.savetxt(out, cloud, fmt="%.6f")
        print(f"point clouds written to {dump_dir}", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    model = _load_model_arg(args)
    reference, frames, times, script, _ = generate_recording(
        model, frames=args.frames, seed=args.seed, noise_std=args.noise)
    write_frames(frames, args.out)
    write_frames([reference], args.reference_out)
    with open(args.joints_out, "w", encoding="utf-8", newline="") as fh:
        fh.write(joint_script_csv(times, script))
    print(f"wrote {args.frames} frames to {args.out}; reference to "
          f"{args.reference_out}; joint script to {args.joints_out}")
    return 0


def cmd_serve(args) -> int:
    from .service import serve_forever

    model = _load_model_arg(args)
    host, _, port = args.bind.rpartition(":")
    host = host or "127.0.0.1"
    config = RetargetConfig(keys=NAMED_KEY_SETS[args.keys](), beta=args.beta)
    serve_forever(model, host, int(port), config,
                  ui_dir=args.ui, ui_port=args.ui_port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dexhand",
        description="20-DoA dexterous hand toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--model", help="hand model YAML (default: packaged "
                       "nominal model)")
        p.set_defaults(fn=fn)
        return p

    p = add("fk", cmd_fk, "forward kinematics: print the 21 keypoints")
    p.add_argument("--q", required=True,
                   help="20 comma-separated joint angles (rad)")

    p = add("transmission", cmd_transmission,
            "map motor angles to joint angles (or back with --inverse)")
    p.add_argument("--input", required=True,
                   help="CSV with header m0..m19 (q0..q19 with --inverse)")
    p.add_argument("--inverse", action="store_true",
                   help="map joint angles to motor angles")

    p = add("calibrate", cmd_calibrate, "one-shot calibration from a "
            "reference frame file")
    p.add_argument("--frame", required=True,
                   help="JSONL frame file; first record is the reference")
    p.add_argument("--out", required=True, help="calibration YAML to write")

    p = add("retarget", cmd_retarget, "replay a recording into a joint/"
            "motor trajectory CSV")
    p.add_argument("--calib", required=True, help="calibration YAML")
    p.add_argument("--in", dest="infile", required=True,
                   help="JSONL frame recording")
    p.add_argument("--out", required=True, help="trajectory CSV to write")
    p.add_argument("--beta", type=float, default=0.05,
                   help="smoothness weight (default 0.05)")
    p.add_argument("--keys", choices=sorted(NAMED_KEY_SETS),
                   default="all", help="keypoint selection (default all)")

    p = add("metrics", cmd_metrics, "manipulability ellipsoid volumes at "
            "a pose")
    p.add_argument("--pose", required=True,
                   help="pose name from the poses file, or 20 CSV values")
    p.add_argument("--finger", type=int, default=1,
                   help="finger index 0..4 (default 1 = index finger)")
    p.add_argument("--poses", help="poses YAML (default: packaged)")

    p = add("workspace", cmd_workspace, "finger-to-thumb opposability "
            "volumes")
    p.add_argument("--samples", type=int, default=400_000,
                   help="samples per reachable set (default 400000)")
    p.add_argument("--voxel", type=float, default=5.0,
                   help="voxel edge length in mm (default 5)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump", help="directory for tip point-cloud dumps")

    p = add("synth", cmd_synth, "generate a synthetic recording with "
            "ground-truth joints")
    p.add_argument("--out", required=True, help="recording JSONL to write")
    p.add_argument("--reference-out", required=True,
                   help="reference-frame JSONL to write")
    p.add_argument("--joints-out", required=True,
                   help="ground-truth joint CSV to write")
    p.add_argument("--frames", type=int, default=300)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--noise", type=float, default=0.0002,
                   help="keypoint jitter sigma in m (default 0.0002)")

    p = add("serve", cmd_serve, "run the streaming teleoperation service")
    p.add_argument("--bind", default="127.0.0.1:7777",
                   help="host:port to listen on (default 127.0.0.1:7777)")
    p.add_argument("--beta", type=float, default=0.05)
    p.add_argument("--keys", choices=sorted(NAMED_KEY_SETS), default="all")
    p.add_argument("--ui", help="serve this directory as the operator "
                   "console (static HTTP + WebSocket bridge)")
    p.add_argument("--ui-port", type=int, default=8080)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FrameParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
