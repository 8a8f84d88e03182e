"""Command-line interface: train, eval, saliency, synth, route, interp, serve."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .checkpoint import load_model_checkpoint
from .data import load_cambridge, load_scene_spec, load_seven_scenes, make_synthetic_dataset, preprocess
from .data.core import ImageSample
from .evaluation import evaluate, grayscale_evaluate, saliency_map, write_report
from .geometry import Pose, Route, quat_canonicalize
from .synthesis import export_sequence, image_to_bytes, interpolate_frames, synthesize_route, synthesize_view
from .trainer import load_train_config, run_training

ABLATION_ALIASES = {"full": "full", "A": "configA", "B": "configB", "C": "configC",
                    "configA": "configA", "configB": "configB", "configC": "configC"}


def _pose_from_floats(values) -> Pose:
    vec = np.asarray([float(v) for v in values], dtype=np.float64)
    if vec.shape != (7,):
        raise SystemExit("expected 7 floats: x y z qw qx qy qz")
    return Pose(vec[:3], quat_canonicalize(vec[3:]))


def _load_eval_dataset(args):
    if args.kind == "synthetic":
        scene = load_scene_spec(args.data)
        _, test = make_synthetic_dataset(scene, n_train=args.n_train, n_test=args.n_test)
        return test
    loader = load_seven_scenes if args.kind == "seven_scenes" else load_cambridge
    return loader(args.data, args.scene, args.split, image_size=args.image_size)


def cmd_train(args):
    cfg = load_train_config(args.config)
    if args.ablation is not None:
        from dataclasses import replace

        cfg = replace(cfg, ablation=ABLATION_ALIASES[args.ablation])
    result = run_training(cfg, args.out, resume=args.resume)
    print(f"final checkpoint: {result.final_checkpoint}")
    print(f"metrics log: {result.metrics_path}")


def cmd_eval(args):
    ck = load_model_checkpoint(args.checkpoint)
    args.image_size = ck.image_size
    dataset = _load_eval_dataset(args)
    if args.grayscale:
        report, delta = grayscale_evaluate(ck, dataset)
        print(f"grayscale delta: translation {delta[0]:+.4f} m, rotation {delta[1]:+.4f} deg")
    else:
        report = evaluate(ck, dataset)
    write_report(report, args.out)
    print(f"median errors: {report.median_translation:.4f} m / {report.median_rotation:.3f} deg -> {args.out}")


def cmd_saliency(args):
    ck = load_model_checkpoint(args.checkpoint)
    raw = np.asarray(Image.open(args.image).convert("RGB"), dtype=np.uint8)
    if raw.shape[0] == ck.image_size and raw.shape[1] == ck.image_size:
        pixels = (raw.astype(np.float32) / 127.5) - 1.0
    else:
        pixels = preprocess(raw, mode="eval", image_size=ck.image_size)
    pose = _pose_from_floats(args.pose)
    sample = ImageSample(pose=pose, scene_id=ck.scene_id, sequence_id="cli", frame_index=0, pixels=pixels)
    result = saliency_map(ck, sample)
    Image.fromarray((result.values * 255).astype(np.uint8), mode="L").save(args.out)
    print(f"saliency map -> {args.out}")


def cmd_synth(args):
    ck = load_model_checkpoint(args.checkpoint)
    view = synthesize_view(ck, _pose_from_floats(args.pose))
    Image.fromarray(image_to_bytes(view.image)).save(args.out)
    note = " (outside training volume)" if view.out_of_volume else ""
    print(f"synthesized view -> {args.out}{note}")


def cmd_route(args):
    ck = load_model_checkpoint(args.checkpoint)
    route = Route(
        kind=args.kind,
        start=_pose_from_floats(args.start),
        end=_pose_from_floats(args.end),
        num_points=args.n,
        apex_offset=np.asarray(args.apex, dtype=np.float64),
    )
    views = synthesize_route(ck, route)
    paths = export_sequence([v.image for v in views], args.out)
    print(f"{len(paths)} frames -> {args.out}")


def cmd_interp(args):
    ck = load_model_checkpoint(args.checkpoint)
    frames = interpolate_frames(ck, _pose_from_floats(args.start), _pose_from_floats(args.end), args.insert)
    paths = export_sequence([f.image for f in frames], args.out)
    print(f"{len(paths)} frames -> {args.out}")


def cmd_serve(args):
    import uvicorn

    from .server import create_app

    port = int(os.environ.get("POSE2VIEW_PORT", args.port))
    app = create_app(args.checkpoint, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pose2view", description="pose-to-image translation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the adversarial training loop")
    p.add_argument("--config", required=True, help="key=value training config file")
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.add_argument("--ablation", choices=sorted(ABLATION_ALIASES), default=None)
    p.add_argument("--out", default="runs/train", help="output directory")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="median pose errors over a test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="scene spec file (synthetic) or dataset root")
    p.add_argument("--kind", choices=["synthetic", "seven_scenes", "cambridge"], default="synthetic")
    p.add_argument("--scene", default="", help="scene name for on-disk datasets")
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--n-train", type=int, default=500)
    p.add_argument("--n-test", type=int, default=100)
    p.add_argument("--grayscale", action="store_true")
    p.add_argument("--out", default="report.tsv")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("saliency", help="input-gradient saliency map for one image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--pose", nargs=7, required=True, metavar="F")
    p.add_argument("--out", default="map.png")
    p.set_defaults(fn=cmd_saliency)

    p = sub.add_parser("synth", help="synthesize the view at one pose")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--pose", nargs=7, required=True, metavar="F")
    p.add_argument("--out", default="view.png")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("route", help="render all poses of a virtual route")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--start", nargs=7, required=True, metavar="F")
    p.add_argument("--end", nargs=7, required=True, metavar="F")
    p.add_argument("--kind", choices=["linear", "parabola"], default="linear")
    p.add_argument("--apex", nargs=3, type=float, default=[0.0, 0.0, 0.0])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_route)

    p = sub.add_parser("interp", help="interpolate frames between two poses")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--start", nargs=7, required=True, metavar="F")
    p.add_argument("--end", nargs=7, required=True, metavar="F")
    p.add_argument("--insert", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_interp)

    p = sub.add_parser("serve", help="HTTP gateway over a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static", default=None, help="directory of explorer assets to serve at /")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.fn(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
