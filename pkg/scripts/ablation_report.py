#!/usr/bin/env python3
"""Train all four loss wirings on the same synthetic scene and print a
median-error comparison table (full vs pure regression vs margin ablations)."""

import argparse
import time

from pose2view.checkpoint import load_model_checkpoint
from pose2view.data import random_scene_spec
from pose2view.evaluation import evaluate
from pose2view.trainer import DatasetSpec, TrainConfig, resolve_datasets, run_training


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/ablations")
    parser.add_argument("--iterations", type=int, default=4000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    scene = random_scene_spec(seed=args.seed, n_landmarks=8, image_size=32)
    dataset = DatasetSpec(kind="synthetic", inline_scene=scene, n_train=500, n_test=100)
    _, test_ds = resolve_datasets(dataset, 32)

    rows = []
    for ablation in ("full", "configA", "configB", "configC"):
        cfg = TrainConfig(
            dataset=dataset,
            ablation=ablation,
            batch_size=16,
            total_iterations=args.iterations,
            image_size=32,
            seed=args.seed,
            checkpoint_every=args.iterations,
        )
        t0 = time.time()
        result = run_training(cfg, f"{args.out}/{ablation}")
        report = evaluate(load_model_checkpoint(result.final_checkpoint), test_ds)
        rows.append((ablation, report.median_translation, report.median_rotation, (time.time() - t0) / 60))
        print(f"{ablation}: done in {rows[-1][3]:.1f} min")

    print(f"\n{'wiring':10s} {'pos (m)':>9s} {'rot (deg)':>10s} {'minutes':>8s}")
    for name, pos, rot, minutes in rows:
        print(f"{name:10s} {pos:9.3f} {rot:10.2f} {minutes:8.1f}")
    base = rows[0]
    rega = rows[1]
    print(
        f"\npure-regression wiring vs full: {100 * (rega[1] / base[1] - 1):+.0f}% position, "
        f"{100 * (rega[2] / base[2] - 1):+.0f}% rotation error"
    )


if __name__ == "__main__":
    main()
