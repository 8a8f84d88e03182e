import numpy as np
from PIL import Image

from pose2view.cli import main
from pose2view.data import random_scene_spec, save_scene_spec

SCENE = random_scene_spec(seed=19, n_landmarks=4, image_size=32)


def _write_config(tmp_path, scene_path, iterations=2):
    cfg = tmp_path / "train.cfg"
    cfg.write_text(
        "\n".join(
            [
                "seed = 19",
                "batch_size = 4",
                f"total_iterations = {iterations}",
                "image_size = 32",
                "checkpoint_every = 2",
                "dataset.kind = synthetic",
                f"dataset.scene_path = {scene_path.name}",
                "dataset.n_train = 8",
                "dataset.n_test = 3",
            ]
        )
        + "\n"
    )
    return cfg


def test_cli_train_eval_synth_round_trip(tmp_path, capsys):
    scene_path = tmp_path / "scene.txt"
    save_scene_spec(SCENE, scene_path)
    cfg = _write_config(tmp_path, scene_path)
    out = tmp_path / "run"
    assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
    ckpt = out / "checkpoint_final.p2v"
    assert ckpt.exists()

    report = tmp_path / "report.tsv"
    assert (
        main(
            [
                "eval",
                "--checkpoint",
                str(ckpt),
                "--data",
                str(scene_path),
                "--n-train",
                "8",
                "--n-test",
                "3",
                "--out",
                str(report),
            ]
        )
        == 0
    )
    lines = report.read_text().splitlines()
    assert lines[0].startswith("sample_id") and lines[-1].startswith("median")

    view = tmp_path / "view.png"
    pose = ["0", "0", "-4", "1", "0", "0", "0"]
    assert main(["synth", "--checkpoint", str(ckpt), "--pose", *pose, "--out", str(view)]) == 0
    img = np.asarray(Image.open(view))
    assert img.shape == (32, 32, 3)

    frames = tmp_path / "frames"
    assert (
        main(
            [
                "interp",
                "--checkpoint",
                str(ckpt),
                "--start",
                *pose,
                "--end",
                "1",
                "0",
                "-4",
                "1",
                "0",
                "0",
                "0",
                "--insert",
                "10",
                "--out",
                str(frames),
            ]
        )
        == 0
    )
    assert len(list(frames.glob("frame_*.png"))) == 12

    sal = tmp_path / "map.png"
    assert main(["saliency", "--checkpoint", str(ckpt), "--image", str(view), "--pose", *pose, "--out", str(sal)]) == 0
    assert Image.open(sal).size == (32, 32)


def test_cli_train_ablation_alias(tmp_path):
    scene_path = tmp_path / "scene.txt"
    save_scene_spec(SCENE, scene_path)
    cfg = _write_config(tmp_path, scene_path)
    out = tmp_path / "runA"
    assert main(["train", "--config", str(cfg), "--out", str(out), "--ablation", "A"]) == 0
    from pose2view.checkpoint import read_container

    manifest, _ = read_container(out / "checkpoint_final.p2v")
    assert manifest["config"]["ablation"] == "configA"
