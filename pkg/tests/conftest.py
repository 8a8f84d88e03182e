import pytest

from pose2view.checkpoint import load_model_checkpoint
from pose2view.data import random_scene_spec
from pose2view.trainer import (
    DatasetSpec,
    TrainConfig,
    build_train_state,
    resolve_datasets,
    save_train_checkpoint,
)

SCENE_SEED = 23


@pytest.fixture(scope="session")
def desk_scene():
    return random_scene_spec(seed=SCENE_SEED, n_landmarks=6, image_size=32)


@pytest.fixture(scope="session")
def desk_datasets(desk_scene):
    cfg = TrainConfig(
        dataset=DatasetSpec(kind="synthetic", inline_scene=desk_scene, n_train=40, n_test=10),
        batch_size=4,
        total_iterations=1,
        image_size=32,
        seed=2,
    )
    return cfg, resolve_datasets(cfg.dataset, cfg.image_size)


@pytest.fixture(scope="session")
def untrained_checkpoint(tmp_path_factory, desk_datasets):
    """A structurally complete (but untrained) checkpoint for contract tests."""
    cfg, (train_ds, _) = desk_datasets
    state = build_train_state(cfg, train_ds.normalizer)
    path = tmp_path_factory.mktemp("ckpt") / "untrained.p2v"
    save_train_checkpoint(state, train_ds, path)
    return load_model_checkpoint(path)
