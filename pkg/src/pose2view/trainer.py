"""Adversarial training loop: alternating updates, checkpointing, metrics log.

Determinism contract: all randomness is derived from (seed, iteration)
counters, parameters/moments/statistics are float32 and round-trip exactly
through checkpoints, so a resumed run is bit-identical to an uninterrupted
one and two runs with the same config produce byte-identical metrics logs
(single-worker mode). The metrics log therefore carries only deterministic
fields; wall-clock timing goes to a sidecar progress.log.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import torch

from .checkpoint import CheckpointError, read_container, state_dict_arrays, load_state_dict_arrays, write_container
from .data import (
    DistractorSpec,
    Landmark,
    SceneDataset,
    SyntheticSceneSpec,
    load_cambridge,
    load_scene_spec,
    load_seven_scenes,
    make_synthetic_dataset,
)
from .data.core import ImageSample
from .geometry import PoseNormalizer
from .model import Discriminator, Generator, ModelConfig, frozen_stats, images_to_tensor, init_params
from .objectives import BatchLosses, LossConfig, d_adv_hinge, d_pose_loss, d_total, g_loss
from .optim import Adam

ABLATIONS = ("full", "configA", "configB", "configC")
G_LOSS_KEYS = ("g_adv", "g_pose", "g_pixel", "g_total")
METRICS_HEADER = "iteration\tbatch_seed\t" + "\t".join(BatchLosses.FIELDS)


class TrainingError(RuntimeError):
    """Divergence or configuration failure during training."""


@dataclass(frozen=True)
class DatasetSpec:
    """Where training data comes from: a synthetic scene or an on-disk dataset."""

    kind: str = "synthetic"  # synthetic | seven_scenes | cambridge
    scene_path: str = ""  # synthetic: scene spec file; disk kinds: dataset root
    scene: str = ""  # disk kinds: scene directory name
    n_train: int = 500
    n_test: int = 100
    distractor: DistractorSpec | None = None
    inline_scene: SyntheticSceneSpec | None = None  # programmatic alternative to scene_path

    def __post_init__(self):
        if self.kind not in ("synthetic", "seven_scenes", "cambridge"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")


@dataclass(frozen=True)
class TrainConfig:
    dataset: DatasetSpec
    loss: LossConfig = field(default_factory=LossConfig)
    ablation: str = "full"
    batch_size: int = 16
    learning_rate: float = 2e-4
    adam_beta1: float = 0.0
    adam_beta2: float = 0.9
    n_critic: int = 1
    total_iterations: int = 1000
    image_size: int = 128
    seed: int = 0
    checkpoint_every: int = 1000

    def __post_init__(self):
        if self.ablation not in ABLATIONS:
            raise ValueError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        for name in ("batch_size", "n_critic", "total_iterations", "checkpoint_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")


def apply_ablation(cfg: TrainConfig) -> TrainConfig:
    """Rewrite the loss flags for the requested ablation; 'full' is identity."""
    if cfg.ablation == "full":
        return cfg
    if cfg.ablation == "configA":
        loss = replace(cfg.loss, adversarial=False, gamma_mode="off", alpha=1.0)
    elif cfg.ablation == "configB":
        loss = replace(cfg.loss, gamma_mode="off")
    else:  # configC
        loss = replace(cfg.loss, gamma_mode="constant", gamma_const=0.01)
    return replace(cfg, loss=loss)


def resolve_datasets(spec: DatasetSpec, image_size: int) -> tuple[SceneDataset, SceneDataset]:
    if spec.kind == "synthetic":
        scene = spec.inline_scene if spec.inline_scene is not None else load_scene_spec(spec.scene_path)
        if scene.image_size != image_size:
            raise TrainingError(f"scene spec renders {scene.image_size}px but training expects {image_size}px")
        return make_synthetic_dataset(scene, spec.n_train, spec.n_test, distractor=spec.distractor)
    loader = load_seven_scenes if spec.kind == "seven_scenes" else load_cambridge
    return (
        loader(spec.scene_path, spec.scene, "train", image_size=image_size),
        loader(spec.scene_path, spec.scene, "test", image_size=image_size),
    )


@dataclass
class TrainState:
    generator: Generator
    discriminator: Discriminator
    opt_g: Adam
    opt_d: Adam
    normalizer: PoseNormalizer
    config: TrainConfig
    model_config: ModelConfig
    iteration: int = 0


def build_train_state(cfg: TrainConfig, normalizer: PoseNormalizer) -> TrainState:
    cfg = apply_ablation(cfg)
    model_cfg = ModelConfig.for_image_size(cfg.image_size)
    generator, discriminator = init_params(model_cfg, cfg.seed)
    return TrainState(
        generator=generator,
        discriminator=discriminator,
        opt_g=Adam(dict(generator.named_parameters()), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2),
        opt_d=Adam(dict(discriminator.named_parameters()), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2),
        normalizer=normalizer,
        config=cfg,
        model_config=model_cfg,
    )


def _abort_on_nonfinite(named_tensors, iteration: int) -> None:
    for name, t in named_tensors:
        if t is not None and not torch.isfinite(t).all():
            raise TrainingError(f"non-finite value in {name} at iteration {iteration}")


def loss_terms(
    generator: Generator,
    discriminator: Discriminator,
    images: torch.Tensor,
    y: torch.Tensor,
    cfg: LossConfig,
    gamma_override: torch.Tensor | None = None,
) -> dict[str, torch.Tensor]:
    """All discriminator and generator loss terms as one differentiable computation.

    This is the canonical wiring the gradient checks exercise and the
    post-update snapshot logs; the training updates below recompute the same
    terms piecewise so the generator graph is only built when needed.
    """
    zero = images.new_zeros(())
    f_real = discriminator.features(images)
    F_real = discriminator.pose(f_real)
    terms: dict[str, torch.Tensor] = {}
    if cfg.adversarial:
        fakes = generator(y)
        f_fake = discriminator.features(fakes)
        s_real = discriminator.realness(f_real)
        s_fake = discriminator.realness(f_fake)
        F_fake = discriminator.pose(f_fake)
        terms["d_adv"] = d_adv_hinge(s_real, s_fake)
        terms["d_pose"] = d_pose_loss(F_real, F_fake, y, cfg, gamma_override=gamma_override)
        terms.update(g_loss(s_fake, F_fake, y, fakes, images, cfg))
    else:
        terms["d_adv"] = zero
        terms["d_pose"] = d_pose_loss(F_real, None, y, cfg)
        terms.update({k: zero for k in G_LOSS_KEYS})
    terms["d_total"] = d_total(terms["d_adv"], terms["d_pose"], cfg)
    return terms


def _batch_tensors(state: TrainState, real_batch: list[ImageSample]):
    for s in real_batch:
        if s.pixels is None:
            raise TrainingError("train_step needs materialized sample pixels")
    images = images_to_tensor(np.stack([s.pixels for s in real_batch]))
    y = torch.as_tensor(
        np.stack([state.normalizer.pose_to_vector(s.pose) for s in real_batch]), dtype=torch.float32
    )
    return images, y


def train_step(state: TrainState, real_batch: list[ImageSample], cfg: TrainConfig | None = None) -> BatchLosses:
    """n_critic discriminator updates, then one generator update.

    The frozen network of each phase is bit-unchanged; the returned record
    holds post-update losses evaluated with frozen statistics, so an offline
    pass over the saved checkpoint reproduces it exactly.
    """
    cfg = apply_ablation(cfg) if cfg is not None else state.config
    loss_cfg = cfg.loss
    if len(real_batch) != cfg.batch_size:
        raise TrainingError(f"batch has {len(real_batch)} samples, config expects {cfg.batch_size}")
    images, y = _batch_tensors(state, real_batch)
    generator, discriminator = state.generator, state.discriminator
    generator.train()
    discriminator.train()

    for _ in range(cfg.n_critic):
        fakes = None
        if loss_cfg.adversarial:
            with torch.no_grad():
                fakes = generator(y)  # generator frozen during the discriminator phase
        f_real = discriminator.features(images)
        F_real = discriminator.pose(f_real)
        if loss_cfg.adversarial:
            f_fake = discriminator.features(fakes)
            s_real, s_fake = discriminator.realness(f_real), discriminator.realness(f_fake)
            F_fake = discriminator.pose(f_fake)
            d_adv = d_adv_hinge(s_real, s_fake)
            d_pose = d_pose_loss(F_real, F_fake, y, loss_cfg)
        else:
            d_adv = images.new_zeros(())
            d_pose = d_pose_loss(F_real, None, y, loss_cfg)
        loss_d = d_total(d_adv, d_pose, loss_cfg)
        _abort_on_nonfinite([("d_adv", d_adv), ("d_pose", d_pose), ("d_total", loss_d)], state.iteration)
        names = list(state.opt_d.params)
        grads = torch.autograd.grad(loss_d, [state.opt_d.params[n] for n in names], allow_unused=True)
        state.opt_d.update(
            {n: g if g is not None else torch.zeros_like(state.opt_d.params[n]) for n, g in zip(names, grads)}
        )

    if loss_cfg.adversarial:
        fakes = generator(y)
        f_fake = discriminator.features(fakes)  # discriminator frozen: no update applied
        s_fake = discriminator.realness(f_fake)
        F_fake = discriminator.pose(f_fake)
        terms_g = g_loss(s_fake, F_fake, y, fakes, images, loss_cfg)
        _abort_on_nonfinite(sorted(terms_g.items()), state.iteration)
        names = list(state.opt_g.params)
        grads = torch.autograd.grad(terms_g["g_total"], [state.opt_g.params[n] for n in names], allow_unused=True)
        state.opt_g.update(
            {n: g if g is not None else torch.zeros_like(state.opt_g.params[n]) for n, g in zip(names, grads)}
        )

    state.iteration += 1
    with torch.no_grad(), frozen_stats(generator, discriminator):
        snapshot = loss_terms(generator, discriminator, images, y, loss_cfg)
    return BatchLosses(**{k: float(snapshot[k]) for k in BatchLosses.FIELDS})


# ---------------------------------------------------------------------------
# deterministic batch selection


def batch_seed_for(master_seed: int, iteration: int) -> int:
    """Per-iteration seed; logged so batches can be rebuilt offline."""
    return int(np.random.default_rng([master_seed, iteration]).integers(0, 2**62))


def materialize_batch(dataset: SceneDataset, batch_seed: int, batch_size: int) -> list[ImageSample]:
    rng = np.random.default_rng([batch_seed, 0])
    indices = rng.choice(len(dataset), size=batch_size, replace=len(dataset) < batch_size)
    batch = []
    for slot, i in enumerate(indices):
        sample = dataset.samples[int(i)]
        if sample.pixels is None:
            crop_seed = int(np.random.default_rng([batch_seed, 1 + slot]).integers(0, 2**31 - 1))
            sample = replace(sample, pixels=dataset.load_pixels(int(i), mode="train", rng_seed=crop_seed))
        batch.append(sample)
    return batch


# ---------------------------------------------------------------------------
# checkpoint assembly


def _scene_meta(dataset: SceneDataset) -> dict:
    positions = np.stack([p.position for p in dataset.poses])
    return {
        "scene_id": dataset.scene_id,
        "image_size": dataset.image_size,
        "normalizer": {"center": dataset.normalizer.center.tolist(), "scale": dataset.normalizer.scale},
        "pose_bounds": {"min": positions.min(axis=0).tolist(), "max": positions.max(axis=0).tolist()},
        "train_positions": np.round(positions, 6).tolist(),
    }


def save_train_checkpoint(state: TrainState, train_ds: SceneDataset, path) -> Path:
    manifest = {
        "format": "pose2view-checkpoint",
        "iteration": state.iteration,
        "rng_state": {"master_seed": state.config.seed},
        "model": asdict(state.model_config),
        "config": config_to_dict(state.config),
        "scene": _scene_meta(train_ds),
        "optimizer": {"g_step": state.opt_g.step_count, "d_step": state.opt_d.step_count},
    }
    arrays = {}
    arrays.update(state_dict_arrays(state.generator, "generator"))
    arrays.update(state_dict_arrays(state.discriminator, "discriminator"))
    arrays.update({k: v.detach().numpy() for k, v in state.opt_g.state_arrays("optimizer_g").items()})
    arrays.update({k: v.detach().numpy() for k, v in state.opt_d.state_arrays("optimizer_d").items()})
    write_container(path, manifest, arrays)
    return Path(path)


def restore_train_state(state: TrainState, checkpoint_path) -> None:
    manifest, arrays = read_container(checkpoint_path)
    stored = apply_ablation(config_from_dict(manifest["config"]))
    current = state.config
    ignore = {"total_iterations", "checkpoint_every"}
    stored_cmp = {k: v for k, v in config_to_dict(stored).items() if k not in ignore}
    current_cmp = {k: v for k, v in config_to_dict(current).items() if k not in ignore}
    if stored_cmp != current_cmp:
        raise TrainingError(f"checkpoint {checkpoint_path} was trained with a different configuration")
    load_state_dict_arrays(state.generator, "generator", arrays)
    load_state_dict_arrays(state.discriminator, "discriminator", arrays)
    state.opt_g.load_state_arrays("optimizer_g", arrays, int(manifest["optimizer"]["g_step"]))
    state.opt_d.load_state_arrays("optimizer_d", arrays, int(manifest["optimizer"]["d_step"]))
    state.iteration = int(manifest["iteration"])


# ---------------------------------------------------------------------------
# top-level loop


@dataclass(frozen=True)
class TrainResult:
    final_checkpoint: Path
    metrics_path: Path
    out_dir: Path


def _format_metrics_line(iteration: int, batch_seed: int, losses: BatchLosses) -> str:
    values = "\t".join(repr(v) for v in losses.as_tuple())  # repr round-trips doubles exactly
    return f"{iteration}\t{batch_seed}\t{values}"


def run_training(cfg: TrainConfig, out_dir, resume=None) -> TrainResult:
    """Train for cfg.total_iterations, writing checkpoints and the metrics log."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = apply_ablation(cfg)
    train_ds, _ = resolve_datasets(cfg.dataset, cfg.image_size)
    state = build_train_state(cfg, train_ds.normalizer)

    metrics_path = out_dir / "metrics.tsv"
    progress_path = out_dir / "progress.log"
    if resume is not None:
        restore_train_state(state, resume)
        lines = [METRICS_HEADER]
        if metrics_path.exists():
            kept = [
                line
                for line in metrics_path.read_text().splitlines()[1:]
                if line and int(line.split("\t", 1)[0]) <= state.iteration
            ]
            lines.extend(kept)
        metrics_path.write_text("\n".join(lines) + "\n")
    else:
        metrics_path.write_text(METRICS_HEADER + "\n")

    start = time.monotonic()
    with open(metrics_path, "a") as metrics, open(progress_path, "a") as progress:
        for it in range(state.iteration, cfg.total_iterations):
            seed = batch_seed_for(cfg.seed, it)
            batch = materialize_batch(train_ds, seed, cfg.batch_size)
            losses = train_step(state, batch)
            metrics.write(_format_metrics_line(state.iteration, seed, losses) + "\n")
            progress.write(f"iteration {state.iteration} wall_time {time.monotonic() - start:.3f}s\n")
            if state.iteration % cfg.checkpoint_every == 0:
                save_train_checkpoint(state, train_ds, out_dir / f"checkpoint_{state.iteration:07d}.p2v")
    final = save_train_checkpoint(state, train_ds, out_dir / "checkpoint_final.p2v")
    return TrainResult(final_checkpoint=final, metrics_path=metrics_path, out_dir=out_dir)


def recompute_logged_losses(checkpoint_path) -> tuple[int, BatchLosses]:
    """Offline spot-check: rebuild the checkpointed iteration's batch and losses.

    Returns (iteration, losses) that must match the metrics-log line of that
    iteration exactly.
    """
    manifest, arrays = read_container(checkpoint_path)
    cfg = apply_ablation(config_from_dict(manifest["config"]))
    iteration = int(manifest["iteration"])
    if iteration < 1:
        raise TrainingError("checkpoint precedes the first training step")
    train_ds, _ = resolve_datasets(cfg.dataset, cfg.image_size)
    state = build_train_state(cfg, train_ds.normalizer)
    load_state_dict_arrays(state.generator, "generator", arrays)
    load_state_dict_arrays(state.discriminator, "discriminator", arrays)
    seed = batch_seed_for(cfg.seed, iteration - 1)
    batch = materialize_batch(train_ds, seed, cfg.batch_size)
    images, y = _batch_tensors(state, batch)
    state.generator.train()
    state.discriminator.train()
    with torch.no_grad(), frozen_stats(state.generator, state.discriminator):
        snapshot = loss_terms(state.generator, state.discriminator, images, y, cfg.loss)
    return iteration, BatchLosses(**{k: float(snapshot[k]) for k in BatchLosses.FIELDS})


# ---------------------------------------------------------------------------
# config (de)serialization: nested dicts and the key=value file format


def config_to_dict(cfg: TrainConfig) -> dict:
    out = asdict(cfg)
    if cfg.dataset.inline_scene is not None:
        scene = cfg.dataset.inline_scene
        out["dataset"]["inline_scene"] = {
            "seed": scene.seed,
            "image_size": scene.image_size,
            "field_of_view": scene.field_of_view,
            "background_color": scene.background_color.tolist(),
            "landmarks": [
                {"position": lm.position.tolist(), "color": lm.color.tolist(), "radius": lm.radius}
                for lm in scene.landmarks
            ],
        }
    if cfg.dataset.distractor is not None:
        d = cfg.dataset.distractor
        out["dataset"]["distractor"] = {
            "mode": d.mode,
            "color": d.color.tolist(),
            "radius": d.radius,
            "fraction": d.fraction,
            "position": None if d.position is None else d.position.tolist(),
        }
    return out


def config_from_dict(data: dict) -> TrainConfig:
    data = dict(data)
    loss = LossConfig(**data.pop("loss"))
    ds = dict(data.pop("dataset"))
    inline = ds.pop("inline_scene", None)
    if inline is not None:
        landmarks = tuple(
            Landmark(np.array(lm["position"]), np.array(lm["color"]), float(lm["radius"]))
            for lm in inline["landmarks"]
        )
        ds["inline_scene"] = SyntheticSceneSpec(
            seed=int(inline["seed"]),
            landmarks=landmarks,
            background_color=np.array(inline["background_color"]),
            image_size=int(inline["image_size"]),
            field_of_view=float(inline["field_of_view"]),
        )
    distractor = ds.pop("distractor", None)
    if distractor is not None:
        ds["distractor"] = DistractorSpec(
            mode=distractor["mode"],
            color=np.array(distractor["color"]),
            radius=float(distractor["radius"]),
            fraction=float(distractor.get("fraction", 0.5)),
            position=None if distractor.get("position") is None else np.array(distractor["position"]),
        )
    return TrainConfig(dataset=DatasetSpec(**ds), loss=loss, **data)


_SCALAR_KEYS = {
    "ablation": str,
    "batch_size": int,
    "learning_rate": float,
    "adam_beta1": float,
    "adam_beta2": float,
    "n_critic": int,
    "total_iterations": int,
    "image_size": int,
    "seed": int,
    "checkpoint_every": int,
}
_LOSS_KEYS = {
    "alpha": float,
    "beta1": float,
    "beta2": float,
    "k": float,
    "gamma_mode": str,
    "gamma_const": float,
    "orientation_weight": float,
}
_DATASET_KEYS = {"kind": str, "scene_path": str, "scene": str, "n_train": int, "n_test": int}
_DISTRACTOR_KEYS = {"mode": str, "radius": float, "fraction": float}


def parse_train_config(text: str, base_dir=None) -> TrainConfig:
    """Parse the `key = value` training config document; unknown keys are errors."""
    top: dict = {}
    loss: dict = {}
    dataset: dict = {}
    distractor: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _SCALAR_KEYS:
            top[key] = _SCALAR_KEYS[key](value)
        elif key.startswith("loss.") and key[5:] in _LOSS_KEYS:
            loss[key[5:]] = _LOSS_KEYS[key[5:]](value)
        elif key.startswith("dataset.distractor."):
            sub = key[len("dataset.distractor.") :]
            if sub in _DISTRACTOR_KEYS:
                distractor[sub] = _DISTRACTOR_KEYS[sub](value)
            elif sub in ("color", "position"):
                distractor[sub] = np.array([float(v) for v in value.split(",")])
            else:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
        elif key.startswith("dataset.") and key[8:] in _DATASET_KEYS:
            dataset[key[8:]] = _DATASET_KEYS[key[8:]](value)
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
    if distractor:
        dataset["distractor"] = DistractorSpec(**distractor)
    if base_dir is not None and dataset.get("scene_path"):
        p = Path(dataset["scene_path"])
        if not p.is_absolute():
            dataset["scene_path"] = str(Path(base_dir) / p)
    return TrainConfig(dataset=DatasetSpec(**dataset), loss=LossConfig(**loss), **top)


def load_train_config(path) -> TrainConfig:
    path = Path(path)
    return parse_train_config(path.read_text(), base_dir=path.parent)


def format_train_config(cfg: TrainConfig) -> str:
    if cfg.dataset.inline_scene is not None:
        raise ValueError("inline scenes cannot be written to a config file; save the scene spec separately")
    lines = ["# training configuration"]
    for key in _SCALAR_KEYS:
        lines.append(f"{key} = {getattr(cfg, key)}")
    for key in _LOSS_KEYS:
        lines.append(f"loss.{key} = {getattr(cfg.loss, key)}")
    for key in _DATASET_KEYS:
        value = getattr(cfg.dataset, key)
        if value != "" or key == "kind":
            lines.append(f"dataset.{key} = {value}")
    if cfg.dataset.distractor is not None:
        d = cfg.dataset.distractor
        lines.append(f"dataset.distractor.mode = {d.mode}")
        lines.append(f"dataset.distractor.color = {', '.join(repr(float(v)) for v in d.color)}")
        lines.append(f"dataset.distractor.radius = {d.radius}")
        lines.append(f"dataset.distractor.fraction = {d.fraction}")
        if d.position is not None:
            lines.append(f"dataset.distractor.position = {', '.join(repr(float(v)) for v in d.position)}")
    return "\n".join(lines) + "\n"
