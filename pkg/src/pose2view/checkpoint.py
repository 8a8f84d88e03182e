"""Versioned checkpoint container.

Byte layout (all integers little-endian):

    offset 0   magic b"P2VC"
    offset 4   u32 container version (currently 1)
    offset 8   u64 manifest byte length M
    offset 16  manifest, UTF-8 JSON, M bytes
    offset 16+M  array blob

The manifest's "arrays" table lists every stored array as
{"name", "dtype", "shape", "offset", "nbytes"} with offsets relative to the
blob start; parameter arrays are C-order little-endian float32 ("<f4"). The
manifest also carries the training config echo, iteration count, RNG seed,
scene metadata (normalizer, pose bounds, training trajectory) and the model
architecture, so any implementation can reconstruct the networks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .geometry import Pose, PoseNormalizer
from .model import Discriminator, Generator, ModelConfig, init_params

MAGIC = b"P2VC"
VERSION = 1


class CheckpointError(ValueError):
    """Unreadable or inconsistent checkpoint file."""


def write_container(path, manifest: dict, arrays: dict[str, np.ndarray]) -> None:
    path = Path(path)
    table = []
    blobs = []
    offset = 0
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype=np.float32)
        raw = data.astype("<f4", copy=False).tobytes()
        table.append(
            {"name": name, "dtype": "<f4", "shape": list(data.shape), "offset": offset, "nbytes": len(raw)}
        )
        blobs.append(raw)
        offset += len(raw)
    manifest = dict(manifest, arrays=table)
    encoded = json.dumps(manifest, sort_keys=True).encode("utf-8")
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(MAGIC)
            fh.write(VERSION.to_bytes(4, "little"))
            fh.write(len(encoded).to_bytes(8, "little"))
            fh.write(encoded)
            for raw in blobs:
                fh.write(raw)
        tmp.replace(path)
    except OSError as exc:
        raise CheckpointError(f"cannot write checkpoint {path}: {exc}") from exc


def read_container(path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint container (bad magic)")
    version = int.from_bytes(raw[4:8], "little")
    if version != VERSION:
        raise CheckpointError(f"{path} has unsupported container version {version}")
    mlen = int.from_bytes(raw[8:16], "little")
    manifest = json.loads(raw[16 : 16 + mlen].decode("utf-8"))
    blob = raw[16 + mlen :]
    arrays = {}
    for entry in manifest["arrays"]:
        data = np.frombuffer(blob, dtype=entry["dtype"], count=entry["nbytes"] // 4, offset=entry["offset"])
        arrays[entry["name"]] = data.reshape(entry["shape"]).copy()
    return manifest, arrays


# ---------------------------------------------------------------------------
# model-level save/load


def state_dict_arrays(net: torch.nn.Module, prefix: str) -> dict[str, np.ndarray]:
    return {f"{prefix}/{name}": tensor.detach().cpu().numpy() for name, tensor in net.state_dict().items()}


def load_state_dict_arrays(net: torch.nn.Module, prefix: str, arrays: dict[str, np.ndarray]) -> None:
    state = {}
    for name, tensor in net.state_dict().items():
        key = f"{prefix}/{name}"
        if key not in arrays:
            raise CheckpointError(f"checkpoint is missing array {key!r}")
        state[name] = torch.as_tensor(arrays[key]).to(tensor.dtype).reshape(tensor.shape)
    net.load_state_dict(state)


@dataclass
class LoadedCheckpoint:
    """A frozen model snapshot plus the metadata the tooling needs."""

    generator: Generator
    discriminator: Discriminator
    model_config: ModelConfig
    normalizer: PoseNormalizer
    scene_id: str
    image_size: int
    iteration: int
    train_positions: np.ndarray
    pose_bounds: dict
    config_echo: dict
    path: Path

    def normalized_pose_vector(self, pose: Pose) -> np.ndarray:
        return self.normalizer.pose_to_vector(pose)


def load_model_checkpoint(path) -> LoadedCheckpoint:
    manifest, arrays = read_container(path)
    model_cfg = ModelConfig(**manifest["model"])
    generator, discriminator = init_params(model_cfg, seed=0)
    load_state_dict_arrays(generator, "generator", arrays)
    load_state_dict_arrays(discriminator, "discriminator", arrays)
    generator.eval()
    discriminator.eval()
    for p in list(generator.parameters()) + list(discriminator.parameters()):
        p.requires_grad_(False)
    scene = manifest["scene"]
    return LoadedCheckpoint(
        generator=generator,
        discriminator=discriminator,
        model_config=model_cfg,
        normalizer=PoseNormalizer(np.array(scene["normalizer"]["center"]), float(scene["normalizer"]["scale"])),
        scene_id=scene["scene_id"],
        image_size=int(scene["image_size"]),
        iteration=int(manifest["iteration"]),
        train_positions=np.array(scene["train_positions"], dtype=np.float64),
        pose_bounds=scene["pose_bounds"],
        config_echo=manifest.get("config", {}),
        path=Path(path),
    )
