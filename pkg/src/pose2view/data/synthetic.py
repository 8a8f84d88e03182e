"""Deterministic procedural scene: colored spheres rendered by pinhole projection.

The renderer is a pure function of (spec, pose), so it doubles as the ground
truth for desk-scale training and for view-synthesis comparisons. Cameras are
sampled on a shell around the landmark cloud, looking at its centroid with
bounded target/roll jitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..geometry import Pose, fit_pose_normalizer, look_at_quat, quat_multiply, quat_to_matrix
from .core import ImageSample, SceneDataset

_NEAR_PLANE = 1e-3
_SHELL_RADII = (2.5, 3.2)  # multiples of the landmark cloud radius
_TARGET_JITTER = 0.10  # fraction of cloud radius
_ROLL_JITTER_DEG = 10.0


@dataclass(frozen=True)
class Landmark:
    position: np.ndarray
    color: np.ndarray
    radius: float

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64).reshape(3)
        col = np.asarray(self.color, dtype=np.float64).reshape(3)
        pos.flags.writeable = False
        col.flags.writeable = False
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "color", col)
        if not self.radius > 0:
            raise ValueError("landmark radius must be positive")


@dataclass(frozen=True)
class SyntheticSceneSpec:
    seed: int
    landmarks: tuple[Landmark, ...]
    background_color: np.ndarray
    image_size: int = 32
    field_of_view: float = 70.0

    def __post_init__(self):
        if len(self.landmarks) < 3:
            raise ValueError("a synthetic scene needs at least 3 landmarks")
        if self.image_size not in (32, 64, 128):
            raise ValueError(f"image_size must be one of 32/64/128, got {self.image_size}")
        if not 10.0 < self.field_of_view < 170.0:
            raise ValueError(f"field_of_view must lie in (10, 170) degrees, got {self.field_of_view}")
        bg = np.asarray(self.background_color, dtype=np.float64).reshape(3)
        bg.flags.writeable = False
        object.__setattr__(self, "background_color", bg)
        object.__setattr__(self, "landmarks", tuple(self.landmarks))

    @property
    def centroid(self) -> np.ndarray:
        return np.stack([lm.position for lm in self.landmarks]).mean(axis=0)

    @property
    def cloud_radius(self) -> float:
        dists = [float(np.linalg.norm(lm.position - self.centroid)) for lm in self.landmarks]
        return max(max(dists), 1.0)


_PALETTE = np.array(
    [
        [1.0, -1.0, -1.0],  # red
        [-1.0, 1.0, -1.0],  # green
        [-0.6, -0.6, 1.0],  # blue
        [1.0, 1.0, -1.0],  # yellow
        [1.0, -1.0, 1.0],  # magenta
        [-1.0, 1.0, 1.0],  # cyan
        [1.0, 0.2, -0.8],  # orange
        [1.0, 1.0, 1.0],  # white
        [0.2, 1.0, 0.2],  # light green
        [-0.2, -0.2, -1.0],  # dark blue
        [0.8, 0.4, 1.0],  # violet
        [0.1, 0.7, 1.0],  # sky
    ]
)


def random_scene_spec(
    seed: int,
    n_landmarks: int = 8,
    image_size: int = 32,
    field_of_view: float = 70.0,
    extent: float = 1.0,
    radius_range: tuple[float, float] = (0.5, 0.75),
) -> SyntheticSceneSpec:
    """Seeded scene with well-separated, distinctly colored landmarks."""
    rng = np.random.default_rng([seed, 7])
    landmarks = []
    for i in range(n_landmarks):
        pos = rng.uniform(-extent, extent, size=3)
        color = _PALETTE[i % len(_PALETTE)]
        radius = float(rng.uniform(*radius_range))
        landmarks.append(Landmark(pos, color, radius))
    return SyntheticSceneSpec(
        seed=seed,
        landmarks=tuple(landmarks),
        background_color=np.array([-0.82, -0.80, -0.78]),
        image_size=image_size,
        field_of_view=field_of_view,
    )


def synth_scene_render(spec: SyntheticSceneSpec, pose: Pose, extra_landmarks: tuple[Landmark, ...] = ()) -> np.ndarray:
    """Pinhole render of the landmark spheres, painter's order, bit-stable.

    Landmarks project to discs (apparent radius f*r/z) rasterized with
    one-pixel coverage falloff at the rim; farther discs are drawn first so
    nearer ones occlude them. Out-of-view landmarks are simply absent.
    """
    size = spec.image_size
    focal = (size / 2.0) / math.tan(math.radians(spec.field_of_view) / 2.0)
    cx = cy = (size - 1) / 2.0
    rot_wc = quat_to_matrix(pose.orientation).T  # world -> camera

    img = np.tile(spec.background_color.astype(np.float64), (size, size, 1))
    jj, ii = np.meshgrid(np.arange(size, dtype=np.float64), np.arange(size, dtype=np.float64))

    visible = []
    for lm in tuple(spec.landmarks) + tuple(extra_landmarks):
        cam = rot_wc @ (lm.position - pose.position)
        if cam[2] <= _NEAR_PLANE:
            continue
        visible.append((float(cam[2]), cam, lm))
    visible.sort(key=lambda item: -item[0])  # far to near

    for depth, cam, lm in visible:
        u = cx + focal * cam[0] / depth
        v = cy + focal * cam[1] / depth
        rho = focal * lm.radius / depth
        dist = np.sqrt((jj - u) ** 2 + (ii - v) ** 2)
        coverage = np.clip(rho - dist + 0.5, 0.0, 1.0)[..., None]
        img = img * (1.0 - coverage) + lm.color * coverage
    return img.astype(np.float32)


@dataclass(frozen=True)
class DistractorSpec:
    """Transient sphere injected into a fraction of the training renders."""

    mode: str  # "moving": fresh random position per render; "static": one fixed position
    color: np.ndarray
    radius: float
    fraction: float = 0.5
    position: np.ndarray | None = None  # static mode only; defaults near the centroid

    def __post_init__(self):
        if self.mode not in ("moving", "static"):
            raise ValueError(f"distractor mode must be 'moving' or 'static', got {self.mode!r}")
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError("distractor fraction must lie in (0, 1]")
        col = np.asarray(self.color, dtype=np.float64).reshape(3)
        col.flags.writeable = False
        object.__setattr__(self, "color", col)
        if self.position is not None:
            pos = np.asarray(self.position, dtype=np.float64).reshape(3)
            pos.flags.writeable = False
            object.__setattr__(self, "position", pos)


def _sample_pose(rng: np.random.Generator, centroid: np.ndarray, cloud_r: float) -> Pose:
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    radius = rng.uniform(*_SHELL_RADII) * cloud_r
    position = centroid + direction * radius
    target = centroid + rng.uniform(-_TARGET_JITTER, _TARGET_JITTER, size=3) * cloud_r
    half_roll = math.radians(rng.uniform(-_ROLL_JITTER_DEG, _ROLL_JITTER_DEG)) / 2.0
    roll = np.array([math.cos(half_roll), 0.0, 0.0, math.sin(half_roll)])
    return Pose(position, quat_multiply(look_at_quat(position, target), roll))


def make_synthetic_dataset(
    spec: SyntheticSceneSpec,
    n_train: int,
    n_test: int,
    distractor: DistractorSpec | None = None,
) -> tuple[SceneDataset, SceneDataset]:
    """Seeded (train, test) datasets of rendered views; pose sets disjoint.

    A distractor, when given, contaminates only the training renders; test
    samples always show the clean scene.
    """
    if n_train < 1 or n_test < 1:
        raise ValueError("n_train and n_test must be at least 1")
    centroid, cloud_r = spec.centroid, spec.cloud_radius
    scene_id = f"synthetic-{spec.seed}"

    pose_rngs = {"train": np.random.default_rng([spec.seed, 101]), "test": np.random.default_rng([spec.seed, 202])}
    distractor_rng = np.random.default_rng([spec.seed, 303])

    def build_split(split: str, count: int) -> list[ImageSample]:
        rng = pose_rngs[split]
        samples = []
        for i in range(count):
            pose = _sample_pose(rng, centroid, cloud_r)
            extra: tuple[Landmark, ...] = ()
            if distractor is not None and split == "train":
                present = distractor_rng.uniform() < distractor.fraction
                if distractor.mode == "moving":
                    pos = centroid + distractor_rng.uniform(-cloud_r, cloud_r, size=3)
                else:
                    pos = distractor.position if distractor.position is not None else centroid + 0.1 * cloud_r
                if present:
                    extra = (Landmark(pos, distractor.color, distractor.radius),)
            samples.append(
                ImageSample(
                    pose=pose,
                    scene_id=scene_id,
                    sequence_id=f"{split}-00",
                    frame_index=i,
                    pixels=synth_scene_render(spec, pose, extra),
                )
            )
        return samples

    train_samples = build_split("train", n_train)
    test_samples = build_split("test", n_test)
    normalizer = fit_pose_normalizer([s.pose for s in train_samples])
    common = dict(scene_id=scene_id, image_size=spec.image_size, normalizer=normalizer)
    return (
        SceneDataset(samples=train_samples, split="train", **common),
        SceneDataset(samples=test_samples, split="test", **common),
    )


# ---------------------------------------------------------------------------
# scene spec file format: `key = value` lines, one `landmark = pos | color | r`
# line per landmark.


def format_scene_spec(spec: SyntheticSceneSpec) -> str:
    def fmt(vec) -> str:
        return ", ".join(repr(float(v)) for v in vec)

    lines = [
        "# synthetic scene specification",
        f"seed = {spec.seed}",
        f"image_size = {spec.image_size}",
        f"field_of_view = {spec.field_of_view!r}",
        f"background_color = {fmt(spec.background_color)}",
    ]
    lines.extend(f"landmark = {fmt(lm.position)} | {fmt(lm.color)} | {lm.radius!r}" for lm in spec.landmarks)
    return "\n".join(lines) + "\n"


def parse_scene_spec(text: str) -> SyntheticSceneSpec:
    fields: dict = {}
    landmarks = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"scene spec line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "landmark":
            parts = [p.strip() for p in value.split("|")]
            if len(parts) != 3:
                raise ValueError(f"scene spec line {lineno}: landmark needs 'pos | color | radius'")
            pos = [float(v) for v in parts[0].split(",")]
            color = [float(v) for v in parts[1].split(",")]
            landmarks.append(Landmark(np.array(pos), np.array(color), float(parts[2])))
        elif key == "seed":
            fields["seed"] = int(value)
        elif key == "image_size":
            fields["image_size"] = int(value)
        elif key == "field_of_view":
            fields["field_of_view"] = float(value)
        elif key == "background_color":
            fields["background_color"] = np.array([float(v) for v in value.split(",")])
        else:
            raise ValueError(f"scene spec line {lineno}: unknown key {key!r}")
    missing = {"seed", "background_color"} - fields.keys()
    if missing:
        raise ValueError(f"scene spec is missing keys: {sorted(missing)}")
    return SyntheticSceneSpec(landmarks=tuple(landmarks), **fields)


def load_scene_spec(path) -> SyntheticSceneSpec:
    return parse_scene_spec(Path(path).read_text())


def save_scene_spec(spec: SyntheticSceneSpec, path) -> None:
    Path(path).write_text(format_scene_spec(spec))
