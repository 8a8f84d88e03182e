"""Image preprocessing: resize, crop augmentation, range mapping, grayscale."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

# Rec. 601 luma coefficients
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


def load_raw_image(path: Path | str) -> np.ndarray:
    """Read an image file as HxWx3 uint8."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def preprocess(raw_image: np.ndarray, mode: str, rng_seed: int | None = None, image_size: int = 128) -> np.ndarray:
    """Resize to 9/8 of the target, crop to target, map bytes into [-1, 1].

    Training uses a uniformly random crop offset, evaluation the centered one
    (offset (8, 8) at the default 128 target).
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    raw_image = np.asarray(raw_image)
    if raw_image.ndim != 3 or raw_image.shape[2] != 3:
        raise ValueError(f"expected HxWx3 byte array, got shape {raw_image.shape}")
    if raw_image.shape[0] < 16 or raw_image.shape[1] < 16:
        raise ValueError("input image must be at least 16x16")

    resized_size = round(image_size * 9 / 8)
    margin = resized_size - image_size
    im = Image.fromarray(raw_image.astype(np.uint8)).resize((resized_size, resized_size), Image.BILINEAR)
    arr = np.asarray(im, dtype=np.uint8)

    if mode == "train":
        rng = np.random.default_rng(rng_seed)
        off_y, off_x = (int(v) for v in rng.integers(0, margin + 1, size=2))
    else:
        off_y = off_x = margin // 2
    crop = arr[off_y : off_y + image_size, off_x : off_x + image_size]
    return (crop.astype(np.float32) / 127.5) - 1.0


def to_grayscale_pixels(img: np.ndarray) -> np.ndarray:
    """Apply Rec. 601 luma and replicate it across the three channels."""
    img = np.asarray(img)
    luma = img.astype(np.float64) @ _LUMA
    return np.repeat(luma[..., None], 3, axis=-1).astype(img.dtype)
