from .cambridge import load_cambridge
from .core import ImageSample, IngestionError, IngestionWarning, SceneDataset, to_grayscale
from .preprocess import load_raw_image, preprocess, to_grayscale_pixels
from .seven_scenes import load_seven_scenes
from .synthetic import (
    DistractorSpec,
    Landmark,
    SyntheticSceneSpec,
    format_scene_spec,
    load_scene_spec,
    make_synthetic_dataset,
    parse_scene_spec,
    random_scene_spec,
    save_scene_spec,
    synth_scene_render,
)

__all__ = [
    "DistractorSpec",
    "ImageSample",
    "IngestionError",
    "IngestionWarning",
    "Landmark",
    "SceneDataset",
    "SyntheticSceneSpec",
    "format_scene_spec",
    "load_cambridge",
    "load_raw_image",
    "load_scene_spec",
    "load_seven_scenes",
    "make_synthetic_dataset",
    "parse_scene_spec",
    "preprocess",
    "random_scene_spec",
    "save_scene_spec",
    "synth_scene_render",
    "to_grayscale",
    "to_grayscale_pixels",
]
