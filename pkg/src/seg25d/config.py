"""Pipeline configuration: a nested JSON document with fixed keys.

Defaults reproduce the published setup: 2 mm voxels, a 256x256x360 mm field
of view, a 100..250 HU window, +/-4 mm neighbour slices, Adam with
lr 1e-4 / betas (0.9, 0.999) / decay 1e-3, augmentation of +/-10 % scale,
+/-10 px shift and 20 degrees rotation, and 100 epochs.
"""
from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np

from .augment import AugmentSpec
from .nnet.train import TrainConfig
from .phantom import PhantomParams
from .reformat import neighbor_offset
from .volume import round_half_up

DEFAULTS: dict = {
    "target_spacing": [2.0, 2.0, 2.0],
    "fov_mm": [256.0, 256.0, 360.0],
    "window": [100.0, 250.0],
    "neighbor_offset_mm": 4.0,
    "num_classes": 11,
    "input_mode": "limb",
    "bone_threshold_hu": 300.0,
    "body_threshold_hu": -200.0,
    "train": {
        "epochs": 100,
        "batch_size": 8,
        "lr": 1e-4,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "decay": 1e-3,
        "base_width": 16,
        "seed": 0,
    },
    "aug": {"enabled": True, "scale": 0.10, "shift_px": 10.0, "rot_deg": 20.0, "seed": 0},
    "fusion": {"rule": "wta"},
    "postproc": {"connectivity": 6},
    "predict": {"batch_size": 16},
    "phantom": PhantomParams().to_dict(),
}

INPUT_MODES = ("limb", "body")


class ConfigError(ValueError):
    pass


def default_config() -> dict:
    return copy.deepcopy(DEFAULTS)


def _merge(base: dict, update: dict, path: str = "") -> None:
    for k, v in update.items():
        key = f"{path}{k}"
        if k not in base:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config key {key!r} must be an object")
            _merge(base[k], v, key + ".")
        else:
            base[k] = v


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_key(cfg: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = cfg
    for p in parts[:-1]:
        if p not in node or not isinstance(node[p], dict):
            raise ConfigError(f"unknown config key {dotted!r}")
        node = node[p]
    if parts[-1] not in node:
        raise ConfigError(f"unknown config key {dotted!r}")
    if isinstance(node[parts[-1]], dict):
        raise ConfigError(f"config key {dotted!r} is a section, not a value")
    node[parts[-1]] = _parse_value(value) if isinstance(value, str) else value


def load_config(path=None, overrides=()) -> dict:
    """Defaults, then the JSON file at ``path``, then ``key=value`` overrides."""
    cfg = default_config()
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        _merge(cfg, data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        k, v = item.split("=", 1)
        set_key(cfg, k.strip(), v.strip())
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    for key in ("target_spacing", "fov_mm"):
        v = cfg[key]
        if len(v) != 3 or min(v) <= 0:
            raise ConfigError(f"{key} must be three positive numbers")
    lo, hi = cfg["window"]
    if not hi > lo:
        raise ConfigError("window high must exceed low")
    if cfg["input_mode"] not in INPUT_MODES:
        raise ConfigError(f"input_mode must be one of {INPUT_MODES}")
    if cfg["fusion"]["rule"] != "wta":
        raise ConfigError("only fusion.rule = 'wta' is supported")
    if cfg["postproc"]["connectivity"] not in (6, 26):
        raise ConfigError("postproc.connectivity must be 6 or 26")
    if int(cfg["train"]["epochs"]) < 1:
        raise ConfigError("train.epochs must be >= 1")
    if int(cfg["num_classes"]) < 2:
        raise ConfigError("num_classes must be >= 2")


def dump_config(cfg: dict, path=None) -> str:
    text = json.dumps(cfg, indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def apply_seed(cfg: dict, seed: int) -> None:
    cfg["train"]["seed"] = int(seed)
    cfg["aug"]["seed"] = int(seed)
    cfg["phantom"]["seed"] = int(seed)


def augment_spec(cfg: dict):
    a = cfg["aug"]
    if not a["enabled"]:
        return None
    return AugmentSpec(float(a["scale"]), float(a["shift_px"]), float(a["rot_deg"]), int(a["seed"]))


def train_config(cfg: dict, orientation: str) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(epochs=int(t["epochs"]), batch_size=int(t["batch_size"]), lr=float(t["lr"]),
                       beta1=float(t["beta1"]), beta2=float(t["beta2"]), eps=float(t["eps"]),
                       decay=float(t["decay"]), base_width=int(t["base_width"]),
                       augment=augment_spec(cfg), seed=int(t["seed"]), orientation=orientation)


def phantom_params(cfg: dict) -> PhantomParams:
    return PhantomParams.from_dict(cfg["phantom"])


def derived_geometry(cfg: dict) -> dict:
    """Grid size after cropping/resampling and the neighbour offset in slices."""
    sp = np.asarray(cfg["target_spacing"], dtype=np.float64)
    dims = round_half_up(np.asarray(cfg["fov_mm"], dtype=np.float64) / sp)
    return {
        "dims": [int(d) for d in dims],
        "neighbor_offset_slices": [neighbor_offset(s, cfg["neighbor_offset_mm"]) for s in sp],
    }
