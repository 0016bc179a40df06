"""Random in-plane similarity transforms applied jointly to image channels and labels."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .reformat import SliceSample


@dataclass(frozen=True)
class AugmentSpec:
    scale: float = 0.10
    shift_px: float = 10.0
    rotation_deg: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.scale < 0.5:
            raise ValueError(f"scale range must lie in [0, 0.5), got {self.scale}")
        if self.shift_px < 0 or self.rotation_deg < 0:
            raise ValueError("augmentation ranges must be non-negative")


@dataclass(frozen=True)
class Similarity:
    scale: float
    shift: tuple[float, float]  # (columns, rows)
    angle_deg: float


def sample_rng(seed: int, epoch: int, index: int) -> np.random.Generator:
    """Per-sample generator that depends only on (seed, epoch, index)."""
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, epoch, index])


def draw_transform(spec: AugmentSpec, rng: np.random.Generator) -> Similarity:
    s = rng.uniform(1.0 - spec.scale, 1.0 + spec.scale)
    shift = rng.uniform(-spec.shift_px, spec.shift_px, size=2)
    angle = rng.uniform(-spec.rotation_deg, spec.rotation_deg)
    return Similarity(float(s), (float(shift[0]), float(shift[1])), float(angle))


def _source_coords(shape, tf: Similarity):
    """Source (row, col) for every output pixel: p = A^-1 (q - c - t) + c."""
    h, w = shape
    cr, cc = (h - 1) / 2.0, (w - 1) / 2.0
    rr, cc_ = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    dr = rr - cr - tf.shift[1]
    dc = cc_ - cc - tf.shift[0]
    a = np.deg2rad(tf.angle_deg)
    cos, sin = np.cos(a), np.sin(a)
    # inverse rotation, then inverse scale
    sr = (cos * dr + sin * dc) / tf.scale + cr
    sc = (-sin * dr + cos * dc) / tf.scale + cc
    return sr, sc


def warp_bilinear(img: np.ndarray, sr: np.ndarray, sc: np.ndarray) -> np.ndarray:
    """Bilinear lookup treating everything outside the image as 0."""
    h, w = img.shape[-2:]
    r0 = np.floor(sr).astype(np.int64)
    c0 = np.floor(sc).astype(np.int64)
    fr = sr - r0
    fc = sc - c0
    out = np.zeros(img.shape[:-2] + sr.shape, dtype=np.float64)
    for dr, wr in ((0, 1.0 - fr), (1, fr)):
        for dc, wc in ((0, 1.0 - fc), (1, fc)):
            r = r0 + dr
            c = c0 + dc
            ok = (r >= 0) & (r < h) & (c >= 0) & (c < w)
            wgt = np.where(ok, wr * wc, 0.0)
            out += img[..., np.clip(r, 0, h - 1), np.clip(c, 0, w - 1)] * wgt
    return out.astype(img.dtype)


def warp_nearest(img: np.ndarray, sr: np.ndarray, sc: np.ndarray, fill=0) -> np.ndarray:
    h, w = img.shape[-2:]
    r = np.floor(sr + 0.5).astype(np.int64)
    c = np.floor(sc + 0.5).astype(np.int64)
    ok = (r >= 0) & (r < h) & (c >= 0) & (c < w)
    out = img[..., np.clip(r, 0, h - 1), np.clip(c, 0, w - 1)]
    return np.where(ok, out, fill).astype(img.dtype)


def apply_transform(channels: np.ndarray, label, tf: Similarity):
    sr, sc = _source_coords(channels.shape[-2:], tf)
    ch = warp_bilinear(channels, sr, sc)
    lab = None if label is None else warp_nearest(label, sr, sc)
    return ch, lab


def augment_sample(s: SliceSample, spec: AugmentSpec, rng: np.random.Generator) -> SliceSample:
    tf = draw_transform(spec, rng)
    ch, lab = apply_transform(s.channels, s.label, tf)
    return dataclasses.replace(s, channels=ch, label=lab)
