"""Mini-batch training of a single-orientation U-Net and whole-volume inference."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..augment import AugmentSpec, apply_transform, draw_transform, sample_rng
from ..errors import TrainingDivergedError
from ..reformat import accumulate, orientation_axis, slice_stack, stack_arrays
from ..volume import ProbVolume, ScalarVolume
from .adam import OptState, adam_step
from .loss import dice_loss
from .unet import UNetConfig, init_params, unet_backward, unet_forward

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 8
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay: float = 1e-3
    base_width: int = 16
    augment: Optional[AugmentSpec] = field(default_factory=AugmentSpec)
    seed: int = 0
    orientation: str = "axial"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        orientation_axis(self.orientation)

    def opt_state(self) -> OptState:
        return OptState(self.lr, self.beta1, self.beta2, self.eps, self.decay)


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    wall_seconds: float


def _augment_batch(x, y, idx, spec: AugmentSpec, epoch: int):
    xs, ys = np.empty_like(x), np.empty_like(y)
    for j, i in enumerate(idx):
        tf = draw_transform(spec, sample_rng(spec.seed, epoch, int(i)))
        xs[j], ys[j] = apply_transform(x[j], y[j], tf)
    return xs, ys


def train(images: np.ndarray, labels: np.ndarray, num_classes: int, cfg: TrainConfig,
          params: Optional[dict] = None, dtype=np.float32):
    """Fit a U-Net on (S, 3, H, W) images and (S, H, W) labels.

    Returns the trained parameters and a list of per-epoch records.  Results
    depend only on the inputs and ``cfg.seed``.
    """
    if images.ndim != 4 or labels.shape != (images.shape[0],) + images.shape[2:]:
        raise ValueError(f"images {images.shape} and labels {labels.shape} disagree")
    if len(images) == 0:
        raise ValueError("no training samples")
    net_cfg = UNetConfig(num_classes=num_classes, base_width=cfg.base_width, in_channels=images.shape[1])
    if params is None:
        params = init_params(net_cfg, seed=cfg.seed, dtype=dtype)
    state = cfg.opt_state()
    images = images.astype(dtype, copy=False)
    history: list[EpochRecord] = []
    n = len(images)
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = np.random.default_rng([cfg.seed, epoch]).permutation(n)
        losses = []
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            x, y = images[idx], labels[idx]
            if cfg.augment is not None:
                x, y = _augment_batch(x, y, idx, cfg.augment, epoch)
            probs, cache = unet_forward(params, x, return_cache=True)
            loss, dprobs = dice_loss(probs, y)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss {loss} at epoch {epoch + 1}, batch {b + 1}")
            grads = unet_backward(dprobs, cache)
            params, state = adam_step(params, grads, state)
            losses.append(loss * len(idx))
        rec = EpochRecord(epoch + 1, float(np.sum(losses) / n), time.perf_counter() - t0)
        history.append(rec)
        log.info("%s epoch %d/%d loss %.4f (%.1fs)", cfg.orientation, rec.epoch, cfg.epochs,
                 rec.mean_loss, rec.wall_seconds)
    return params, history


def train_volumes(pairs, num_classes: int, cfg: TrainConfig, neighbor_offset_mm: float = 4.0, **kw):
    """Slice every (image, label) volume along ``cfg.orientation`` and train."""
    xs, ys = [], []
    for img, lab in pairs:
        x, y = stack_arrays(slice_stack(img, lab, cfg.orientation, neighbor_offset_mm))
        xs.append(x)
        ys.append(y)
    return train(np.concatenate(xs), np.concatenate(ys), num_classes, cfg, **kw)


def predict_volume(params: dict, vol: ScalarVolume, orientation: str, batch_size: int = 16,
                   neighbor_offset_mm: float = 4.0) -> ProbVolume:
    samples = slice_stack(vol, None, orientation, neighbor_offset_mm)
    num_classes = params["head.w"].shape[0]
    out = []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start:start + batch_size]
        x, _ = stack_arrays(chunk)
        probs = unet_forward(params, x)
        out.extend((s.index, p) for s, p in zip(chunk, probs))
    return accumulate(out, orientation, vol.dims, num_classes, vol.spacing, vol.origin)
