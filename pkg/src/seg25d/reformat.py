"""Three-channel slice streams along the axial, coronal and sagittal axes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import DegenerateGeometryError, IncompleteAccumulationError
from .volume import LabelVolume, ProbVolume, ScalarVolume, round_half_up

ORIENTATIONS = ("axial", "coronal", "sagittal")
# axis held fixed by each orientation under the x/y/z = LR/AP/limb convention
ORIENTATION_AXIS = {"axial": 2, "coronal": 1, "sagittal": 0}


def orientation_axis(orientation: str) -> int:
    try:
        return ORIENTATION_AXIS[orientation]
    except KeyError:
        raise ValueError(f"unknown orientation {orientation!r}; expected one of {ORIENTATIONS}") from None


def neighbor_offset(spacing_mm: float, offset_mm: float = 4.0) -> int:
    return int(round_half_up(offset_mm / spacing_mm))


@dataclass(frozen=True)
class SliceSample:
    orientation: str
    index: int
    channels: np.ndarray  # (3, H, W): previous, centre, next
    label: Optional[np.ndarray] = None  # (H, W)


def slice_stack(vol: ScalarVolume, labels: Optional[LabelVolume] = None, orientation: str = "axial",
                neighbor_offset_mm: float = 4.0) -> list[SliceSample]:
    """One sample per plane; neighbours ``k`` planes away, clamped at the ends."""
    ax = orientation_axis(orientation)
    n = vol.dims[ax]
    if n < 1:
        raise DegenerateGeometryError("volume has no slices along " + orientation)
    if labels is not None and labels.dims != vol.dims:
        raise DegenerateGeometryError(f"label dims {labels.dims} differ from image dims {vol.dims}")
    k = neighbor_offset(vol.spacing[ax], neighbor_offset_mm)
    planes = np.moveaxis(vol.data, ax, 0)
    lab = np.moveaxis(labels.data, ax, 0) if labels is not None else None
    out = []
    for i in range(n):
        idx = [max(i - k, 0), i, min(i + k, n - 1)]
        ch = np.ascontiguousarray(planes[idx], dtype=np.float32)
        out.append(SliceSample(orientation, i, ch, None if lab is None else lab[i].copy()))
    return out


def stack_arrays(samples: list[SliceSample]) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Samples -> (S, 3, H, W) images and (S, H, W) labels (or None)."""
    x = np.stack([s.channels for s in samples])
    if samples and samples[0].label is not None:
        return x, np.stack([s.label for s in samples])
    return x, None


def accumulate(slices: Iterable[tuple[int, np.ndarray]], orientation: str, dims, num_classes: int,
               spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)) -> ProbVolume:
    """Write per-slice (C, H, W) maps into their planes of a ProbVolume."""
    ax = orientation_axis(orientation)
    dims = tuple(int(d) for d in dims)
    n = dims[ax]
    plane_shape = tuple(d for i, d in enumerate(dims) if i != ax)
    data = np.zeros((num_classes,) + dims, dtype=np.float32)
    view = np.moveaxis(data, ax + 1, 1)  # C, n, H, W
    seen = np.zeros(n, dtype=bool)
    for index, probs in slices:
        index = int(index)
        if not 0 <= index < n:
            raise IncompleteAccumulationError(f"slice index {index} outside [0, {n})")
        if seen[index]:
            raise IncompleteAccumulationError(f"slice {index} supplied twice")
        probs = np.asarray(probs)
        if probs.shape != (num_classes,) + plane_shape:
            raise IncompleteAccumulationError(
                f"slice {index} has shape {probs.shape}, expected {(num_classes,) + plane_shape}")
        view[:, index] = probs
        seen[index] = True
    if not seen.all():
        missing = np.flatnonzero(~seen)
        raise IncompleteAccumulationError(f"{len(missing)} slices missing, first {missing[:5].tolist()}")
    return ProbVolume(data, spacing, origin)


def planes(prob: ProbVolume, orientation: str) -> list[tuple[int, np.ndarray]]:
    """Inverse of :func:`accumulate`."""
    ax = orientation_axis(orientation)
    view = np.moveaxis(prob.data, ax + 1, 1)
    return [(i, view[:, i].copy()) for i in range(view.shape[1])]
