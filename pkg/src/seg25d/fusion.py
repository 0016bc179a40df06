"""Ensemble fusion of per-orientation probability volumes and island removal."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import FusionShapeError
from .volume import LabelVolume, ProbVolume


def vote_wta(*probs: ProbVolume) -> LabelVolume:
    """Winner-takes-all: each voxel gets the class holding the single highest
    probability across all inputs; ties go to the lowest class id."""
    if not probs:
        raise FusionShapeError("need at least one probability volume")
    ref = probs[0]
    for p in probs[1:]:
        if p.data.shape != ref.data.shape:
            raise FusionShapeError(f"cannot fuse shapes {ref.data.shape} and {p.data.shape}")
    best = ref.data
    for p in probs[1:]:
        best = np.maximum(best, p.data)
    labels = np.argmax(best, axis=0).astype(np.uint8)
    return LabelVolume(labels, ref.spacing, ref.origin, num_classes=ref.num_classes)


def _structure(connectivity: int) -> np.ndarray:
    if connectivity == 6:
        return ndimage.generate_binary_structure(3, 1)
    if connectivity == 26:
        return ndimage.generate_binary_structure(3, 3)
    raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")


def _first_index_xfast(comp: np.ndarray, ncomp: int) -> np.ndarray:
    """Smallest x-fastest linear index of each component (scan-order seed)."""
    flat = comp.ravel(order="F")
    first = np.full(ncomp + 1, np.iinfo(np.int64).max, dtype=np.int64)
    nz = np.flatnonzero(flat)
    # nz is ascending, so the first occurrence of each label is its minimum
    lab, pos = np.unique(flat[nz], return_index=True)
    first[lab] = nz[pos]
    return first


def keep_largest_per_class(labels: LabelVolume, connectivity: int = 6) -> LabelVolume:
    """Relabel all but the largest connected component of every foreground class
    as background.  Size ties go to the component met first in x-fastest scan order."""
    st = _structure(connectivity)
    data = labels.data
    out = data.copy()
    for c in np.unique(data):
        if c == 0:
            continue
        mask = data == c
        comp, n = ndimage.label(mask, structure=st)
        if n <= 1:
            continue
        sizes = np.bincount(comp.ravel(), minlength=n + 1)
        sizes[0] = 0
        first = _first_index_xfast(comp, n)
        cand = np.flatnonzero(sizes == sizes.max())
        keep = cand[np.argmin(first[cand])]
        out[mask & (comp != keep)] = 0
    return LabelVolume(out, labels.spacing, labels.origin, num_classes=labels.num_classes)
