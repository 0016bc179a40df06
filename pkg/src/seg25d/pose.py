"""Limb pose normalisation: left/right split, bone long-axis estimate, rigid alignment to z.

Side naming follows the patient-based LPS convention: +x points to the
patient's left, so the limb with the larger centroid x is the left limb.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import AmbiguousAxisError, AxisFailureError, DegenerateGeometryError, SplitFailureError
from .volume import PoseRecord, ScalarVolume, sample_trilinear, translation_matrix

log = logging.getLogger(__name__)

BONE_THRESHOLD_HU = 300.0
BODY_THRESHOLD_HU = -200.0
MIN_AXIS_SUPPORT = 100
MIN_EIGEN_RATIO = 1.5
# tilts below this are left alone: re-estimating the axis of a thresholded,
# resampled bone wobbles by a few tenths of a degree, so smaller corrections
# only add interpolation blur
MIN_TILT_DEG = 0.5


@dataclass(frozen=True)
class AxisEstimate:
    direction: np.ndarray
    centroid_mm: np.ndarray
    support_voxels: int
    eigenvalue_ratio: float


def _sub_volume(vol: ScalarVolume, x0: int, x1: int, rec: PoseRecord, side: str):
    data = np.ascontiguousarray(vol.data[x0:x1])
    origin = (vol.origin[0] + x0 * vol.spacing[0], vol.origin[1], vol.origin[2])
    sub = vol.with_data(data, origin=origin)
    rec = rec.then("split", translation_matrix((-x0, 0, 0)), sub.dims, vol.spacing, "none", side=side)
    return sub, rec


def _split_plane_from_profile(profile: np.ndarray) -> int | None:
    """Minimum-occupancy sagittal plane in the central half, if it is a real valley."""
    n = len(profile)
    lo, hi = n // 4, max(n - n // 4, n // 4 + 1)
    v = lo + int(np.argmin(profile[lo:hi]))
    left, right = profile[:v].max(initial=0), profile[v + 1:].max(initial=0)
    if min(left, right) == 0:
        return None
    if profile[v] <= 0.5 * min(left, right):
        return v
    return None


def split_left_right(vol: ScalarVolume, body_threshold: float = BODY_THRESHOLD_HU):
    """Split a two-limb volume at a sagittal plane between the limbs.

    Returns ``((left_vol, left_rec), (right_vol, right_rec))``.  The left limb's
    record asks for mirroring via ``side == "left"``; mirroring itself is a
    separate step (:func:`seg25d.volume.mirror_with_record`).
    """
    body = vol.data > body_threshold
    comp, n = ndimage.label(body, structure=ndimage.generate_binary_structure(3, 3))
    rec = PoseRecord.identity(vol)
    plane = None
    if n >= 2:
        sizes = np.bincount(comp.ravel())[1:]
        order = np.argsort(sizes)[::-1]
        a, b = order[0] + 1, order[1] + 1
        if sizes[b - 1] >= 0.1 * sizes[a - 1]:
            xa = np.argwhere(comp == a)[:, 0]
            xb = np.argwhere(comp == b)[:, 0]
            if xa.mean() > xb.mean():
                xa, xb = xb, xa
            if xa.max() < xb.min():
                plane = int((xa.max() + xb.min() + 1) // 2)
    if plane is None:
        plane = _split_plane_from_profile(body.sum(axis=(1, 2)).astype(np.float64))
    if plane is None or plane <= 0 or plane >= vol.dims[0]:
        raise SplitFailureError("could not find two limbs or a midline gap to split at")
    low, low_rec = _sub_volume(vol, 0, plane, rec, "right")
    high, high_rec = _sub_volume(vol, plane, vol.dims[0], rec, "left")
    # the larger-x limb is the patient's left
    return (high, high_rec), (low, low_rec)


def _canonical_sign(d: np.ndarray) -> np.ndarray:
    for comp in (d[2], d[1], d[0]):
        if abs(comp) > 1e-12:
            return d if comp > 0 else -d
    return d


def estimate_axis(vol: ScalarVolume, bone_threshold: float = BONE_THRESHOLD_HU) -> AxisEstimate:
    """Principal axis of the above-threshold voxel positions (mm)."""
    idx = np.argwhere(vol.data > bone_threshold)
    if len(idx) < MIN_AXIS_SUPPORT:
        raise AxisFailureError(f"only {len(idx)} voxels above {bone_threshold} HU")
    pts = vol.index_to_mm(idx)
    centroid = pts.mean(axis=0)
    cov = np.cov((pts - centroid).T, bias=True)
    evals, evecs = np.linalg.eigh(cov)
    direction = _canonical_sign(evecs[:, 2] / np.linalg.norm(evecs[:, 2]))
    ratio = float(evals[2] / evals[1]) if evals[1] > 0 else float("inf")
    est = AxisEstimate(direction, centroid, int(len(idx)), ratio)
    if ratio < MIN_EIGEN_RATIO:
        raise AmbiguousAxisError(f"eigenvalue ratio {ratio:.3f} below {MIN_EIGEN_RATIO}")
    return est


def rotation_to_z(d: np.ndarray) -> np.ndarray:
    """Minimal rotation taking unit vector ``d`` onto +z (180 degrees about x for -z)."""
    d = np.asarray(d, dtype=np.float64)
    d = d / np.linalg.norm(d)
    z = np.array([0.0, 0.0, 1.0])
    axis = np.cross(d, z)
    s = np.linalg.norm(axis)
    c = float(np.dot(d, z))
    if s < 1e-12:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    k = axis / s
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    angle = np.arctan2(s, c)
    return np.eye(3) + np.sin(angle) * kx + (1 - np.cos(angle)) * (kx @ kx)


def normalize_pose(vol: ScalarVolume, axis: AxisEstimate, record: PoseRecord | None = None,
                   min_tilt_deg: float = MIN_TILT_DEG):
    """Rotate about the axis centroid so ``axis.direction`` maps to +z.

    The output keeps the input grid; samples are trilinear with edge clamping.
    Directions within ``min_tilt_deg`` of z give the identity.
    """
    d = np.asarray(axis.direction, dtype=np.float64)
    tilt = np.degrees(np.arccos(np.clip(abs(d[2]) / np.linalg.norm(d), -1.0, 1.0)))
    rot = np.eye(3) if d[2] > 0 and tilt < min_tilt_deg else rotation_to_z(d)
    sp = np.asarray(vol.spacing)
    c_idx = (np.asarray(axis.centroid_mm) - np.asarray(vol.origin)) / sp
    # index-space map of the forward transform: out = S^-1 R S (in - c) + c
    lin = np.diag(1.0 / sp) @ rot @ np.diag(sp)
    affine = np.eye(4)
    affine[:3, :3] = lin
    affine[:3, 3] = c_idx - lin @ c_idx
    if abs(np.linalg.det(lin)) <= 1e-9:
        raise DegenerateGeometryError("rotation matrix is singular")
    rec = record if record is not None else PoseRecord.identity(vol)
    rec = rec.then("rotate", affine, vol.dims, vol.spacing, "trilinear", affine=affine)
    if np.array_equal(rot, np.eye(3)):
        return vol.with_data(vol.data.copy()), rec
    inv = np.linalg.inv(affine)
    grid = np.indices(vol.dims, dtype=np.float64).reshape(3, -1)
    src = inv[:3, :3] @ grid + inv[:3, 3:4]
    data = sample_trilinear(vol.data, src).reshape(vol.dims).astype(vol.data.dtype)
    return vol.with_data(data), rec


def align_limb(vol: ScalarVolume, record: PoseRecord, bone_threshold: float = BONE_THRESHOLD_HU):
    """Estimate the axis and rotate; falls back to no rotation (flagged) when ambiguous."""
    try:
        axis = estimate_axis(vol, bone_threshold)
    except AxisFailureError as exc:
        log.warning("pose left unchanged: %s", exc)
        return vol, dataclasses.replace(record, axis_ambiguous=True)
    return normalize_pose(vol, axis, record)
