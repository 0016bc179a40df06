"""Volume containers and geometric operations on voxel grids.

Arrays are indexed ``data[x, y, z]`` with x = left-right, y = anterior-posterior
and z = along the limb.  Voxel ``i`` along an axis has its centre at
``origin + i * spacing`` (mm); the physical extent of an axis is ``n * spacing``.
Files store the payload x-fastest, i.e. ``data.ravel(order="F")``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DegenerateGeometryError, InvalidInterpolationError, InvalidWindowError

SPACING_RTOL = 1e-9

Vec3 = tuple[float, float, float]


def _vec3(v, name: str) -> Vec3:
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise DegenerateGeometryError(f"{name} must have 3 components, got {arr.shape}")
    return tuple(float(a) for a in arr)


def round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


def same_spacing(a: Sequence[float], b: Sequence[float]) -> bool:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return bool(np.all(np.abs(a - b) <= SPACING_RTOL * np.maximum(np.abs(a), np.abs(b))))


@dataclass(frozen=True)
class _Grid:
    data: np.ndarray
    spacing: Vec3 = (1.0, 1.0, 1.0)
    origin: Vec3 = (0.0, 0.0, 0.0)

    def _check_geometry(self, ndim: int) -> None:
        object.__setattr__(self, "spacing", _vec3(self.spacing, "spacing"))
        object.__setattr__(self, "origin", _vec3(self.origin, "origin"))
        if self.data.ndim != ndim:
            raise DegenerateGeometryError(f"expected {ndim}-d data, got shape {self.data.shape}")
        if min(self.data.shape) < 1:
            raise DegenerateGeometryError(f"empty volume {self.data.shape}")
        if min(self.spacing) <= 0 or not all(np.isfinite(self.spacing)):
            raise DegenerateGeometryError(f"spacing must be positive, got {self.spacing}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.data.shape[-3:])

    @property
    def extent_mm(self) -> np.ndarray:
        return np.asarray(self.dims, dtype=np.float64) * np.asarray(self.spacing)

    @property
    def center_mm(self) -> np.ndarray:
        return np.asarray(self.origin) + (np.asarray(self.dims) - 1) * np.asarray(self.spacing) / 2.0

    def index_to_mm(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.float64)
        return np.asarray(self.origin) + idx * np.asarray(self.spacing)

    def with_data(self, data, **changes):
        return dataclasses.replace(self, data=data, **changes)


@dataclass(frozen=True)
class ScalarVolume(_Grid):
    """Real-valued intensities (HU or normalised) on a 3D grid."""

    def __post_init__(self):
        data = np.asarray(self.data)
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(np.float32)
        object.__setattr__(self, "data", data)
        self._check_geometry(3)
        if not np.all(np.isfinite(data)):
            raise ValueError("scalar volume contains non-finite values")


@dataclass(frozen=True)
class LabelVolume(_Grid):
    """Small-integer class ids; 0 is background."""

    num_classes: int = 2

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.dtype != np.uint8:
            if data.size and (data.min() < 0 or data.max() > 255):
                raise ValueError("label values must fit in 8 bits")
            data = data.astype(np.uint8)
        object.__setattr__(self, "data", data)
        self._check_geometry(3)
        if self.num_classes < 2 or self.num_classes > 256:
            raise ValueError(f"num_classes must be in [2, 256], got {self.num_classes}")
        if data.size and int(data.max()) >= self.num_classes:
            raise ValueError(f"label value {int(data.max())} >= num_classes {self.num_classes}")


@dataclass(frozen=True)
class ProbVolume(_Grid):
    """Per-class probabilities, ``data[c, x, y, z]``."""

    def __post_init__(self):
        data = np.asarray(self.data)
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(np.float32)
        object.__setattr__(self, "data", data)
        self._check_geometry(4)

    @property
    def num_classes(self) -> int:
        return int(self.data.shape[0])

    def check(self, atol: float = 1e-4) -> None:
        d = self.data
        if d.min() < 0 or d.max() > 1:
            raise ValueError("probabilities outside [0, 1]")
        err = np.abs(d.sum(axis=0, dtype=np.float64) - 1.0).max()
        if err > atol:
            raise ValueError(f"class probabilities do not sum to 1 (max error {err:.3g})")

    def argmax(self) -> LabelVolume:
        return LabelVolume(np.argmax(self.data, axis=0).astype(np.uint8), self.spacing,
                           self.origin, num_classes=self.num_classes)


AnyVolume = Union[ScalarVolume, LabelVolume]


# --- sampling ---------------------------------------------------------------

def _interp_axis(a: np.ndarray, axis: int, pos: np.ndarray) -> np.ndarray:
    """Linear interpolation along one axis with edge clamping."""
    n = a.shape[axis]
    if n == 1:
        return np.take(a, np.zeros(len(pos), dtype=np.int64), axis=axis)
    p = np.clip(pos, 0.0, n - 1)
    i0 = np.minimum(np.floor(p).astype(np.int64), n - 2)
    f = p - i0
    shape = [1] * a.ndim
    shape[axis] = len(pos)
    f = f.reshape(shape)
    return np.take(a, i0, axis=axis) * (1.0 - f) + np.take(a, i0 + 1, axis=axis) * f


def _nearest_index(pos: np.ndarray, n: int) -> np.ndarray:
    # ties go to the higher index
    return np.clip(np.floor(pos + 0.5).astype(np.int64), 0, n - 1)


def sample_trilinear(data: np.ndarray, coords: np.ndarray, fill: Optional[float] = None) -> np.ndarray:
    """Trilinear lookup of ``data`` at continuous voxel indices ``coords[3, ...]``.

    Out-of-grid points clamp to the edge voxels unless ``fill`` is given.
    """
    n = np.asarray(data.shape)
    c = [np.asarray(coords[i], dtype=np.float64) for i in range(3)]
    cc = [np.clip(c[i], 0.0, n[i] - 1) for i in range(3)]
    i0 = [np.minimum(np.floor(cc[i]).astype(np.int64), max(n[i] - 2, 0)) for i in range(3)]
    i1 = [np.minimum(i0[i] + 1, n[i] - 1) for i in range(3)]
    f = [cc[i] - i0[i] for i in range(3)]
    out = np.zeros(c[0].shape, dtype=np.float64)
    for dx in (0, 1):
        wx = f[0] if dx else 1.0 - f[0]
        ix = i1[0] if dx else i0[0]
        for dy in (0, 1):
            wy = f[1] if dy else 1.0 - f[1]
            iy = i1[1] if dy else i0[1]
            for dz in (0, 1):
                wz = f[2] if dz else 1.0 - f[2]
                iz = i1[2] if dz else i0[2]
                out += wx * wy * wz * data[ix, iy, iz]
    if fill is not None:
        outside = np.zeros(out.shape, dtype=bool)
        for i in range(3):
            outside |= (c[i] < -0.5) | (c[i] > n[i] - 0.5)
        out[outside] = fill
    return out


def sample_nearest(data: np.ndarray, coords: np.ndarray, fill=None) -> np.ndarray:
    """Nearest-voxel lookup; ties round up. Out-of-grid clamps unless ``fill`` is given."""
    idx = [np.floor(np.asarray(coords[i], dtype=np.float64) + 0.5).astype(np.int64) for i in range(3)]
    if fill is None:
        idx = [np.clip(idx[i], 0, data.shape[i] - 1) for i in range(3)]
        return data[idx[0], idx[1], idx[2]]
    inside = np.ones(idx[0].shape, dtype=bool)
    for i in range(3):
        inside &= (idx[i] >= 0) & (idx[i] < data.shape[i])
    out = np.full(idx[0].shape, fill, dtype=data.dtype)
    out[inside] = data[idx[0][inside], idx[1][inside], idx[2][inside]]
    return out


# --- operations ---------------------------------------------------------------

def resample(vol: AnyVolume, target_spacing, interp: str = "trilinear") -> AnyVolume:
    """Resample onto a grid with ``target_spacing`` covering the same physical extent."""
    if interp not in ("nearest", "trilinear"):
        raise InvalidInterpolationError(f"unknown interpolation {interp!r}")
    if isinstance(vol, LabelVolume) and interp != "nearest":
        raise InvalidInterpolationError("label volumes can only be resampled with nearest")
    target = np.asarray(_vec3(target_spacing, "target_spacing"))
    if np.any(target <= 0):
        raise DegenerateGeometryError(f"target spacing must be positive, got {target}")
    src = np.asarray(vol.spacing)
    if same_spacing(src, target):
        return vol.with_data(vol.data.copy())
    dims = round_half_up(vol.extent_mm / target)
    if np.any(dims < 1):
        raise DegenerateGeometryError(f"resampling {vol.dims} to {tuple(target)} mm gives no voxels")
    origin = np.asarray(vol.origin) - src / 2 + target / 2
    data = vol.data
    for ax in range(3):
        pos = (np.arange(dims[ax]) + 0.5) * target[ax] / src[ax] - 0.5
        if interp == "nearest":
            data = np.take(data, _nearest_index(pos, data.shape[ax]), axis=ax)
        else:
            data = _interp_axis(data.astype(np.float64, copy=False), ax, pos)
    if interp == "trilinear":
        data = data.astype(vol.data.dtype)
    return vol.with_data(np.ascontiguousarray(data), spacing=tuple(target), origin=tuple(origin))


def window_normalize(vol: ScalarVolume, low: float, high: float) -> ScalarVolume:
    if not high > low:
        raise InvalidWindowError(f"window high ({high}) must exceed low ({low})")
    d = (vol.data.astype(np.float64) - low) / (high - low)
    return vol.with_data(np.clip(d, 0.0, 1.0).astype(np.float32))


def mirror_lr(vol: AnyVolume) -> AnyVolume:
    return vol.with_data(np.ascontiguousarray(vol.data[::-1]))


# --- pose bookkeeping -----------------------------------------------------------

@dataclass(frozen=True)
class PoseStep:
    """One stage of the forward chain: ``out_index = matrix @ [in_index, 1]``."""

    name: str
    matrix: np.ndarray
    dims_out: tuple[int, int, int]
    spacing_out: Vec3
    interp: str


@dataclass(frozen=True)
class PoseRecord:
    """Everything needed to map a label grid back into the source scan."""

    source_dims: tuple[int, int, int]
    source_spacing: Vec3
    source_origin: Vec3 = (0.0, 0.0, 0.0)
    side: Optional[str] = None
    mirrored: bool = False
    affine: np.ndarray = field(default_factory=lambda: np.eye(4))
    crop_offset_mm: Vec3 = (0.0, 0.0, 0.0)
    axis_ambiguous: bool = False
    steps: tuple[PoseStep, ...] = ()

    @classmethod
    def identity(cls, vol) -> "PoseRecord":
        return cls(source_dims=vol.dims, source_spacing=vol.spacing, source_origin=vol.origin)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.steps[-1].dims_out if self.steps else tuple(self.source_dims)

    @property
    def spacing(self) -> Vec3:
        return self.steps[-1].spacing_out if self.steps else tuple(self.source_spacing)

    def then(self, name: str, matrix, dims_out, spacing_out, interp: str = "none", **changes) -> "PoseRecord":
        step = PoseStep(name, np.asarray(matrix, dtype=np.float64), tuple(int(d) for d in dims_out),
                        _vec3(spacing_out, "spacing"), interp)
        return dataclasses.replace(self, steps=self.steps + (step,), **changes)

    def forward_matrix(self) -> np.ndarray:
        m = np.eye(4)
        for s in self.steps:
            m = s.matrix @ m
        return m

    def to_dict(self) -> dict:
        return {
            "source_dims": list(self.source_dims),
            "source_spacing": list(self.source_spacing),
            "source_origin": list(self.source_origin),
            "side": self.side,
            "mirrored": self.mirrored,
            "affine": np.asarray(self.affine).tolist(),
            "crop_offset_mm": list(self.crop_offset_mm),
            "axis_ambiguous": self.axis_ambiguous,
            "steps": [{"name": s.name, "matrix": s.matrix.tolist(), "dims_out": list(s.dims_out),
                       "spacing_out": list(s.spacing_out), "interp": s.interp} for s in self.steps],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PoseRecord":
        steps = tuple(PoseStep(s["name"], np.asarray(s["matrix"]), tuple(s["dims_out"]),
                               tuple(s["spacing_out"]), s["interp"]) for s in d.get("steps", []))
        return cls(tuple(d["source_dims"]), tuple(d["source_spacing"]), tuple(d["source_origin"]),
                   d.get("side"), d.get("mirrored", False), np.asarray(d.get("affine", np.eye(4))),
                   tuple(d.get("crop_offset_mm", (0, 0, 0))), d.get("axis_ambiguous", False), steps)


def translation_matrix(t) -> np.ndarray:
    m = np.eye(4)
    m[:3, 3] = t
    return m


def mirror_matrix(nx: int) -> np.ndarray:
    m = np.eye(4)
    m[0, 0] = -1.0
    m[0, 3] = nx - 1
    return m


def resample_matrix(src_spacing, dst_spacing) -> np.ndarray:
    """Index map of :func:`resample` from source to destination grid."""
    r = np.asarray(src_spacing, dtype=np.float64) / np.asarray(dst_spacing, dtype=np.float64)
    m = np.eye(4)
    m[:3, :3] = np.diag(r)
    m[:3, 3] = 0.5 * r - 0.5
    return m


def mirror_with_record(vol: AnyVolume, rec: PoseRecord):
    out = mirror_lr(vol)
    return out, rec.then("mirror", mirror_matrix(vol.dims[0]), vol.dims, vol.spacing, "none", mirrored=not rec.mirrored)


def resample_with_record(vol: AnyVolume, target_spacing, interp: str, rec: PoseRecord):
    out = resample(vol, target_spacing, interp)
    return out, rec.then("resample", resample_matrix(vol.spacing, out.spacing), out.dims, out.spacing, interp)


def crop_fov(vol: AnyVolume, center_mm, fov_mm, pad_value: float = -1000.0,
             record: Optional[PoseRecord] = None):
    """Cut a box of physical size ``fov_mm`` centred on ``center_mm``.

    The box is snapped to the source grid, so data is copied without
    interpolation. Labels are always padded with background.
    """
    fov = np.asarray(_vec3(fov_mm, "fov_mm"))
    if np.any(fov <= 0):
        raise DegenerateGeometryError(f"fov must be positive, got {fov}")
    center = np.asarray(_vec3(center_mm, "center_mm"))
    sp = np.asarray(vol.spacing)
    dims = round_half_up(fov / sp)
    if np.any(dims < 1):
        raise DegenerateGeometryError(f"fov {fov} smaller than one voxel")
    start = round_half_up(((center - fov / 2) - (np.asarray(vol.origin) - sp / 2)) / sp)
    if isinstance(vol, LabelVolume):
        out = np.zeros(tuple(dims), dtype=vol.data.dtype)
    else:
        out = np.full(tuple(dims), pad_value, dtype=vol.data.dtype)
    src_lo = np.maximum(start, 0)
    src_hi = np.minimum(start + dims, vol.dims)
    if np.all(src_hi > src_lo):
        dst_lo = src_lo - start
        dst_hi = src_hi - start
        out[dst_lo[0]:dst_hi[0], dst_lo[1]:dst_hi[1], dst_lo[2]:dst_hi[2]] = \
            vol.data[src_lo[0]:src_hi[0], src_lo[1]:src_hi[1], src_lo[2]:src_hi[2]]
    origin = np.asarray(vol.origin) + start * sp
    rec = record if record is not None else PoseRecord.identity(vol)
    offset = tuple(float(v) for v in start * sp)
    rec = rec.then("crop", translation_matrix(-start), dims, vol.spacing, "none", crop_offset_mm=offset)
    return vol.with_data(out, origin=tuple(origin)), rec


def decrop(label: LabelVolume, rec: PoseRecord) -> LabelVolume:
    """Pull ``label`` back through the recorded chain onto the source grid (nearest)."""
    if tuple(label.dims) != tuple(rec.dims):
        raise DegenerateGeometryError(f"label dims {label.dims} do not match record dims {rec.dims}")
    m = rec.forward_matrix()
    if abs(np.linalg.det(m[:3, :3])) <= 1e-9:
        raise DegenerateGeometryError("pose record affine is not invertible")
    nx, ny, nz = rec.source_dims
    out = np.zeros((nx, ny, nz), dtype=np.uint8)
    gx, gy = np.meshgrid(np.arange(nx, dtype=np.float64), np.arange(ny, dtype=np.float64), indexing="ij")
    for k in range(nz):
        src = np.stack([gx, gy, np.full_like(gx, k), np.ones_like(gx)]).reshape(4, -1)
        dst = (m @ src)[:3].reshape(3, nx, ny)
        out[:, :, k] = sample_nearest(label.data, dst, fill=0)
    return LabelVolume(out, rec.source_spacing, rec.source_origin, num_classes=label.num_classes)
