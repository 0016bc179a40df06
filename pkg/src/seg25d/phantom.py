"""Procedural multi-class limb phantoms with exact ground truth.

The limb is a cylinder along the canonical w axis: a bone capsule in the
middle, a muscle annulus split into K equal angular sectors (classes 1..K), a
thin fat ring and air outside.  Its outer radius carries a K-periodic radial
lobe pattern whose phase is offset from the coordinate axes, so no slicing
plane sees a mirror-symmetric limb; sectors and lobes twist slowly along w.
Because each sector spans exactly one lobe period, all sectors have equal
area in every cross-section.  All muscle shares one HU value, so class
identity comes from position only.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateGeometryError
from .volume import LabelVolume, ScalarVolume
from .vseg import write_volume

HU_AIR = -1000.0
HU_FAT = -80.0
HU_MUSCLE = 175.0
HU_BONE = 700.0


@dataclass(frozen=True)
class PhantomParams:
    dims: tuple[int, int, int] = (64, 64, 64)
    spacing: tuple[float, float, float] = (2.0, 2.0, 2.0)
    num_muscle_classes: int = 10
    bone_radius_mm: float = 10.0
    limb_radius_mm: float = 44.0
    radial_wobble_amplitude: float = 0.3
    noise_sigma_hu: float = 15.0
    rotation_max_deg: float = 20.0
    seed: int = 0
    fat_thickness_mm: float = 6.0
    bone_half_length_fraction: float = 0.3

    def __post_init__(self):
        if self.num_muscle_classes < 1 or self.num_muscle_classes > 254:
            raise ValueError("num_muscle_classes must be in [1, 254]")
        if not 0 < self.bone_radius_mm < self.limb_radius_mm:
            raise ValueError("need 0 < bone_radius_mm < limb_radius_mm")
        if not 0 <= self.radial_wobble_amplitude < 1:
            raise ValueError("radial_wobble_amplitude must be in [0, 1)")
        if self.noise_sigma_hu < 0 or self.rotation_max_deg < 0 or self.fat_thickness_mm < 0:
            raise ValueError("noise, rotation and fat thickness must be non-negative")

    @property
    def num_classes(self) -> int:
        return self.num_muscle_classes + 1

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["dims"] = list(self.dims)
        d["spacing"] = list(self.spacing)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PhantomParams":
        d = dict(d)
        d["dims"] = tuple(d["dims"])
        d["spacing"] = tuple(d["spacing"])
        return cls(**d)


def random_rotation(rng: np.random.Generator, max_deg: float) -> np.ndarray:
    """Rotation about a uniformly random axis by an angle uniform in [0, max_deg]."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = np.deg2rad(rng.uniform(0.0, max_deg))
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


def _lobe_phase(k: int) -> float:
    # pi/(4K) avoids mirror symmetry about both the x and y axes for any K
    return np.pi / (4 * k)


def generate_phantom(params: PhantomParams) -> tuple[ScalarVolume, LabelVolume]:
    p = params
    dims = np.asarray(p.dims)
    sp = np.asarray(p.spacing, dtype=np.float64)
    half_xy = min(dims[0] * sp[0], dims[1] * sp[1]) / 2.0
    a = p.radial_wobble_amplitude
    outer = p.limb_radius_mm * (1 + 0.5 * a) + p.fat_thickness_mm
    if outer > half_xy or min(dims) < 4:
        raise DegenerateGeometryError(
            f"limb of radius {outer:.1f} mm does not fit a {tuple(dims)} grid at {tuple(sp)} mm")

    rng = np.random.default_rng(p.seed)
    rot = random_rotation(rng, p.rotation_max_deg) if p.rotation_max_deg > 0 else np.eye(3)
    twist_phase = rng.uniform(0, 2 * np.pi)
    k = p.num_muscle_classes

    origin = -(dims - 1) * sp / 2.0
    gx, gy, gz = [origin[i] + np.arange(dims[i]) * sp[i] for i in range(3)]
    X, Y, Z = np.meshgrid(gx, gy, gz, indexing="ij")
    # canonical coordinates q = R^T p
    u = rot[0, 0] * X + rot[1, 0] * Y + rot[2, 0] * Z
    v = rot[0, 1] * X + rot[1, 1] * Y + rot[2, 1] * Z
    w = rot[0, 2] * X + rot[1, 2] * Y + rot[2, 2] * Z
    del X, Y, Z

    r = np.hypot(u, v)
    theta = np.arctan2(v, u)
    length = dims[2] * sp[2]
    twist = a * (np.pi / (4 * k)) * np.sin(2 * np.pi * w / length + twist_phase)
    phase = np.mod(theta - _lobe_phase(k) - twist, 2 * np.pi)
    r_out = p.limb_radius_mm * (1 + 0.5 * a * np.cos(k * phase))
    sector = np.minimum((phase * k / (2 * np.pi)).astype(np.int64), k - 1)

    half_len = p.bone_half_length_fraction * length
    wc = np.clip(w, -half_len, half_len)
    bone = np.hypot(r, w - wc) < p.bone_radius_mm
    muscle = (r < r_out) & ~bone
    fat = (r < r_out + p.fat_thickness_mm) & ~muscle & ~bone

    hu = np.full(tuple(dims), HU_AIR, dtype=np.float64)
    hu[fat] = HU_FAT
    hu[muscle] = HU_MUSCLE
    hu[bone] = HU_BONE
    if p.noise_sigma_hu > 0:
        hu += rng.normal(0.0, p.noise_sigma_hu, size=hu.shape)
    labels = np.where(muscle, sector + 1, 0).astype(np.uint8)

    origin_t = tuple(float(o) for o in origin)
    spacing_t = tuple(float(s) for s in sp)
    return (ScalarVolume(hu.astype(np.float32), spacing_t, origin_t),
            LabelVolume(labels, spacing_t, origin_t, num_classes=p.num_classes))


def case_seed(base_seed: int, index: int) -> int:
    return (int(base_seed) + int(index)) % (1 << 64)


def generate_dataset(params: PhantomParams, n: int, out_dir) -> dict:
    """Write ``n`` image/label pairs plus ``manifest.json``; returns the manifest."""
    if n < 1:
        raise ValueError("need at least one case")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cases = []
    for i in range(n):
        seed = case_seed(params.seed, i)
        img, lab = generate_phantom(dataclasses.replace(params, seed=seed))
        name = f"case{i:03d}"
        write_volume(img, out / f"{name}_image.vseg.json")
        write_volume(lab, out / f"{name}_label.vseg.json")
        cases.append({"id": name, "image": f"{name}_image.vseg.json", "label": f"{name}_label.vseg.json",
                      "seed": seed})
    manifest = {"cases": cases, "params": params.to_dict()}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def file_checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
