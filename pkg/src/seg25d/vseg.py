"""VSEG container: ``<name>.vseg.json`` header plus a raw little-endian payload.

Payload order is x-fastest, then y, then z; probability volumes append the
classes slowest.  Scalars are ``f32le``, labels ``u8``.
"""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Union

import numpy as np

from .errors import VolumeFormatError
from .volume import LabelVolume, ProbVolume, ScalarVolume

_DTYPES = {"f32le": np.dtype("<f4"), "u8": np.dtype("u1")}
_KIND_DTYPE = {"scalar": "f32le", "label": "u8", "prob": "f32le"}

PathLike = Union[str, os.PathLike]


def header_path(path: PathLike) -> Path:
    p = Path(path)
    if p.name.endswith(".vseg.json"):
        return p
    if p.suffix == ".vseg":
        return p.with_name(p.name + ".json")
    return p.with_name(p.name + ".vseg.json")


def _stem(hdr: Path) -> str:
    return hdr.name[: -len(".vseg.json")]


def write_volume(vol, path: PathLike) -> Path:
    """Write ``vol`` and return the header path."""
    hdr = header_path(path)
    hdr.parent.mkdir(parents=True, exist_ok=True)
    raw_name = _stem(hdr) + ".raw"
    if isinstance(vol, LabelVolume):
        kind = "label"
    elif isinstance(vol, ProbVolume):
        kind = "prob"
    elif isinstance(vol, ScalarVolume):
        kind = "scalar"
    else:
        raise TypeError(f"cannot write {type(vol).__name__}")
    dtype = _KIND_DTYPE[kind]
    header = {
        "dims": list(vol.dims),
        "spacing": list(vol.spacing),
        "origin": list(vol.origin),
        "dtype": dtype,
        "kind": kind,
    }
    if kind != "scalar":
        header["num_classes"] = int(vol.num_classes)
    header["data"] = raw_name
    if kind == "prob":
        payload = b"".join(np.asarray(c, dtype=_DTYPES[dtype]).tobytes(order="F") for c in vol.data)
    else:
        payload = np.asarray(vol.data, dtype=_DTYPES[dtype]).tobytes(order="F")
    (hdr.parent / raw_name).write_bytes(payload)
    hdr.write_text(json.dumps(header, indent=2) + "\n")
    return hdr


def read_volume(path: PathLike):
    hdr = header_path(path)
    try:
        header = json.loads(hdr.read_text())
    except json.JSONDecodeError as exc:
        raise VolumeFormatError(f"{hdr}: header is not valid JSON ({exc})") from exc
    if not isinstance(header, dict):
        raise VolumeFormatError(f"{hdr}: header must be a JSON object")
    for key in ("dims", "spacing", "origin", "dtype", "kind", "data"):
        if key not in header:
            raise VolumeFormatError(f"{hdr}: missing header field {key!r}")
    kind = header["kind"]
    if kind not in _KIND_DTYPE:
        raise VolumeFormatError(f"{hdr}: unknown kind {kind!r}")
    if header["dtype"] not in _DTYPES:
        raise VolumeFormatError(f"{hdr}: unsupported dtype {header['dtype']!r}")
    if header["dtype"] != _KIND_DTYPE[kind]:
        raise VolumeFormatError(f"{hdr}: dtype {header['dtype']} not allowed for kind {kind}")
    dims = header["dims"]
    if (not isinstance(dims, list) or len(dims) != 3
            or not all(isinstance(d, int) and d > 0 for d in dims)):
        raise VolumeFormatError(f"{hdr}: dims must be three positive integers, got {dims!r}")
    for key in ("spacing", "origin"):
        v = header[key]
        if not isinstance(v, list) or len(v) != 3 or not all(isinstance(a, (int, float)) for a in v):
            raise VolumeFormatError(f"{hdr}: {key} must be three numbers")
    if kind != "scalar":
        c = header.get("num_classes")
        if not isinstance(c, int) or c < 2:
            raise VolumeFormatError(f"{hdr}: {kind} volume needs integer num_classes >= 2")
    dtype = _DTYPES[header["dtype"]]
    nvox = dims[0] * dims[1] * dims[2]
    count = nvox * (header["num_classes"] if kind == "prob" else 1)
    raw = (hdr.parent / header["data"]).read_bytes()
    if len(raw) != count * dtype.itemsize:
        raise VolumeFormatError(
            f"{hdr}: payload has {len(raw)} bytes, expected {count * dtype.itemsize} "
            f"({count} elements of {header['dtype']})")
    flat = np.frombuffer(raw, dtype=dtype)
    try:
        if kind == "scalar":
            data = flat.reshape(dims, order="F").astype(np.float32)
            return ScalarVolume(data, tuple(header["spacing"]), tuple(header["origin"]))
        if kind == "label":
            data = flat.reshape(dims, order="F").copy()
            return LabelVolume(data, tuple(header["spacing"]), tuple(header["origin"]),
                               num_classes=header["num_classes"])
        c = header["num_classes"]
        data = np.stack([flat[i * nvox:(i + 1) * nvox].reshape(dims, order="F") for i in range(c)])
        return ProbVolume(data.astype(np.float32), tuple(header["spacing"]), tuple(header["origin"]))
    except ValueError as exc:
        raise VolumeFormatError(f"{hdr}: {exc}") from exc
