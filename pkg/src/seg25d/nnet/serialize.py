"""Parameter files (JSON manifest + raw blob) and training-history CSV."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

_DT = {"f32le": np.dtype("<f4"), "f64le": np.dtype("<f8")}


def _paths(path) -> tuple[Path, Path]:
    p = Path(path)
    if p.name.endswith(".json"):
        p = p.with_name(p.name[:-5])
    return p.with_name(p.name + ".json"), p.with_name(p.name + ".bin")


def save_params(params: dict, path, meta: dict | None = None) -> Path:
    manifest_path, blob_path = _paths(path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    layers, chunks, offset = [], [], 0
    for name in sorted(params):
        arr = np.asarray(params[name])
        dtype = "f64le" if arr.dtype == np.float64 else "f32le"
        raw = arr.astype(_DT[dtype]).tobytes(order="C")
        layers.append({"name": name, "shape": list(arr.shape), "dtype": dtype,
                       "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    blob_path.write_bytes(b"".join(chunks))
    manifest = {"blob": blob_path.name, "layers": layers, "meta": meta or {}}
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def load_params(path) -> tuple[dict, dict]:
    """Return (params, meta)."""
    manifest_path, _ = _paths(path)
    manifest = json.loads(manifest_path.read_text())
    blob = (manifest_path.parent / manifest["blob"]).read_bytes()
    params = {}
    for layer in manifest["layers"]:
        dt = _DT[layer["dtype"]]
        raw = blob[layer["offset"]:layer["offset"] + layer["nbytes"]]
        count = int(np.prod(layer["shape"])) if layer["shape"] else 1
        if len(raw) != count * dt.itemsize:
            raise ValueError(f"{manifest_path}: layer {layer['name']} truncated")
        params[layer["name"]] = np.frombuffer(raw, dtype=dt).reshape(layer["shape"]).astype(dt.newbyteorder("="))
    return params, manifest.get("meta", {})


def write_history(history, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "mean_loss", "wall_seconds"])
        for rec in history:
            w.writerow([rec.epoch, repr(rec.mean_loss), f"{rec.wall_seconds:.3f}"])


def read_history(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{"epoch": int(r["epoch"]), "mean_loss": float(r["mean_loss"]),
                 "wall_seconds": float(r["wall_seconds"])} for r in csv.DictReader(fh)]
