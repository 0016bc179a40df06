"""Overlap and surface-distance evaluation of label volumes.

Background (class 0) is never reported; per-class entries cover 1..C-1.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateGeometryError
from .volume import LabelVolume, same_spacing


def _check_pair(pred: LabelVolume, gt: LabelVolume, check_spacing: bool = False) -> None:
    if pred.dims != gt.dims:
        raise DegenerateGeometryError(f"prediction dims {pred.dims} differ from ground truth {gt.dims}")
    if check_spacing and not same_spacing(pred.spacing, gt.spacing):
        raise DegenerateGeometryError(f"prediction spacing {pred.spacing} differs from {gt.spacing}")


def dsc_mask(a: np.ndarray, b: np.ndarray) -> float:
    sa, sb = int(a.sum()), int(b.sum())
    if sa + sb == 0:
        return 1.0
    return 2.0 * int(np.logical_and(a, b).sum()) / (sa + sb)


def dsc(pred: LabelVolume, gt: LabelVolume, c: int) -> float:
    """Dice of class ``c``: 1 when both are empty, 0 when exactly one is."""
    _check_pair(pred, gt)
    return dsc_mask(pred.data == c, gt.data == c)


def surface_voxels(mask: np.ndarray) -> np.ndarray:
    """(K, 3) indices of mask voxels with a face neighbour outside the mask or grid."""
    mask = np.asarray(mask, dtype=bool)
    padded = np.pad(mask, 1, constant_values=False)
    interior = mask.copy()
    core = (slice(1, -1),) * 3
    for ax in range(3):
        for d in (-1, 1):
            sl = list(core)
            sl[ax] = slice(1 + d, padded.shape[ax] - 1 + d)
            interior &= padded[tuple(sl)]
    return np.argwhere(mask & ~interior)


def asd_masks(a: np.ndarray, b: np.ndarray, spacing) -> Optional[float]:
    sa = surface_voxels(a)
    sb = surface_voxels(b)
    if len(sa) == 0 or len(sb) == 0:
        return None
    sp = np.asarray(spacing, dtype=np.float64)
    pa = sa * sp
    pb = sb * sp
    da, _ = cKDTree(pb).query(pa)
    db, _ = cKDTree(pa).query(pb)
    return float((da.sum() + db.sum()) / (len(pa) + len(pb)))


def asd(pred: LabelVolume, gt: LabelVolume, c: int, spacing=None) -> Optional[float]:
    """Symmetric average surface distance (mm) of class ``c``; None if either surface is empty."""
    _check_pair(pred, gt, check_spacing=True)
    if spacing is not None and not same_spacing(spacing, pred.spacing):
        raise DegenerateGeometryError(f"spacing {tuple(spacing)} differs from the volumes' {pred.spacing}")
    return asd_masks(pred.data == c, gt.data == c, pred.spacing)


@dataclass
class ClassScore:
    dsc: float
    asd_mm: Optional[float]
    pred_voxels: int
    gt_voxels: int


@dataclass
class EvalReport:
    per_class: dict[int, ClassScore]
    mean_dsc: float
    mean_asd_mm: Optional[float]
    case_id: str = ""
    method: str = "2.5d"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "case": self.case_id,
            "method": self.method,
            "mean_dsc": self.mean_dsc,
            "mean_asd_mm": self.mean_asd_mm,
            "per_class": {str(c): {"dsc": s.dsc, "asd_mm": s.asd_mm, "pred_voxels": s.pred_voxels,
                                   "gt_voxels": s.gt_voxels} for c, s in sorted(self.per_class.items())},
            **({"extra": self.extra} if self.extra else {}),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        per = {int(c): ClassScore(v["dsc"], v["asd_mm"], v["pred_voxels"], v["gt_voxels"])
               for c, v in d["per_class"].items()}
        return cls(per, d["mean_dsc"], d["mean_asd_mm"], d.get("case", ""), d.get("method", "2.5d"),
                   d.get("extra", {}))

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def evaluate(pred: LabelVolume, gt: LabelVolume, case_id: str = "", method: str = "2.5d") -> EvalReport:
    _check_pair(pred, gt, check_spacing=True)
    num_classes = max(pred.num_classes, gt.num_classes)
    per = {}
    for c in range(1, num_classes):
        a = pred.data == c
        b = gt.data == c
        per[c] = ClassScore(dsc_mask(a, b), asd_masks(a, b, pred.spacing), int(a.sum()), int(b.sum()))
    dscs = [s.dsc for s in per.values()]
    asds = [s.asd_mm for s in per.values() if s.asd_mm is not None]
    mean_dsc = math.fsum(dscs) / len(dscs) if dscs else float("nan")
    mean_asd = math.fsum(asds) / len(asds) if asds else None
    return EvalReport(per, mean_dsc, mean_asd, case_id, method)


AGGREGATE_COLUMNS = ("case", "class", "method", "dsc", "asd_mm")


def aggregate_rows(reports) -> list[dict]:
    rows = []
    for r in reports:
        for c, s in sorted(r.per_class.items()):
            rows.append({"case": r.case_id, "class": c, "method": r.method, "dsc": s.dsc,
                         "asd_mm": "" if s.asd_mm is None else s.asd_mm})
    return rows


def write_aggregate_csv(reports, path) -> list[dict]:
    rows = aggregate_rows(reports)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=AGGREGATE_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return rows


def summary_table(reports) -> list[dict]:
    """Mean DSC / ASD per (method, class), plus an ``all`` row per method."""
    groups: dict = {}
    for r in reports:
        for c, s in r.per_class.items():
            g = groups.setdefault((r.method, c), {"dsc": [], "asd": []})
            g["dsc"].append(s.dsc)
            if s.asd_mm is not None:
                g["asd"].append(s.asd_mm)
    out = []
    for (method, c), g in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        out.append({"method": method, "class": c, "n": len(g["dsc"]),
                    "mean_dsc": float(np.mean(g["dsc"])),
                    "mean_asd_mm": float(np.mean(g["asd"])) if g["asd"] else None})
    for method in sorted({r.method for r in reports}):
        rs = [r for r in reports if r.method == method]
        asds = [r.mean_asd_mm for r in rs if r.mean_asd_mm is not None]
        out.append({"method": method, "class": "all", "n": len(rs),
                    "mean_dsc": float(np.mean([r.mean_dsc for r in rs])),
                    "mean_asd_mm": float(np.mean(asds)) if asds else None})
    return out
