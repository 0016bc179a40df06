"""End-to-end chains shared by the CLI, the demos and the acceptance experiment."""
from __future__ import annotations

import dataclasses
import json
import logging
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import config as C
from .fusion import keep_largest_per_class, vote_wta
from .metrics import EvalReport, evaluate, summary_table, write_aggregate_csv
from .nnet.serialize import save_params, write_history
from .nnet.train import predict_volume, train_volumes
from .phantom import case_seed, generate_phantom
from .pose import align_limb, split_left_right
from .reformat import ORIENTATIONS
from .volume import (LabelVolume, PoseRecord, ScalarVolume, crop_fov, decrop, mirror_with_record,
                     resample, resample_with_record, window_normalize)

log = logging.getLogger(__name__)

METHOD_NAMES = {"axial": "2d_ax", "coronal": "2d_co", "sagittal": "2d_sa", None: "2.5d"}


def preprocess_pair(img: ScalarVolume, lab: Optional[LabelVolume], cfg: dict):
    """Window then resample an already limb-normalised image (and its labels)."""
    lo, hi = cfg["window"]
    x = resample(window_normalize(img, lo, hi), cfg["target_spacing"], "trilinear")
    y = None if lab is None else resample(lab, cfg["target_spacing"], "nearest")
    return x, y


def _limb_chain(img: ScalarVolume, cfg: dict):
    """Limb input: window -> resample, with the record needed to undo it."""
    lo, hi = cfg["window"]
    rec = PoseRecord.identity(img)
    x, rec = resample_with_record(window_normalize(img, lo, hi), cfg["target_spacing"], "trilinear", rec)
    return [(x, rec)]


def _body_chain(img: ScalarVolume, cfg: dict):
    """Two-limb input: split -> mirror (left) -> align -> crop -> resample -> window."""
    lo, hi = cfg["window"]
    out = []
    for sub, rec in split_left_right(img, cfg["body_threshold_hu"]):
        if rec.side == "left":
            sub, rec = mirror_with_record(sub, rec)
        sub, rec = align_limb(sub, rec, cfg["bone_threshold_hu"])
        body = sub.data > cfg["body_threshold_hu"]
        center = sub.index_to_mm(np.argwhere(body).mean(axis=0)) if body.any() else sub.center_mm
        sub, rec = crop_fov(sub, center, cfg["fov_mm"], pad_value=-1000.0, record=rec)
        sub, rec = resample_with_record(sub, cfg["target_spacing"], "trilinear", rec)
        out.append((window_normalize(sub, lo, hi), rec))
    return out


def predict_probs(params_by_orientation: dict, vol: ScalarVolume, cfg: dict) -> dict:
    return {o: predict_volume(p, vol, o, batch_size=int(cfg["predict"]["batch_size"]),
                              neighbor_offset_mm=cfg["neighbor_offset_mm"])
            for o, p in params_by_orientation.items()}


def fuse_and_clean(probs: dict, cfg: dict, single: Optional[str] = None) -> LabelVolume:
    if single is not None:
        labels = probs[single].argmax()
    else:
        labels = vote_wta(*[probs[o] for o in ORIENTATIONS if o in probs])
    return keep_largest_per_class(labels, int(cfg["postproc"]["connectivity"]))


def segment(img: ScalarVolume, params_by_orientation: dict, cfg: dict,
            single: Optional[str] = None) -> LabelVolume:
    """Full inference chain ending in the input image's geometry."""
    if single is not None:
        params_by_orientation = {single: params_by_orientation[single]}
    chain = _body_chain if cfg["input_mode"] == "body" else _limb_chain
    out = None
    for vol, rec in chain(img, cfg):
        labels = fuse_and_clean(predict_probs(params_by_orientation, vol, cfg), cfg, single)
        back = decrop(labels, rec).data
        out = back if out is None else np.maximum(out, back)
    return LabelVolume(out, img.spacing, img.origin, num_classes=int(cfg["num_classes"]))


# --- desk-scale 2.5D vs 2D comparison --------------------------------------------

def comparison_config(seed: int, epochs: int = 30) -> dict:
    """Settings of the held-out phantom experiment (20 cases, 16 for training).

    Case seeds are ``base + i``, so the phantom base seed is spaced 1000 apart
    per experiment seed to keep the datasets of different seeds disjoint.
    """
    cfg = C.default_config()
    cfg["phantom"].update(dims=[64, 64, 64], spacing=[2.0, 2.0, 2.0], num_muscle_classes=5,
                          noise_sigma_hu=15.0, rotation_max_deg=20.0)
    cfg["num_classes"] = 6
    cfg["train"].update(epochs=epochs, batch_size=8, base_width=16)
    C.apply_seed(cfg, seed)
    cfg["phantom"]["seed"] = 1000 * int(seed)
    return cfg


def run_comparison(cfg: dict, workdir, n_cases: int = 20, n_train: int = 16) -> dict:
    """Train one net per orientation on the first ``n_train`` phantoms and score
    each single orientation and the fused ensemble on the rest."""
    work = Path(workdir)
    work.mkdir(parents=True, exist_ok=True)
    C.dump_config(cfg, work / "config.json")
    base = C.phantom_params(cfg)
    t0 = time.perf_counter()
    cases = [generate_phantom(dataclasses.replace(base, seed=case_seed(base.seed, i))) for i in range(n_cases)]
    train_pairs = [preprocess_pair(i, l, cfg) for i, l in cases[:n_train]]
    params, timings = {}, {}
    for o in ORIENTATIONS:
        ts = time.perf_counter()
        params[o], hist = train_volumes(train_pairs, int(cfg["num_classes"]), C.train_config(cfg, o),
                                        neighbor_offset_mm=cfg["neighbor_offset_mm"])
        timings[o] = time.perf_counter() - ts
        save_params(params[o], work / f"params_{o}", meta={"orientation": o})
        write_history(hist, work / f"history_{o}.csv")
    reports = []
    for i in range(n_train, n_cases):
        img, gt = cases[i]
        vol, _ = preprocess_pair(img, None, cfg)
        probs = predict_probs(params, vol, cfg)
        for single in (*ORIENTATIONS, None):
            pred = fuse_and_clean(probs, cfg, single)
            rep = evaluate(pred, gt, case_id=f"case{i:03d}", method=METHOD_NAMES[single])
            rep.save(work / "reports" / f"case{i:03d}_{rep.method}.json")
            reports.append(rep)
    write_aggregate_csv(reports, work / "aggregate.csv")
    summary = {}
    for m in METHOD_NAMES.values():
        rs = [r for r in reports if r.method == m]
        asds = [r.mean_asd_mm for r in rs if r.mean_asd_mm is not None]
        summary[m] = {"mean_dsc": float(np.mean([r.mean_dsc for r in rs])),
                      "mean_asd_mm": float(np.mean(asds)) if asds else None}
    result = {"seed": cfg["train"]["seed"], "summary": summary, "train_seconds": timings,
              "total_seconds": time.perf_counter() - t0, "table": summary_table(reports)}
    (work / "result.json").write_text(json.dumps(result, indent=2) + "\n")
    return result
