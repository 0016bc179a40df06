"""``seg25d`` command line: phantom, train, predict, eval, report."""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as C
from .errors import SegError
from .metrics import EvalReport, evaluate, summary_table, write_aggregate_csv
from .nnet.serialize import load_params, save_params, write_history
from .nnet.train import train_volumes
from .phantom import generate_dataset
from .pipeline import METHOD_NAMES, preprocess_pair, segment
from .reformat import ORIENTATIONS
from .vseg import read_volume, write_volume

log = logging.getLogger("seg25d")


class UsageError(Exception):
    pass


def _threads(n):
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=int(n))


def _load_cfg(args) -> dict:
    cfg = C.load_config(args.config, args.set or ())
    if args.seed is not None:
        C.apply_seed(cfg, args.seed)
    return cfg


def _parse_cases(spec: str | None, n: int) -> list[int]:
    if not spec:
        return list(range(n))
    if ":" in spec:
        a, b = spec.split(":", 1)
        return list(range(n))[slice(int(a) if a else None, int(b) if b else None)]
    return [int(s) for s in spec.split(",")]


def cmd_phantom(cfg: dict, n: int, out_dir) -> Path:
    if n < 1:
        raise UsageError("-n must be at least 1")
    generate_dataset(C.phantom_params(cfg), n, out_dir)
    path = Path(out_dir) / "manifest.json"
    print(path)
    return path


def _case_pairs(manifest_path, indices):
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    cases = manifest["cases"]
    root = manifest_path.parent
    pairs = []
    for i in indices:
        case = cases[i]
        name = case.get("id", f"case {i}")
        for key in ("image", "label"):
            p = root / case[key]
            if not p.exists():
                raise FileNotFoundError(f"{name}: {key} file {p} not found")
        pairs.append((read_volume(root / case["image"]), read_volume(root / case["label"])))
    return pairs


def cmd_train(cfg: dict, manifest, orientation: str, out_params, cases: str | None = None):
    n = len(json.loads(Path(manifest).read_text())["cases"])
    pairs = [preprocess_pair(img, lab, cfg) for img, lab in _case_pairs(manifest, _parse_cases(cases, n))]
    if not pairs:
        raise UsageError("no training cases selected")
    params, history = train_volumes(pairs, int(cfg["num_classes"]), C.train_config(cfg, orientation),
                                    neighbor_offset_mm=cfg["neighbor_offset_mm"])
    meta = {"orientation": orientation, "num_classes": int(cfg["num_classes"]), "train": cfg["train"]}
    path = save_params(params, out_params, meta=meta)
    write_history(history, history_path(out_params))
    print(path)
    return history


def history_path(out_params) -> Path:
    p = Path(out_params)
    if p.name.endswith(".json"):
        p = p.with_name(p.name[:-5])
    return p.with_name(p.name + ".history.csv")


def cmd_predict(cfg: dict, image_path, params_paths: dict, out_path, single: str | None = None) -> Path:
    if single is not None and params_paths.get(single) is None:
        raise UsageError(f"--single-orientation {single} needs --params-{single}")
    needed = [single] if single else list(ORIENTATIONS)
    missing = [o for o in needed if params_paths.get(o) is None]
    if missing:
        raise UsageError("missing parameter files for " + ", ".join(missing))
    params = {o: load_params(params_paths[o])[0] for o in needed}
    img = read_volume(image_path)
    labels = segment(img, params, cfg, single=single)
    hdr = write_volume(labels, out_path)
    check = read_volume(hdr)
    if check.dims != img.dims or not np.array_equal(check.data, labels.data):
        raise SegError(f"{hdr}: written label volume failed validation")
    print(hdr)
    return hdr


def cmd_eval(pred_path, gt_path, out_report, case_id: str = "", method: str = "2.5d") -> EvalReport:
    rep = evaluate(read_volume(pred_path), read_volume(gt_path), case_id=case_id, method=method)
    rep.save(out_report)
    print(json.dumps({"case": rep.case_id, "method": rep.method, "mean_dsc": rep.mean_dsc,
                      "mean_asd_mm": rep.mean_asd_mm}))
    return rep


def cmd_report(report_dir, out_csv=None) -> list[dict]:
    paths = sorted(Path(report_dir).glob("*.json"))
    if not paths:
        raise UsageError(f"no report JSON files in {report_dir}")
    reports = [EvalReport.load(p) for p in paths]
    out_csv = Path(out_csv) if out_csv else Path(report_dir) / "aggregate.csv"
    write_aggregate_csv(reports, out_csv)
    table = summary_table(reports)
    summary_csv = out_csv.with_name(out_csv.stem + "_summary.csv")
    with open(summary_csv, "w") as fh:
        fh.write("method,class,n,mean_dsc,mean_asd_mm\n")
        for row in table:
            asd = "" if row["mean_asd_mm"] is None else repr(row["mean_asd_mm"])
            fh.write(f"{row['method']},{row['class']},{row['n']},{row['mean_dsc']!r},{asd}\n")
    print(f"{'method':8s} {'class':>5s} {'n':>3s} {'DSC':>7s} {'ASD mm':>7s}")
    for row in table:
        asd = "-" if row["mean_asd_mm"] is None else f"{row['mean_asd_mm']:.3f}"
        print(f"{row['method']:8s} {str(row['class']):>5s} {row['n']:>3d} {row['mean_dsc']:7.4f} {asd:>7s}")
    return table


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--set", action="append", metavar="K=V", help="override a config key (repeatable)")
    common.add_argument("--seed", type=int, help="seed for phantoms, initialisation and augmentation")
    common.add_argument("--threads", type=int, help="BLAS worker threads (results do not depend on it)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="seg25d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", parents=[common], help="generate a phantom dataset")
    p.add_argument("-n", type=int, required=True, help="number of cases")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("train", parents=[common], help="train one orientation")
    p.add_argument("manifest")
    p.add_argument("--orientation", choices=ORIENTATIONS, required=True)
    p.add_argument("--cases", help="subset of manifest cases, e.g. 0:16 or 0,3,5")
    p.add_argument("--out", required=True, help="parameter file prefix")

    p = sub.add_parser("predict", parents=[common], help="segment an image")
    p.add_argument("image")
    for o in ORIENTATIONS:
        p.add_argument(f"--params-{o}", dest=f"params_{o}")
    p.add_argument("--single-orientation", choices=ORIENTATIONS)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", parents=[common], help="score a prediction")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--case", default="")
    p.add_argument("--method", default="2.5d", choices=sorted(METHOD_NAMES.values()))
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", parents=[common], help="aggregate evaluation reports")
    p.add_argument("report_dir")
    p.add_argument("--out", help="aggregate CSV path (default <report_dir>/aggregate.csv)")

    sub.add_parser("config", parents=[common], help="print the effective configuration")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        cfg = _load_cfg(args)
        with _threads(args.threads):
            if args.command == "phantom":
                cmd_phantom(cfg, args.n, args.out)
            elif args.command == "train":
                cmd_train(cfg, args.manifest, args.orientation, args.out, args.cases)
            elif args.command == "predict":
                paths = {o: getattr(args, f"params_{o}") for o in ORIENTATIONS}
                cmd_predict(cfg, args.image, paths, args.out, args.single_orientation)
            elif args.command == "eval":
                cmd_eval(args.pred, args.gt, args.out, args.case, args.method)
            elif args.command == "report":
                cmd_report(args.report_dir, args.out)
            elif args.command == "config":
                sys.stdout.write(C.dump_config(cfg))
    except UsageError as exc:
        parser.error(str(exc))
    except (SegError, C.ConfigError, OSError, ValueError, KeyError) as exc:
        print(f"seg25d {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
