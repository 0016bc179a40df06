# Train and score the three-seed 2.5D-vs-2D experiment; results land next to this file.
import logging
import sys
from pathlib import Path

from seg25d.pipeline import comparison_config, run_comparison

logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
seeds = [int(s) for s in sys.argv[1:]] or [1, 2, 3]
for seed in seeds:
    res = run_comparison(comparison_config(seed), Path(__file__).parent / "comparison" / f"seed{seed}")
    print(seed, {m: round(s["mean_dsc"], 4) for m, s in res["summary"].items()},
          round(res["total_seconds"] / 60, 1), "min", flush=True)
