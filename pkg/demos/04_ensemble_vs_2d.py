# The 2.5D ensemble against each single orientation on held-out phantoms.
#
# The full experiment (20 cases, 30 epochs, three seeds) lives in the
# acceptance suite; this runs a shrunken version: 6 cases, 4 for training.
# Usage: python 04_ensemble_vs_2d.py [epochs] [workdir]
import sys

from seg25d.pipeline import comparison_config, run_comparison

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 4
work = sys.argv[2] if len(sys.argv) > 2 else "demo_comparison"
cfg = comparison_config(seed=7, epochs=epochs)
res = run_comparison(cfg, work, n_cases=6, n_train=4)
for method, s in res["summary"].items():
    print(f"{method:6s} mean DSC {s['mean_dsc']:.4f}  mean ASD {s['mean_asd_mm']:.3f} mm")
print("per-case reports and aggregate.csv in", work)
