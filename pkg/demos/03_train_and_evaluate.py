# Train a small axial net for a few epochs, predict a held-out phantom and score it.
# Pass a number of epochs as the first argument (default 3) for a longer run.
import dataclasses
import sys
import time

from seg25d.metrics import evaluate
from seg25d.nnet import TrainConfig, UNetConfig, count_params, init_params, predict_volume, train_volumes
from seg25d.phantom import PhantomParams, case_seed, generate_phantom
from seg25d.volume import window_normalize

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 3
base = PhantomParams(num_muscle_classes=5, noise_sigma_hu=15, rotation_max_deg=20, seed=300)
cases = [generate_phantom(dataclasses.replace(base, seed=case_seed(base.seed, i))) for i in range(5)]
cases = [(window_normalize(img, 100, 250), lab) for img, lab in cases]

print("U-Net parameters at F=16, 6 classes:", count_params(init_params(UNetConfig(num_classes=6))))
t0 = time.perf_counter()
params, hist = train_volumes(cases[:4], 6, TrainConfig(epochs=epochs, orientation="axial", seed=0))
print(f"{epochs} epochs in {time.perf_counter() - t0:.0f}s, loss per epoch:",
      [round(h.mean_loss, 3) for h in hist])

img, gt = cases[4]
pred = predict_volume(params, img, "axial").argmax()
rep = evaluate(pred, gt, case_id="held-out", method="2d_ax")
for c, s in rep.per_class.items():
    asd = "-" if s.asd_mm is None else f"{s.asd_mm:.2f} mm"
    print(f"class {c}: DSC {s.dsc:.3f}  ASD {asd}")
print("mean DSC", round(rep.mean_dsc, 4))
