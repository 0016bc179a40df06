# A phantom limb, its HU window, the 2 mm grid and the three slice streams.
import tempfile
from pathlib import Path

import numpy as np

from seg25d.phantom import PhantomParams, generate_phantom
from seg25d.reformat import ORIENTATIONS, slice_stack
from seg25d.volume import resample, window_normalize
from seg25d.vseg import read_volume, write_volume

# 5 muscle sectors around a bone capsule, tilted by up to 20 degrees, 15 HU noise
params = PhantomParams(num_muscle_classes=5, noise_sigma_hu=15, rotation_max_deg=20, seed=3)
img, lab = generate_phantom(params)
print("image", img.dims, "spacing", img.spacing, "HU range", img.data.min().round(), img.data.max().round())

# every muscle class covers roughly the same number of voxels
counts = np.bincount(lab.data.ravel(), minlength=params.num_classes)
print("voxels per class (0 = background):", counts.tolist())

# the network sees HU clipped to the 100..250 window and scaled to 0..1;
# muscle (175 HU) lands mid-range, bone saturates at 1, fat and air at 0
x = window_normalize(img, 100, 250)
print("windowed muscle mean", x.data[lab.data > 0].mean().round(3))

# resampling to 1.5 mm just to show the grid arithmetic (dims = round(extent / spacing))
fine = resample(x, (1.5, 1.5, 1.5), "trilinear")
fine_lab = resample(lab, (1.5, 1.5, 1.5), "nearest")
print("1.5 mm grid", fine.dims, "labels still in", np.unique(fine_lab.data).tolist())

# one 3-channel sample per plane; neighbours sit 4 mm (2 slices at 2 mm) away
for o in ORIENTATIONS:
    s = slice_stack(x, lab, o)
    print(f"{o:9s} {len(s)} samples of shape {s[0].channels.shape}")
mid = slice_stack(x, lab, "axial")[32]
print("axial 32 uses planes 30, 32, 34:", [np.array_equal(mid.channels[i], x.data[:, :, p])
                                          for i, p in enumerate((30, 32, 34))])

# VSEG files: JSON header plus a raw x-fastest little-endian payload
with tempfile.TemporaryDirectory() as d:
    hdr = write_volume(lab, Path(d) / "label")
    print(hdr.read_text())
    assert read_volume(hdr).data.tobytes() == lab.data.tobytes()
