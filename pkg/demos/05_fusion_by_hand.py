# Winner-takes-all on three hand-written probability voxels, then island removal.
import numpy as np

from seg25d.fusion import keep_largest_per_class, vote_wta
from seg25d.volume import LabelVolume, ProbVolume

# one voxel, three classes; axial is confident about class 2, the others
# mildly prefer class 1: the single strongest probability decides
ax = ProbVolume(np.array([0.05, 0.05, 0.90]).reshape(3, 1, 1, 1))
co = ProbVolume(np.array([0.30, 0.60, 0.10]).reshape(3, 1, 1, 1))
sa = ProbVolume(np.array([0.35, 0.60, 0.05]).reshape(3, 1, 1, 1))
print("majority of per-view argmaxes would say 1; winner-takes-all says", vote_wta(ax, co, sa).data.item())

# a 10-voxel blob and a 3-voxel island of class 1: only the blob survives
lab = np.zeros((8, 8, 8), np.uint8)
lab[0:2, 0:5, 0] = 1
lab[6, 6, 5:8] = 1
clean = keep_largest_per_class(LabelVolume(lab, num_classes=2), connectivity=6)
print("class 1 voxels before", int(lab.sum()), "after", int(clean.data.sum()))
