"""2.5D multi-class volumetric segmentation: three 2D U-Nets (axial, coronal,
sagittal) on 3-channel neighbour-slice inputs, fused by winner-takes-all."""
from .errors import SegError
from .volume import LabelVolume, PoseRecord, ProbVolume, ScalarVolume
from .vseg import read_volume, write_volume

__version__ = "0.1.0"

__all__ = ["SegError", "LabelVolume", "PoseRecord", "ProbVolume", "ScalarVolume",
           "read_volume", "write_volume"]
