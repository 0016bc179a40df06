import json

import numpy as np
import pytest
from scipy import ndimage

from seg25d.errors import DegenerateGeometryError
from seg25d.phantom import (HU_MUSCLE, PhantomParams, file_checksum, generate_dataset,
                            generate_phantom)
from seg25d.pose import estimate_axis, normalize_pose
from seg25d.vseg import read_volume

CLEAN = dict(noise_sigma_hu=0.0, rotation_max_deg=0.0)


def test_equal_sector_shares_k4():
    _, lab = generate_phantom(PhantomParams(num_muscle_classes=4, **CLEAN))
    counts = np.bincount(lab.data.ravel(), minlength=5)[1:]
    shares = counts / counts.sum()
    np.testing.assert_allclose(shares, 0.25, atol=0.02)


def test_deterministic_and_seed_sensitive():
    p = PhantomParams(num_muscle_classes=3, dims=(32, 32, 32), spacing=(4, 4, 4), seed=7)
    a = generate_phantom(p)
    b = generate_phantom(p)
    assert a[0].data.tobytes() == b[0].data.tobytes()
    assert a[1].data.tobytes() == b[1].data.tobytes()
    c = generate_phantom(PhantomParams(num_muscle_classes=3, dims=(32, 32, 32), spacing=(4, 4, 4), seed=8))
    assert c[0].data.tobytes() != a[0].data.tobytes()


@pytest.mark.parametrize("k", [1, 5, 10])
def test_labels_in_range_and_sectors_connected(k):
    _, lab = generate_phantom(PhantomParams(num_muscle_classes=k, **CLEAN))
    assert lab.data.max() < k + 1
    s26 = ndimage.generate_binary_structure(3, 3)
    for c in range(1, k + 1):
        _, n = ndimage.label(lab.data == c, structure=s26)
        assert n == 1, f"class {c} has {n} components"


def test_muscle_hu_inside_both_windows():
    assert 100 < HU_MUSCLE < 250 and -100 < HU_MUSCLE < 250
    img, lab = generate_phantom(PhantomParams(num_muscle_classes=5, **CLEAN))
    np.testing.assert_array_equal(np.unique(img.data[lab.data > 0]), [HU_MUSCLE])


def test_bone_above_bone_threshold_and_axis_recovered():
    img, _ = generate_phantom(PhantomParams(num_muscle_classes=5, rotation_max_deg=20, seed=3))
    est = estimate_axis(img)
    assert est.support_voxels >= 100
    out, _ = normalize_pose(img, est)
    np.testing.assert_allclose(estimate_axis(out).direction, [0, 0, 1], atol=1e-2)


def test_too_small_grid():
    with pytest.raises(DegenerateGeometryError):
        generate_phantom(PhantomParams(dims=(16, 16, 16), spacing=(2, 2, 2)))


def test_param_validation():
    with pytest.raises(ValueError):
        PhantomParams(num_muscle_classes=0)
    with pytest.raises(ValueError):
        PhantomParams(bone_radius_mm=50, limb_radius_mm=40)
    with pytest.raises(ValueError):
        PhantomParams(radial_wobble_amplitude=1.0)


def test_dataset(tmp_path):
    p = PhantomParams(num_muscle_classes=2, dims=(32, 32, 32), spacing=(4, 4, 4), seed=100)
    man = generate_dataset(p, 3, tmp_path / "a")
    files = sorted(f.name for f in (tmp_path / "a").glob("*.vseg.json"))
    assert len(files) == 6 and len(list((tmp_path / "a").glob("*.raw"))) == 6
    assert [c["seed"] for c in man["cases"]] == [100, 101, 102]
    on_disk = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert on_disk == man
    assert PhantomParams.from_dict(on_disk["params"]) == p
    img = read_volume(tmp_path / "a" / man["cases"][0]["image"])
    assert img.dims == (32, 32, 32)

    generate_dataset(p, 3, tmp_path / "b")
    for case in man["cases"]:
        for key in ("image", "label"):
            raw = case[key].replace(".vseg.json", ".raw")
            assert file_checksum(tmp_path / "a" / raw) == file_checksum(tmp_path / "b" / raw)
    raws = [file_checksum(tmp_path / "a" / c["image"].replace(".vseg.json", ".raw")) for c in man["cases"]]
    assert len(set(raws)) == 3

    with pytest.raises(ValueError):
        generate_dataset(p, 0, tmp_path / "c")
