import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seg25d.errors import DegenerateGeometryError, InvalidInterpolationError, InvalidWindowError
from seg25d.volume import (LabelVolume, PoseRecord, ScalarVolume, crop_fov, decrop, mirror_lr,
                           mirror_with_record, resample, resample_with_record, window_normalize)


def _rand_scalar(rng, dims=(8, 8, 8), spacing=(1.0, 1.0, 1.0)):
    return ScalarVolume(rng.normal(size=dims).astype(np.float32), spacing, (0.0, 0.0, 0.0))


def _rand_labels(rng, dims=(8, 8, 8), c=5, spacing=(1.0, 1.0, 1.0)):
    return LabelVolume(rng.integers(0, c, size=dims), spacing, num_classes=c)


def test_types_validate():
    with pytest.raises(DegenerateGeometryError):
        ScalarVolume(np.zeros((2, 2, 2)), (1, 0, 1))
    with pytest.raises(ValueError):
        ScalarVolume(np.full((2, 2, 2), np.nan))
    with pytest.raises(ValueError):
        LabelVolume(np.full((2, 2, 2), 3), num_classes=3)


@pytest.mark.parametrize("interp", ["nearest", "trilinear"])
def test_resample_identity_is_bitwise(interp):
    rng = np.random.default_rng(0)
    v = _rand_scalar(rng, spacing=(2, 2, 2))
    out = resample(v, (2, 2, 2), interp)
    assert out.data.tobytes() == v.data.tobytes()
    assert out.spacing == v.spacing and out.origin == v.origin


def test_resample_constant_field():
    v = ScalarVolume(np.full((4, 4, 4), 7.5, np.float32), (1, 1, 1))
    out = resample(v, (2, 2, 2), "trilinear")
    assert out.dims == (2, 2, 2)
    assert out.spacing == (2.0, 2.0, 2.0)
    np.testing.assert_allclose(out.data, 7.5, atol=1e-6)


def test_resample_dims_round_half_up():
    v = ScalarVolume(np.zeros((5, 3, 7), np.float32), (1, 1, 1))
    # extents 5, 3, 7 mm at 2 mm -> 2.5, 1.5, 3.5 -> 3, 2, 4
    assert resample(v, (2, 2, 2), "trilinear").dims == (3, 2, 4)


def _nearest_oracle(src: LabelVolume, target):
    """For each output voxel centre, scan every input voxel for the closest one.
    Equidistant candidates resolve to the larger index on each axis."""
    sp = np.asarray(src.spacing)
    tg = np.asarray(target, dtype=float)
    dims = np.floor(np.asarray(src.dims) * sp / tg + 0.5).astype(int)
    origin = np.asarray(src.origin) - sp / 2 + tg / 2
    centres = [np.asarray(src.origin)[a] + np.arange(src.dims[a]) * sp[a] for a in range(3)]
    out = np.zeros(tuple(dims), np.uint8)
    for i in range(dims[0]):
        for j in range(dims[1]):
            for k in range(dims[2]):
                p = origin + np.array([i, j, k]) * tg
                best = None
                for a in range(src.dims[0]):
                    for b in range(src.dims[1]):
                        for c in range(src.dims[2]):
                            d = ((centres[0][a] - p[0]) ** 2 + (centres[1][b] - p[1]) ** 2
                                 + (centres[2][c] - p[2]) ** 2)
                            key = (d, -a, -b, -c)
                            if best is None or key < best[0]:
                                best = (key, (a, b, c))
                out[i, j, k] = src.data[best[1]]
    return out


def test_resample_nearest_matches_bruteforce_oracle():
    rng = np.random.default_rng(1)
    lab = _rand_labels(rng)
    out = resample(lab, (2, 2, 2), "nearest")
    np.testing.assert_array_equal(out.data, _nearest_oracle(lab, (2, 2, 2)))


def test_resample_nearest_upsampling_oracle():
    rng = np.random.default_rng(2)
    lab = _rand_labels(rng, dims=(3, 4, 3), spacing=(2, 2, 2))
    out = resample(lab, (1, 1.5, 1), "nearest")
    np.testing.assert_array_equal(out.data, _nearest_oracle(lab, (1, 1.5, 1)))


def test_resample_errors():
    rng = np.random.default_rng(3)
    with pytest.raises(InvalidInterpolationError):
        resample(_rand_labels(rng), (2, 2, 2), "trilinear")
    with pytest.raises(DegenerateGeometryError):
        resample(_rand_scalar(rng, dims=(1, 1, 1)), (10, 10, 10), "trilinear")
    with pytest.raises(DegenerateGeometryError):
        resample(_rand_scalar(rng), (0, 1, 1))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.5, 0.75, 1.3, 2.0, 3.0]))
def test_nearest_never_invents_values(seed, factor):
    rng = np.random.default_rng(seed)
    lab = _rand_labels(rng, dims=(6, 5, 4), c=7)
    out = resample(lab, (factor, factor, factor), "nearest")
    assert set(np.unique(out.data)) <= set(np.unique(lab.data))


def test_window_normalize():
    v = ScalarVolume(np.array([100, 250, 175, -400, 900], np.float32).reshape(5, 1, 1))
    out = window_normalize(v, 100, 250).data.ravel()
    np.testing.assert_allclose(out, [0.0, 1.0, 0.5, 0.0, 1.0])
    with pytest.raises(InvalidWindowError):
        window_normalize(v, 250, 250)


def test_mirror():
    v = ScalarVolume(np.array([1.0, 2.0], np.float32).reshape(2, 1, 1))
    np.testing.assert_array_equal(mirror_lr(v).data.ravel(), [2.0, 1.0])
    rng = np.random.default_rng(4)
    w = _rand_scalar(rng, dims=(5, 4, 3))
    assert mirror_lr(mirror_lr(w)).data.tobytes() == w.data.tobytes()


def test_mirror_of_x_symmetric_volume_is_identity():
    rng = np.random.default_rng(5)
    half = rng.normal(size=(4, 6, 5)).astype(np.float32)
    sym = ScalarVolume(np.concatenate([half, half[::-1]]))
    np.testing.assert_array_equal(mirror_lr(sym).data, sym.data)


def test_crop_full_source_is_identity():
    rng = np.random.default_rng(6)
    v = ScalarVolume(rng.normal(size=(6, 5, 4)).astype(np.float32), (2, 2, 3), (10, -4, 7))
    out, rec = crop_fov(v, v.center_mm, v.extent_mm, pad_value=-1000)
    assert out.data.tobytes() == v.data.tobytes()
    assert rec.crop_offset_mm == (0.0, 0.0, 0.0)
    assert out.origin == v.origin


def test_crop_default_fov_dims():
    v = ScalarVolume(np.zeros((10, 10, 10), np.float32), (2, 2, 2))
    out, _ = crop_fov(v, v.center_mm, (256, 256, 360), pad_value=-1000)
    assert out.dims == (128, 128, 180)


def test_crop_outside_is_padding():
    v = ScalarVolume(np.ones((4, 4, 4), np.float32))
    out, _ = crop_fov(v, (100, 100, 100), (3, 3, 3), pad_value=-1000)
    assert np.all(out.data == -1000)
    lab = LabelVolume(np.ones((4, 4, 4)), num_classes=2)
    out, _ = crop_fov(lab, (100, 100, 100), (3, 3, 3))
    assert np.all(out.data == 0)


def test_decrop_identity_record():
    rng = np.random.default_rng(7)
    lab = _rand_labels(rng)
    out = decrop(lab, PoseRecord.identity(lab))
    np.testing.assert_array_equal(out.data, lab.data)


def test_crop_decrop_roundtrip_interior():
    rng = np.random.default_rng(8)
    lab = _rand_labels(rng, dims=(12, 10, 9))
    sub, rec = crop_fov(lab, (5.0, 4.0, 4.0), (6, 4, 5))
    back = decrop(sub, rec)
    start = np.round(np.array(rec.crop_offset_mm)).astype(int)
    sl = tuple(slice(start[i], start[i] + sub.dims[i]) for i in range(3))
    np.testing.assert_array_equal(back.data[sl], lab.data[sl])
    outside = np.ones(lab.dims, bool)
    outside[sl] = False
    assert np.all(back.data[outside] == 0)


def test_decrop_mirrored_record_is_mirror_of_plain():
    rng = np.random.default_rng(9)
    lab = _rand_labels(rng, dims=(7, 5, 4))
    plain = PoseRecord.identity(lab)
    _, mirrored = mirror_with_record(lab, plain)
    np.testing.assert_array_equal(decrop(lab, mirrored).data, mirror_lr(decrop(lab, plain)).data)


def test_decrop_through_resample_chain():
    rng = np.random.default_rng(10)
    lab = _rand_labels(rng, dims=(6, 6, 6), spacing=(2, 2, 2))
    rec = PoseRecord.identity(lab)
    fine, rec = resample_with_record(lab, (1, 1, 1), "nearest", rec)
    back = decrop(fine, rec)
    np.testing.assert_array_equal(back.data, lab.data)


def test_decrop_rejects_singular_record():
    lab = LabelVolume(np.zeros((3, 3, 3)), num_classes=2)
    rec = PoseRecord.identity(lab).then("bad", np.zeros((4, 4)), (3, 3, 3), (1, 1, 1))
    with pytest.raises(DegenerateGeometryError):
        decrop(lab, rec)


def test_pose_record_dict_roundtrip():
    lab = LabelVolume(np.zeros((4, 4, 4)), num_classes=2)
    _, rec = crop_fov(lab, (1, 1, 1), (2, 2, 2))
    rec2 = PoseRecord.from_dict(rec.to_dict())
    np.testing.assert_array_equal(rec2.forward_matrix(), rec.forward_matrix())
    assert rec2.dims == rec.dims
