import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seg25d.augment import (AugmentSpec, Similarity, apply_transform, augment_sample, draw_transform,
                            sample_rng)
from seg25d.reformat import SliceSample


def _sample(rng, h=20, w=24, c=4):
    return SliceSample("axial", 0, rng.normal(size=(3, h, w)).astype(np.float32),
                       rng.integers(0, c, size=(h, w)).astype(np.uint8))


def test_zero_ranges_return_input(rng):
    s = _sample(rng)
    out = augment_sample(s, AugmentSpec(0, 0, 0), sample_rng(0, 0, 0))
    assert out.channels.tobytes() == s.channels.tobytes()
    assert out.label.tobytes() == s.label.tobytes()


def test_integer_shift_moves_label_and_image_in_lockstep():
    ch = np.zeros((3, 9, 12), np.float32)
    lab = np.zeros((9, 12), np.uint8)
    ch[:, 4, 5] = 1.0
    lab[4, 5] = 2
    lab[:, 0] = 1
    out_ch, out_lab = apply_transform(ch, lab, Similarity(1.0, (3.0, 0.0), 0.0))
    exp_lab = np.zeros_like(lab)
    exp_lab[4, 8] = 2
    exp_lab[:, 3] = 1
    np.testing.assert_array_equal(out_lab, exp_lab)
    assert np.argwhere(out_ch[1] == 1.0).tolist() == [[4, 8]]
    assert out_ch.sum() == 3.0
    assert np.all(out_lab[:, :3] == 0)


def test_rotation_90_about_centre():
    img = np.arange(25, dtype=np.float32).reshape(1, 5, 5)
    out, _ = apply_transform(img, None, Similarity(1.0, (0.0, 0.0), 90.0))
    # one of the two 90-degree rotations of the grid, exact on integer points
    assert np.allclose(out[0], np.rot90(img[0], 1)) or np.allclose(out[0], np.rot90(img[0], -1))


def test_draw_bounds_10k():
    spec = AugmentSpec()
    rng = np.random.default_rng(0)
    draws = [draw_transform(spec, rng) for _ in range(10_000)]
    s = np.array([d.scale for d in draws])
    a = np.array([d.angle_deg for d in draws])
    t = np.array([d.shift for d in draws])
    assert 0.9 <= s.min() and s.max() <= 1.1
    assert -20 <= a.min() and a.max() <= 20
    assert np.abs(t).max() <= 10
    # and the ranges are actually explored
    assert s.min() < 0.91 and s.max() > 1.09 and a.min() < -19.5 and a.max() > 19.5


def test_sample_rng_is_keyed():
    a = sample_rng(5, 1, 2).random(4)
    np.testing.assert_array_equal(a, sample_rng(5, 1, 2).random(4))
    assert not np.array_equal(a, sample_rng(5, 2, 1).random(4))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_label_values_never_invented(seed):
    rng = np.random.default_rng(seed)
    s = _sample(rng, c=6)
    out = augment_sample(s, AugmentSpec(), rng)
    assert out.channels.shape == s.channels.shape and out.label.shape == s.label.shape
    assert set(np.unique(out.label)) <= set(np.unique(s.label)) | {0}


def test_spec_validation():
    with pytest.raises(ValueError):
        AugmentSpec(scale=0.5)
    with pytest.raises(ValueError):
        AugmentSpec(shift_px=-1)
