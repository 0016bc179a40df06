import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seg25d.errors import IncompleteAccumulationError
from seg25d.reformat import (ORIENTATIONS, accumulate, neighbor_offset, orientation_axis, planes,
                             slice_stack, stack_arrays)
from seg25d.volume import LabelVolume, ProbVolume, ScalarVolume


def test_neighbor_offset():
    assert neighbor_offset(2.0) == 2
    assert neighbor_offset(1.0) == 4
    assert neighbor_offset(0.8) == 5
    assert neighbor_offset(3.0) == 1


def test_cardinality_64():
    vol = ScalarVolume(np.zeros((64, 64, 64), np.float32), (2, 2, 2))
    s = slice_stack(vol, orientation="axial")
    assert len(s) == 64 and s[0].channels.shape == (3, 64, 64)


@pytest.mark.parametrize("orientation", ORIENTATIONS)
def test_channels_are_exact_planes(orientation, rng):
    data = rng.normal(size=(9, 7, 11)).astype(np.float32)
    vol = ScalarVolume(data, (2, 2, 2))
    lab = LabelVolume(rng.integers(0, 3, size=data.shape), (2, 2, 2), num_classes=3)
    ax = orientation_axis(orientation)
    n = data.shape[ax]
    samples = slice_stack(vol, lab, orientation)
    for s in samples:
        i = s.index
        np.testing.assert_array_equal(s.channels[1], np.take(data, i, axis=ax))
        np.testing.assert_array_equal(s.channels[0], np.take(data, max(i - 2, 0), axis=ax))
        np.testing.assert_array_equal(s.channels[2], np.take(data, min(i + 2, n - 1), axis=ax))
        np.testing.assert_array_equal(s.label, np.take(lab.data, i, axis=ax))
    np.testing.assert_array_equal(samples[0].channels[0], samples[0].channels[1])
    x, y = stack_arrays(samples)
    np.testing.assert_array_equal(np.moveaxis(x[:, 1], 0, ax), data)
    np.testing.assert_array_equal(np.moveaxis(y, 0, ax), lab.data)


def _random_prob(rng, dims=(5, 6, 7), c=3):
    p = rng.random((c,) + dims).astype(np.float32)
    return ProbVolume(p / p.sum(0), (1, 1, 1))


@pytest.mark.parametrize("orientation", ORIENTATIONS)
def test_planes_accumulate_roundtrip(orientation, rng):
    prob = _random_prob(rng)
    back = accumulate(planes(prob, orientation), orientation, prob.dims, 3)
    assert back.data.tobytes() == prob.data.tobytes()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_orientation_consistency(seed):
    prob = _random_prob(np.random.default_rng(seed), dims=(4, 5, 3))
    a = accumulate(planes(prob, "axial"), "axial", prob.dims, 3)
    s = accumulate(planes(prob, "sagittal"), "sagittal", prob.dims, 3)
    c = accumulate(reversed(planes(prob, "coronal")), "coronal", prob.dims, 3)
    assert a.data.tobytes() == s.data.tobytes() == c.data.tobytes()


def test_coronal_constant():
    maps = [(i, np.full((2, 4, 6), 0.5, np.float32)) for i in range(5)]
    out = accumulate(maps, "coronal", (4, 5, 6), 2)
    assert np.all(out.data == 0.5)


def test_accumulate_errors(rng):
    prob = _random_prob(rng)
    sl = planes(prob, "axial")
    with pytest.raises(IncompleteAccumulationError):
        accumulate(sl[:-1], "axial", prob.dims, 3)
    with pytest.raises(IncompleteAccumulationError):
        accumulate(sl + sl[:1], "axial", prob.dims, 3)
    with pytest.raises(IncompleteAccumulationError):
        accumulate([(i, m[:2]) for i, m in sl], "axial", prob.dims, 3)


def test_unknown_orientation():
    with pytest.raises(ValueError):
        orientation_axis("oblique")
