import numpy as np
import pytest

from seg25d.volume import ScalarVolume


def rodrigues(axis, deg):
    axis = np.asarray(axis, float) / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    a = np.deg2rad(deg)
    return np.eye(3) + np.sin(a) * k + (1 - np.cos(a)) * (k @ k)


def cylinder_volume(direction=(0, 0, 1), dims=(48, 48, 48), radius=5.0, half_length=18.0,
                    centre=None, hu_in=700.0, hu_out=-1000.0, spacing=(1.0, 1.0, 1.0)):
    """Solid finite cylinder with a given axis direction, in mm coordinates."""
    d = np.asarray(direction, float)
    d /= np.linalg.norm(d)
    sp = np.asarray(spacing, float)
    centre = (np.asarray(dims) - 1) * sp / 2 if centre is None else np.asarray(centre, float)
    pts = np.indices(dims).reshape(3, -1).T * sp - centre
    t = pts @ d
    radial = np.linalg.norm(pts - np.outer(t, d), axis=1)
    inside = (radial <= radius) & (np.abs(t) <= half_length)
    data = np.where(inside, hu_in, hu_out).reshape(dims).astype(np.float32)
    return ScalarVolume(data, tuple(sp), (0.0, 0.0, 0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
