import numpy as np
import pytest

from mablab import PlanarPath


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def circle_path(radius=1.0, center=(0.0, 0.0), n=720, windings=1, closed=True):
    """Polygonal circle; the last sample repeats the first exactly when closed."""
    t = np.linspace(0.0, 2.0 * np.pi * windings, n * abs(windings) + 1)
    pts = np.stack(
        [center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)], axis=1
    )
    if closed:
        pts[-1] = pts[0]
    return PlanarPath(pts, closed=closed)


def phase_gap(a, b):
    """Circular distance |a - b| mod 2*pi, in [0, pi]."""
    d = np.abs(np.remainder(np.asarray(a) - np.asarray(b), 2.0 * np.pi))
    return np.minimum(d, 2.0 * np.pi - d)


def rot_x(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_z(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
