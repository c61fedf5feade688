"""Small shared numeric helpers."""

import numpy as np


def wrap_angle(phi):
    """Map angles elementwise to the branch (-pi, pi].

    The branch point maps to +pi, never -pi, so ``wrap_angle(pi) == pi``
    and ``wrap_angle(-pi) == pi``.
    """
    wrapped = np.pi - np.mod(np.pi - np.asarray(phi, dtype=float), 2.0 * np.pi)
    if np.ndim(phi) == 0:
        return float(wrapped)
    return wrapped


def circular_difference(a, b):
    """Signed distance from b to a on the circle, in (-pi, pi]."""
    return wrap_angle(np.asarray(a) - np.asarray(b))
