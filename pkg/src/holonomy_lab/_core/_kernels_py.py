"""Pure-numpy twins of the compiled kernels in ``_kernels.pyx``."""

import numpy as np

TWO_PI = 2.0 * np.pi


def eval_trig_series(a, b, pts):
    """Evaluate sum_k a[k]*cos(2*pi*k*t) + b[k]*sin(2*pi*k*t) at pts."""
    k = np.arange(len(a))
    ang = TWO_PI * np.multiply.outer(np.asarray(pts, dtype=float), k)
    return np.cos(ang) @ np.asarray(a) + np.sin(ang) @ np.asarray(b)


def eval_trig_series_pair(a, b, da, db, pts):
    """Evaluate a series and its derivative series at pts."""
    k = np.arange(len(a))
    ang = TWO_PI * np.multiply.outer(np.asarray(pts, dtype=float), k)
    c = np.cos(ang)
    s = np.sin(ang)
    return c @ np.asarray(a) + s @ np.asarray(b), c @ np.asarray(da) + s @ np.asarray(db)


IMPLEMENTATION = "python"
