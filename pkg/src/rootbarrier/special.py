"""Scalar kernels used everywhere else: heat kernel and expected local time.

Both functions accept scalars or arrays and validate their time domain;
the raw unvalidated kernel lives in the backend and clamps t <= 0 to the
zero-time limit instead (callers there clamp round-off negatives).
"""

import numpy as np

from ._backend import kernels


def heat_kernel(t, x):
    """Gaussian transition density p(t, x) = exp(-x^2/(2t)) / sqrt(2 pi t).

    Requires t > 0; symmetric in x.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0.0):
        raise ValueError("heat_kernel requires t > 0")
    x_arr = np.asarray(x, dtype=float)
    val = np.exp(-x_arr * x_arr / (2.0 * t_arr)) / np.sqrt(2.0 * np.pi * t_arr)
    if np.isscalar(t) and np.isscalar(x):
        return float(val)
    return val


def expected_local_time(t, x):
    """Expected Brownian local time accumulated at level x by time t.

    g(t, x) = sqrt(2t/pi) exp(-x^2/(2t)) - |x| erfc(|x|/sqrt(2t)), with
    g(0, x) = 0 as the continuous limit.  Equals the time integral of
    ``heat_kernel(s, x)`` over [0, t]; nondecreasing in t, even in x.
    Requires t >= 0.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0):
        raise ValueError("expected_local_time requires t >= 0")
    val = kernels.g_kernel(t_arr, np.asarray(x, dtype=float))
    if np.isscalar(t) and np.isscalar(x):
        return float(val)
    return val
