# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels: local-time kernel, barrier solve loop,
fine-grid hitting simulation, and the walk chain.

Same API and floating-point expressions as the pure-Python fallback
``rootbarrier._kernels_py`` so both backends produce identical paths from
identical bit streams.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport erfc, exp, fabs, sqrt, M_PI, M_SQRT2
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal

from .errors import InvariantViolation, NumericalError

cnp.import_array()

BACKEND = "compiled"


cdef inline double g_local(double t, double x) noexcept nogil:
    if t <= 0.0:
        return 0.0
    cdef double ax = fabs(x)
    if ax == 0.0:
        return sqrt(2.0 * t / M_PI)
    return sqrt(2.0 * t / M_PI) * exp(-ax * ax / (2.0 * t)) - ax * erfc(ax / sqrt(2.0 * t))


cdef bitgen_t *_get_bitgen(object bit_generator) except NULL:
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("expected a numpy BitGenerator")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


def g_kernel(t, x):
    """Expected Brownian local time, elementwise; t <= 0 maps to 0."""
    t_in = np.asarray(t, dtype=np.float64)
    x_in = np.asarray(x, dtype=np.float64)
    shape = np.broadcast_shapes(t_in.shape, x_in.shape)
    t_arr = np.array(np.broadcast_to(t_in, shape), dtype=np.float64)
    x_arr = np.array(np.broadcast_to(x_in, shape), dtype=np.float64)
    out = np.empty(shape, dtype=np.float64)
    cdef double[::1] tv = t_arr.ravel()
    cdef double[::1] xv = x_arr.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, m = tv.shape[0]
    with nogil:
        for i in range(m):
            ov[i] = g_local(tv[i], xv[i])
    return out if out.ndim else out[()]


cdef double _node_equation(double rho, Py_ssize_t i, double[::1] r, double[::1] lhs,
                           double[::1] w, double[::1] xs, Py_ssize_t n) noexcept nogil:
    cdef double tail = 0.0
    cdef double dt
    cdef Py_ssize_t j
    for j in range(i + 1, n + 1):
        dt = rho - r[j]
        if dt < 0.0:
            dt = 0.0
        tail += w[j] * (g_local(dt, xs[i] - xs[j]) + g_local(dt, xs[i] + xs[j]))
    return g_local(rho, xs[i]) - tail - lhs[i]


def solve_barrier_grid(lhs, w, xs, cap_gap, double r_max, double tol,
                       double eq_slack=1e-10, double flat_tol=1e-6, int max_iter=200):
    """Node-by-node bisection solve of the discretised barrier equation.

    Brackets node i on [r[i+1], min(r_max, r[i+1] + cap_gap[i])]; cap_gap is
    the a priori growth bound on r(x_i) - r(x_{i+1}), clamping the
    ill-conditioned head nodes of densities that vanish at the origin.
    Returns (r, total_bisection_iters, capped_node_indices).
    """
    cdef double[::1] lhs_v = np.ascontiguousarray(lhs, dtype=np.float64)
    cdef double[::1] w_v = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] xs_v = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] cap_v = np.ascontiguousarray(cap_gap, dtype=np.float64)
    cdef Py_ssize_t n = xs_v.shape[0] - 1
    r_arr = np.zeros(n + 1, dtype=np.float64)
    cdef double[::1] r = r_arr
    cdef Py_ssize_t i
    cdef long total_iter = 0
    cdef int it
    cdef double lo, hi, mid, flo, fhi
    capped = []

    for i in range(n - 1, -1, -1):
        lo = r[i + 1]
        flo = _node_equation(lo, i, r, lhs_v, w_v, xs_v, n)
        if flo >= 0.0:
            # root sits at or below r[i+1]: the monotone solution clamps here;
            # anything beyond discretisation-noise scale is reported
            if flo <= flat_tol:
                r[i] = lo
                if flo > eq_slack:
                    capped.append(i)
                continue
            raise NumericalError(
                f"barrier solve: no sign change at node {i} (residual {flo:.3e} at r[i+1])"
            )
        hi = min(r_max, lo + cap_v[i])
        fhi = _node_equation(hi, i, r, lhs_v, w_v, xs_v, n)
        if fhi <= 0.0:
            if hi < r_max:
                r[i] = hi
                capped.append(i)
                continue
            raise NumericalError(
                f"barrier solve: upper bracket r_max={r_max} too small at node {i}"
            )
        it = 0
        while hi - lo > tol and it < max_iter:
            mid = 0.5 * (lo + hi)
            if _node_equation(mid, i, r, lhs_v, w_v, xs_v, n) < 0.0:
                lo = mid
            else:
                hi = mid
            it += 1
        total_iter += it
        r[i] = 0.5 * (lo + hi)
    return r_arr, total_iter, capped[::-1]


def barrier_residual_grid(r, lhs, w, xs):
    """Per-node residual of the discretised equation for given r values."""
    cdef double[::1] r_v = np.ascontiguousarray(r, dtype=np.float64)
    cdef double[::1] lhs_v = np.ascontiguousarray(lhs, dtype=np.float64)
    cdef double[::1] w_v = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] xs_v = np.ascontiguousarray(xs, dtype=np.float64)
    cdef Py_ssize_t n = xs_v.shape[0] - 1
    res_arr = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] res = res_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n + 1):
            res[i] = _node_equation(r_v[i], i, r_v, lhs_v, w_v, xs_v, n)
    return res_arr


cdef inline double _interp_r(double ab, double[::1] rvals, double h, Py_ssize_t n) noexcept nogil:
    cdef double pos = ab / h
    if pos >= n:
        return 0.0
    cdef Py_ssize_t i0 = <Py_ssize_t> pos
    return rvals[i0] + (pos - i0) * (rvals[i0 + 1] - rvals[i0])


def simulate_hitting_path(bit_generator, rvals, double h, double dt,
                          double x0, double t_cap, int chunk=8192):
    """Fine-grid Euler walk until the first grid time t with t >= r(B_t).

    Returns (tau, b_tau, max_excursion, b_prev).
    """
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    cdef double[::1] r_v = np.ascontiguousarray(rvals, dtype=np.float64)
    cdef Py_ssize_t n = r_v.shape[0] - 1
    cdef double sqrt_dt = sqrt(dt)
    cdef double b = x0
    cdef double b_prev = x0
    cdef double max_exc = fabs(x0)
    cdef double t, ab, rb
    cdef long j = 0
    cdef long cap_steps = <long> (t_cap / dt) + 2
    while True:
        j += 1
        b_prev = b
        b += sqrt_dt * random_standard_normal(rng)
        ab = fabs(b)
        if ab > max_exc:
            max_exc = ab
        t = j * dt
        rb = _interp_r(ab, r_v, h, n)
        if t >= rb:
            return t, b, max_exc, b_prev
        if j > cap_steps:
            raise NumericalError(
                f"hitting simulation exceeded time cap {t_cap:.3g} without stopping; "
                "the barrier table looks broken"
            )


def walk_chain_affine(bit_generator, rvals, double h,
                      double lo_a, double lo_b, double up_a, double up_b,
                      double big_t, double l_lo, double l_up, int rho_kind,
                      double t0, double x0, double delta, long max_steps):
    """Markov chain of scaled barrier-exit steps between affine boundaries.

    Same stopping rule, safe-radius formulas, and runtime checks as the
    pure-Python backend.  Returns (tau, m, steps).
    """
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    cdef double[::1] r_v = np.ascontiguousarray(rvals, dtype=np.float64)
    cdef Py_ssize_t n = r_v.shape[0] - 1
    cdef double r0 = r_v[0]
    cdef double t = t0
    cdef double x = x0
    cdef long steps = 0
    cdef double lo, up, rem, sq, d, rho, u, au, ru, dtau, db

    while True:
        lo = lo_a + lo_b * t
        up = up_a + up_b * t
        rem = big_t - t
        sq = sqrt(rem) if rem > 0.0 else 0.0
        d = min(x - lo, min(up - x, sq))
        if d <= delta:
            return t, x, steps
        if rho_kind == 0:
            rho = min((up - x) / (1.0 + l_up), min((x - lo) / (1.0 + l_lo), min(sq, 1.0)))
        else:
            rho = min((up - x) / M_SQRT2, min(rem, x - lo))
        u = 2.0 * rng.next_double(rng.state) - 1.0
        au = fabs(u)
        ru = _interp_r(au, r_v, h, n)
        dtau = rho * rho * ru
        db = rho * u
        if dtau > rho * rho * r0 * (1.0 + 1e-12) or fabs(db) > rho * (1.0 + 1e-12):
            raise InvariantViolation(
                f"walk step bound violated at step {steps}: dtau={dtau}, db={db}, rho={rho}"
            )
        t += dtau
        x += db
        steps += 1
        lo = lo_a + lo_b * t
        up = up_a + up_b * t
        if x < lo - 1e-12 or x > up + 1e-12 or t > big_t + 1e-12:
            raise InvariantViolation(
                f"walk left the domain at step {steps}: (t, x) = ({t}, {x})"
            )
        if steps > max_steps:
            raise NumericalError(
                f"walk exceeded {max_steps} steps without entering the stopping shell; "
                "check the safe-radius configuration"
            )
