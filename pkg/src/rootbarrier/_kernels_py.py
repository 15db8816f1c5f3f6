"""Pure NumPy implementation of the hot numerical kernels.

Mirrors the API of the compiled extension ``rootbarrier._kernels`` and is
selected by :mod:`rootbarrier._backend` when the extension is unavailable
(or when ``ROOTBARRIER_FORCE_PYTHON=1``).  Interpolation and stepping use
the same floating-point expressions as the compiled code so that both
backends produce identical sample paths from identical bit streams.
"""

import math

import numpy as np
from scipy.special import erfc

from .errors import InvariantViolation, NumericalError

BACKEND = "python"

_SQRT2 = math.sqrt(2.0)


def g_kernel(t, x):
    """Expected Brownian local time at level x by time t, elementwise.

    sqrt(2t/pi) exp(-x^2/(2t)) - |x| erfc(|x|/sqrt(2t)); zero for t <= 0.
    No domain validation here; negative t is clamped to the t=0 limit.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    pos = t > 0.0
    ts = np.where(pos, t, 1.0)
    ax = np.abs(x)
    val = np.sqrt(2.0 * ts / np.pi) * np.exp(-ax * ax / (2.0 * ts)) - ax * erfc(
        ax / np.sqrt(2.0 * ts)
    )
    return np.where(pos, val, 0.0)


def _g_scalar(t, x):
    if t <= 0.0:
        return 0.0
    ax = abs(x)
    if ax == 0.0:
        return math.sqrt(2.0 * t / math.pi)
    return math.sqrt(2.0 * t / math.pi) * math.exp(-ax * ax / (2.0 * t)) - ax * math.erfc(
        ax / math.sqrt(2.0 * t)
    )


def solve_barrier_grid(lhs, w, xs, cap_gap, r_max, tol, eq_slack=1e-10,
                       flat_tol=1e-6, max_iter=200):
    """Solve the discretised barrier equation node by node, inward from x = k.

    ``lhs[i]`` holds u_{delta_0}(x_i) - u_mu(x_i), ``w[j]`` the quadrature
    weight f(x_j) h (halved at j = n).  Node i is found by bisection of the
    scalar equation on [r[i+1], min(r_max, r[i+1] + cap_gap[i])]; cap_gap is
    the a priori growth bound on r(x_i) - r(x_{i+1}), which reins in the
    ill-conditioned head nodes of densities that vanish at the origin.  A
    node whose root would exceed the cap is clamped to it and reported.
    Returns (r, total_bisection_iters, capped_node_indices).
    """
    lhs = np.asarray(lhs, dtype=float)
    w = np.asarray(w, dtype=float)
    xs = np.asarray(xs, dtype=float)
    cap_gap = np.asarray(cap_gap, dtype=float)
    n = xs.shape[0] - 1
    r = np.zeros(n + 1)
    total_iter = 0
    capped = []

    for i in range(n - 1, -1, -1):
        xi = xs[i]
        rj = r[i + 1 :]
        wj = w[i + 1 :]
        xm = xi - xs[i + 1 :]
        xp = xi + xs[i + 1 :]
        target = lhs[i]

        def f_node(rho):
            dt = np.maximum(rho - rj, 0.0)
            tail = np.sum(wj * (g_kernel(dt, xm) + g_kernel(dt, xp)))
            return _g_scalar(rho, xi) - tail - target

        lo = r[i + 1]
        flo = f_node(lo)
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
        hi = min(r_max, lo + cap_gap[i])
        fhi = f_node(hi)
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
            if f_node(mid) < 0.0:
                lo = mid
            else:
                hi = mid
            it += 1
        total_iter += it
        r[i] = 0.5 * (lo + hi)
    return r, total_iter, capped[::-1]


def barrier_residual_grid(r, lhs, w, xs):
    """Re-evaluate the discretised equation at every node for given r values."""
    r = np.asarray(r, dtype=float)
    lhs = np.asarray(lhs, dtype=float)
    w = np.asarray(w, dtype=float)
    xs = np.asarray(xs, dtype=float)
    n = xs.shape[0] - 1
    res = np.empty(n + 1)
    for i in range(n + 1):
        dt = np.maximum(r[i] - r[i + 1 :], 0.0)
        tail = np.sum(w[i + 1 :] * (g_kernel(dt, xs[i] - xs[i + 1 :]) + g_kernel(dt, xs[i] + xs[i + 1 :])))
        res[i] = _g_scalar(r[i], xs[i]) - tail - lhs[i]
    return res


def _interp_r_vec(ab, rvals, h, n):
    # same expression as the compiled scalar path: pos = |b|/h, truncate, lerp
    pos = ab / h
    idx = np.minimum(pos, float(n - 1)).astype(np.int64)
    frac = pos - idx
    val = rvals[idx] + frac * (rvals[idx + 1] - rvals[idx])
    return np.where(pos >= n, 0.0, val)


def simulate_hitting_path(bit_generator, rvals, h, dt, x0, t_cap, chunk=8192):
    """Fine-grid Euler walk until the first grid time t with t >= r(B_t).

    Returns (tau, b_tau, max_excursion, b_prev) where b_prev is the position
    one grid step before the crossing.  Consumes standard normals from
    ``bit_generator`` in the same order as the compiled backend.
    """
    gen = np.random.Generator(bit_generator)
    rvals = np.asarray(rvals, dtype=float)
    n = rvals.shape[0] - 1
    sqrt_dt = math.sqrt(dt)
    b = float(x0)
    max_exc = abs(b)
    steps = 0
    while True:
        z = gen.standard_normal(chunk)
        arr = np.empty(chunk + 1)
        arr[0] = b
        arr[1:] = sqrt_dt * z
        bpath = np.cumsum(arr)[1:]
        ab = np.abs(bpath)
        rb = _interp_r_vec(ab, rvals, h, n)
        tgrid = (steps + 1 + np.arange(chunk, dtype=np.int64)) * dt
        stop = tgrid >= rb
        if stop.any():
            kk = int(np.argmax(stop))
            tau = (steps + 1 + kk) * dt
            b_tau = float(bpath[kk])
            b_prev = float(bpath[kk - 1]) if kk > 0 else b
            max_exc = max(max_exc, float(np.max(ab[: kk + 1])))
            return tau, b_tau, max_exc, b_prev
        steps += chunk
        b = float(bpath[-1])
        max_exc = max(max_exc, float(np.max(ab)))
        if steps * dt > t_cap:
            raise NumericalError(
                f"hitting simulation exceeded time cap {t_cap:.3g} without stopping; "
                "the barrier table looks broken"
            )


def walk_chain_affine(
    bit_generator,
    rvals,
    h,
    lo_a,
    lo_b,
    up_a,
    up_b,
    big_t,
    l_lo,
    l_up,
    rho_kind,
    t0,
    x0,
    delta,
    max_steps,
):
    """Markov chain of scaled barrier-exit steps between affine boundaries.

    rho_kind 0 selects the default safe radius
    min((upper-x)/(1+L_up), (x-lower)/(1+L_lo), sqrt(T-t), 1); rho_kind 1 the
    moving-boundary example override min((upper-x)/sqrt(2), T-t, x-lower).
    Stops once the parabolic distance drops to ``delta``; every visited point
    is containment-checked.  Returns (tau, m, steps).
    """
    gen = np.random.Generator(bit_generator)
    rvals = np.asarray(rvals, dtype=float)
    n = rvals.shape[0] - 1
    r0 = rvals[0]
    t = float(t0)
    x = float(x0)
    steps = 0
    while True:
        lo = lo_a + lo_b * t
        up = up_a + up_b * t
        rem = big_t - t
        sq = math.sqrt(rem) if rem > 0.0 else 0.0
        d = min(x - lo, up - x, sq)
        if d <= delta:
            return t, x, steps
        if rho_kind == 0:
            rho = min((up - x) / (1.0 + l_up), (x - lo) / (1.0 + l_lo), sq, 1.0)
        else:
            rho = min((up - x) / _SQRT2, rem, x - lo)
        u = 2.0 * gen.random() - 1.0
        au = abs(u)
        pos = au / h
        if pos >= n:
            ru = 0.0
        else:
            i0 = int(pos)
            ru = rvals[i0] + (pos - i0) * (rvals[i0 + 1] - rvals[i0])
        dtau = rho * rho * ru
        db = rho * u
        if dtau > rho * rho * r0 * (1.0 + 1e-12) or abs(db) > rho * (1.0 + 1e-12):
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
