"""Independent validation that a solved barrier actually embeds its target law.

Three unrelated routes, none of which reuses the solver's discrete system:

* fine-grid path simulation -- Gaussian Euler steps stopped at the first grid
  time t with t >= r(B_t), giving hitting positions for a KS test against the
  target, the optional-stopping check E[tau] = E[B_tau^2], and the almost-sure
  identity tau = r(B_tau) up to grid and interpolation slack;
* hard-bound monitoring -- the running maximum |B| along each simulated path
  (bounded by twice the scale for the uniform-target barrier);
* obstacle checks -- the heat potential u^r(t, x) built from the barrier by
  composite Simpson quadrature of the heat-kernel representation must
  dominate u_mu everywhere and agree with it along the barrier curve.

The grid stopping rule overshoots; no bridge correction is applied, the bias
is quantified by refinement instead (verification wants a simple independent
oracle, not efficiency).
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import kstest

from ._backend import kernels
from .barrier import evaluate_barrier
from .embedding import RngStream
from .errors import ConfigError, NumericalError
from .measures import dirac_potential

# one-sample KS critical coefficient at the 1% level: stat <= KS_CRIT_1PCT/sqrt(n)
KS_CRIT_1PCT = 1.63


class HittingSample(NamedTuple):
    tau: float
    b_tau: float
    max_excursion: float
    b_prev: float


def simulate_hitting(table, dt_grid, stream, x0=0.0, t_cap=None):
    """Simulate one Brownian path on a dt_grid lattice until it enters the
    barrier region {t >= r(x)}; returns the crossing, the running max of |B|,
    and the position one step before the crossing."""
    if not (dt_grid > 0):
        raise ConfigError(f"dt_grid must be positive, got {dt_grid}")
    if t_cap is None:
        t_cap = 10.0 * float(table.r_values[0])
    bg = stream.bit_generator() if isinstance(stream, RngStream) else stream
    tau, b_tau, max_exc, b_prev = kernels.simulate_hitting_path(
        bg, table.r_values, table.h, dt_grid, x0, t_cap
    )
    return HittingSample(tau, b_tau, max_exc, b_prev)


def _hitting_worker(args):
    r_values, h, dt, x0, t_cap, seed, stream_id, path, indices = args
    out = np.empty((len(indices), 4))
    base = RngStream(seed, stream_id, path)
    for row, i in enumerate(indices):
        bg = base.substream(i).bit_generator()
        out[row] = kernels.simulate_hitting_path(bg, r_values, h, dt, x0, t_cap)
    return out


def simulate_hitting_batch(table, dt_grid, stream, n_paths, workers=1, x0=0.0):
    """n_paths independent hitting simulations, one substream per path.

    Results depend only on (stream, path index), never on the worker split,
    so any worker count reproduces the workers=1 reference bit for bit.
    Returns arrays (taus, b_taus, max_excursions, b_prevs).
    """
    if n_paths < 1:
        raise ConfigError(f"n_paths must be >= 1, got {n_paths}")
    t_cap = 10.0 * float(table.r_values[0])
    all_idx = np.arange(n_paths)
    if workers <= 1:
        out = _hitting_worker(
            (table.r_values, table.h, dt_grid, x0, t_cap,
             stream.seed, stream.stream_id, stream.path, all_idx)
        )
    else:
        blocks = np.array_split(all_idx, workers)
        jobs = [
            (table.r_values, table.h, dt_grid, x0, t_cap,
             stream.seed, stream.stream_id, stream.path, blk)
            for blk in blocks if len(blk)
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_hitting_worker, jobs))
        out = np.concatenate(parts, axis=0)
    return out[:, 0], out[:, 1], out[:, 2], out[:, 3]


@dataclass(frozen=True)
class EmbeddingTestReport:
    """Aggregates of the path-simulation goodness-of-fit run."""

    n_paths: int
    dt_grid: float
    ks_statistic: float
    ks_threshold: float
    mean_tau: float
    mean_tau_se: float
    mean_btau_sq: float
    max_excursion: float
    stop_identity_gap: float
    stop_identity_slack: float

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _uniform_cdf(k):
    def cdf(x):
        return np.clip((np.asarray(x) + k) / (2.0 * k), 0.0, 1.0)

    return cdf


def ks_embedding_test(table, n_paths, dt_grid, stream, workers=1):
    """KS test of simulated hitting positions against the uniform law,
    plus the stopping-identity and excursion diagnostics.

    ``stop_identity_gap`` is the worst tau - r(B_tau) over all paths;
    ``stop_identity_slack`` is the worst excess of that gap over its per-path
    bound dt + (r(B_prev) - r(B_tau))_+, and should never exceed ~0.
    """
    if n_paths < 1000:
        raise ConfigError(f"n_paths must be >= 1000 for the KS test, got {n_paths}")
    taus, b_taus, max_excs, b_prevs = simulate_hitting_batch(
        table, dt_grid, stream, n_paths, workers=workers
    )
    ks_stat = float(kstest(b_taus, _uniform_cdf(table.k)).statistic)
    gaps = taus - evaluate_barrier(table, b_taus)
    bounds = dt_grid + np.maximum(
        evaluate_barrier(table, b_prevs) - evaluate_barrier(table, b_taus), 0.0
    )
    return EmbeddingTestReport(
        n_paths=int(n_paths),
        dt_grid=float(dt_grid),
        ks_statistic=ks_stat,
        ks_threshold=KS_CRIT_1PCT / math.sqrt(n_paths),
        mean_tau=float(np.mean(taus)),
        mean_tau_se=float(np.std(taus, ddof=1) / math.sqrt(n_paths)),
        mean_btau_sq=float(np.mean(b_taus**2)),
        max_excursion=float(np.max(max_excs)),
        stop_identity_gap=float(np.max(gaps)),
        stop_identity_slack=float(np.max(gaps - bounds)),
    )


def _simpson_nodes(a, b, m):
    # m must be even; returns nodes and weights of composite Simpson on [a, b]
    xs = np.linspace(a, b, m + 1)
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (b - a) / (3.0 * m)
    return xs, w


def _kernel_time_integral(t_rem, d, m):
    """integral_0^T p(s, d) ds for each (T, d) pair, by Simpson after s = xi^2.

    Equals sqrt(2 T / pi) * integral_0^1 exp(-d^2 / (2 z^2 T)) dz, whose
    integrand is bounded, monotone, and flat at z = 0, so fixed-count Simpson
    in z behaves uniformly in d.  t_rem and d are broadcastable arrays.
    """
    t_rem = np.maximum(np.asarray(t_rem, dtype=float), 0.0)[..., None]
    d = np.asarray(d, dtype=float)[..., None]
    zs, w = _simpson_nodes(0.0, 1.0, m)
    denom = 2.0 * zs**2 * t_rem
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.exp(-(d * d) / denom)
    vals = np.where(denom > 0.0, vals, np.where(d == 0.0, 1.0, 0.0))
    out = np.sqrt(2.0 * t_rem[..., 0] / np.pi) * (vals @ w)
    return np.where(t_rem[..., 0] > 0.0, out, 0.0)


def _barrier_level_crossing(table, t):
    """Smallest y >= 0 with r(y) <= t (the barrier is nonincreasing)."""
    if t >= table.r_values[0]:
        return 0.0
    return float(np.interp(t, table.r_values[::-1], table.grid[::-1]))


def heat_potential(table, mu, t, x, n_space=160, n_time=96):
    """u^r(t, x) from the heat-kernel representation, by composite Simpson.

    u^r(t, x) = -int |y| p(t, x - y) dy
                + int_{s>=r(y), s<=t} p(t - s, x - y) mu(dy) ds.

    The y-integrals split panels at the integrand kinks (y = 0 for the first
    term; the barrier-level crossing and y = |x| for the second), and the
    inner time integral uses the square-root substitution above.  t = 0
    returns -|x| exactly.
    """
    if t < 0:
        raise ConfigError(f"t must be >= 0, got {t}")
    if t == 0.0:
        return float(dirac_potential(x))
    if n_space % 2 or n_time % 2:
        raise ConfigError("n_space and n_time must be even for Simpson quadrature")

    # free term: -E|N(x, t)| over a 10-sigma window, panels split at y = 0
    width = 10.0 * math.sqrt(t)
    edges = sorted({x - width, x + width} | ({0.0} if abs(x) < width else set()))
    term1 = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        ys, w = _simpson_nodes(a, b, n_space)
        term1 -= float(
            np.dot(w, np.abs(ys) * np.exp(-((x - ys) ** 2) / (2.0 * t)))
        ) / math.sqrt(2.0 * math.pi * t)

    # occupation term over {y: r(y) <= t}, symmetric halves folded onto [y*, k]
    y_star = _barrier_level_crossing(table, t)
    k = table.k
    term2 = 0.0
    if y_star < k:
        edges = sorted({y_star, k} | ({abs(x)} if y_star < abs(x) < k else set()))
        for a, b in zip(edges[:-1], edges[1:]):
            ys, w = _simpson_nodes(a, b, n_space)
            t_rem = t - evaluate_barrier(table, ys)
            gm = _kernel_time_integral(t_rem, x - ys, n_time)
            gp = _kernel_time_integral(t_rem, x + ys, n_time)
            term2 += float(np.dot(w, mu.density(ys) * (gm + gp)))

    val = term1 + term2
    if not math.isfinite(val):
        raise NumericalError(f"heat-potential quadrature diverged at (t, x) = ({t}, {x})")
    return val


@dataclass(frozen=True)
class ObstacleReport:
    """Worst obstacle violation and barrier-curve mismatch of u^r vs u_mu."""

    max_obstacle_gap: float
    max_curve_gap: float
    t_nodes: int
    x_nodes: int
    n_space: int
    n_time: int


def obstacle_check(table, mu, t_grid, x_grid, curve_x=None, n_space=160, n_time=96):
    """Check u^r >= u_mu on t_grid x x_grid and u^r(r(x), x) = u_mu(x) on curve_x.

    Returns the maxima of (u_mu - u^r)_+ and |u^r(r(x), x) - u_mu(x)|; both
    should sit within the quadrature and table-resolution budget.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    x_grid = np.asarray(x_grid, dtype=float)
    worst = 0.0
    for t in t_grid:
        for x in x_grid:
            gap = float(mu.potential(x)) - heat_potential(
                table, mu, float(t), float(x), n_space, n_time
            )
            worst = max(worst, gap)
    if curve_x is None:
        curve_x = x_grid
    curve_worst = 0.0
    for x in np.asarray(curve_x, dtype=float):
        rx = float(evaluate_barrier(table, x))
        gap = abs(
            heat_potential(table, mu, rx, float(x), n_space, n_time)
            - float(mu.potential(x))
        )
        curve_worst = max(curve_worst, gap)
    return ObstacleReport(
        max_obstacle_gap=worst,
        max_curve_gap=curve_worst,
        t_nodes=len(t_grid),
        x_nodes=len(x_grid),
        n_space=n_space,
        n_time=n_time,
    )
