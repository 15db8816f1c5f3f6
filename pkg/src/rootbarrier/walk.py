"""Random walk over scaled barrier regions: a parabolic cousin of the classic
walk-on-spheres Monte Carlo, for  du/dt + (1/2) d2u/dx2 = 0  on a space-time
domain between moving boundaries with boundary data g.

From an interior point (t, x), one step jumps to

    (t + rho^2(t, x) r(U), x + rho(t, x) U),      U ~ U[-1, 1],

which is exactly the exit of a Brownian path from the rho-scaled barrier
region, so the chain never leaves the closed domain as long as rho is a safe
radius.  The chain stops once the parabolic distance to the boundary drops to
delta, the terminal point is projected to the nearest boundary piece, and the
Monte Carlo average of g there estimates u(t0, x0) with O(delta) bias; the
expected number of steps grows only like log(1/delta).

The default safe radius shrinks each side distance by 1/(1 + L) for a
boundary with Lipschitz constant L and caps at min(sqrt(T - t), 1), which
keeps every chain point inside (checked at runtime regardless).  A custom
rho can be supplied per domain; the built-in "example51" override
min((upper - x)/sqrt(2), T - t, x - lower) reproduces the reference
moving-boundary example but decays faster than the parabolic distance near
the terminal time, so step counts lose the log(1/delta) law with it (see
the sweep tests); "default" is the recommended choice.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from ._backend import kernels
from .embedding import RngStream
from .errors import ConfigError, InvariantViolation, NumericalError

_SQRT2 = math.sqrt(2.0)
MAX_WALK_STEPS = 10**6


@dataclass(frozen=True)
class BoundaryCurve:
    """One moving boundary: affine a + b*t, or piecewise-linear samples.

    ``lipschitz`` is |b| for affine curves and the largest absolute slope
    between knots otherwise.
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    t_knots: tuple = ()
    x_knots: tuple = ()

    @classmethod
    def affine(cls, a, b=0.0):
        return cls(kind="affine", a=float(a), b=float(b))

    @classmethod
    def from_samples(cls, t_knots, x_knots):
        t_knots = tuple(float(t) for t in t_knots)
        x_knots = tuple(float(x) for x in x_knots)
        if len(t_knots) != len(x_knots) or len(t_knots) < 2:
            raise ConfigError("sampled boundary needs matching t/x knots (>= 2)")
        if any(t2 <= t1 for t1, t2 in zip(t_knots[:-1], t_knots[1:])):
            raise ConfigError("boundary knots must be strictly increasing in t")
        return cls(kind="samples", t_knots=t_knots, x_knots=x_knots)

    @property
    def lipschitz(self):
        if self.kind == "affine":
            return abs(self.b)
        slopes = [
            abs((x2 - x1) / (t2 - t1))
            for (t1, x1), (t2, x2) in zip(
                zip(self.t_knots, self.x_knots), zip(self.t_knots[1:], self.x_knots[1:])
            )
        ]
        return max(slopes)

    def __call__(self, t):
        if self.kind == "affine":
            return self.a + self.b * t
        return float(np.interp(t, self.t_knots, self.x_knots))


@dataclass(frozen=True)
class ParabolicDomain:
    """Space-time domain between lower(t) < upper(t) for t in (0, T), with
    boundary data on the two side curves and the terminal slice t = T."""

    T: float
    lower: BoundaryCurve
    upper: BoundaryCurve
    boundary_data: Callable[[float, float], float]
    rho: Union[str, Callable[[float, float], float]] = "default"

    def __post_init__(self):
        if not (self.T > 0):
            raise ConfigError(f"time horizon T must be positive, got {self.T}")
        for t in np.linspace(0.0, self.T, 65):
            if not self.lower(t) < self.upper(t):
                raise ConfigError(
                    f"boundaries must satisfy lower < upper on (0, T); "
                    f"violated at t = {t}"
                )
        if isinstance(self.rho, str) and self.rho not in ("default", "example51"):
            raise ConfigError(f"unknown rho kind {self.rho!r}")

    @property
    def is_affine(self):
        return self.lower.kind == "affine" and self.upper.kind == "affine"


def parabolic_distance(dom, t, x):
    """min(x - lower(t), upper(t) - x, sqrt(T - t)); 0 on the parabolic
    boundary, positive inside.  Points outside the closure are an error."""
    rem = dom.T - t
    if t < -1e-12 or rem < -1e-12:
        raise ValueError(f"(t, x) = ({t}, {x}) lies outside the time range [0, T]")
    d = min(x - dom.lower(t), dom.upper(t) - x, math.sqrt(max(rem, 0.0)))
    if d < -1e-12:
        raise ValueError(f"(t, x) = ({t}, {x}) lies outside the domain closure")
    return max(d, 0.0)


def default_rho(dom, t, x):
    """Safe radius min((upper-x)/(1+L_up), (x-lower)/(1+L_lo), sqrt(T-t), 1).

    Comparable to the parabolic distance from below and above, and small
    enough that one scaled step cannot leave the closed domain.  Positive
    only strictly inside; a nonpositive value means the caller skipped the
    membership check.
    """
    rho = min(
        (dom.upper(t) - x) / (1.0 + dom.upper.lipschitz),
        (x - dom.lower(t)) / (1.0 + dom.lower.lipschitz),
        math.sqrt(max(dom.T - t, 0.0)),
        1.0,
    )
    if rho <= 0.0:
        raise ValueError(f"safe radius requires a strictly interior point, got ({t}, {x})")
    return rho


def example51_rho(dom, t, x):
    """Verbatim override from the reference moving-boundary example:
    min((upper - x)/sqrt(2), T - t, x - lower)."""
    return min((dom.upper(t) - x) / _SQRT2, dom.T - t, x - dom.lower(t))


def rho_value(dom, t, x):
    if callable(dom.rho):
        return dom.rho(t, x)
    if dom.rho == "example51":
        return example51_rho(dom, t, x)
    return default_rho(dom, t, x)


class ChainResult(NamedTuple):
    tau: float
    m: float
    steps: int


def _r_lookup(rvals, h, n, au):
    # same lerp expression as the backends, for bitwise-matching chains
    pos = au / h
    if pos >= n:
        return 0.0
    i0 = int(pos)
    return rvals[i0] + (pos - i0) * (rvals[i0 + 1] - rvals[i0])


def _walk_chain_generic(dom, table, t0, x0, delta, rng, max_steps, trace):
    rvals = table.r_values
    h = table.h
    n = table.n
    r0 = rvals[0]
    t, x = float(t0), float(x0)
    points = [(t, x)] if trace is not None else None
    steps = 0
    while True:
        if parabolic_distance(dom, t, x) <= delta:
            if points is not None:
                trace.extend(points)
            return t, x, steps
        rho = rho_value(dom, t, x)
        u = 2.0 * rng.random() - 1.0
        ru = _r_lookup(rvals, h, n, abs(u))
        dtau = rho * rho * ru
        db = rho * u
        if dtau > rho * rho * r0 * (1.0 + 1e-12) or abs(db) > rho * (1.0 + 1e-12):
            raise InvariantViolation(
                f"walk step bound violated at step {steps}: dtau={dtau}, db={db}, rho={rho}"
            )
        t += dtau
        x += db
        steps += 1
        if points is not None:
            points.append((t, x))
        if x < dom.lower(t) - 1e-12 or x > dom.upper(t) + 1e-12 or t > dom.T + 1e-12:
            raise InvariantViolation(
                f"walk left the domain at step {steps}: (t, x) = ({t}, {x})"
            )
        if steps > max_steps:
            raise NumericalError(
                f"walk exceeded {max_steps} steps without entering the stopping shell; "
                "check the safe-radius configuration"
            )


def walk_chain(dom, table, t0, x0, delta, stream, max_steps=MAX_WALK_STEPS, trace=None):
    """Run one chain from (t0, x0) until the parabolic distance is <= delta.

    A start already within delta of the boundary returns immediately with 0
    steps.  Every visited point is containment-checked at runtime.  Pass a
    list as ``trace`` to record the visited points (pure-Python path only).
    """
    if not (delta > 0):
        raise ConfigError(f"delta must be positive, got {delta}")
    if not (0.0 <= t0 <= dom.T) or not (dom.lower(t0) <= x0 <= dom.upper(t0)):
        raise ConfigError(f"start (t0, x0) = ({t0}, {x0}) is outside the domain closure")
    fast = (
        trace is None
        and dom.is_affine
        and isinstance(dom.rho, str)
    )
    if fast:
        bg = stream.bit_generator() if isinstance(stream, RngStream) else stream
        tau, m, steps = kernels.walk_chain_affine(
            bg,
            table.r_values,
            table.h,
            dom.lower.a,
            dom.lower.b,
            dom.upper.a,
            dom.upper.b,
            dom.T,
            dom.lower.lipschitz,
            dom.upper.lipschitz,
            0 if dom.rho == "default" else 1,
            t0,
            x0,
            delta,
            max_steps,
        )
    else:
        rng = stream.generator() if isinstance(stream, RngStream) else np.random.Generator(stream)
        tau, m, steps = _walk_chain_generic(dom, table, t0, x0, delta, rng, max_steps, trace)
    return ChainResult(tau, m, steps)


def project_to_boundary(dom, tau, m):
    """Snap a stopped chain point to the nearest parabolic-boundary piece.

    Terminal time wins ties against the side curves; the lower curve wins a
    tie between the two sides.
    """
    d_lower = m - dom.lower(tau)
    d_upper = dom.upper(tau) - m
    d_term = math.sqrt(max(dom.T - tau, 0.0))
    if d_term <= d_lower and d_term <= d_upper:
        return dom.T, m
    if d_lower <= d_upper:
        return tau, dom.lower(tau)
    return tau, dom.upper(tau)


@dataclass(frozen=True)
class WalkStats:
    """Monte Carlo aggregates of one solve_pde run."""

    estimate: float
    std_error: float
    mean_steps: float
    samples: int
    delta: float

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _pde_worker(args):
    dom, table, t0, x0, delta, seed, stream_id, path, indices = args
    base = RngStream(seed, stream_id, path)
    values = np.empty(len(indices))
    steps = np.empty(len(indices))
    for row, i in enumerate(indices):
        res = walk_chain(dom, table, t0, x0, delta, base.substream(i))
        tb, xb = project_to_boundary(dom, res.tau, res.m)
        values[row] = dom.boundary_data(tb, xb)
        steps[row] = res.steps
    return values, steps


def solve_pde(dom, table, t0, x0, delta, samples, stream, workers=1):
    """Estimate u(t0, x0) as the average of boundary data over ``samples``
    independent chains.  Sample i always uses substream i of ``stream``, so
    the result is identical for every worker count; per-sample values are
    reduced in index order."""
    if samples < 1:
        raise ConfigError(f"samples must be >= 1, got {samples}")
    all_idx = np.arange(samples)
    if workers <= 1:
        values, steps = _pde_worker(
            (dom, table, t0, x0, delta, stream.seed, stream.stream_id, stream.path, all_idx)
        )
    else:
        blocks = [b for b in np.array_split(all_idx, workers) if len(b)]
        jobs = [
            (dom, table, t0, x0, delta, stream.seed, stream.stream_id, stream.path, blk)
            for blk in blocks
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_pde_worker, jobs))
        values = np.concatenate([p[0] for p in parts])
        steps = np.concatenate([p[1] for p in parts])
    est = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return WalkStats(
        estimate=est,
        std_error=se,
        mean_steps=float(np.mean(steps)),
        samples=int(samples),
        delta=float(delta),
    )


def sweep_delta(dom, table, t0, x0, deltas, samples, stream, workers=1):
    """solve_pde across a list of stopping thicknesses, one substream each."""
    return [
        solve_pde(dom, table, t0, x0, float(d), samples, stream.substream(i), workers=workers)
        for i, d in enumerate(deltas)
    ]


def example51_solution(t, x):
    """Exact solution 4 x^4 + 24 (1 - t) x^2 + 12 (1 - t)^2 of the backward
    heat equation, used as boundary data for the reference example."""
    return 4.0 * x**4 + 24.0 * (1.0 - t) * x**2 + 12.0 * (1.0 - t) ** 2


def example51_domain(rho="default"):
    """Reference moving-boundary domain: T = 1, lower = 0, upper = 2 - t,
    boundary data from :func:`example51_solution`; u(0, 1) = 40."""
    return ParabolicDomain(
        T=1.0,
        lower=BoundaryCurve.affine(0.0),
        upper=BoundaryCurve.affine(2.0, -1.0),
        boundary_data=example51_solution,
        rho=rho,
    )


class _ConstantData:
    def __init__(self, value):
        self.value = float(value)

    def __call__(self, t, x):
        return self.value


class _TableData:
    """Boundary data tabulated per piece: the two side curves (in t) and the
    terminal slice (in x); a queried point is matched to its nearest piece."""

    def __init__(self, dom_T, lower, upper, pieces):
        self.T = dom_T
        self.lower = lower
        self.upper = upper
        self.pieces = pieces  # {"lower": (t, g), "upper": (t, g), "terminal": (x, g)}

    def __call__(self, t, x):
        d_term = self.T - t
        d_lo = abs(x - self.lower(t))
        d_up = abs(self.upper(t) - x)
        best = min(d_term, d_lo, d_up)
        if best == d_term:
            knots, vals = self.pieces["terminal"]
        elif best == d_lo:
            knots, vals = self.pieces["lower"]
            x = t
        else:
            knots, vals = self.pieces["upper"]
            x = t
        return float(np.interp(x, knots, vals))


def _curve_from_config(cfg, name):
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError(f"{name} boundary config must be an object with 'kind'")
    if cfg["kind"] == "affine":
        try:
            return BoundaryCurve.affine(cfg["a"], cfg.get("b", 0.0))
        except KeyError as exc:
            raise ConfigError(f"{name} affine boundary missing key {exc}") from exc
    if cfg["kind"] == "samples":
        try:
            return BoundaryCurve.from_samples(cfg["t"], cfg["x"])
        except KeyError as exc:
            raise ConfigError(f"{name} sampled boundary missing key {exc}") from exc
    raise ConfigError(f"unknown boundary kind {cfg['kind']!r} for {name}")


def _piece(cfg, key, axis):
    try:
        sub = cfg[key]
        return np.asarray(sub[axis], dtype=float), np.asarray(sub["g"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"expression-table boundary data missing piece {key!r}") from exc


def domain_from_config(cfg):
    """Build a ParabolicDomain from its JSON config form.

    {"T": ..., "lower": {...}, "upper": {...},
     "boundary_data": {"kind": "polynomial-example51" | "constant" | "expression-table", ...},
     "rho": "default" | "example51"}
    """
    if not isinstance(cfg, dict):
        raise ConfigError("problem config must be a JSON object")
    try:
        T = float(cfg["T"])
        lower = _curve_from_config(cfg["lower"], "lower")
        upper = _curve_from_config(cfg["upper"], "upper")
        data_cfg = cfg["boundary_data"]
    except KeyError as exc:
        raise ConfigError(f"problem config missing key {exc}") from exc
    rho = cfg.get("rho", "default")

    kind = data_cfg.get("kind") if isinstance(data_cfg, dict) else None
    if kind == "polynomial-example51":
        data = example51_solution
    elif kind == "constant":
        if "value" not in data_cfg:
            raise ConfigError("constant boundary data needs a 'value'")
        data = _ConstantData(data_cfg["value"])
    elif kind == "expression-table":
        pieces = {
            "lower": _piece(data_cfg, "lower", "t"),
            "upper": _piece(data_cfg, "upper", "t"),
            "terminal": _piece(data_cfg, "terminal", "x"),
        }
        data = _TableData(T, lower, upper, pieces)
    else:
        raise ConfigError(f"unknown boundary_data kind {kind!r}")
    return ParabolicDomain(T=T, lower=lower, upper=upper, boundary_data=data, rho=rho)
