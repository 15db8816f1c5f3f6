"""Barrier function solver: the nonlinear Volterra equation of the first kind.

For a symmetric law mu with a nonincreasing barrier function r, the potential
gap u_{delta_0}(x) - u_mu(x) equals

    g(r(x), x) - integral_x^k [g(r(x)-r(y), x+y) + g(r(x)-r(y), x-y)] mu(dy),

with g the expected-local-time kernel.  A forward Euler discretisation on the
grid x_i = i h, h = k/n, turns this into one scalar root-find per node,
marching inward from the boundary condition r(k) = 0: node i solves

    lhs_i = g(r_i, x_i) - sum_{j>i} w_j [g(r_i - r_j, x_i - x_j) + g(r_i - r_j, x_i + x_j)]

in the single unknown r_i given the already-solved tail r_{i+1..n}.  The
mu(dy)-integral is quadratured with node weights w_j = f(x_j) h (h/2 at the
endpoint j = n); the kernel time r_i - r_j is clamped at 0 against round-off.
Bisection on [r_{i+1}, r_max] is used because the map is continuous and
crosses zero there; r_max = 4 k^2 sits safely above the known growth bounds.

The recursion is inherently sequential; the resulting BarrierTable is
immutable and freely shareable across reader workers.
"""

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._backend import kernels
from .errors import ConfigError, InvariantViolation
from .measures import dirac_potential

# r(0) bounds for the uniform law on [-1, 1]: pi/8 from optional stopping of
# |B| at the maximal barrier time, 2/pi from known bounded-embedding results.
R0_LOWER_UNIFORM = math.pi / 8.0
R0_UPPER_UNIFORM = 2.0 / math.pi

_MONOTONE_TOL = 1e-10
GROWTH_CONSTANT = 32.0 / math.pi**2


@dataclass(frozen=True)
class BarrierTable:
    """Barrier function sampled on the uniform grid of [0, k].

    r_values[i] approximates r(i h); r_values[n] = 0 and the values are
    nonincreasing.  Evaluation interpolates linearly in |x| and returns 0
    outside the support, so the table is even and monotone by construction.
    """

    k: float
    r_values: np.ndarray
    solver_meta: dict = field(default_factory=dict)
    validate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "r_values", np.asarray(self.r_values, dtype=float))
        rv = self.r_values
        if rv.ndim != 1 or rv.shape[0] < 2:
            raise ConfigError("r_values must be a 1-d array with at least 2 entries")
        if self.validate:
            if not np.all(np.isfinite(rv)):
                raise InvariantViolation("barrier values must be finite")
            if abs(rv[-1]) > 1e-15:
                raise InvariantViolation(f"barrier must vanish at x = k, got r(k) = {rv[-1]}")
            if np.any(np.diff(rv) > _MONOTONE_TOL):
                raise InvariantViolation("barrier values must be nonincreasing on [0, k]")
            if np.any(rv < -1e-15):
                raise InvariantViolation("barrier values must be nonnegative")

    @property
    def n(self):
        return self.r_values.shape[0] - 1

    @property
    def h(self):
        return self.k / self.n

    @property
    def grid(self):
        return np.arange(self.n + 1) * self.h

    def __call__(self, x):
        return evaluate_barrier(self, x)

    def save_csv(self, path):
        """Write '#'-prefixed JSON metadata, then ascending x,r rows (17 digits)."""
        xs = self.grid
        buf = io.StringIO()
        buf.write("#" + json.dumps(self.solver_meta, sort_keys=True) + "\n")
        for x, r in zip(xs, self.r_values):
            buf.write(f"{x:.17g},{r:.17g}\n")
        with open(path, "w") as fh:
            fh.write(buf.getvalue())

    @classmethod
    def load_csv(cls, path):
        with open(path) as fh:
            first = fh.readline()
            if not first.startswith("#"):
                raise ConfigError(f"{path}: missing '#' metadata line")
            try:
                meta = json.loads(first[1:])
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: bad metadata JSON: {exc}") from exc
            data = np.loadtxt(fh, delimiter=",")
        if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
            raise ConfigError(f"{path}: expected two-column x,r rows")
        xs, rv = data[:, 0], data[:, 1]
        if np.any(np.diff(xs) <= 0):
            raise ConfigError(f"{path}: x column must be strictly ascending")
        k = float(xs[-1])
        expected = np.arange(xs.shape[0]) * (k / (xs.shape[0] - 1))
        if np.max(np.abs(xs - expected)) > 1e-9 * max(k, 1.0):
            raise ConfigError(f"{path}: x column must be a uniform grid of [0, k]")
        return cls(k=k, r_values=rv, solver_meta=meta)


def _telescoped_origin_cap(mu, x1, max_terms=500):
    """Bound on r(0) - r(x1), telescoping the growth bound along y_l = x1 2^-l.

    The one-step bound is useless at the origin (mu[0, 0] = 0 makes the mass
    ratio degenerate), but summing it over dyadic pairs converges whenever
    the bounded-barrier mass condition holds.
    """
    total = 0.0
    y = x1
    for _ in range(max_terms):
        m_lo = mu.mass_abs(0.5 * y)
        m_hi = mu.mass_abs(y)
        if m_lo <= 0.0 or m_hi <= 0.0:
            return math.inf
        term = GROWTH_CONSTANT * y * y * (
            math.log(4.0 / math.pi) + abs(math.log(m_lo / m_hi))
        )
        total += term
        if term < 1e-16 * max(total, 1e-300):
            break
        y *= 0.5
    return total


def solve_barrier(mu, n, tol=1e-12, r_max=None):
    """Solve for the barrier table of ``mu`` on an (n+1)-point grid.

    ``tol`` is the absolute bisection tolerance per node.  Raises
    NumericalError when a node cannot be bracketed and InvariantViolation if
    the solved table fails its shape checks.
    """
    if n < 2:
        raise ConfigError(f"grid resolution n must be >= 2, got {n}")
    if not (tol > 0):
        raise ConfigError(f"tolerance must be positive, got {tol}")
    k = mu.k
    if r_max is None:
        r_max = 4.0 * k * k
    h = k / n
    xs = np.arange(n + 1) * h
    w = mu.density(xs) * h
    w[n] *= 0.5
    lhs = dirac_potential(xs) - mu.potential(xs)
    # a priori bound on r(x_i) - r(x_{i+1}) used as the bisection ceiling:
    # the node equation degenerates as x -> 0 for densities vanishing there,
    # and this growth bound is what reins the root in (see check_growth_bound)
    mass = mu.mass_abs(xs)
    with np.errstate(divide="ignore"):
        ratio_term = np.abs(np.log(mass[:-1] / mass[1:]))
    cap_gap = GROWTH_CONSTANT * xs[1:] ** 2 * (math.log(4.0 / math.pi) + ratio_term)
    cap_gap[0] = _telescoped_origin_cap(mu, xs[1])
    r, iters, capped = kernels.solve_barrier_grid(lhs, w, xs, cap_gap, r_max, tol)
    meta = {
        "measure": mu.descriptor(),
        "n": int(n),
        "tol": float(tol),
        "r_max": float(r_max),
        "bisection_iterations": int(iters),
        "capped_nodes": [int(i) for i in capped],
        "solver_version": __version__,
    }
    return BarrierTable(k=k, r_values=r, solver_meta=meta)


def evaluate_barrier(table, x):
    """Interpolated r(|x|); 0 for |x| >= k.  Even and piecewise linear."""
    ax = np.abs(np.asarray(x, dtype=float))
    val = np.interp(ax, table.grid, table.r_values)
    out = np.where(ax >= table.k, 0.0, val)
    return float(out) if np.isscalar(x) else out


@dataclass(frozen=True)
class ResidualReport:
    """Discretised-equation residuals (left minus right) at every grid node."""

    residuals: np.ndarray
    max_abs_residual: float


def residuals(table, mu):
    """Re-evaluate the discrete system for ``table`` against ``mu``."""
    if abs(table.k - mu.k) > 1e-12:
        raise ConfigError(
            f"table support k={table.k} and measure support k={mu.k} do not match"
        )
    xs = table.grid
    w = mu.density(xs) * table.h
    w[-1] *= 0.5
    lhs = dirac_potential(xs) - mu.potential(xs)
    res = kernels.barrier_residual_grid(table.r_values, lhs, w, xs)
    return ResidualReport(residuals=res, max_abs_residual=float(np.max(np.abs(res))))


@dataclass(frozen=True)
class GrowthBoundReport:
    """Result of the geometric-pair growth bound check; bool(report) is pass."""

    passed: bool
    worst_slack: float
    pairs_checked: int

    def __bool__(self):
        return self.passed


def check_growth_bound(table, mu, eta):
    """Verify r(x) <= r(y) + (32 y^2 / pi^2) (ln(4/pi) + |ln mu[0,x]/mu[0,y]|)
    along the geometric pairs (x, y) = (eta^(l+1) k, eta^l k) resolvable on
    the grid.  Returns pass/fail with the worst slack (rhs - lhs)."""
    if not (0.0 < eta < 1.0):
        raise ConfigError(f"eta must lie in (0, 1), got {eta}")
    k = table.k
    worst = math.inf
    pairs = 0
    ell = 0
    while eta ** (ell + 1) * k >= table.h:
        x = eta ** (ell + 1) * k
        y = eta**ell * k
        mass_ratio = mu.half_mass(x) / mu.half_mass(y)
        rhs = evaluate_barrier(table, y) + GROWTH_CONSTANT * y * y * (
            math.log(4.0 / math.pi) + abs(math.log(mass_ratio))
        )
        slack = rhs - evaluate_barrier(table, x)
        worst = min(worst, slack)
        pairs += 1
        ell += 1
    return GrowthBoundReport(passed=(pairs > 0 and worst >= 0.0), worst_slack=worst,
                             pairs_checked=pairs)
