"""Symmetric, compactly supported target laws and their potential functions.

A measure here is symmetric around 0 (hence zero-mean) with support [-k, k]
and a bounded density that is nondecreasing on [0, k]; that monotonicity is
what guarantees a continuous, nonincreasing barrier function, so violations
are hard errors.  The potential of a law mu is

    u_mu(x) = -integral |x - y| mu(dy),

computed in closed form for the power family and by exact piecewise
polynomial integration for tabulated densities.  Everything is immutable
after construction and safe to share across workers.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

_MONOTONE_TOL = 1e-12


def dirac_potential(x):
    """Potential of the point mass at the origin: -|x|."""
    ax = np.abs(np.asarray(x, dtype=float))
    return float(-ax) if np.isscalar(x) else -ax


class SymmetricMeasure:
    """Base interface; concrete laws implement density, CDF and potential."""

    k: float

    def density(self, x):
        raise NotImplementedError

    def mass_abs(self, x):
        """mu([-|x|, |x|]), the CDF of |X|."""
        raise NotImplementedError

    def half_mass(self, x):
        """mu([0, x]) for x >= 0; equals mass_abs/2 by symmetry."""
        return 0.5 * self.mass_abs(x)

    def potential(self, x):
        raise NotImplementedError

    def descriptor(self):
        raise NotImplementedError


class PowerMeasure(SymmetricMeasure):
    """Law with mu([-x, x]) = (x/k)^alpha on [0, k], alpha >= 1.

    alpha = 1 is the uniform distribution on [-k, k].  The density
    alpha x^(alpha-1) / (2 k^alpha) is nondecreasing on [0, k] exactly when
    alpha >= 1, which is why smaller exponents are rejected.
    """

    def __init__(self, k, alpha):
        if not (k > 0):
            raise ConfigError(f"support half-width k must be positive, got {k}")
        if not (alpha >= 1):
            raise ConfigError(
                f"power exponent alpha must be >= 1 so the density is nondecreasing "
                f"on [0, k]; got alpha={alpha}"
            )
        self.k = float(k)
        self.alpha = float(alpha)

    def density(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        inside = ax <= self.k
        with np.errstate(invalid="ignore"):
            val = self.alpha * ax ** (self.alpha - 1.0) / (2.0 * self.k**self.alpha)
        out = np.where(inside, val, 0.0)
        return float(out) if np.isscalar(x) else out

    def mass_abs(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        out = np.clip(ax / self.k, 0.0, 1.0) ** self.alpha
        return float(out) if np.isscalar(x) else out

    def potential(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        inside = -self.k + (self.k / (self.alpha + 1.0)) * (
            1.0 - np.clip(ax / self.k, 0.0, 1.0) ** (self.alpha + 1.0)
        )
        out = np.where(ax >= self.k, -ax, inside)
        return float(out) if np.isscalar(x) else out

    def descriptor(self):
        return {"family": "power", "k": self.k, "alpha": self.alpha}


class TabulatedMeasure(SymmetricMeasure):
    """Density given by samples on a uniform grid of [0, k], extended evenly.

    The samples are read as a piecewise-linear density and normalised to unit
    total mass; the potential is then the exact integral of |x - y| against
    that piecewise-linear density (a piecewise cubic), not a quadrature.
    """

    def __init__(self, k, density_samples):
        if not (k > 0):
            raise ConfigError(f"support half-width k must be positive, got {k}")
        f = np.asarray(density_samples, dtype=float)
        if f.ndim != 1 or f.shape[0] < 2:
            raise ConfigError("density_samples must be a 1-d array with at least 2 values")
        if not np.all(np.isfinite(f)):
            raise ConfigError("density_samples must be finite")
        if np.any(f < 0.0):
            raise ConfigError("density_samples must be nonnegative")
        if np.any(np.diff(f) < -_MONOTONE_TOL):
            raise ConfigError(
                "density must be nondecreasing on [0, k]; a decreasing density "
                "voids the monotone-barrier guarantee"
            )
        self.k = float(k)
        m = f.shape[0] - 1
        self._d = self.k / m
        raw = float(np.trapezoid(f, dx=self._d))
        if raw <= 0.0:
            raise ConfigError("density_samples integrate to zero")
        self._f = f * (0.5 / raw)  # half-line mass 1/2, total mass 1
        self._slope = np.diff(self._f) / self._d
        # S[i] = integral of f over [0, y_i]
        self._s = np.concatenate(
            ([0.0], np.cumsum(0.5 * self._d * (self._f[:-1] + self._f[1:])))
        )
        # H[i] = integral of (1/2 - S) over [y_i, k], accumulated backward
        d = self._d
        cell = (0.5 - self._s[:-1]) * d - self._f[:-1] * d**2 / 2.0 - self._slope * d**3 / 6.0
        self._h = np.concatenate((np.cumsum(cell[::-1])[::-1], [0.0]))

    def _cell(self, ax):
        idx = np.minimum((ax / self._d).astype(np.int64), self._f.shape[0] - 2)
        return idx, ax - idx * self._d

    def density(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        inside = ax <= self.k
        axc = np.minimum(ax, self.k)
        idx, xi = self._cell(np.atleast_1d(axc))
        val = self._f[idx] + self._slope[idx] * xi
        val = np.where(np.atleast_1d(inside), val, 0.0)
        return float(val[0]) if np.isscalar(x) else val.reshape(np.shape(x))

    def mass_abs(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        axc = np.minimum(np.atleast_1d(ax), self.k)
        idx, xi = self._cell(axc)
        s = self._s[idx] + self._f[idx] * xi + 0.5 * self._slope[idx] * xi**2
        out = np.clip(2.0 * s, 0.0, 1.0)
        return float(out[0]) if np.isscalar(x) else out.reshape(np.shape(x))

    def potential(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        axc = np.minimum(np.atleast_1d(ax), self.k)
        idx, xi = self._cell(axc)
        seg = (
            (0.5 - self._s[idx]) * xi
            - self._f[idx] * xi**2 / 2.0
            - self._slope[idx] * xi**3 / 6.0
        )
        h = self._h[idx] - seg
        out = np.where(np.atleast_1d(ax) >= self.k, -np.atleast_1d(ax), -axc - 2.0 * h)
        return float(out[0]) if np.isscalar(x) else out.reshape(np.shape(x))

    def descriptor(self):
        digest = hashlib.sha256(self._f.tobytes()).hexdigest()[:12]
        return {
            "family": "table",
            "k": self.k,
            "points": int(self._f.shape[0]),
            "density_digest": digest,
        }


def make_power_measure(k, alpha):
    """Power-family law mu([-x, x]) = (x/k)^alpha; alpha = 1 is uniform."""
    return PowerMeasure(k, alpha)


def make_table_measure(k, density_samples):
    return TabulatedMeasure(k, density_samples)


def measure_from_config(cfg):
    """Build a measure from its JSON config form.

    {"family": "power", "k": ..., "alpha": ...} or
    {"family": "table", "k": ..., "density": [...]}.
    """
    if not isinstance(cfg, dict) or "family" not in cfg:
        raise ConfigError("measure config must be an object with a 'family' key")
    family = cfg["family"]
    try:
        if family == "power":
            return PowerMeasure(cfg["k"], cfg["alpha"])
        if family == "table":
            return TabulatedMeasure(cfg["k"], cfg["density"])
    except KeyError as exc:
        raise ConfigError(f"measure config missing key {exc}") from exc
    raise ConfigError(f"unknown measure family {family!r}")


def potential(mu, x):
    """u_mu(x); evaluated through |x|, so evenness is exact."""
    return mu.potential(x)


@dataclass(frozen=True)
class FiniteBarrierCheck:
    """Truncated-series diagnostic for the bounded-barrier mass condition.

    The full condition is an infinite series; only stabilisation of partial
    sums is observable, so ``converged`` is a heuristic verdict, never a
    proof.
    """

    converged: bool
    partial_sum: float
    terms_used: int
    note: str = "truncated-series heuristic"

    def __bool__(self):
        return self.converged


def check_finite_barrier_condition(mu, eta, max_terms=200, tail_tol=1e-8):
    """Check sum_l eta^(2l) |ln mu([0, eta^(l+1) k]) / mu([0, k])| for stabilisation.

    Terms use the mass normalised by mu([0, k]) = 1/2, so for the power family
    the l-th term is exactly alpha |ln eta^(l+1)| eta^(2l).  A measure giving
    zero mass to some [0, eta^(l+1) k] fails the condition outright.
    """
    if not (0.0 < eta < 1.0):
        raise ConfigError(f"eta must lie in (0, 1), got {eta}")
    total = 0.0
    for ell in range(max_terms + 1):
        mass = mu.mass_abs(eta ** (ell + 1) * mu.k)
        if mass <= 0.0:
            return FiniteBarrierCheck(False, float("inf"), ell,
                                      note="zero mass near the origin; condition fails")
        term = eta ** (2 * ell) * abs(np.log(mass))
        total += term
        if term < tail_tol:
            return FiniteBarrierCheck(True, total, ell + 1)
    return FiniteBarrierCheck(False, total, max_terms + 1,
                              note="partial sums did not stabilise within the truncation")
