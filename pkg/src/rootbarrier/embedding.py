"""Bounded Brownian time-space increments from the uniform-target barrier.

One increment costs one uniform draw: with U ~ U[-1, 1] and barrier function
r of the uniform law on [-1, 1], the pair (eps^2 r(U), eps U) has the law of
the exit time and position of the eps-scaled barrier region.  Both
coordinates carry hard bounds: dt <= eps^2 r(0) and |dx| <= eps.

Streams are counter-based (Philox keyed through numpy's SeedSequence), so
distinct (seed, stream_id) pairs give independent, non-overlapping sequences
and the same pair always reproduces the same draws.  Uniforms map to [-1, 1)
by 53-bit mantissa scaling of one double per draw.
"""

from dataclasses import dataclass

import numpy as np

from .barrier import evaluate_barrier
from .errors import ConfigError


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream addressed by (seed, stream_id, path).

    ``substream(i)`` derives the i-th child stream (used one-per-sample so
    results do not depend on worker partitioning).
    """

    seed: int
    stream_id: int = 0
    path: tuple = ()

    def _seed_seq(self):
        return np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))

    def bit_generator(self):
        return np.random.Philox(self._seed_seq())

    def generator(self):
        return np.random.Generator(self.bit_generator())

    def substream(self, i):
        return RngStream(self.seed, self.stream_id, self.path + (int(i),))


@dataclass(frozen=True)
class IncrementSample:
    """One time-space increment (dt, dx) with its underlying uniform draw."""

    dt: float
    dx: float
    u: float


def increment_from_uniform(table, eps, u):
    """Deterministic map (table, eps, u) -> (eps^2 r(u), eps u)."""
    return IncrementSample(dt=eps * eps * evaluate_barrier(table, u), dx=eps * u, u=u)


def sample_increment(table, eps, rng):
    """Draw one increment; ``rng`` is a numpy Generator (see RngStream)."""
    if not (eps > 0):
        raise ConfigError(f"eps must be positive, got {eps}")
    u = 2.0 * rng.random() - 1.0
    return increment_from_uniform(table, eps, u)


def sample_increments(table, eps, rng, n):
    """Vectorised batch of n increments; returns (dt, dx, u) arrays.

    Consumes the same uniform sequence as n scalar ``sample_increment``
    calls on the same generator.
    """
    if not (eps > 0):
        raise ConfigError(f"eps must be positive, got {eps}")
    if n < 0:
        raise ConfigError(f"n must be nonnegative, got {n}")
    u = 2.0 * rng.random(n) - 1.0
    dt = eps * eps * evaluate_barrier(table, u)
    dx = eps * u
    return dt, dx, u


def sample_path(table, eps, stream, n_steps):
    """Cumulative (tau_k, X_k) over n_steps independent increments.

    Returns arrays of length n_steps + 1 starting at (0, 0); tau is
    nondecreasing and strictly increasing off the null event |U| = 1.
    """
    if n_steps < 0:
        raise ConfigError(f"n_steps must be nonnegative, got {n_steps}")
    rng = stream.generator() if isinstance(stream, RngStream) else stream
    dt, dx, _ = sample_increments(table, eps, rng, n_steps)
    tau = np.concatenate(([0.0], np.cumsum(dt)))
    x = np.concatenate(([0.0], np.cumsum(dx)))
    return tau, x
