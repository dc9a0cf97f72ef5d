"""Haar-random planar lattices.

A lattice with shortest vector 1 is L_z with z = x + iy in the modular
domain F = {x^2 + y^2 >= 1, |x| <= 1/2}; its packing density is pi/(4y).
In the coordinates (x, Delta) the Haar probability measure is the flat
density 12/pi^2, so sampling is plain rejection from a rectangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .errors import DomainError
from .rng import stream

MAX_DENSITY = math.pi / math.sqrt(12.0)
SQUARE_DENSITY = math.pi / 4.0
FLAT = 12.0 / math.pi ** 2

MEAN = 3.0 / 8.0 * math.log(3.0)
VARIANCE = math.pi / (8.0 * math.sqrt(3.0)) - 9.0 / 64.0 * math.log(3.0) ** 2


@dataclass(frozen=True)
class ModularSample:
    x: float
    y: float
    delta: float


class ModularBatch(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    delta: np.ndarray
    proposals: int


def in_domain(x: float, y: float) -> bool:
    return abs(x) <= 0.5 and x * x + y * y >= 1.0


def lattice_density(x: float, y: float) -> float:
    """Packing density of L_{x+iy}: pi / (4y)."""
    # tolerate round-off on the boundary arc
    if not (abs(x) <= 0.5 and x * x + y * y >= 1.0 - 1e-12 and y > 0):
        raise DomainError(f"({x}, {y}) is outside the modular domain")
    return math.pi / (4.0 * y)


def _propose(rng: np.random.Generator, m: int):
    x = rng.uniform(-0.5, 0.5, size=m)
    # (1 - u) puts delta in (0, max]
    delta = MAX_DENSITY * (1.0 - rng.random(m))
    y = math.pi / (4.0 * delta)
    return x, y, delta, x * x + y * y >= 1.0


def sample_modular(seed: int) -> ModularSample:
    """One Haar-distributed point of F."""
    rng = stream(seed, 0)
    while True:
        x, y, delta, ok = _propose(rng, 1)
        if ok[0]:
            return ModularSample(float(x[0]), float(y[0]), float(delta[0]))


def sample_modular_batch(count: int, seed: int, block: int = 1 << 16) -> ModularBatch:
    """``count`` accepted samples; block ``b`` of proposals uses stream (seed, 1, b)."""
    if count < 0:
        raise DomainError("count must be nonnegative")
    xs, ys, ds = [], [], []
    have = 0
    proposals = 0
    b = 0
    while have < count:
        x, y, delta, ok = _propose(stream(seed, 1, b), block)
        b += 1
        # stop counting proposals at the one that completes the batch
        need = count - have
        acc_idx = np.flatnonzero(ok)
        if acc_idx.size >= need:
            proposals += int(acc_idx[need - 1]) + 1
            acc_idx = acc_idx[:need]
        else:
            proposals += block
        xs.append(x[acc_idx])
        ys.append(y[acc_idx])
        ds.append(delta[acc_idx])
        have += acc_idx.size
    cat = (lambda parts: np.concatenate(parts) if parts else np.empty(0))
    return ModularBatch(cat(xs), cat(ys), cat(ds), proposals)


def pdf_delta(a: float) -> float:
    """Density of Delta under the Haar measure."""
    if a < 0:
        raise DomainError(f"density argument must be nonnegative, got {a!r}")
    if a <= SQUARE_DENSITY:
        return FLAT
    if a >= MAX_DENSITY:
        return 0.0
    return curved_branch(a)


def curved_branch(a: float) -> float:
    """Second branch of the density, valid on [pi/4, pi/sqrt(12)].

    At a = pi/4 it equals the flat value 12/pi^2; the slope there is
    infinite, so one-sided probes at distance h differ by O(sqrt(h)).
    """
    return FLAT * (1.0 - 2.0 * math.sqrt(max(0.0, 1.0 - (SQUARE_DENSITY / a) ** 2)))


def cdf_delta(a):
    """P(Delta <= a) by adaptive quadrature of :func:`pdf_delta`.

    Accepts a scalar or an array.  The flat branch integrates to
    12/pi^2 * min(a, pi/4); the curved branch is integrated numerically.
    """
    if np.ndim(a):
        arr = np.asarray(a, dtype=np.float64)
        return np.array([cdf_delta(float(v)) for v in arr.ravel()]).reshape(arr.shape)
    a = float(a)
    if a < 0:
        raise DomainError(f"cdf argument must be nonnegative, got {a!r}")
    if a <= SQUARE_DENSITY:
        return FLAT * a
    upper = min(a, MAX_DENSITY)
    tail, _ = integrate.quad(pdf_delta, SQUARE_DENSITY, upper, epsabs=1e-12, epsrel=1e-12, limit=200)
    return min(1.0, FLAT * SQUARE_DENSITY + tail)


def quad_moment(power: int) -> float:
    """E[Delta^power] by quadrature of the density."""
    f = lambda t: t ** power * pdf_delta(t)
    flat, _ = integrate.quad(f, 0.0, SQUARE_DENSITY, epsabs=1e-13, epsrel=1e-13)
    curved, _ = integrate.quad(f, SQUARE_DENSITY, MAX_DENSITY, epsabs=1e-13, epsrel=1e-13, limit=200)
    return flat + curved


def delta_moments() -> dict:
    """Closed-form mean, variance and maximum, with quadrature cross-checks."""
    m1 = quad_moment(1)
    m2 = quad_moment(2)
    return {
        "mean": MEAN,
        "variance": VARIANCE,
        "max": MAX_DENSITY,
        "quad_mean": m1,
        "quad_variance": m2 - m1 * m1,
        "quad_mass": quad_moment(0),
    }
