"""Random unimodular lattices in high dimension: limiting law of 2^n Delta
and the finite-n bracket obtained from Schmidt's remainder estimate.

Everything here is analytic; no lattices are sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .pointfield import unit_ball_volume


def limit_cdf(x: float) -> float:
    """lim F_n(x) = 1 - exp(-x/2)."""
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")
    return -math.expm1(-x / 2.0)


def _check_schmidt(n: int, vol: float) -> None:
    if n < 13:
        raise DomainError(f"remainder bound requires n >= 13 (got n={n})")
    if vol < 0:
        raise DomainError(f"vol(S) must be nonnegative (got {vol})")
    if vol > n - 1:
        raise DomainError(f"remainder bound requires vol(S) <= n - 1 (got vol={vol}, n={n})")


def log_remainder_bound(n: int, vol: float) -> float:
    """log of 6 (3/4)^(n/2) e^(4 vol) + vol^(n-1) n^(1-n) e^(vol+n)."""
    _check_schmidt(n, vol)
    first = math.log(6.0) + 0.5 * n * math.log(0.75) + 4.0 * vol
    if vol == 0:
        return first
    second = (n - 1) * (math.log(vol) - math.log(n)) + vol + n
    hi, lo = max(first, second), min(first, second)
    return hi + math.log1p(math.exp(lo - hi))


def remainder_bound(n: int, vol: float) -> float:
    """Upper bound on |R_n| for a set S with S ∩ (-S) empty, n >= 13 and vol(S) <= n - 1.

    Evaluated through :func:`log_remainder_bound`; returns ``inf`` once the
    bound exceeds the float range (it is then vacuous anyway).
    """
    lg = log_remainder_bound(n, vol)
    try:
        return math.exp(lg)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class CdfBracket:
    lower: float
    upper: float
    n: int
    x: float
    width: float  # 2 e^{-x/2} R, before clamping to [0, 1]


def fn_bracket(n: int, x: float) -> CdfBracket:
    """Bracket on F_n(x), the law of 2^n Delta for Haar-random unimodular lattices.

    Uses vol(S(d)) = x/2 for the half ball of radius (x/v_n)^{1/n}.
    """
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")
    r = remainder_bound(n, x / 2.0)
    tail = math.exp(-x / 2.0)
    lo = 1.0 - tail * (1.0 + r)
    hi = 1.0 - tail * (1.0 - r)
    return CdfBracket(min(max(lo, 0.0), 1.0), min(max(hi, 0.0), 1.0), n, float(x), 2.0 * tail * r)


def min_distance_for_density(n: int, x: float) -> float:
    """d with v_n d^n = x."""
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n!r}")
    return (x / unit_ball_volume(int(n))) ** (1.0 / n)
