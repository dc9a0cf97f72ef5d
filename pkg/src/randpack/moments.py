"""Moments of the proximity-graph counts of a Poisson field on the torus.

Closed forms for E[M] and the bracket on E[M1], plus seeded Monte Carlo
checks of those formulas, of the O(volume) growth of Var(M), and of the
Chebyshev concentration of M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .pointfield import BoxSpec, PointConfiguration, ball_volume, sample_poisson_trial
from .proxgraph import build_graph, component_census
from .trials import map_trials


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    variance: float
    stderr: float
    trials: int

    def as_dict(self) -> dict:
        return {"mean": self.mean, "variance": self.variance, "stderr": self.stderr,
                "trials": self.trials}


def _check_scale(N: float, d: float) -> None:
    if not d > 0:
        raise DomainError(f"d must be positive, got {d!r}")
    if not d < N:
        raise DomainError(f"need d < N, got d={d}, N={N}")


def expected_M(n: int, N: float, d: float, lam: float = 1.0) -> float:
    """E[M] = lambda^2 v_n(d) (2N)^n / 2 on the torus."""
    _check_scale(N, d)
    if lam < 0:
        raise DomainError(f"intensity must be nonnegative, got {lam!r}")
    return lam * lam * ball_volume(n, d) * (2.0 * N) ** n / 2.0


def expected_M1_bracket(n: int, N: float, d: float) -> tuple[float, float]:
    """(v/2) V e^{-2v} <= E[M1] <= (v/2) V e^{-v} at unit intensity."""
    _check_scale(N, d)
    v = ball_volume(n, d)
    base = v / 2.0 * (2.0 * N) ** n
    return base * math.exp(-2.0 * v), base * math.exp(-v)


def edge_count(d: float) -> Callable[[PointConfiguration], float]:
    return lambda config: float(build_graph(config, d).edge_count)


def isolated_edge_count(d: float) -> Callable[[PointConfiguration], float]:
    return lambda config: float(component_census(build_graph(config, d)).M1)


def point_count(config: PointConfiguration) -> float:
    return float(len(config))


def _summarize(values: np.ndarray) -> MCEstimate:
    trials = len(values)
    mean = float(values.mean())
    if trials > 1:
        var = float(values.var(ddof=1))
        se = math.sqrt(var / trials)
    else:
        var = se = math.nan
    return MCEstimate(mean, var, se, trials)


def sample_statistic(statistic, box: BoxSpec, lam: float, trials: int, seed: int,
                     workers: int = 1) -> np.ndarray:
    """Values of ``statistic`` on trials 0..trials-1 of the seeded field."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    return np.array(map_trials(
        lambda t: statistic(sample_poisson_trial(box, lam, seed, t)), trials, workers),
        dtype=np.float64)


def mc_estimate(statistic: Callable[[PointConfiguration], float], box: BoxSpec, lam: float,
                trials: int, seed: int, workers: int = 1) -> MCEstimate:
    """Sample mean, unbiased variance and standard error of a statistic."""
    return _summarize(sample_statistic(statistic, box, lam, trials, seed, workers))


@dataclass(frozen=True)
class VarianceScaling:
    half_sides: tuple[float, ...]
    ratios: tuple[float, ...]  # Var(M) / (2N)^n

    @property
    def spread(self) -> float:
        return max(self.ratios) / min(self.ratios)


def variance_scaling_check(n: int, d: float, N_list: Sequence[float], trials: int, seed: int,
                           workers: int = 1) -> VarianceScaling:
    """Empirical Var(M) per unit volume for each box size."""
    if trials < 100:
        raise DomainError("variance scaling needs at least 100 trials")
    ratios = []
    for k, N in enumerate(N_list):
        _check_scale(N, d)
        box = BoxSpec(n, N)
        est = mc_estimate(edge_count(d), box, 1.0, trials, _sub_seed(seed, k), workers)
        ratios.append(est.variance / box.volume)
    return VarianceScaling(tuple(float(N) for N in N_list), tuple(ratios))


@dataclass(frozen=True)
class ConcentrationRow:
    N: float
    threshold: float  # eps * ((2N)^n)^delta
    exceedance: float
    binomial_stderr: float
    variance: float
    chebyshev: float  # Var / threshold^2

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def concentration_check(n: int, d: float, N_list: Sequence[float], delta: float, epsilon: float,
                        trials: int, seed: int, workers: int = 1) -> list[ConcentrationRow]:
    """Fraction of trials with |M - E M| / ((2N)^n)^delta > epsilon, per box size."""
    if not delta > 0.5:
        raise DomainError(f"delta must exceed 1/2, got {delta!r}")
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon!r}")
    rows = []
    for k, N in enumerate(N_list):
        _check_scale(N, d)
        box = BoxSpec(n, N)
        values = sample_statistic(edge_count(d), box, 1.0, trials, _sub_seed(seed, k), workers)
        mean = expected_M(n, N, d)
        thr = epsilon * box.volume ** delta
        p = float(np.mean(np.abs(values - mean) > thr))
        var = float(values.var(ddof=1)) if trials > 1 else math.nan
        rows.append(ConcentrationRow(float(N), thr, p, math.sqrt(p * (1 - p) / trials), var,
                                     var / thr ** 2))
    return rows


def _sub_seed(seed: int, k: int) -> int:
    # distinct box sizes get unrelated streams
    return int(np.random.SeedSequence([int(seed) & (2**64 - 1), 7919, k]).generate_state(1, np.uint64)[0])
