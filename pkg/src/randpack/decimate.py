"""Decimation of point fields and the density bounds it yields.

Removing a vertex cover of G_d(sigma) leaves a sub-configuration tau whose
points are pairwise more than ``d`` apart.  This module performs that
removal component by component, evaluates the cardinality bounds on
``|tau|`` implied by the component census, the implicit bounds on the
decimated density D(nu), and solves the fixed-size density maximization
exactly on small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, ExhaustiveLimitError, FullyDecimatedError
from .pointfield import (BoxSpec, PointConfiguration, ball_volume, min_spacing,
                         packing_density_torus, pairwise_distances, sample_poisson_trial)
from .proxgraph import ComponentCensus, build_graph, component_census
from .trials import map_trials
from .vcover import DEFAULT_VERTEX_CAP, SimpleGraph, constructive_cover, min_vertex_cover

MODES = ("exact", "constructive", "auto")


@dataclass(frozen=True)
class TauBounds:
    upper1: float
    upper2: float
    lower1: float
    lower2: float
    lower2_valid: bool

    def as_dict(self) -> dict:
        return {"upper1": self.upper1, "upper2": self.upper2, "lower1": self.lower1,
                "lower2": self.lower2, "lower2_valid": self.lower2_valid}


@dataclass(frozen=True)
class DecimationResult:
    tau: PointConfiguration
    removed: tuple[int, ...]
    census: ComponentCensus
    cover_total: int
    bounds: TauBounds
    exact: bool
    tau_spacing: float | None  # None when |tau| < 2

    @property
    def tau_count(self) -> int:
        return len(self.tau)


def tau_bounds(census: ComponentCensus, sigma_count: int) -> TauBounds:
    """Bounds on |tau| from the census.

    ``lower2`` spreads 3/5 over all residual edges; that only follows from
    the per-component bound when no residual component has 3 edges on 4
    vertices (the 4-vertex path needs 2 > 9/5 cover vertices), which is
    what ``lower2_valid`` records.
    """
    M, M1, M2, M3 = census.M, census.M1, census.M2, census.M3
    if min(M, M1, M2, M3, sigma_count) < 0:
        raise DomainError("census entries must be nonnegative")
    if M < M1 + 2 * M2 + 3 * M3:
        raise DomainError("inconsistent census: M < M1 + 2 M2 + 3 M3")
    s = sigma_count
    upper1 = s - M1
    upper2 = s - M1 - M2 - 2 * M3
    lower1 = s - M1 - 2.0 / 3.0 * (M - M1)
    lower2 = s - M1 - M2 - 2 * M3 - 3.0 / 5.0 * (M - M1 - 2 * M2 - 3 * M3)
    valid = not any(len(verts) == 4 and e == 3 for verts, e in census.components)
    return TauBounds(float(upper1), float(upper2), lower1, lower2, valid)


def _component_cover(verts: tuple[int, ...], edges: list[tuple[int, int]], mode: str,
                     vertex_cap: int) -> tuple[list[int], bool]:
    k = len(verts)
    if k == 2:
        return [verts[0]], True
    if k == 3 and mode != "constructive":
        if len(edges) == 3:
            return [verts[0], verts[1]], True
        # path: the middle vertex has degree 2
        deg = {v: 0 for v in verts}
        for i, j in edges:
            deg[i] += 1
            deg[j] += 1
        return [max(verts, key=lambda v: (deg[v], -v))], True
    local = {v: t for t, v in enumerate(verts)}
    g = SimpleGraph(k, [(local[i], local[j]) for i, j in edges])
    if mode == "constructive" or (mode == "auto" and k > vertex_cap):
        res = constructive_cover(g)
    else:
        res = min_vertex_cover(g, vertex_cap=vertex_cap)
    return [verts[t] for t in res.cover], res.mode == "exact"


def decimate(config: PointConfiguration, d: float, mode: str = "auto",
             vertex_cap: int = DEFAULT_VERTEX_CAP, dense: bool = False) -> DecimationResult:
    """Thin ``config`` to a subset with all pairwise distances > d.

    ``mode='exact'`` solves every component exactly (components above
    ``vertex_cap`` raise), ``'constructive'`` uses the non-end-vertex
    cover everywhere, ``'auto'`` is exact up to the cap.
    """
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    if len(config) < 2:
        raise DomainError("decimation needs at least 2 points")
    graph = build_graph(config, d, dense=dense)
    census = component_census(graph)

    by_comp: dict[int, list[tuple[int, int]]] = {}
    owner = {}
    for c, (verts, e) in enumerate(census.components):
        if e:
            for v in verts:
                owner[v] = c
    for i, j in graph.edges.tolist():
        by_comp.setdefault(owner[i], []).append((i, j))

    removed: list[int] = []
    all_exact = True
    for c, edges in by_comp.items():
        verts = census.components[c][0]
        cov, exact = _component_cover(verts, edges, mode, vertex_cap)
        removed.extend(cov)
        all_exact &= exact
    removed.sort()
    tau = config.without(removed)
    if len(tau) == 0:
        raise FullyDecimatedError("every point was removed")
    spacing = None
    if len(tau) >= 2:
        spacing = min_spacing(tau)
        if not spacing > d:
            raise AssertionError(f"decimated spacing {spacing} is not > {d}")
    return DecimationResult(tau, tuple(removed), census, len(removed),
                            tau_bounds(census, len(config)), all_exact, spacing)


# -- D(nu) bounds ----------------------------------------------------------------

@dataclass(frozen=True)
class NuBounds:
    nu1: float
    nu2: float
    nu3: float
    rhs13: float
    rhs14: float
    rhs15: float
    rhs13_applicable: bool
    nu2_min: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _nu_values(v: float) -> tuple[float, float, float]:
    nu1 = 1.0 - 0.5 * v
    nu2 = 1.0 - 0.5 * v * math.exp(-2.0 * v)
    nu3 = 1.0 - v / 3.0 - v * math.exp(-v) / 6.0
    return nu1, nu2, nu3


_NU2_MIN = None


def nu2_minimum() -> float:
    """min over d of nu_2(d), found numerically over v = v_n(d).

    The minimizer is v = 1/2 with value 1 - 1/(4e); the printed
    threshold 1 - 4/e is negative and cannot be meant.
    """
    global _NU2_MIN
    if _NU2_MIN is None:
        res = minimize_scalar(lambda v: _nu_values(v)[1], bounds=(0.0, 10.0), method="bounded",
                              options={"xatol": 1e-12})
        _NU2_MIN = float(res.fun)
    return _NU2_MIN


def nu_bounds(n: int, d: float) -> NuBounds:
    if not d > 0:
        raise DomainError(f"d must be positive, got {d!r}")
    v = ball_volume(n, d)
    nu1, nu2, nu3 = _nu_values(v)
    scale = 2.0 ** (-n) * v
    return NuBounds(nu1, nu2, nu3, scale * nu1, scale * nu2, scale * nu3, nu1 > 0, nu2_minimum())


def explicit_lower(n: int, nu: float) -> float:
    """The lower curve 2^{1-n} nu (1 - nu) on D(nu)."""
    if not 0 < nu < 1:
        raise DomainError(f"nu must lie in (0, 1), got {nu!r}")
    return 2.0 ** (1 - n) * nu * (1.0 - nu)


def fig1_curves(n: int, d_grid: Sequence[float], resolution: int = 99) -> list[tuple[str, float, float]]:
    """Parametric curves (nu_i(d), rhs_i(d)) plus the explicit lower curve.

    Points with nu <= 0 are dropped; the explicit curve uses
    ``nu = i / (resolution + 1)`` for ``i = 1..resolution``.
    """
    if len(d_grid) == 0:
        raise DomainError("d grid must be nonempty")
    rows = []
    for curve, nu_attr, rhs_attr in (("lower13", "nu1", "rhs13"), ("upper14", "nu2", "rhs14"),
                                     ("lower15", "nu3", "rhs15")):
        for d in d_grid:
            b = nu_bounds(n, d)
            nu = getattr(b, nu_attr)
            if nu > 0:
                rows.append((curve, nu, getattr(b, rhs_attr)))
    for i in range(1, resolution + 1):
        nu = i / (resolution + 1)
        rows.append(("explicit", nu, explicit_lower(n, nu)))
    return rows


# -- exact fixed-size optimum ------------------------------------------------------

EXHAUSTIVE_LIMIT = 20


@dataclass(frozen=True)
class DispersionResult:
    best_min_distance: float
    subset: tuple[int, ...]
    density: float


def _find_spread_subset(conflict: list[int], k: int, size: int) -> tuple[int, ...] | None:
    """Lexicographically first k-subset containing no conflicting pair."""
    chosen: list[int] = []

    def rec(cands: int) -> bool:
        if len(chosen) == k:
            return True
        while cands:
            if len(chosen) + cands.bit_count() < k:
                return False
            v = (cands & -cands).bit_length() - 1
            cands &= ~(1 << v)
            chosen.append(v)
            if rec(cands & ~conflict[v]):
                return True
            chosen.pop()
        return False

    return tuple(chosen) if rec((1 << size) - 1) else None


def delta_nu_exact(config: PointConfiguration, k: int) -> DispersionResult:
    """Densest k-point sub-configuration on the torus.

    At fixed k the torus density is increasing in the minimal spacing, so
    this is max-min dispersion.  Binary search over the sorted pairwise
    distances; each probe asks for a k-subset avoiding all pairs closer
    than the probe.
    """
    size = len(config)
    if not (2 <= k <= size <= EXHAUSTIVE_LIMIT):
        raise ExhaustiveLimitError(
            f"exhaustive limit exceeded: need 2 <= k <= |sigma| <= {EXHAUSTIVE_LIMIT}, "
            f"got k={k}, |sigma|={size}")
    if not config.box.is_torus:
        raise DomainError("delta_nu_exact needs the torus convention")
    dist = pairwise_distances(config)
    cand = np.unique(dist[np.triu_indices(size, 1)])

    def probe(t: float):
        conflict = [0] * size
        close = dist < t
        for i in range(size):
            row = 0
            for j in np.flatnonzero(close[i]).tolist():
                if j != i:
                    row |= 1 << j
            conflict[i] = row
        return _find_spread_subset(conflict, k, size)

    lo, hi = 0, len(cand) - 1
    best = probe(cand[0])
    while lo < hi:
        mid = (lo + hi + 1) // 2
        found = probe(cand[mid])
        if found is None:
            hi = mid - 1
        else:
            lo, best = mid, found
    best = probe(cand[lo])
    dstar = float(min(dist[i, j] for a, i in enumerate(best) for j in best[a + 1:]))
    density = k * ball_volume(config.box.dim, dstar / 2.0) / config.box.volume
    return DispersionResult(dstar, best, density)


# -- finite-N estimate of D(nu) --------------------------------------------------

@dataclass(frozen=True)
class CurveRow:
    d: float
    nu_target: float
    bound_kind: str
    rhs: float
    mean_density: float
    stderr: float
    trials: int
    satisfied: bool
    shortfalls: int
    in_band: int

    @property
    def flag(self) -> str:
        parts = ["ok" if self.satisfied else "below_rhs"]
        if self.shortfalls:
            parts.append(f"shortfall={self.shortfalls}")
        return ";".join(parts)


def trim_to_band(tau_count: int, sigma_count: int, nu: float, epsilon_band: float) -> tuple[int, bool]:
    """Number of tau points to keep and whether tau falls short of the band."""
    slack = sigma_count ** (0.5 + epsilon_band)
    if tau_count > nu * sigma_count + slack:
        return math.ceil(nu * sigma_count), False
    return tau_count, tau_count < nu * sigma_count - slack


def estimate_D_curve(n: int, d_grid: Sequence[float], N: float, trials: int, seed: int,
                     epsilon_band: float = 0.1, slack: float = 0.05,
                     kinds: Sequence[str] = ("lower13", "lower15"),
                     mode: str = "auto", workers: int = 1) -> list[CurveRow]:
    """Monte Carlo estimate of the decimated density at the targets nu_i(d).

    Trial ``t`` decimates the unit-intensity field drawn from stream
    ``(seed, t)``; tau is trimmed from its highest indices down to
    ``ceil(nu |sigma|)`` when it overshoots the allowed band.  A row is
    satisfied when the mean density reaches ``rhs * (1 - slack)``.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    targets = {"lower13": ("nu1", "rhs13"), "lower15": ("nu3", "rhs15")}
    for kind in kinds:
        if kind not in targets:
            raise DomainError(f"unknown bound kind {kind!r}")
    box = BoxSpec(n, N)
    rows = []
    for d in d_grid:
        nb = nu_bounds(n, d)
        active = [(kind, getattr(nb, targets[kind][0]), getattr(nb, targets[kind][1]))
                  for kind in kinds]
        active = [a for a in active if a[1] > 0]

        def one(t: int, d=d, active=active):
            sigma = sample_poisson_trial(box, 1.0, seed, t)
            s = len(sigma)
            if s < 2:
                return [(0.0, False, True) for _ in active]
            res = decimate(sigma, d, mode=mode)
            out = []
            for _, nu, _ in active:
                keep, short = trim_to_band(res.tau_count, s, nu, epsilon_band)
                kept = PointConfiguration(box, res.tau.points[:keep])
                dens = packing_density_torus(kept) if keep >= 2 else 0.0
                band = s ** (0.5 + epsilon_band)
                out.append((dens, short, abs(keep - nu * s) <= band))
            return out

        results = map_trials(one, trials, workers)
        for a, (kind, nu, rhs) in enumerate(active):
            dens = np.array([r[a][0] for r in results])
            mean = float(dens.mean())
            se = float(dens.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
            rows.append(CurveRow(float(d), nu, kind, rhs, mean, se, trials,
                                 mean >= rhs * (1.0 - slack),
                                 sum(r[a][1] for r in results),
                                 sum(r[a][2] for r in results)))
    return rows
