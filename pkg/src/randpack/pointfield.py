"""Boxes, metrics, ball volumes, packing densities and Poisson fields.

A configuration lives in the cube ``[-N, N)^n``.  Two boundary
conventions are supported: ``torus`` (periodic, the one used for all
probabilistic statements) and ``clipped`` (plain Euclidean metric, balls
cut by the cube when measuring density).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, UndefinedSpacingError
from .rng import stream


class Convention(str, Enum):
    TORUS = "torus"
    CLIPPED = "clipped"


@dataclass(frozen=True)
class BoxSpec:
    dim: int
    half_side: float
    convention: Convention = Convention.TORUS

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dim must be a positive integer, got {self.dim!r}")
        if not self.half_side > 0 or not math.isfinite(self.half_side):
            raise DomainError(f"half_side must be positive, got {self.half_side!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "half_side", float(self.half_side))
        object.__setattr__(self, "convention", Convention(self.convention))

    @property
    def side(self) -> float:
        return 2.0 * self.half_side

    @property
    def volume(self) -> float:
        return self.side ** self.dim

    @property
    def is_torus(self) -> bool:
        return self.convention is Convention.TORUS


def canonicalize(coords: np.ndarray, half_side: float) -> np.ndarray:
    """Map coordinates to their representative in ``[-N, N)``."""
    side = 2.0 * half_side
    outside = (coords < -half_side) | (coords >= half_side)
    if not outside.any():
        return coords
    out = coords.copy()
    wrapped = np.mod(coords[outside] + half_side, side) - half_side
    # np.mod can round up to `side` for tiny negative inputs
    wrapped[wrapped >= half_side] = -half_side
    out[outside] = wrapped
    return out


class PointConfiguration:
    """An immutable, ordered, finite point set in a box.

    Coordinates are wrapped into ``[-N, N)`` on construction; the row
    order is the vertex identity used by graphs and covers.
    """

    __slots__ = ("box", "points")

    def __init__(self, box: BoxSpec, points):
        pts = np.array(points, dtype=np.float64, copy=True)
        if pts.size == 0:
            pts = pts.reshape(0, box.dim)
        if pts.ndim == 1 and box.dim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] != box.dim:
            raise DomainError(f"points must have shape (k, {box.dim}), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DomainError("coordinates must be finite")
        pts = canonicalize(pts, box.half_side)
        pts.flags.writeable = False
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "points", pts)

    def __setattr__(self, name, value):
        raise AttributeError("PointConfiguration is immutable")

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointConfiguration):
            return NotImplemented
        return self.box == other.box and np.array_equal(self.points, other.points)

    def __repr__(self) -> str:
        return f"PointConfiguration({self.box!r}, {len(self)} points)"

    def subset(self, indices: Iterable[int]) -> "PointConfiguration":
        """Sub-configuration keeping the given indices in ascending order."""
        idx = np.array(sorted(set(int(i) for i in indices)), dtype=np.intp)
        return PointConfiguration(self.box, self.points[idx])

    def without(self, indices: Iterable[int]) -> "PointConfiguration":
        mask = np.ones(len(self), dtype=bool)
        mask[list(indices)] = False
        return PointConfiguration(self.box, self.points[mask])


def ball_volume(n: int, r: float) -> float:
    """Volume of the n-dimensional ball of radius r.

    The unit volume uses the Gamma recurrence
    ``v_n = 2*pi/n * v_{n-2}`` with ``v_0 = 1`` and ``v_1 = 2``, which is
    exact for every ``n`` without calling ``gamma`` on large arguments.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n!r}")
    if r < 0:
        raise DomainError(f"radius must be nonnegative, got {r!r}")
    return unit_ball_volume(int(n)) * float(r) ** int(n)


def unit_ball_volume(n: int) -> float:
    v = 1.0 if n % 2 == 0 else 2.0
    for k in range(2 if n % 2 == 0 else 3, n + 1, 2):
        v *= 2.0 * math.pi / k
    return v


def _wrapped_delta(diff, side: float):
    diff = np.abs(diff)
    return np.minimum(diff, side - diff)


def torus_distance(p: Sequence[float], q: Sequence[float], box: BoxSpec) -> float:
    """Euclidean norm of the per-axis minimal wrapped difference."""
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if p.shape[0] != box.dim or q.shape[0] != box.dim:
        raise DomainError(f"points must have {box.dim} coordinates")
    acc = 0.0
    for a, b in zip(p, q):
        t = abs(float(a) - float(b))
        t = min(t, box.side - t)
        acc += t * t
    return math.sqrt(acc)


def euclidean_distance(p: Sequence[float], q: Sequence[float]) -> float:
    acc = 0.0
    for a, b in zip(p, q):
        t = float(a) - float(b)
        acc += t * t
    return math.sqrt(acc)


def distance(p, q, box: BoxSpec) -> float:
    """Distance under the box convention."""
    if box.is_torus:
        return torus_distance(p, q, box)
    if len(p) != box.dim or len(q) != box.dim:
        raise DomainError(f"points must have {box.dim} coordinates")
    return euclidean_distance(p, q)


def pairwise_distances(config: PointConfiguration) -> np.ndarray:
    """Dense distance matrix under the box convention.

    Squares are accumulated axis by axis, in the same order as
    :func:`torus_distance`, so entries match the scalar routine bit for bit.
    """
    pts = config.points
    k = len(pts)
    acc = np.zeros((k, k))
    for ax in range(config.box.dim):
        diff = pts[:, None, ax] - pts[None, :, ax]
        if config.box.is_torus:
            diff = _wrapped_delta(diff, config.box.side)
        acc += diff * diff
    return np.sqrt(acc)


def min_spacing(config: PointConfiguration) -> float:
    """Minimal pairwise distance d(sigma_N) under the box convention."""
    k = len(config)
    if k < 2:
        raise UndefinedSpacingError(f"minimal spacing undefined for {k} point(s)")
    if k <= 2048:
        dist = pairwise_distances(config)
        iu = np.triu_indices(k, 1)
        return float(dist[iu].min())
    period = config.box.side if config.box.is_torus else None
    # shift to [0, 2N) for the periodic tree
    data = config.points + config.box.half_side
    if period is not None:
        data[data >= period] -= period
    tree = cKDTree(data, boxsize=period)
    dd, _ = tree.query(data, k=2)
    return float(dd[:, 1].min())


def packing_density_torus(config: PointConfiguration) -> float:
    """|sigma_N| * v_n(d/2) / (2N)^n on the torus (balls are disjoint)."""
    if not config.box.is_torus:
        raise DomainError("packing_density_torus needs the torus convention")
    d = min_spacing(config)
    return len(config) * ball_volume(config.box.dim, d / 2.0) / config.box.volume


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float


def packing_density_clipped_mc(config: PointConfiguration, samples: int, seed: int) -> Estimate:
    """Hit-or-miss estimate of vol[(union of balls) ∩ box] / (2N)^n.

    Balls have radius half the Euclidean minimal spacing and are not
    wrapped, so parts sticking out of the cube are lost.
    """
    if config.box.is_torus:
        raise DomainError("packing_density_clipped_mc needs the clipped convention")
    if samples < 1:
        raise DomainError("samples must be >= 1")
    r = min_spacing(config) / 2.0
    box = config.box
    tree = cKDTree(config.points)
    rng = stream(seed, 0)
    hits = 0
    chunk = 1 << 16
    left = int(samples)
    while left > 0:
        m = min(chunk, left)
        probe = rng.uniform(-box.half_side, box.half_side, size=(m, box.dim))
        dd, _ = tree.query(probe, k=1)
        hits += int(np.count_nonzero(dd <= r))
        left -= m
    p = hits / samples
    return Estimate(p, math.sqrt(p * (1.0 - p) / samples))


def sample_poisson(box: BoxSpec, intensity: float, seed: int) -> PointConfiguration:
    """Poisson field: count ~ Poisson(lambda (2N)^n), then i.i.d. uniform points."""
    if not intensity >= 0:
        raise DomainError(f"intensity must be nonnegative, got {intensity!r}")
    return _sample_poisson_rng(box, intensity, stream(seed, 0))


def _sample_poisson_rng(box: BoxSpec, intensity: float, rng: np.random.Generator) -> PointConfiguration:
    count = int(rng.poisson(intensity * box.volume)) if intensity > 0 else 0
    pts = rng.uniform(-box.half_side, box.half_side, size=(count, box.dim))
    return PointConfiguration(box, pts)


def sample_poisson_trial(box: BoxSpec, intensity: float, seed: int, trial: int) -> PointConfiguration:
    """The field for trial ``trial`` of an experiment seeded with ``seed``."""
    if not intensity >= 0:
        raise DomainError(f"intensity must be nonnegative, got {intensity!r}")
    return _sample_poisson_rng(box, intensity, stream(seed, 1, trial))


# -- file format -----------------------------------------------------------

def write_points(config: PointConfiguration, path) -> None:
    box = config.box
    lines = [f"# dim={box.dim} half_side={format_half_side(box.half_side)} "
             f"convention={box.convention.value}"]
    for row in config.points:
        lines.append(" ".join(repr(float(c)) for c in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def format_half_side(value: float) -> str:
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def read_points(path) -> PointConfiguration:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise DomainError(f"{path}: missing header line")
    header = dict(tok.split("=", 1) for tok in lines[0][1:].split() if "=" in tok)
    try:
        box = BoxSpec(int(header["dim"]), float(header["half_side"]),
                      Convention(header.get("convention", "torus")))
    except (KeyError, ValueError) as exc:
        raise DomainError(f"{path}: bad header {lines[0]!r}") from exc
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        vals = [float(t) for t in line.split()]
        if len(vals) != box.dim:
            raise DomainError(f"{path}:{lineno}: expected {box.dim} coordinates")
        rows.append(vals)
    return PointConfiguration(box, np.array(rows, dtype=np.float64).reshape(-1, box.dim))
