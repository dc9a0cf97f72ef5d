"""Proximity graphs G_d(sigma) and their component census.

Vertices are the points of a configuration, edges join pairs at distance
``<= d`` under the box convention.  Neighbor search bins points into a
grid of cells with side at least ``d``; only the 3^n surrounding cells of
each point are scanned.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DomainError, ThresholdTooLargeError
from .pointfield import PointConfiguration, pairwise_distances


@dataclass(frozen=True, eq=False)
class ProximityGraph:
    threshold: float
    vertex_count: int
    edges: np.ndarray  # (M, 2) int64, rows (i, j) with i < j, lexicographic order

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.vertex_count)

    @cached_property
    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for i, j in self.edges.tolist():
            adj[i].append(j)
            adj[j].append(i)
        for nb in adj:
            nb.sort()
        return adj

    def edge_set(self) -> set[tuple[int, int]]:
        return {(i, j) for i, j in self.edges.tolist()}


@dataclass(frozen=True)
class ComponentCensus:
    M: int
    M1: int
    M2: int
    M3: int
    components: tuple[tuple[tuple[int, ...], int], ...] = field(repr=False)

    def nontrivial(self):
        """Components that carry at least one edge."""
        return [c for c in self.components if c[1] > 0]

    def as_dict(self) -> dict:
        return {"M": self.M, "M1": self.M1, "M2": self.M2, "M3": self.M3,
                "components_with_edges": len(self.nontrivial())}


def _pair_distances(pts: np.ndarray, i: np.ndarray, j: np.ndarray, side: float | None) -> np.ndarray:
    # axis-ordered accumulation, identical to pointfield.torus_distance
    acc = np.zeros(i.shape[0])
    for ax in range(pts.shape[1]):
        diff = np.abs(pts[i, ax] - pts[j, ax])
        if side is not None:
            diff = np.minimum(diff, side - diff)
        acc += diff * diff
    return np.sqrt(acc)


def _finish(edges_i: np.ndarray, edges_j: np.ndarray, d: float, k: int) -> ProximityGraph:
    edges = np.stack([edges_i, edges_j], axis=1).astype(np.int64).reshape(-1, 2)
    if edges.shape[0]:
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
    edges.flags.writeable = False
    return ProximityGraph(float(d), k, edges)


def build_graph_dense(config: PointConfiguration, d: float) -> ProximityGraph:
    """All-pairs construction; valid for any ``d``."""
    if not d > 0:
        raise DomainError(f"threshold must be positive, got {d!r}")
    k = len(config)
    if k < 2:
        return _finish(np.empty(0), np.empty(0), d, k)
    dist = pairwise_distances(config)
    i, j = np.nonzero(np.triu(dist <= d, 1))
    return _finish(i, j, d, k)


def build_graph(config: PointConfiguration, d: float, dense: bool = False) -> ProximityGraph:
    """Build G_d(sigma) by cell-list search.

    ``d >= N`` is refused unless ``dense=True``, which switches to the
    O(k^2) all-pairs construction.
    """
    if not d > 0:
        raise DomainError(f"threshold must be positive, got {d!r}")
    box = config.box
    if dense:
        return build_graph_dense(config, d)
    if d >= box.half_side:
        raise ThresholdTooLargeError(
            f"threshold {d} >= half side {box.half_side}: too large for cell decomposition "
            "(pass dense=True for the all-pairs fallback)")
    pts = config.points
    k, n = pts.shape
    if k < 2:
        return _finish(np.empty(0), np.empty(0), d, k)

    m = max(1, int(math.floor(box.side / d)))
    cell_side = box.side / m
    coords = np.floor((pts + box.half_side) / cell_side).astype(np.int64)
    np.clip(coords, 0, m - 1, out=coords)
    strides = m ** np.arange(n, dtype=np.int64)
    cell_id = coords @ strides
    order = np.argsort(cell_id, kind="stable")
    counts = np.bincount(cell_id, minlength=m ** n)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))

    if box.is_torus:
        offsets = {tuple(o % m for o in off) for off in itertools.product((-1, 0, 1), repeat=n)}
        side = box.side
    else:
        offsets = set(itertools.product((-1, 0, 1), repeat=n))
        side = None

    all_i, all_j = [], []
    idx = np.arange(k, dtype=np.int64)
    for off in sorted(offsets):
        nc = coords + np.array(off, dtype=np.int64)
        if box.is_torus:
            nc %= m
            valid = idx
        else:
            ok = np.all((nc >= 0) & (nc < m), axis=1)
            valid = idx[ok]
            nc = nc[ok]
        nid = nc @ strides
        cnt = counts[nid]
        total = int(cnt.sum())
        if total == 0:
            continue
        ii = np.repeat(valid, cnt)
        # position within the neighbor cell for each repeated entry
        run_start = np.repeat(np.cumsum(cnt) - cnt, cnt)
        local = np.arange(total, dtype=np.int64) - run_start
        jj = order[np.repeat(starts[nid], cnt) + local]
        keep = ii < jj
        ii, jj = ii[keep], jj[keep]
        close = _pair_distances(pts, ii, jj, side) <= d
        all_i.append(ii[close])
        all_j.append(jj[close])
    if all_i:
        return _finish(np.concatenate(all_i), np.concatenate(all_j), d, k)
    return _finish(np.empty(0), np.empty(0), d, k)


def local_count(x_index: int, graph: ProximityGraph) -> int:
    """m(x, d, sigma): number of other points within distance d of x."""
    if not 0 <= x_index < graph.vertex_count:
        raise IndexError(f"vertex {x_index} out of range [0, {graph.vertex_count})")
    return int(graph.degrees[x_index])


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, a: int) -> int:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def component_census(graph: ProximityGraph) -> ComponentCensus:
    """Connected components with counts M, M1, M2, M3."""
    k = graph.vertex_count
    uf = _UnionFind(k)
    edges = graph.edges.tolist()
    for i, j in edges:
        uf.union(i, j)
    members: dict[int, list[int]] = {}
    for v in range(k):
        members.setdefault(uf.find(v), []).append(v)
    ecount: dict[int, int] = {}
    for i, _ in edges:
        r = uf.find(i)
        ecount[r] = ecount.get(r, 0) + 1
    comps = []
    m1 = m2 = m3 = 0
    for root in sorted(members, key=lambda r: members[r][0]):
        verts = tuple(members[root])
        e = ecount.get(root, 0)
        comps.append((verts, e))
        if len(verts) == 2 and e == 1:
            m1 += 1
        elif len(verts) == 3 and e == 2:
            m2 += 1
        elif len(verts) == 3 and e == 3:
            m3 += 1
    return ComponentCensus(len(edges), m1, m2, m3, tuple(comps))


# -- edge-list format --------------------------------------------------------

def write_edge_list(graph: ProximityGraph, path) -> None:
    lines = [f"# vertices={graph.vertex_count} threshold={graph.threshold!r}"]
    lines += [f"{i} {j}" for i, j in graph.edges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_edge_list(path) -> tuple[int, float | None, list[tuple[int, int]]]:
    """Parse an edge-list file into ``(vertex_count, threshold, edges)``."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    vertices = None
    threshold = None
    edges = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "vertices":
                    vertices = int(val)
                elif key == "threshold":
                    threshold = float(val)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DomainError(f"{path}:{lineno}: expected 'i j'")
        i, j = int(parts[0]), int(parts[1])
        if i == j or i < 0 or j < 0:
            raise DomainError(f"{path}:{lineno}: invalid edge {i} {j}")
        edges.append((min(i, j), max(i, j)))
    if vertices is None:
        vertices = 1 + max((j for _, j in edges), default=-1)
    if any(j >= vertices for _, j in edges):
        raise DomainError(f"{path}: edge endpoint exceeds vertex count {vertices}")
    return vertices, threshold, sorted(set(edges))
