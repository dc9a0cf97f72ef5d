"""Vertex covers: exact branch and bound, the constructive cover built from
non-end vertex removals, and exhaustive checks of the alpha/e bounds.

Graphs are handled internally as lists of neighbor bitmasks (Python ints),
with a second bitmask marking the vertices still alive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import DomainError, InstanceTooLargeError

DEFAULT_VERTEX_CAP = 64


@dataclass(frozen=True)
class SimpleGraph:
    vertex_count: int
    edges: frozenset

    def __init__(self, vertex_count: int, edges: Iterable[tuple[int, int]] = ()):
        if vertex_count < 0:
            raise DomainError("vertex_count must be nonnegative")
        norm = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise DomainError(f"loop at vertex {i}")
            if not (0 <= i < vertex_count and 0 <= j < vertex_count):
                raise DomainError(f"edge ({i}, {j}) out of range")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "vertex_count", int(vertex_count))
        object.__setattr__(self, "edges", frozenset(norm))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def masks(self) -> list[int]:
        adj = [0] * self.vertex_count
        for i, j in self.edges:
            adj[i] |= 1 << j
            adj[j] |= 1 << i
        return adj

    def is_connected(self) -> bool:
        if self.vertex_count == 0:
            return True
        adj = self.masks()
        full = (1 << self.vertex_count) - 1
        return _component_of(adj, full, 0) == full

    @classmethod
    def path(cls, v: int) -> "SimpleGraph":
        return cls(v, [(i, i + 1) for i in range(v - 1)])

    @classmethod
    def cycle(cls, v: int) -> "SimpleGraph":
        return cls(v, [(i, (i + 1) % v) for i in range(v)])

    @classmethod
    def complete(cls, v: int) -> "SimpleGraph":
        return cls(v, [(i, j) for i in range(v) for j in range(i + 1, v)])

    @classmethod
    def star(cls, leaves: int) -> "SimpleGraph":
        return cls(leaves + 1, [(0, k) for k in range(1, leaves + 1)])


@dataclass(frozen=True)
class CoverResult:
    size: int
    cover: tuple[int, ...]
    mode: str  # "exact" | "constructive"

    def as_dict(self) -> dict:
        return {"size": self.size, "cover": list(self.cover), "mode": self.mode}


def covers_all_edges(cover: Iterable[int], edges: Iterable[tuple[int, int]]) -> bool:
    s = set(cover)
    return all(i in s or j in s for i, j in edges)


# -- bitmask helpers ------------------------------------------------------------

def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _lowest(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _component_of(adj: list[int], alive: int, start: int) -> int:
    seen = 1 << start
    frontier = seen
    while frontier:
        nxt = 0
        for v in _bits(frontier):
            nxt |= adj[v]
        nxt &= alive & ~seen
        seen |= nxt
        frontier = nxt
    return seen


def _drop_isolated(adj: list[int], alive: int) -> int:
    for v in _bits(alive):
        if not adj[v] & alive:
            alive &= ~(1 << v)
    return alive


def _connected(adj: list[int], alive: int) -> bool:
    if not alive:
        return True
    return _component_of(adj, alive, _lowest(alive)) == alive


def _matching_bound(adj: list[int], alive: int) -> int:
    # greedy maximal matching: every cover needs one endpoint per matched edge
    free = alive
    size = 0
    for v in _bits(alive):
        if not free >> v & 1:
            continue
        nb = adj[v] & free & ~(1 << v)
        if nb:
            u = _lowest(nb)
            free &= ~((1 << v) | (1 << u))
            size += 1
    return size


class _Solver:
    """Exact minimum vertex cover size on induced subgraphs, memoized."""

    def __init__(self, adj: list[int]):
        self.adj = adj
        self.memo: dict[int, int] = {}

    def size(self, alive: int) -> int:
        adj = self.adj
        taken = 0
        # degree-0 / degree-1 reductions until stable
        changed = True
        while changed:
            changed = False
            for v in _bits(alive):
                if not alive >> v & 1:
                    continue
                nb = adj[v] & alive
                if nb == 0:
                    alive &= ~(1 << v)
                elif nb & (nb - 1) == 0:
                    alive &= ~((1 << v) | nb)
                    taken += 1
                    changed = True
        if not alive:
            return taken
        hit = self.memo.get(alive)
        if hit is not None:
            return taken + hit

        comp = _component_of(adj, alive, _lowest(alive))
        if comp != alive:
            best = self.size(comp) + self.size(alive & ~comp)
        else:
            best = self._branch(alive)
        self.memo[alive] = best
        return taken + best

    def _branch(self, alive: int) -> int:
        adj = self.adj
        pivot, pdeg = -1, -1
        for v in _bits(alive):
            deg = (adj[v] & alive).bit_count()
            if deg > pdeg:
                pivot, pdeg = v, deg
        count = alive.bit_count()
        if pdeg == 2:
            # connected, min degree 2 after reduction, max degree 2: a cycle
            return (count + 1) // 2
        lower = _matching_bound(adj, alive)
        nb = adj[pivot] & alive
        best = 1 + self.size(alive & ~(1 << pivot))
        if best > lower and nb.bit_count() < best:
            best = min(best, nb.bit_count() + self.size(alive & ~(1 << pivot) & ~nb))
        return best


def _lexmin_cover(solver: _Solver, alive: int) -> list[int]:
    adj = solver.adj
    target = solver.size(alive)
    cover = []
    for v in sorted(_bits(alive)):
        if not alive >> v & 1:
            continue
        nb = adj[v] & alive
        rest = alive & ~(1 << v)
        if not nb:
            alive = rest
            continue
        if 1 + solver.size(rest) == target:
            cover.append(v)
            target -= 1
            alive = rest
        else:
            forced = list(_bits(nb))
            cover.extend(forced)
            target -= len(forced)
            alive = rest & ~nb
    return sorted(cover)


def min_vertex_cover(g: SimpleGraph, vertex_cap: int = DEFAULT_VERTEX_CAP) -> CoverResult:
    """Exact minimum vertex cover, the lexicographically smallest among optima.

    Components are solved independently; any component with more than
    ``vertex_cap`` vertices raises :class:`InstanceTooLargeError`.
    """
    adj = g.masks()
    alive = _drop_isolated(adj, (1 << g.vertex_count) - 1)
    comps = []
    rest = alive
    while rest:
        comp = _component_of(adj, rest, _lowest(rest))
        if comp.bit_count() > vertex_cap:
            raise InstanceTooLargeError(
                f"component with {comp.bit_count()} vertices exceeds the exact cap of "
                f"{vertex_cap}; use constructive_cover")
        comps.append(comp)
        rest &= ~comp
    solver = _Solver(adj)
    cover = []
    for comp in comps:
        cover.extend(_lexmin_cover(solver, comp))
    cover.sort()
    return CoverResult(len(cover), tuple(cover), "exact")


def _nonend_vertex(adj: list[int], alive: int) -> int:
    for s in sorted(_bits(alive)):
        nb = adj[s] & alive
        if nb.bit_count() < 2:
            continue
        rest = _drop_isolated(adj, alive & ~(1 << s))
        if _connected(adj, rest):
            return s
    raise AssertionError("no admissible non-end vertex; input was not connected")


def nonend_removal_vertex(g: SimpleGraph) -> int:
    """Smallest non-end vertex whose removal keeps the graph connected.

    Removing the vertex, its edges and any vertices left isolated must
    leave a connected (possibly empty) graph.
    """
    if g.vertex_count < 3:
        raise DomainError("need at least 3 vertices")
    if not g.is_connected():
        raise DomainError("graph must be connected")
    return _nonend_vertex(g.masks(), (1 << g.vertex_count) - 1)


def constructive_cover(g: SimpleGraph) -> CoverResult:
    """Cover of size at most floor((e+1)/2) for a connected graph."""
    if not g.is_connected():
        raise DomainError("constructive_cover needs a connected graph")
    if g.edge_count < 1:
        raise DomainError("constructive_cover needs at least one edge")
    adj = g.masks()
    alive = (1 << g.vertex_count) - 1
    cover = []
    while alive and alive.bit_count() >= 3:
        s = _nonend_vertex(adj, alive)
        cover.append(s)
        alive = _drop_isolated(adj, alive & ~(1 << s))
    if alive:
        # a single remaining edge
        cover.append(_lowest(alive))
    cover.sort()
    return CoverResult(len(cover), tuple(cover), "constructive")


# -- exhaustive verification -------------------------------------------------

def edge_bit(i: int, j: int) -> int:
    """Bit index of edge {i, j}; edges to vertex k occupy bits C(k,2)..C(k+1,2)-1."""
    if i > j:
        i, j = j, i
    return j * (j - 1) // 2 + i


def decode_graph(v: int, code: int) -> SimpleGraph:
    edges = [(i, j) for j in range(v) for i in range(j) if code >> edge_bit(i, j) & 1]
    return SimpleGraph(v, edges)


def encode_graph(g: SimpleGraph) -> int:
    return sum(1 << edge_bit(i, j) for i, j in g.edges)


def extremal_ratio(v: int) -> Fraction:
    """max alpha/e over connected graphs on v vertices."""
    if v % 2:
        return Fraction(1, 2) + Fraction(1, 2 * v)
    return Fraction(1, 2) + Fraction(1, 2 * (v - 1))


def _keep_masks(v_low: int) -> np.ndarray:
    """For each subset h of the first v_low vertices, the edge mask on those
    vertices with every edge touching h removed."""
    bits = v_low * (v_low - 1) // 2
    full = (1 << bits) - 1
    incident = [0] * v_low
    for j in range(v_low):
        for i in range(j):
            b = 1 << edge_bit(i, j)
            incident[i] |= b
            incident[j] |= b
    keep = np.empty(1 << v_low, dtype=np.uint32)
    for h in range(1 << v_low):
        m = full
        for i in _bits(h):
            m &= ~incident[i]
        keep[h] = m
    return keep


def _mis_tables(max_v: int) -> list[np.ndarray]:
    """tables[v][code] = independence number of the labeled graph ``code`` on v vertices."""
    tables = [np.zeros(1, dtype=np.uint8), np.ones(1, dtype=np.uint8)]
    for v in range(2, max_v + 1):
        prev = tables[v - 1]
        low_bits = (v - 1) * (v - 2) // 2
        keep = _keep_masks(v - 1)
        low = np.arange(1 << low_bits, dtype=np.uint32)
        out = np.empty(len(keep) << low_bits, dtype=np.uint8)
        wide = prev.astype(np.int16)
        for h, km in enumerate(keep):
            # vertices of h are left isolated by the keep mask; discount them
            take = wide[low & km] + 1 - h.bit_count()
            out[h << low_bits:(h + 1) << low_bits] = np.maximum(wide, take)
        tables.append(out)
    return tables


def _low_adjacency(v_low: int) -> list[np.ndarray]:
    """Neighbor bitmask of each of the first v_low vertices, for every low code."""
    bits = v_low * (v_low - 1) // 2
    codes = np.arange(1 << bits, dtype=np.uint32)
    adj = [np.zeros(1 << bits, dtype=np.uint8) for _ in range(v_low)]
    for j in range(v_low):
        for i in range(j):
            e = ((codes >> np.uint32(edge_bit(i, j))) & np.uint32(1)).astype(np.uint8)
            adj[i] |= e << np.uint8(j)
            adj[j] |= e << np.uint8(i)
    return adj


def _connected_mask(h: int, v_low: int, adj_low: list[np.ndarray]) -> np.ndarray:
    """Which graphs (low code, last vertex adjacent to h) are connected."""
    size = adj_low[0].shape[0] if adj_low else 1
    full = (1 << v_low) - 1
    if h == 0:
        return np.zeros(size, dtype=bool)
    reach = np.full(size, h, dtype=np.uint8)
    for _ in range(v_low):
        nxt = reach.copy()
        for i in range(v_low):
            nxt |= adj_low[i] * ((reach >> np.uint8(i)) & np.uint8(1))
        if np.array_equal(nxt, reach):
            break
        reach = nxt
    return reach == full


@dataclass
class LevelReport:
    v: int
    connected_graphs: int
    max_ratio: Fraction
    expected_ratio: Fraction
    witness: tuple[tuple[int, int], ...]

    @property
    def matches(self) -> bool:
        return self.max_ratio == self.expected_ratio


@dataclass
class CoverBoundsReport:
    max_v: int
    levels: list[LevelReport] = field(default_factory=list)
    checked: dict[str, int] = field(default_factory=dict)
    violations: dict[str, list] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(self.violations.values()) and all(lv.matches for lv in self.levels)

    def as_dict(self) -> dict:
        return {
            "max_v": self.max_v,
            "levels": [
                {"v": lv.v, "connected_graphs": lv.connected_graphs,
                 "max_ratio": str(lv.max_ratio), "expected_ratio": str(lv.expected_ratio),
                 "witness": [list(e) for e in lv.witness], "matches": lv.matches}
                for lv in self.levels],
            "checked": dict(self.checked),
            "violations": {k: v for k, v in self.violations.items()},
            "ok": self.ok,
        }


_CHECKS = ("half_plus", "two_thirds", "three_fifths")


def verify_cover_bounds(max_v: int) -> CoverBoundsReport:
    """Enumerate every connected labeled graph on 2..max_v vertices and check
    alpha <= (e+1)/2, alpha <= 2e/3 (e >= 2), alpha <= 3e/5 (e >= 4), and the
    per-v maximum of alpha/e against its extremal value.
    """
    if not 3 <= max_v <= 8:
        raise DomainError(f"max_v must lie in [3, 8], got {max_v}")
    tables = _mis_tables(max_v - 1)
    report = CoverBoundsReport(max_v, checked={c: 0 for c in _CHECKS},
                               violations={c: [] for c in _CHECKS})
    for v in range(2, max_v + 1):
        v_low = v - 1
        low_bits = v_low * (v_low - 1) // 2
        prev = tables[v_low]
        keep = _keep_masks(v_low)
        adj_low = _low_adjacency(v_low)
        low = np.arange(1 << low_bits, dtype=np.uint32)
        low_edges = np.bitwise_count(low).astype(np.int64)
        best = (-1.0, None, None, None)
        total = 0
        for h, km in enumerate(keep.tolist()):
            conn = _connected_mask(h, v_low, adj_low)
            if not conn.any():
                continue
            take = prev[low[conn] & km].astype(np.int64) + 1 - h.bit_count()
            mis = np.maximum(prev[conn].astype(np.int64), take)
            alpha = v - mis
            e = low_edges[conn] + int(h).bit_count()
            codes = (np.uint64(h) << np.uint64(low_bits)) | low[conn].astype(np.uint64)
            total += int(conn.sum())
            _check(report, "half_plus", v, codes, 2 * alpha > e + 1, np.ones_like(conn[conn]))
            _check(report, "two_thirds", v, codes, 3 * alpha > 2 * e, e >= 2)
            _check(report, "three_fifths", v, codes, 5 * alpha > 3 * e, e >= 4)
            ratio = alpha / e
            k = int(np.argmax(ratio))
            # blocks arrive in increasing code order, so keep the first maximizer
            if ratio[k] > best[0]:
                best = (float(ratio[k]), int(codes[k]), int(alpha[k]), int(e[k]))
        _, code, a, e = best
        report.levels.append(LevelReport(
            v, total, Fraction(a, e), extremal_ratio(v),
            tuple(decode_graph(v, code).sorted_edges())))
    return report


def _check(report, name, v, codes, bad, applicable):
    report.checked[name] += int(np.count_nonzero(applicable))
    hits = np.flatnonzero(bad & applicable)
    for k in hits[: max(0, 5 - len(report.violations[name]))]:
        report.violations[name].append(
            {"v": v, "edges": [list(p) for p in decode_graph(v, int(codes[k])).sorted_edges()]})
