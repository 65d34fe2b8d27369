"""Tiles as labeled graphs with boundary, the inflation step and structural checks.

A tile at level n with root v holds the level-n paths ending at v.  Vertices are
indexed by inflation provenance: the copies of the source tiles are laid out in
the order of their top edges, so a vertex index is a copy offset plus the index
inside the copy.  Edges are stored per base label as an outgoing map (``-1``
marks a missing edge, i.e. an outgoing boundary half-edge).
"""
from __future__ import annotations

import bisect
import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .diagram import BratteliDiagram, path_counts


class InflationError(ValueError):
    """Inconsistent connector data or an invalid tile."""


@dataclass(frozen=True)
class Connector:
    """Two points joined by an involutive label, or a directed 3-cycle.

    ``points == (p, p)`` is a loop.  ``root`` is only needed at level 0, where
    every point is the empty path.
    """

    label: str
    points: tuple[tuple[int, ...], ...]
    root: Optional[int] = None

    @property
    def arity(self) -> int:
        return len(self.points)

    def directed_edges(self) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        pts = self.points
        if len(pts) == 2:
            p, q = pts
            return [(p, p)] if p == q else [(p, q), (q, p)]
        if len(pts) == 3:
            return [(pts[0], pts[1]), (pts[1], pts[2]), (pts[2], pts[0])]
        raise InflationError("connector arity must be 2 or 3")


@dataclass(frozen=True)
class HalfEdge:
    at: tuple[int, ...]
    label: str
    direction: str


@dataclass(frozen=True)
class Block:
    level: int
    members: frozenset


@dataclass
class Tile:
    level: int
    root: int
    size: int
    labels: tuple[str, ...]
    out: dict[str, np.ndarray]
    copies: list[tuple[int, "Tile", int]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._offsets = [off for _, _, off in self.copies]
        self._by_edge = {e: (t, off) for e, t, off in self.copies}

    # provenance lookups ---------------------------------------------------
    def index_of(self, p: Sequence[int]) -> int:
        if self.level == 0:
            if len(p):
                raise InflationError("level-0 tile holds only the empty path")
            return 0
        e = p[-1]
        if e not in self._by_edge:
            raise InflationError(f"path {tuple(p)} is not in tile ({self.level},{self.root})")
        child, off = self._by_edge[e]
        return off + child.index_of(p[:-1])

    def path_of(self, i: int) -> tuple[int, ...]:
        if self.level == 0:
            return ()
        k = bisect.bisect_right(self._offsets, i) - 1
        e, child, off = self.copies[k]
        return child.path_of(i - off) + (e,)

    @property
    def vertices(self) -> list[tuple[int, ...]]:
        return [self.path_of(i) for i in range(self.size)]

    def inn(self, label: str) -> np.ndarray:
        out = self.out[label]
        res = np.full(self.size, -1, dtype=np.int64)
        src = np.nonzero(out >= 0)[0]
        res[out[src]] = src
        return res

    def edges(self) -> Iterable[tuple[tuple[int, ...], tuple[int, ...], str]]:
        for lab in self.labels:
            out = self.out[lab]
            for i in np.nonzero(out >= 0)[0]:
                yield self.path_of(int(i)), self.path_of(int(out[i])), lab

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        for lab in self.labels:
            mask |= self.out[lab] < 0
            mask |= self.inn(lab) < 0
        return mask

    def adjacency(self) -> csr_matrix:
        rows, cols = [], []
        for lab in self.labels:
            out = self.out[lab]
            src = np.nonzero(out >= 0)[0]
            dst = out[src]
            keep = src != dst
            rows.append(src[keep])
            cols.append(dst[keep])
        r = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
        c = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
        data = np.ones(len(r), dtype=np.int8)
        m = csr_matrix((data, (r, c)), shape=(self.size, self.size))
        m = ((m + m.T) > 0).astype(np.int8)
        return m

    def is_connected(self) -> bool:
        if self.size <= 1:
            return True
        k, _ = connected_components(self.adjacency(), directed=False)
        return k == 1


# construction ------------------------------------------------------------------

def base_tiles(diagram: BratteliDiagram, labels: Sequence[str], loops: Iterable[Connector]) -> dict[int, Tile]:
    """Level-0 tiles: one vertex per vertex of V_1, plus level-0 loops."""
    tiles = {}
    for v in range(diagram.level(1).n_src):
        tiles[v] = Tile(0, v, 1, tuple(labels), {lab: np.full(1, -1, dtype=np.int64) for lab in labels})
    for con in loops:
        if con.points != ((), ()):
            raise InflationError("level-0 connectors must be loops")
        t = tiles[con.root]
        if t.out[con.label][0] >= 0:
            raise InflationError("label collision at level 0")
        t.out[con.label][0] = 0
    return tiles


def inflate(
    diagram: BratteliDiagram,
    tiles: dict[int, Tile],
    connectors: Iterable[Connector],
    n: int,
) -> dict[int, Tile]:
    """Glue copies of the level-(n-1) tiles along the level-n connectors."""
    lv = diagram.level(n)
    labels = next(iter(tiles.values())).labels
    new: dict[int, Tile] = {}
    for v in range(lv.n_rng):
        copies = []
        off = 0
        outs: dict[str, list[np.ndarray]] = {lab: [] for lab in labels}
        for e in lv.in_edges(v):
            child = tiles[lv.src[e]]
            copies.append((e, child, off))
            for lab in labels:
                o = child.out[lab]
                outs[lab].append(np.where(o >= 0, o + off, -1))
            off += child.size
        out = {lab: np.concatenate(outs[lab]) for lab in labels}
        new[v] = Tile(n, v, off, tuple(labels), out, copies)
    inn = {v: {lab: t.inn(lab) for lab in labels} for v, t in new.items()}
    for con in connectors:
        if con.label not in labels:
            raise InflationError(f"unknown label {con.label}")
        roots = {lv.rng[p[-1]] for p in con.points if len(p) == n}
        if len(roots) != 1 or any(len(p) != n for p in con.points):
            raise InflationError(f"connector {con} does not lie in one level-{n} tile")
        t = new[roots.pop()]
        for p, q in con.directed_edges():
            i, j = t.index_of(p), t.index_of(q)
            if t.out[con.label][i] >= 0 or inn[t.root][con.label][j] >= 0:
                raise InflationError(f"connector {con} touches a non-admissible point")
            t.out[con.label][i] = j
            inn[t.root][con.label][j] = i
    for t in new.values():
        if not t.is_connected():
            raise InflationError(f"tile ({n},{t.root}) is disconnected")
    return new


class TileSet:
    """Explicit tiles of a family for levels 0..N."""

    def __init__(self, family, N: int) -> None:
        self.family = family
        self.N = N
        self.levels: list[dict[int, Tile]] = []
        t = base_tiles(family.diagram, family.labels, family.connectors(0))
        self.levels.append(t)
        for n in range(1, N + 1):
            t = inflate(family.diagram, t, family.connectors(n), n)
            self.levels.append(t)

    def tile(self, n: int, v: int) -> Tile:
        return self.levels[n][v]

    def walk(self, label: str, p: tuple[int, ...], start: Optional[int] = None) -> Optional[tuple[int, ...]]:
        """Follow the edge labeled ``label`` (or its inverse, if capitalized) from p; None at a boundary."""
        n = len(p)
        v = start if n == 0 else self.family.diagram.level(n).rng[p[-1]]
        t = self.levels[n][v]
        i = t.index_of(p)
        if label in t.out:
            j = int(t.out[label][i])
        else:
            j = int(t.inn(self.family.base_of(label))[i])
        return None if j < 0 else t.path_of(j)


def build_tiles(family, N: int) -> TileSet:
    return TileSet(family, N)


# queries ----------------------------------------------------------------------------

def boundary_points(t: Tile) -> list[tuple[tuple[int, ...], tuple[HalfEdge, ...]]]:
    res = []
    inns = {lab: t.inn(lab) for lab in t.labels}
    for i in np.nonzero(t.boundary_mask())[0]:
        p = t.path_of(int(i))
        hes = []
        for lab in t.labels:
            if t.out[lab][i] < 0:
                hes.append(HalfEdge(p, lab, "outgoing"))
            if inns[lab][i] < 0:
                hes.append(HalfEdge(p, lab, "incoming"))
        res.append((p, tuple(hes)))
    return res


def _bfs(adj: csr_matrix, sources: Sequence[int]) -> np.ndarray:
    return shortest_path(adj, method="D", unweighted=True, directed=False, indices=list(sources))


def diameter(t: Tile) -> int:
    """Exact graph diameter (loops and multiplicities ignored) by the iFUB scheme."""
    if t.size == 1:
        return 0
    if not t.is_connected():
        raise InflationError("diameter of a disconnected tile")
    adj = t.adjacency()
    d0 = _bfs(adj, [0])[0]
    a = int(np.argmax(d0))
    da = _bfs(adj, [a])[0]
    b = int(np.argmax(da))
    db = _bfs(adj, [b])[0]
    # midpoint of the sweep path as the iFUB root
    target = da[b] / 2
    mids = np.nonzero((da + db == da[b]) & (np.abs(da - target) <= 0.5))[0]
    u = int(mids[0]) if len(mids) else a
    du = _bfs(adj, [u])[0]
    ecc_u = int(du.max())
    lb = max(int(da[b]), ecc_u)
    i = ecc_u
    while i > 0 and 2 * i > lb:
        fringe = np.nonzero(du == i)[0]
        for chunk in range(0, len(fringe), 256):
            dist = _bfs(adj, fringe[chunk : chunk + 256])
            lb = max(lb, int(dist.max()))
        if lb >= 2 * (i - 1):
            break
        i -= 1
    return lb


def max_boundary_distance(t: Tile) -> int:
    idx = np.nonzero(t.boundary_mask())[0]
    if len(idx) < 2:
        return 0
    dist = _bfs(t.adjacency(), idx)
    return int(dist[:, idx].max())


def tile_cardinalities(family, N: int) -> list[list[int]]:
    """Row n (0..N) lists |T_{v,n}| for v in V_{n+1}, counted by inflation provenance."""
    d = family.diagram
    rows = [[1] * d.level(1).n_src]
    for n in range(1, N + 1):
        lv = d.level(n)
        row = [0] * lv.n_rng
        for v in range(lv.n_rng):
            row[v] = sum(rows[-1][lv.src[e]] for e in lv.in_edges(v))
        rows.append(row)
    return rows


def cardinalities_csv(rows: list[list[int]], diameters: Optional[list[list[int]]] = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    width = len(rows[0])
    head = ["level"] + [f"card_{v}" for v in range(width)]
    if diameters is not None:
        head += [f"diam_{v}" for v in range(width)]
    w.writerow(head)
    for n, row in enumerate(rows):
        line = [n] + list(row)
        if diameters is not None:
            line += list(diameters[n])
        w.writerow(line)
    return buf.getvalue()


# structural checks -----------------------------------------------------------

def blocks_at(family, n: int) -> dict[int, list[frozenset]]:
    """Blocks of boundary points of each level-n tile (root -> list of blocks).

    Two boundary points share a block when some common edge continues both to
    boundary points one level up.
    """
    d = family.diagram
    pts = sorted(family.boundary_points_all(n))
    nxt = set(family.boundary_points_all(n + 1))
    parent = {p: p for p in pts}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    by_root: dict[int, list] = {}
    for p in pts:
        by_root.setdefault(family.end_of(p), []).append(p)
    for root, group in by_root.items():
        for e in d.level(n + 1).out_edges(root):
            cont = [p for p in group if family.extend(p, e) in nxt]
            for x, y in zip(cont, cont[1:]):
                parent[find(x)] = find(y)
    res: dict[int, list[frozenset]] = {}
    for root, group in sorted(by_root.items()):
        cls: dict = {}
        for p in group:
            cls.setdefault(find(p), set()).add(p)
        res[root] = sorted((frozenset(s) for s in cls.values()), key=lambda s: sorted(s))
    return res


@dataclass
class ExpansionReport:
    passed: bool
    step: Optional[int]
    cuts: tuple[int, ...]
    violations: list[dict]
    horizon_truncated: bool = True


def check_expansion(family, levels: range, window: int) -> ExpansionReport:
    """Search uniform telescoping steps 1..window for which blocks come from distinct copies."""
    lo, hi = levels.start, levels.stop - 1
    if hi <= lo:
        return ExpansionReport(True, 1, (lo,), [])
    last: list[dict] = []
    for k in range(1, window + 1):
        cuts = tuple(range(lo, hi + 1, k))
        violations = []
        for a, b in zip(cuts, cuts[1:]):
            for root, blocks in blocks_at(family, b).items():
                for B1, B2 in itertools.combinations(blocks, 2):
                    c1 = {tuple(x[a:b]) for x in B1}
                    c2 = {tuple(y[a:b]) for y in B2}
                    if c1 & c2:
                        violations.append({"level": b, "root": root, "copy": sorted(c1 & c2)[0]})
        if not violations:
            return ExpansionReport(True, k, cuts, [])
        last = violations
    return ExpansionReport(False, None, (), last)


@dataclass
class RepetitivityReport:
    table: dict[int, Optional[int]]
    bounded: bool
    sup_vertices: int
    sup_edges: int


def check_linear_repetitivity(family, N: int) -> RepetitivityReport:
    """l(n): least l such that each level-(n+l) tile holds copies of every level-n tile."""
    d = family.diagram
    table: dict[int, Optional[int]] = {}
    for n in range(1, N):
        nv = d.level(n + 1).n_src
        reach = [{u} for u in range(nv)]  # for vertices at V_{n+1}
        found = None
        for l in range(1, N - n + 1):
            lv = d.level(n + l)
            new = [set() for _ in range(lv.n_rng)]
            for e in range(len(lv.names)):
                new[lv.rng[e]] |= reach[lv.src[e]]
            reach = new
            if all(len(r) == nv for r in reach):
                found = l
                break
        table[n] = found
    sv, se = d.sup_counts(N) if N >= 1 else (0, 0)
    vals = [v for v in table.values() if v is not None]
    decided = [v for n, v in table.items() if n + (max(vals) if vals else 0) <= N]
    bounded = all(v is not None for v in decided) and bool(vals or not table)
    return RepetitivityReport(table, bounded, sv, se)


def tiles_to_dot(t: Tile, diagram: BratteliDiagram, name: str = "tile") -> str:
    lines = [f'digraph "{name}" {{']
    paths = t.vertices
    fmt = [diagram.format_path(p) if p else "()" for p in paths]
    for i, s in enumerate(fmt):
        lines.append(f'  n{i} [label="{s}"];')
    inns = {lab: t.inn(lab) for lab in t.labels}
    for lab in t.labels:
        out = t.out[lab]
        for i in range(t.size):
            j = int(out[i])
            if j >= 0:
                lines.append(f'  n{i} -> n{j} [label="{lab}"];')
            else:
                lines.append(f'  h{lab}o{i} [shape=point]; n{i} -> h{lab}o{i} [label="{lab}", style=dashed];')
            if inns[lab][i] < 0:
                lines.append(f'  h{lab}i{i} [shape=point]; h{lab}i{i} -> n{i} [label="{lab}", style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def diameter_ratios(diams: Sequence[int]) -> list[float]:
    return [b / a if a else math.nan for a, b in zip(diams, diams[1:])]


def check_counts_against_paths(family, N: int) -> bool:
    rows = tile_cardinalities(family, N)
    return rows[1:] == path_counts(family.diagram, N)
