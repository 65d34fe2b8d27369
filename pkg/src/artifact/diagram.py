"""Bratteli diagrams, finite paths, telescoping and the two concrete builders.

Paths are stored internally as tuples of per-level edge indices, bottom level
first: ``p[0]`` is the level-1 edge.  Display order is right to left, so the
highest-level edge is printed first.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence


class DiagramError(ValueError):
    """Invalid diagram construction or query."""


@dataclass(frozen=True)
class EdgeLevel:
    """Edge set E_n with source map into V_n and range map into V_{n+1}."""

    names: tuple[str, ...]
    src: tuple[int, ...]
    rng: tuple[int, ...]
    src_names: tuple[str, ...]
    rng_names: tuple[str, ...]

    @property
    def n_src(self) -> int:
        return len(self.src_names)

    @property
    def n_rng(self) -> int:
        return len(self.rng_names)

    def __post_init__(self) -> None:
        if not self.names:
            raise DiagramError("empty edge set")
        if not (len(self.names) == len(self.src) == len(self.rng)):
            raise DiagramError("edge tables of unequal length")
        if set(self.src) != set(range(self.n_src)):
            raise DiagramError("source map is not surjective")
        if set(self.rng) != set(range(self.n_rng)):
            raise DiagramError("range map is not surjective")

    def index(self, name: str) -> int:
        return self.names.index(name)

    def out_edges(self, v: int) -> list[int]:
        return [e for e, s in enumerate(self.src) if s == v]

    def in_edges(self, v: int) -> list[int]:
        return [e for e, r in enumerate(self.rng) if r == v]


@dataclass(frozen=True)
class Path:
    """A finite path e_n ... e_1 together with its end vertex in V_{n+1}."""

    edges: tuple[int, ...]
    level: int
    end_vertex: int


@dataclass(frozen=True)
class TelescopeMap:
    cuts: tuple[int, ...]
    step_bound: Optional[int] = None

    def __post_init__(self) -> None:
        if len(self.cuts) < 2 or self.cuts[0] != 1:
            raise DiagramError("cuts must start at 1 and have at least two entries")
        if any(b <= a for a, b in zip(self.cuts, self.cuts[1:])):
            raise DiagramError("cuts must be strictly increasing")
        if self.step_bound is not None and any(
            b - a > self.step_bound for a, b in zip(self.cuts, self.cuts[1:])
        ):
            raise DiagramError("cuts violate the step bound")


class BratteliDiagram:
    """Lazily materialized leveled multigraph.

    ``provider(n)`` returns the EdgeLevel for E_n.
    """

    def __init__(
        self,
        provider: Callable[[int], EdgeLevel],
        max_materialized: int,
        name: str = "diagram",
        joiner: str = "",
    ) -> None:
        if max_materialized < 1:
            raise DiagramError("levels must be >= 1")
        self._provider = provider
        self.max_materialized = max_materialized
        self.name = name
        self.joiner = joiner
        self._levels: dict[int, EdgeLevel] = {}
        self._lock = threading.Lock()

    def level(self, n: int) -> EdgeLevel:
        if n < 1 or n > self.max_materialized:
            raise DiagramError(f"level {n} outside 1..{self.max_materialized}")
        got = self._levels.get(n)
        if got is None:
            with self._lock:
                got = self._levels.get(n)
                if got is None:
                    got = self._provider(n)
                    self._levels[n] = got
        return got

    def vertices(self, n: int) -> tuple[str, ...]:
        """Vertex names of V_n for 1 <= n <= max_materialized + 1."""
        if n == self.max_materialized + 1:
            return self.level(n - 1).rng_names
        return self.level(n).src_names

    def vertex_index(self, n: int, name: str) -> int:
        names = self.vertices(n)
        if name in names:
            return names.index(name)
        raise DiagramError(f"unknown vertex {name!r} at level {n}")

    # path helpers -------------------------------------------------------
    def end_vertex(self, p: Sequence[int], start: Optional[int] = None) -> int:
        if not p:
            if start is None:
                raise DiagramError("empty path needs an explicit vertex")
            return start
        return self.level(len(p)).rng[p[-1]]

    def is_path(self, p: Sequence[int]) -> bool:
        for i in range(1, len(p)):
            if self.level(i).rng[p[i - 1]] != self.level(i + 1).src[p[i]]:
                return False
        return True

    def format_path(self, p: Sequence[int], start: Optional[int] = None) -> str:
        if not p:
            v = "?" if start is None else self.vertices(1)[start]
            return f"()_{v}"
        return self.joiner.join(self.level(i + 1).names[e] for i, e in reversed(list(enumerate(p))))

    def parse_path(self, text: str) -> tuple[int, ...]:
        """Parse whitespace/comma separated edge names written top level first."""
        toks = [t for t in text.replace(",", " ").split() if t]
        n = len(toks)
        out = []
        for i, t in enumerate(reversed(toks)):
            lv = self.level(i + 1)
            if t not in lv.names:
                raise DiagramError(f"unknown edge {t!r} at level {i + 1}")
            out.append(lv.index(t))
        p = tuple(out)
        if not self.is_path(p) or len(p) != n:
            raise DiagramError(f"not a composable path: {text!r}")
        return p

    def to_path(self, p: Sequence[int], start: Optional[int] = None) -> Path:
        return Path(tuple(p), len(p), self.end_vertex(p, start))

    def sup_counts(self, n_max: int) -> tuple[int, int]:
        nv = max(len(self.vertices(n)) for n in range(1, n_max + 1))
        ne = max(len(self.level(n).names) for n in range(1, n_max + 1))
        return nv, ne

    # exports ---------------------------------------------------------------
    def to_json(self, n_max: int) -> str:
        levels = []
        for n in range(1, n_max + 1):
            lv = self.level(n)
            levels.append(
                {
                    "level": n,
                    "vertices": list(self.vertices(n)),
                    "edges": [
                        {"id": nm, "source": lv.src_names[s], "range": lv.rng_names[r]}
                        for nm, s, r in zip(lv.names, lv.src, lv.rng)
                    ],
                }
            )
        return json.dumps({"name": self.name, "levels": levels}, indent=2, sort_keys=True)

    def to_dot(self, n_from: int, n_to: int) -> str:
        lines = [f'digraph "{self.name}" {{', "  rankdir=BT;"]
        for n in range(n_from, n_to + 2):
            for v in self.vertices(n):
                lines.append(f'  "V{n}_{v}" [label="{v}"];')
        for n in range(n_from, n_to + 1):
            lv = self.level(n)
            for nm, s, r in zip(lv.names, lv.src, lv.rng):
                lines.append(f'  "V{n}_{lv.src_names[s]}" -> "V{n + 1}_{lv.rng_names[r]}" [label="{nm}^({n})"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


# enumeration -----------------------------------------------------------------

def iter_path_tuples(B: BratteliDiagram, n: int, end: Optional[int] = None) -> Iterator[tuple[int, ...]]:
    """All level-n paths (optionally ending at ``end``) in lexicographic order of (e_n, ..., e_1)."""
    if n == 0:
        yield ()
        return

    def rec(level: int, v: int) -> Iterator[tuple[int, ...]]:
        lv = B.level(level)
        for e in lv.in_edges(v):
            if level == 1:
                yield (e,)
            else:
                for q in rec(level - 1, lv.src[e]):
                    yield q + (e,)

    lv = B.level(n)
    ends = range(lv.n_rng) if end is None else [end]
    for v in ends:
        yield from rec(n, v)


def all_paths(B: BratteliDiagram, n: int) -> list[tuple[int, ...]]:
    return list(iter_path_tuples(B, n))


def enumerate_paths(B: BratteliDiagram, n: int, end: int) -> list[Path]:
    if n < 1:
        raise DiagramError("level must be >= 1")
    lv = B.level(n)
    if not 0 <= end < lv.n_rng:
        raise DiagramError(f"unknown vertex {end} at level {n + 1}")
    return [Path(p, n, end) for p in iter_path_tuples(B, n, end)]


def path_counts(B: BratteliDiagram, n_max: int) -> list[list[int]]:
    """Dynamic-programming path counts: row n holds #paths(n, v) for v in V_{n+1}."""
    lv1 = B.level(1)
    counts = [[sum(1 for r in lv1.rng if r == v) for v in range(lv1.n_rng)]]
    for n in range(2, n_max + 1):
        lv = B.level(n)
        row = [0] * lv.n_rng
        for s, r in zip(lv.src, lv.rng):
            row[r] += counts[-1][s]
        counts.append(row)
    return counts


# builders --------------------------------------------------------------------

def _cf_level(c: int) -> EdgeLevel:
    """Floors I_0..I_c (range 0) and J_0..J_{c-1} (range 1); I_0, J_0 start at 0."""
    names = tuple([f"I_{k}" for k in range(c + 1)] + [f"J_{k}" for k in range(c)])
    src = tuple([0] + [1] * c + [0] + [1] * (c - 1))
    rng = tuple([0] * (c + 1) + [1] * c)
    return EdgeLevel(names, src, rng, ("0", "1"), ("0", "1"))


def cf_term(c: Sequence[int], n: int, periodic: bool) -> int:
    """c_{n-1}, the term governing level n."""
    if n - 1 < len(c):
        return c[n - 1]
    if periodic:
        return c[(n - 1) % len(c)]
    raise DiagramError(f"c has no term for level {n}")


def build_cf_diagram(c: Sequence[int], levels: int, periodic: bool = False) -> BratteliDiagram:
    c = tuple(int(x) for x in c)
    if levels <= 0:
        raise DiagramError("levels must be >= 1")
    if not c or any(x <= 0 for x in c):
        raise DiagramError("c terms must be >= 1")
    if not periodic and len(c) < levels:
        raise DiagramError("c has fewer terms than levels")
    return BratteliDiagram(
        lambda n: _cf_level(cf_term(c, n, periodic)), levels, name=f"cf{list(c)}"
    )


def check_one_three_word(w: str, periodic: bool, gap_bound: Optional[int] = None) -> str:
    if not w or set(w) - {"1", "3"}:
        raise DiagramError("w must be a nonempty word over {1,3}")
    probe = w + w if periodic else w
    if "33" in probe:
        raise DiagramError("w contains the factor 33")
    if gap_bound is not None:
        ones = max((len(run) for run in probe.split("3")), default=0)
        if ones + 1 > gap_bound or (periodic and "3" not in w):
            raise DiagramError("gap between consecutive 3s exceeds the bound")
    return w


def word_term(w: str, n: int, periodic: bool) -> int:
    if n - 1 < len(w):
        return int(w[n - 1])
    if periodic:
        return int(w[(n - 1) % len(w)])
    raise DiagramError(f"w has no letter for level {n}")


def _one_three_level(wn: int) -> EdgeLevel:
    if wn == 1:
        names, src, rng = ("0", "e1", "e2"), (0, 0, 1), (0, 1, 0)
    else:
        names, src, rng = ("0", "1", "2", "e1", "e2"), (0, 0, 0, 0, 1), (0, 0, 0, 1, 0)
    return EdgeLevel(names, src, rng, ("L", "R"), ("L", "R"))


def build_one_three_diagram(
    w: str, levels: int, periodic: bool = False, gap_bound: Optional[int] = None
) -> BratteliDiagram:
    check_one_three_word(w, periodic, gap_bound)
    if levels <= 0:
        raise DiagramError("levels must be >= 1")
    if not periodic and len(w) < levels:
        raise DiagramError("w has fewer letters than levels")
    return BratteliDiagram(
        lambda n: _one_three_level(word_term(w, n, periodic)), levels, name=f"one-three[{w}]"
    )


# telescoping -----------------------------------------------------------------

@dataclass
class TelescopedDiagram:
    """Result of telescoping: the new diagram plus the flattening bijection."""

    diagram: BratteliDiagram
    cuts: TelescopeMap
    segments: dict[int, list[tuple[int, ...]]] = field(default_factory=dict)

    def flatten(self, p: Sequence[int]) -> tuple[int, ...]:
        out: tuple[int, ...] = ()
        for i, e in enumerate(p):
            out += self.segments[i + 1][e]
        return out

    def unflatten(self, q: Sequence[int]) -> tuple[int, ...]:
        out = []
        for i in range(len(self.cuts.cuts) - 1):
            a, b = self.cuts.cuts[i], self.cuts.cuts[i + 1]
            if b - 1 > len(q):
                break
            out.append(self.segments[i + 1].index(tuple(q[a - 1 : b - 1])))
        return tuple(out)


def _segments(B: BratteliDiagram, a: int, b: int) -> list[tuple[int, ...]]:
    """All edge sequences at levels a..b-1, composable, in lexicographic order."""
    segs: list[tuple[int, ...]] = [(e,) for e in range(len(B.level(a).names))]
    for lvl in range(a + 1, b):
        lv, prev = B.level(lvl), B.level(lvl - 1)
        segs = [s + (e,) for s in segs for e in lv.out_edges(prev.rng[s[-1]])]
    return sorted(segs, key=lambda s: tuple(reversed(s)))


def telescope(B: BratteliDiagram, t: TelescopeMap) -> TelescopedDiagram:
    cuts = t.cuts
    if cuts[-1] - 1 > B.max_materialized:
        raise DiagramError("cuts exceed materialized levels")
    segs: dict[int, list[tuple[int, ...]]] = {}
    levels: dict[int, EdgeLevel] = {}
    for i in range(len(cuts) - 1):
        a, b = cuts[i], cuts[i + 1]
        ss = _segments(B, a, b)
        segs[i + 1] = ss
        names = tuple(
            ".".join(B.level(a + j).names[e] for j, e in reversed(list(enumerate(s)))) for s in ss
        )
        src = tuple(B.level(a).src[s[0]] for s in ss)
        rng = tuple(B.level(b - 1).rng[s[-1]] for s in ss)
        levels[i + 1] = EdgeLevel(names, src, rng, B.level(a).src_names, B.level(b - 1).rng_names)
    nd = BratteliDiagram(lambda n: levels[n], len(cuts) - 1, name=f"{B.name}|{list(cuts)}", joiner=" ")
    return TelescopedDiagram(nd, t, segs)
