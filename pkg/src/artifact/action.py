"""Group elements as words in generators acting on depth-n path sets."""
from __future__ import annotations

import random
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .automaton import FIXED, MOVED, PENDING, CompiledAction
from .diagram import all_paths
from .families import FragmentSpec, TileFamily


class ActionError(RuntimeError):
    """Failure while evaluating an action (for instance an unstable ball table)."""


@dataclass
class Generator:
    name: str
    order: int
    inverse: str
    kind: str  # "base" | "fragment"
    base: str
    family: TileFamily
    spec: Optional[FragmentSpec] = None
    _base_action: Optional[CompiledAction] = None

    def exponent(self, p: tuple[int, ...]) -> int:
        if self.spec is None:
            return 1
        cls = {xi: self.family.classifiers[xi].classify(p) for xi in self.spec.relevant}
        return self.spec.exponent(cls)

    def apply_status(self, p: tuple[int, ...]) -> tuple[tuple[int, ...], str]:
        q, st = self._base_action.apply(p)
        if self.spec is None or st != MOVED:
            return q, st
        e = self.exponent(p)
        if e == 0:
            return p, FIXED
        for _ in range(e - 1):
            q, _ = self._base_action.apply(q)
        return q, MOVED

    def apply(self, p: Sequence[int]) -> tuple[int, ...]:
        return self.apply_status(tuple(p))[0]


def apply_generator(g: Generator, p: Sequence[int]) -> tuple[int, ...]:
    return g.apply(p)


@dataclass
class InducedMap:
    depth: int
    table: np.ndarray
    paths: list[tuple[int, ...]] = field(repr=False)

    def as_dict(self) -> dict:
        return {self.paths[i]: self.paths[int(j)] for i, j in enumerate(self.table)}

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.table, np.arange(len(self.table))))

    def order(self) -> int:
        return permutation_order(self.table)


def permutation_order(perm: np.ndarray) -> int:
    seen = np.zeros(len(perm), dtype=bool)
    order = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        k, j = 0, i
        while not seen[j]:
            seen[j] = True
            j = int(perm[j])
            k += 1
        order = order * k // np.gcd(order, k)
    return int(order)


class Group:
    """Ordered generator set with letters (generators plus distinct inverses)."""

    def __init__(self, family: TileFamily, fragmented: bool = False) -> None:
        self.family = family
        self.fragmented = fragmented
        self.gens: dict[str, Generator] = {}
        actions: dict[str, CompiledAction] = {}

        def act(label: str) -> CompiledAction:
            if label not in actions:
                actions[label] = CompiledAction(family, label)
            return actions[label]

        if not fragmented:
            for F in family.labels:
                inv = family.inverse_label(F)
                order = family.orders[F]
                self.gens[F] = Generator(F, order, inv, "base", F, family, None, act(F))
                if inv != F:
                    self.gens[inv] = Generator(inv, order, F, "base", F, family, None, act(inv))
        else:
            for spec in family.fragment_specs():
                inv_name = spec.name if spec.order == 2 else spec.name.upper()
                self.gens[spec.name] = Generator(
                    spec.name, spec.order, inv_name, "fragment", spec.base, family, spec, act(spec.base)
                )
                if spec.order != 2:
                    ispec = spec.inverse(inv_name)
                    self.gens[inv_name] = Generator(
                        inv_name, spec.order, spec.name, "fragment", spec.base, family, ispec, act(spec.base)
                    )
        self.letters = list(self.gens)
        self._tables: dict[int, tuple[list, dict, dict[str, np.ndarray]]] = {}
        self._lock = threading.Lock()
        self._memo: dict = {}

    @property
    def primary(self) -> list[str]:
        """Generators without their separately named inverses."""
        seen, out = set(), []
        for name in self.letters:
            if name not in seen:
                out.append(name)
                seen.update({name, self.gens[name].inverse})
        return out

    def parse_word(self, text: str) -> list[str]:
        toks = text.replace(",", " ").split()
        for t in toks:
            if t not in self.gens:
                raise ActionError(f"unknown generator {t!r}")
        return toks

    def inverse_word(self, word: Sequence[str]) -> list[str]:
        return [self.gens[s].inverse for s in reversed(word)]

    def reduce(self, word: Sequence[str]) -> list[str]:
        """Free reduction plus the order relations (x^2 = 1 for involutions, x x = X for order 3)."""
        out: list[str] = []
        for s in word:
            out.append(s)
            changed = True
            while changed and out:
                changed = False
                if len(out) >= 2 and self.gens[out[-1]].inverse == out[-2]:
                    del out[-2:]
                    changed = True
                elif len(out) >= 2 and out[-1] == out[-2] and self.gens[out[-1]].order == 3:
                    inv = self.gens[out[-1]].inverse
                    del out[-2:]
                    out.append(inv)
                    changed = True
        return out

    # tables ---------------------------------------------------------------------
    def tables(self, n: int) -> tuple[list, dict, dict[str, np.ndarray]]:
        got = self._tables.get(n)
        if got is not None:
            return got
        paths = all_paths(self.family.diagram, n)
        index = {p: i for i, p in enumerate(paths)}
        tabs = {}
        for name, g in self.gens.items():
            tabs[name] = np.fromiter((index[g.apply(p)] for p in paths), dtype=np.int64, count=len(paths))
        with self._lock:
            self._tables.setdefault(n, (paths, index, tabs))
        return self._tables[n]

    def induced_map(self, word: Sequence[str], n: int) -> InducedMap:
        key = (tuple(self.reduce(word)), n)
        got = self._memo.get(key)
        if got is not None:
            return got
        paths, _, tabs = self.tables(n)
        cur = np.arange(len(paths), dtype=np.int64)
        for s in key[0]:
            cur = tabs[s][cur]
        res = InducedMap(n, cur, paths)
        with self._lock:
            self._memo.setdefault(key, res)
        return self._memo[key]

    def apply_word(self, word: Sequence[str], p: Sequence[int]) -> tuple[int, ...]:
        q = tuple(p)
        for s in word:
            q = self.gens[s].apply(q)
        return q

    def random_word(self, rng: random.Random, length: int) -> list[str]:
        word: list[str] = []
        while len(word) < length:
            s = rng.choice(self.letters)
            if word and (self.gens[word[-1]].inverse == s or (s == word[-1] and self.gens[s].order == 2)):
                continue
            if len(word) >= 1 and s == word[-1] and self.gens[s].order == 3:
                continue
            word.append(s)
        return word


def build_group(family: TileFamily, fragmented: bool = False) -> Group:
    return Group(family, fragmented)


def induced_map(group: Group, word: Sequence[str], n: int) -> InducedMap:
    return group.induced_map(word, n)


# orbits --------------------------------------------------------------------

@dataclass
class OrbitalGraph:
    depth: int
    base: tuple[int, ...]
    vertices: list[tuple[int, ...]]
    edges: dict[str, dict[int, int]]
    truncated: bool = False

    def in_degrees(self) -> dict[str, np.ndarray]:
        res = {}
        for lab, mp in self.edges.items():
            deg = np.zeros(len(self.vertices), dtype=np.int64)
            for j in mp.values():
                deg[j] += 1
            res[lab] = deg
        return res

    def perfectly_labeled(self) -> bool:
        if self.truncated:
            return False
        n = len(self.vertices)
        for lab, mp in self.edges.items():
            if len(mp) != n:
                return False
        return all(bool((deg == 1).all()) for deg in self.in_degrees().values())

    def max_degree(self) -> int:
        """Largest number of distinct neighbours (loops and multiplicities ignored)."""
        nb: list[set] = [set() for _ in self.vertices]
        for mp in self.edges.values():
            for i, j in mp.items():
                if i != j:
                    nb[i].add(j)
                    nb[j].add(i)
        return max((len(s) for s in nb), default=0)

    def to_dot(self, diagram) -> str:
        lines = ['digraph "orbit" {']
        for i, p in enumerate(self.vertices):
            lines.append(f'  n{i} [label="{diagram.format_path(p)}"];')
        for lab in sorted(self.edges):
            for i, j in sorted(self.edges[lab].items()):
                lines.append(f'  n{i} -> n{j} [label="{lab}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def ball_sizes(self, R_max: int, center: Optional[tuple[int, ...]] = None) -> list[int]:
        idx = {p: i for i, p in enumerate(self.vertices)}
        c = idx[self.base if center is None else center]
        nb: list[set] = [set() for _ in self.vertices]
        for mp in self.edges.values():
            for i, j in mp.items():
                nb[i].add(j)
                nb[j].add(i)
        dist = {c: 0}
        q = deque([c])
        while q:
            x = q.popleft()
            if dist[x] == R_max:
                continue
            for y in sorted(nb[x]):
                if y not in dist:
                    dist[y] = dist[x] + 1
                    q.append(y)
        counts = [0] * (R_max + 1)
        for d in dist.values():
            counts[d] += 1
        return list(np.cumsum(counts).tolist())


def orbit(group: Group, p: Sequence[int], n: Optional[int] = None, cap: int = 1_000_000) -> OrbitalGraph:
    p = tuple(p) if n is None else tuple(p)[:n]
    n = len(p)
    idx = {p: 0}
    verts = [p]
    edges: dict[str, dict[int, int]] = {s: {} for s in group.letters}
    q = deque([0])
    truncated = False
    while q:
        i = q.popleft()
        x = verts[i]
        for s in group.letters:
            y = group.gens[s].apply(x)
            j = idx.get(y)
            if j is None:
                if len(verts) >= cap:
                    truncated = True
                    continue
                j = len(verts)
                idx[y] = j
                verts.append(y)
                q.append(j)
            edges[s][i] = j
    return OrbitalGraph(n, p, verts, edges, truncated)


# balls -------------------------------------------------------------------------

def random_path(family: TileFamily, n: int, seed: int, avoid_singular: bool = True) -> tuple[int, ...]:
    """Seeded random level-n path; optionally steered away from singular prefixes."""
    rng = random.Random(seed)
    d = family.diagram
    lv1 = d.level(1)
    for _ in range(10_000):
        v = rng.randrange(lv1.n_src)
        p: tuple[int, ...] = ()
        for m in range(1, n + 1):
            lv = d.level(m)
            p = p + (rng.choice(lv.out_edges(v)),)
            v = lv.rng[p[-1]]
        if not avoid_singular:
            return p
        k = min(n, 6)
        if all(p[:k] != family.singular_prefix(xi, k) for xi in family.singular):
            return p
    raise ActionError(f"no non-singular level-{n} path found")


def extend_path(family: TileFamily, p: tuple[int, ...], n: int, seed: int) -> tuple[int, ...]:
    rng = random.Random(seed * 7919 + len(p))
    d = family.diagram
    q = tuple(p)
    while len(q) < n:
        m = len(q) + 1
        lv = d.level(m)
        v = d.level(m - 1).rng[q[-1]] if q else rng.randrange(lv.n_src)
        q = q + (rng.choice(lv.out_edges(v)),)
    return q


def _ball(group: Group, center: tuple[int, ...], R_max: int) -> tuple[list[int], bool]:
    """Ball sizes plus whether some vertex inside radius R_max - 1 hit a pending label."""
    dist = {center: 0}
    q = deque([center])
    pending = False
    counts = [0] * (R_max + 1)
    counts[0] = 1
    while q:
        x = q.popleft()
        dx = dist[x]
        if dx == R_max:
            continue
        for s in group.letters:
            y, st = group.gens[s].apply_status(x)
            if st == PENDING:
                pending = True
            if y not in dist:
                dist[y] = dx + 1
                counts[dx + 1] += 1
                q.append(y)
    return list(np.cumsum(counts).tolist()), pending


@dataclass
class BallTable:
    sizes: list[int]
    depth: int
    center: tuple[int, ...]
    stable: bool


def ball_growth(
    group: Group,
    center: Sequence[int],
    R_max: int,
    depth: Optional[int] = None,
    max_depth: int = 200,
    seed: int = 0,
) -> BallTable:
    """#B(R) for R = 0..R_max at a depth deep enough that no ball vertex sits on a pending boundary."""
    center = tuple(center)
    n = depth or max(len(center), 4)
    while n <= max_depth:
        c = extend_path(group.family, center[:n], n, seed)
        sizes, pending = _ball(group, c, R_max)
        if not pending:
            c2 = extend_path(group.family, c, n + 1, seed)
            sizes2, pending2 = _ball(group, c2, R_max)
            if sizes2 == sizes and not pending2:
                return BallTable(sizes, n, c, True)
        n += 2
    raise ActionError("ball table unstable up to the depth cap")
