"""Concrete tile families: continued-fraction dihedral groups and the {1,3}-family.

Each family supplies, per level m and base label F, its boundary points
``boundary(F, m)`` and its connectors ``connectors(m)``.  Level-0 boundary
points are vertex ids of V_1; higher points are edge-index tuples.  The
engine checks that every continuation of a level-(m-1) boundary point is either
a boundary point or a connector point at level m.
"""
from __future__ import annotations

import bisect
import functools
import json
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .diagram import (
    BratteliDiagram,
    TelescopeMap,
    build_cf_diagram,
    build_one_three_diagram,
    cf_term,
    check_one_three_word,
    telescope,
    word_term,
)
from .inflation import Connector

Point = object  # int vertex at level 0, tuple of edge ids above


class FamilyError(ValueError):
    """Invalid family parameters or inconsistent schedule data."""


# ---------------------------------------------------------------------------
# classification of points with respect to a singular point
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Occurrence:
    """The j-th W-set of a singular point: connector cylinders at ``level``."""

    index: int
    level: int
    points: frozenset


@dataclass(frozen=True)
class Classification:
    kind: str  # "piece" | "low" | "singular" | "outside"
    occurrence: Optional[int] = None
    piece: Optional[int] = None
    level: Optional[int] = None


@dataclass
class PieceClassifier:
    """Pieces P_i = union of W_{modulus*k+i} over k >= first_k."""

    name: str
    label: str
    modulus: int
    first_k: int
    family: "TileFamily"

    def __post_init__(self) -> None:
        self.classify = functools.lru_cache(maxsize=1 << 18)(self._classify)

    def _classify(self, p: tuple[int, ...]) -> Classification:
        n = len(p)
        fam = self.family
        for occ in fam.occurrences_cached(self.name, n + 2):
            m = occ.level
            if m <= n:
                hit = p[:m] in occ.points
            else:
                conts = fam.continuations_to(p, m)
                hit = bool(conts) and all(q in occ.points for q in conts)
            if hit:
                j = occ.index
                if j < self.first_k * self.modulus:
                    return Classification("low", j, None, m)
                return Classification("piece", j, j % self.modulus, m)
        if p == fam.singular_prefix(self.name, n):
            return Classification("singular")
        return Classification("outside")


@dataclass(frozen=True)
class FragmentSpec:
    """A fragment acting as base**exponent, the exponent read off the classifications.

    ``vectors[xi]`` gives the exponent on the pieces of xi, ``low[xi]`` the
    exponent on the occurrences below the first piece, ``default`` the exponent
    elsewhere.  Singular truncations are fixed.
    """

    name: str
    base: str
    order: int
    default: int
    vectors: dict = field(default_factory=dict)
    low: dict = field(default_factory=dict)
    relevant: tuple = ()

    def exponent(self, classes: dict[str, Classification]) -> int:
        singular = False
        for xi in self.relevant:
            c = classes[xi]
            if c.kind == "piece":
                return self.vectors.get(xi, (self.default,) * 8)[c.piece] % self.order
            if c.kind == "low":
                lo = self.low.get(xi)
                return (self.default if lo is None else lo[c.occurrence]) % self.order
            if c.kind == "singular":
                singular = True
        return 0 if singular else self.default % self.order

    def inverse(self, name: str) -> "FragmentSpec":
        neg = lambda t: tuple((-x) % self.order for x in t)
        return FragmentSpec(
            name,
            self.base,
            self.order,
            (-self.default) % self.order,
            {k: neg(v) for k, v in self.vectors.items()},
            {k: neg(v) for k, v in self.low.items()},
            self.relevant,
        )


@dataclass(frozen=True)
class SingularPoint:
    name: str
    label: str
    start: int


# ---------------------------------------------------------------------------
# generic family
# ---------------------------------------------------------------------------

class TileFamily:
    kind = "abstract"
    labels: tuple[str, ...] = ()
    orders: dict[str, int] = {}

    def __init__(self, diagram: BratteliDiagram) -> None:
        self.diagram = diagram
        self._bd: dict[tuple[str, int], tuple] = {}
        self._con: dict[int, list[Connector]] = {}
        self._directed: dict[tuple[str, int], dict] = {}
        self._lock = threading.RLock()
        self.classifiers: dict[str, PieceClassifier] = {}

    # labels ---------------------------------------------------------------
    def inverse_label(self, F: str) -> str:
        if self.orders.get(F) == 2:
            return F
        if F in self.orders:
            return F.upper()
        return F.lower()

    def base_of(self, F: str) -> str:
        return F if F in self.orders else F.lower()

    # geometry helpers ----------------------------------------------------
    def end_of(self, p: Point) -> int:
        if isinstance(p, int):
            return p
        return self.diagram.level(len(p)).rng[p[-1]]

    def level_of(self, p: Point) -> int:
        return 0 if isinstance(p, int) else len(p)

    def extend(self, p: Point, e: int) -> tuple[int, ...]:
        return (e,) if isinstance(p, int) else p + (e,)

    def continuations(self, p: Point) -> list[tuple[int, ...]]:
        m = self.level_of(p)
        lv = self.diagram.level(m + 1)
        return [self.extend(p, e) for e in lv.out_edges(self.end_of(p))]

    def continuations_to(self, p: tuple[int, ...], m: int) -> list[tuple[int, ...]]:
        if m - len(p) > 3:
            return []
        cur = [p]
        for _ in range(m - len(p)):
            cur = [q for x in cur for q in self.continuations(x)]
        return cur

    # data access -------------------------------------------------------------
    def boundary(self, F: str, m: int) -> tuple:
        key = (F, m)
        if key not in self._bd:
            with self._lock:
                self._fill(m)
        return self._bd[key]

    def connectors(self, m: int) -> list[Connector]:
        if m not in self._con:
            with self._lock:
                self._fill(m)
        return self._con[m]

    def _fill(self, m: int) -> None:
        for k in range(m + 1):
            if k not in self._con:
                bd, con = self._compute_level(k)
                for F in self.labels:
                    self._bd[(F, k)] = tuple(sorted(bd[F], key=_pkey))
                self._con[k] = sorted(con, key=lambda c: (c.label, [_pkey(p) for p in c.points], c.root or 0))
                if k > 0:
                    self._validate_level(k)

    def _compute_level(self, m: int) -> tuple[dict[str, set], list[Connector]]:
        raise NotImplementedError

    def directed(self, F: str, m: int) -> dict:
        """Directed F-edges at level m: point -> point (loops included)."""
        key = (F, m)
        if key not in self._directed:
            base = self.base_of(F)
            d = {}
            for con in self.connectors(m):
                if con.label != base:
                    continue
                for p, q in con.directed_edges():
                    if m == 0:
                        p, q = con.root, con.root
                    if F == base:
                        d[p] = q
                    else:
                        d[q] = p
            self._directed[key] = d
        return self._directed[key]

    def boundary_points_all(self, m: int) -> dict:
        res: dict = {}
        for F in self.labels:
            for p in self.boundary(F, m):
                res.setdefault(p, set()).add(F)
        return {p: frozenset(v) for p, v in res.items()}

    def _validate_level(self, m: int) -> None:
        for F in self.labels:
            prev = self._bd[(F, m - 1)]
            bd = set(self._bd[(F, m)])
            conn = set()
            for con in self._con[m]:
                if con.label == F:
                    conn.update(con.points)
            if bd & conn:
                raise FamilyError(f"level {m}: {F}-points both boundary and connecting")
            conts = set()
            for p in prev:
                conts.update(self.continuations(p))
            if not bd <= conts or not conn <= conts:
                raise FamilyError(f"level {m}: {F}-point not continuing a level-{m - 1} boundary point")
            if conts - bd - conn:
                raise FamilyError(f"level {m}: {F}-continuation neither boundary nor connecting")

    # singular points and W-sets ---------------------------------------------
    singular: dict[str, SingularPoint] = {}

    def singular_edge(self, name: str, m: int) -> int:
        raise NotImplementedError

    def singular_prefix(self, name: str, n: int) -> tuple[int, ...]:
        return tuple(self.singular_edge(name, m) for m in range(1, n + 1))

    def occurrences(self, name: str, upto: int) -> list[Occurrence]:
        raise NotImplementedError

    def occurrences_cached(self, name: str, upto: int) -> list[Occurrence]:
        cache = self.__dict__.setdefault("_occ_cache", {})
        key = (name, upto)
        got = cache.get(key)
        if got is None:
            got = self.occurrences(name, upto)
            cache[key] = got
        return got

    # fragmentation -----------------------------------------------------------------
    def fragment_specs(self) -> list[FragmentSpec]:
        raise NotImplementedError

    def germ_tables(self) -> dict[str, dict]:
        """Per singular point: local group order/dimension and letter -> exponent vector."""
        tables = {}
        specs = self.fragment_specs()
        for xi, cl in self.classifiers.items():
            order = self.orders[cl.label]
            table = {}
            for s in specs:
                vec = s.vectors.get(xi)
                table[s.name] = tuple(vec) if vec is not None and s.base == cl.label else (0,) * cl.modulus
            tables[xi] = {"order": order, "modulus": cl.modulus, "letters": table}
        return tables

    def schedule_json(self, n_max: int) -> str:
        d = self.diagram
        out = {"family": self.kind, "levels": []}
        for m in range(1, n_max + 1):
            out["levels"].append(
                {
                    "level": m,
                    "boundary": {F: [d.format_path(p) for p in self.boundary(F, m)] for F in self.labels},
                    "connectors": [
                        {"label": c.label, "points": [d.format_path(p) for p in c.points]}
                        for c in self.connectors(m)
                        if len(set(c.points)) > 1
                    ],
                }
            )
        out["germ_tables"] = {
            xi: {"order": t["order"], "letters": {k: list(v) for k, v in t["letters"].items()}}
            for xi, t in self.germ_tables().items()
        }
        return json.dumps(out, indent=2, sort_keys=True)


def _pkey(p):
    return (0, p, ()) if isinstance(p, int) else (1, len(p), tuple(reversed(p)))


# ---------------------------------------------------------------------------
# continued-fraction dihedral family
# ---------------------------------------------------------------------------

class CfDihedralFamily(TileFamily):
    """Tiles are line segments; a, b act by the floor rewriting rules.

    Boundary states carry the generator still pending on the tail: ``A`` after
    a base move (top edge I_0/J_0), ``B`` after a flip at a tower top.
    """

    kind = "cf-dihedral"
    labels = ("a", "b")
    orders = {"a": 2, "b": 2}

    def __init__(self, c: Sequence[int], levels: int = 64, periodic: bool = True, actions: bool = True):
        c = tuple(int(x) for x in c)
        if not c or any(x < 1 for x in c):
            raise FamilyError("c terms must be >= 1")
        if actions and any(x == 1 for x in c):
            raise FamilyError("c_i = 1 is supported for diagrams only")
        self.c = c
        self.periodic = periodic
        super().__init__(build_cf_diagram(c, levels, periodic=periodic))
        self._states: dict[int, list[tuple[Point, str, str]]] = {}
        self._sing: dict[str, list[int]] = {"mu": [], "sigma": [], "lambda": []}
        self.singular = {
            "mu": SingularPoint("mu", "a", 1),
            "sigma": SingularPoint("sigma", "b", 0),
            "lambda": SingularPoint("lambda", "b", 1),
        }
        self.classifiers = {
            "mu": PieceClassifier("mu", "a", 3, 0, self),
            "sigma": PieceClassifier("sigma", "b", 3, 1, self),
            "lambda": PieceClassifier("lambda", "b", 3, 1, self),
        }

    def cn(self, m: int) -> int:
        """The term c_{m-1} governing level m."""
        return cf_term(self.c, m, self.periodic)

    # floor helpers ------------------------------------------------------------
    def floor(self, m: int, e: int) -> tuple[str, int]:
        c = self.cn(m)
        return ("I", e) if e <= c else ("J", e - c - 1)

    def edge(self, m: int, tower: str, k: int) -> int:
        c = self.cn(m)
        return k if tower == "I" else c + 1 + k

    def rule(self, G: str, m: int, e: int) -> tuple[str, Optional[int]]:
        c = self.cn(m)
        tower, k = self.floor(m, e)
        height = c + 1 if tower == "I" else c
        if G == "A":
            if k % 2 == 0:
                return ("swap", self.edge(m, tower, k + 1)) if k + 1 < height else ("flip", None)
            return ("swap", self.edge(m, tower, k - 1))
        if k == 0:
            return ("base", None)
        if k % 2 == 1:
            return ("swap", self.edge(m, tower, k + 1)) if k + 1 < height else ("flip", None)
        return ("swap", self.edge(m, tower, k - 1))

    def f_flip(self, G: str, m: int) -> int:
        c = self.cn(m)
        if (G == "A") == (c % 2 == 0):
            return self.edge(m, "I", c)
        return self.edge(m, "J", c - 1)

    # boundary states ----------------------------------------------------------
    def states(self, m: int) -> list[tuple[Point, str, str]]:
        if m not in self._states:
            with self._lock:
                for k in range(m + 1):
                    if k not in self._states:
                        self._compute_level(k)
        return self._states[m]

    def _compute_level(self, m: int):
        if m == 0:
            st = [(v, "A", "a") for v in (0, 1)] + [(v, "B", "b") for v in (0, 1)]
            self._states[0] = st
            return {"a": {0, 1}, "b": {0, 1}}, []
        prev = self.states(m - 1)
        new: list[tuple[Point, str, str]] = []
        cons: dict = {}
        lv = self.diagram.level(m)
        for gamma, G, F in prev:
            r = self.end_of(gamma)
            for e in lv.out_edges(r):
                kind, e2 = self.rule(G, m, e)
                q = self.extend(gamma, e)
                if kind == "flip":
                    new.append((q, "B", F))
                elif kind == "base":
                    new.append((q, "A", F))
                else:
                    s2 = lv.src[e2]
                    if G == "B":
                        g2 = gamma
                    elif isinstance(gamma, int):
                        g2 = s2
                    else:
                        top = self.edge(m - 1, "I" if s2 == 0 else "J", 0)
                        g2 = gamma[:-1] + (top,)
                    q2 = self.extend(g2, e2)
                    key = (F, frozenset((q, q2)))
                    cons[key] = Connector(F, tuple(sorted((q, q2), key=_pkey)))
        self._states[m] = new
        bd = {"a": set(), "b": set()}
        for q, _, F in new:
            bd[F].add(q)
        return bd, list(cons.values())

    def pending(self, F: str, p: tuple[int, ...]) -> Optional[str]:
        for q, G, F2 in self.states(len(p)):
            if q == p and F2 == F:
                return G
        return None

    # singular points -----------------------------------------------------------
    def singular_edge(self, name: str, m: int) -> int:
        seq = self._sing[name]
        while len(seq) < m:
            k = len(seq) + 1
            if not seq:
                if name == "mu":
                    e = self.f_flip("A", 1)
                elif name == "sigma":
                    e = self.edge(1, "J", 0)
                else:
                    e = self.f_flip("B", 1)
            else:
                prev = seq[-1]
                lvp = self.diagram.level(k - 1)
                tower, kk = self.floor(k - 1, prev)
                pending_a = kk == 0 and tower == "J"
                r = lvp.rng[prev]
                if pending_a:
                    e = self.f_flip("A", k)
                elif r == 1:
                    e = self.f_flip("B", k)
                else:
                    e = self.edge(k, "J", 0)
            seq.append(e)
        return seq[m - 1]

    def occurrences(self, name: str, upto: int) -> list[Occurrence]:
        res = []
        j = 0
        for m in range(1, upto):
            e = self.singular_edge(name, m)
            if self.floor(m, e) == ("J", 0):
                if m + 1 <= upto:
                    base = self.singular_prefix(name, m - 1)
                    i0, j0 = self.edge(m, "I", 0), self.edge(m, "J", 0)
                    pts = frozenset(
                        {
                            base + (i0, self.edge(m + 1, "I", 0)),
                            base + (j0, self.edge(m + 1, "I", 1)),
                            base + (i0, self.edge(m + 1, "J", 0)),
                            base + (j0, self.edge(m + 1, "J", 1)),
                        }
                    )
                    res.append(Occurrence(j, m + 1, pts))
                j += 1
        return res

    def odd_gap(self, upto: int) -> int:
        """Largest gap between levels with odd c over 1..upto (the fragmentation assumption)."""
        odd = [m for m in range(1, upto + 1) if self.cn(m) % 2 == 1]
        if not odd:
            return upto + 1
        pts = [0] + odd + [upto + 1]
        return max(b - a for a, b in zip(pts, pts[1:]))

    def fragment_specs(self) -> list[FragmentSpec]:
        rel_a = ("mu",)
        rel_b = ("sigma", "lambda")
        specs = [
            FragmentSpec("a'", "a", 2, 1, {"mu": (0, 0, 0)}, {}, rel_a),
            FragmentSpec("b'", "b", 2, 1, {"sigma": (0, 0, 0), "lambda": (0, 0, 0)}, {}, rel_b),
        ]
        tri = {"b": (1, 1, 0), "c": (1, 0, 1), "d": (0, 1, 1)}
        for i, (xi, base, rel) in enumerate(
            [("mu", "a", rel_a), ("sigma", "b", rel_b), ("lambda", "b", rel_b)]
        ):
            for letter, vec in tri.items():
                specs.append(FragmentSpec(f"{letter}{i}", base, 2, 0, {xi: vec}, {}, rel))
        return specs


# ---------------------------------------------------------------------------
# the {1,3}-family
# ---------------------------------------------------------------------------

class OneThreeFamily(TileFamily):
    """Three labels: involutions a, b and the order-3 label c (inverse C)."""

    kind = "one-three"
    labels = ("a", "b", "c")
    orders = {"a": 2, "b": 2, "c": 3}

    def __init__(self, w: str, levels: int = 64, periodic: bool = True, gap_bound: Optional[int] = None):
        check_one_three_word(w, periodic, gap_bound)
        self.w = w
        self.periodic = periodic
        super().__init__(build_one_three_diagram(w, levels, periodic=periodic, gap_bound=gap_bound))
        self.singular = {
            "mu": SingularPoint("mu", "b", 0),
            "sigma": SingularPoint("sigma", "a", 0),
            "lambda": SingularPoint("lambda", "a", 1),
            "delta": SingularPoint("delta", "c", 0),
        }
        self.classifiers = {
            "mu": PieceClassifier("mu", "b", 3, 0, self),
            "sigma": PieceClassifier("sigma", "a", 3, 1, self),
            "lambda": PieceClassifier("lambda", "a", 3, 1, self),
            "delta": PieceClassifier("delta", "c", 4, 0, self),
        }
        self._active_cache: list[int] = []

    def wn(self, m: int) -> int:
        return word_term(self.w, m, self.periodic) if m >= 1 else 1

    def e(self, m: int, name: str) -> int:
        return self.diagram.level(m).index(name)

    def s_edge(self, m: int) -> int:
        return self.e(m, "0" if self.wn(m) == 1 else "1")

    def t_edge(self, m: int) -> int:
        return self.e(m, "0" if self.wn(m) == 1 else "2")

    def singular_edge(self, name: str, m: int) -> int:
        r = m % 3
        if name == "mu":
            return self.e(m, "e1") if r == 1 else self.e(m, "e2") if r == 2 else self.t_edge(m)
        if name == "sigma":
            return self.s_edge(m) if r == 1 else self.e(m, "e1") if r == 2 else self.e(m, "e2")
        if name == "lambda":
            return self.e(m, "e2") if r == 1 else self.s_edge(m) if r == 2 else self.e(m, "e1")
        if name == "delta":
            if self.wn(m) == 3:
                return self.e(m, "e1")
            if m >= 2 and self.wn(m - 1) == 3:
                return self.e(m, "e2")
            return self.e(m, "0")
        raise FamilyError(f"unknown singular point {name}")

    def _chain(self, name: str, m: int) -> Point:
        if m == 0:
            return self.singular[name].start
        return self.singular_prefix(name, m)

    def _bd_sets(self, m: int) -> dict[str, set]:
        r = m % 3
        mu, sg, lm, dl = (self._chain(x, m) for x in ("mu", "sigma", "lambda", "delta"))
        bd = {"a": {sg, lm}, "b": {mu}, "c": {dl}}
        if m == 0:
            bd["b"].add(1)
            return bd
        if r == 0:
            bd["b"].add(self.extend(self._chain("mu", m - 1), self.e(m, "e1")))
        if r == 1:
            bd["a"].add(self.extend(self._chain("sigma", m - 1), self.e(m, "e1")))
        if r == 2:
            bd["a"].add(self.extend(self._chain("lambda", m - 1), self.e(m, "e1")))
        return bd

    def _compute_level(self, m: int):
        bd = self._bd_sets(m)
        if m == 0:
            return bd, [Connector("c", ((), ()), root=1)]
        r = m % 3
        cons: list[Connector] = []

        def pair(name: str, label: str, top: int) -> Connector:
            p = self.extend(self._chain(name, m - 1), top)
            q = self.extend(self.extend(self._chain(name, m - 2), self.e(m - 1, "e1")) if m >= 2
                            else self.singular[name].start ^ 1, self.e(m, "e2"))
            return Connector(label, tuple(sorted((p, q), key=_pkey)))

        if r == 1:
            cons.append(pair("mu", "b", self.t_edge(m)))
        if r == 2:
            cons.append(pair("sigma", "a", self.s_edge(m)))
        if r == 0 and m >= 3:
            cons.append(pair("lambda", "a", self.s_edge(m)))
        if self.wn(m) == 3:
            d = self._chain("delta", m - 1)
            cons.append(Connector("c", tuple(self.extend(d, self.e(m, k)) for k in ("0", "1", "2"))))
        # loops at continuations that neither stay on the boundary nor connect
        for F in self.labels:
            prev = self._bd_sets(m - 1)[F]
            conn = set()
            for con in cons:
                if con.label == F:
                    conn.update(con.points)
            for p in prev:
                for q in self.continuations(p):
                    if q not in bd[F] and q not in conn:
                        cons.append(Connector(F, (q, q)))
        return bd, cons

    def active_levels(self, upto: int) -> list[int]:
        return [m for m in range(1, upto + 1) if self.wn(m) == 3]

    def c_telescope(self, upto: int) -> TelescopeMap:
        """Cuts isolating each c-active level, so each telescoped level holds at most one."""
        cuts = [1]
        for m in self.active_levels(upto):
            for k in (m, m + 1):
                if k > cuts[-1] and k <= upto + 1:
                    cuts.append(k)
        if cuts[-1] != upto + 1:
            cuts.append(upto + 1)
        gaps = [b - a for a, b in zip(cuts, cuts[1:])]
        return TelescopeMap(tuple(cuts), max(gaps))

    def active_ordinals_via_telescope(self, upto: int) -> dict[int, int]:
        """Ordinal of each c-active level read off the telescoped diagram and pulled back."""
        t = self.c_telescope(upto)
        td = telescope(self.diagram, t)
        res = {}
        for n in range(1, len(t.cuts)):
            a, b = t.cuts[n - 1], t.cuts[n]
            if b - a == 1 and len(td.diagram.level(n).names) == 5:
                res[a] = len(res)
        return res

    def occurrences(self, name: str, upto: int) -> list[Occurrence]:
        res = []
        if name == "delta":
            for j, m in enumerate(self.active_levels(upto)):
                d = self._chain("delta", m - 1)
                pts = frozenset(self.extend(d, self.e(m, k)) for k in ("0", "1", "2"))
                res.append(Occurrence(j, m, pts))
            return res
        offset = {"mu": 1, "sigma": 2, "lambda": 3}[name]
        label = "b" if name == "mu" else "a"
        j = 0
        m = offset
        while m <= upto:
            pts = set()
            for con in self.connectors(m):
                if con.label == label and len(set(con.points)) > 1:
                    pts.update(con.points)
            chain_pts = {p for p in pts if p[: m - 2] == self.singular_prefix(name, m - 2)} if m >= 2 else pts
            res.append(Occurrence(j, m, frozenset(chain_pts)))
            j += 1
            m += 3
        return res

    def fragment_specs(self) -> list[FragmentSpec]:
        rel_a = ("sigma", "lambda")
        specs = []
        for j in range(3):
            lo = tuple(1 if i == j else 0 for i in range(3))
            specs.append(FragmentSpec(f"a{j}", "a", 2, 0, {"sigma": (0, 0, 0), "lambda": (0, 0, 0)},
                                      {"sigma": lo, "lambda": lo}, rel_a))
        tri = {"b": (1, 1, 0), "c": (1, 0, 1), "d": (0, 1, 1)}
        for letter, vec in tri.items():
            specs.append(FragmentSpec(f"{letter}0", "b", 2, 0, {"mu": vec}, {}, ("mu",)))
        for i, xi in ((1, "sigma"), (2, "lambda")):
            for letter, vec in tri.items():
                specs.append(FragmentSpec(f"{letter}{i}", "a", 2, 0, {xi: vec}, {}, rel_a))
        specs.append(FragmentSpec("f1", "c", 3, 0, {"delta": (0, 1, 2, 1)}, {}, ("delta",)))
        specs.append(FragmentSpec("f2", "c", 3, 0, {"delta": (1, 1, 1, 0)}, {}, ("delta",)))
        return specs


# ---------------------------------------------------------------------------
# G_c subdirect product data
# ---------------------------------------------------------------------------

GC_F1 = (0, 1, 2, 1)
GC_F2 = (1, 1, 1, 0)


def gc_elements() -> set[tuple[int, ...]]:
    """Subgroup of (Z/3)^4 generated by the two exponent vectors."""
    return {
        tuple((i * x + j * y) % 3 for x, y in zip(GC_F1, GC_F2)) for i in range(3) for j in range(3)
    }


def gc_kernel(i: int) -> list[tuple[int, int]]:
    """Exponent pairs (i1, i2) with f1^i1 f2^i2 acting trivially on P_i."""
    return sorted(
        (a, b) for a in range(3) for b in range(3) if (a * GC_F1[i] + b * GC_F2[i]) % 3 == 0
    )


# ---------------------------------------------------------------------------
# construction helpers
# ---------------------------------------------------------------------------

def make_family(kind: str, params, levels: int = 64, periodic: bool = True):
    if kind == "cf-dihedral":
        if isinstance(params, str):
            params = [int(x) for x in params.replace(",", " ").split()]
        return CfDihedralFamily(params, levels=levels, periodic=periodic)
    if kind == "one-three":
        return OneThreeFamily(str(params), levels=levels, periodic=periodic)
    raise FamilyError(f"unknown family {kind!r}")


def cf_dihedral_connectors(f: CfDihedralFamily, n: int) -> list[Connector]:
    if n < 1:
        raise FamilyError("level must be >= 1")
    return [c for c in f.connectors(n)]


def one_three_connectors(f: OneThreeFamily, n: int) -> list[Connector]:
    if n < 1:
        raise FamilyError("level must be >= 1")
    return [c for c in f.connectors(n) if len(set(c.points)) > 1]


def classify_piece(cl: PieceClassifier, p: Sequence[int]) -> Classification:
    return cl.classify(tuple(p))


def fragment_dihedral(f: CfDihedralFamily, check_levels: int = 30) -> list[FragmentSpec]:
    gap = f.odd_gap(check_levels)
    if gap > check_levels:
        raise FamilyError("odd terms of c do not recur over the checked range")
    return f.fragment_specs()


def fragment_one_three(f: OneThreeFamily) -> list[FragmentSpec]:
    return f.fragment_specs()


# ---------------------------------------------------------------------------
# interval model for the dihedral family
# ---------------------------------------------------------------------------

@dataclass
class TowerStructure:
    """Cylinders of level-n paths as exact intervals plus the a/b adjacency."""

    level: int
    thetas: list[Fraction]
    cylinders: dict[tuple[int, ...], tuple[Fraction, Fraction]]
    towers: dict[int, list[tuple[int, ...]]]
    edges: dict[str, set[tuple[tuple[int, ...], tuple[int, ...]]]]


def convergent_thetas(c: Sequence[int]) -> list[Fraction]:
    """theta_i = [0; c_i, c_{i+1}, ..., c_{k-1}] for i = 0..k-1."""
    k = len(c)
    th = [Fraction(0)] * k
    th[k - 1] = Fraction(1, c[k - 1])
    for i in range(k - 2, -1, -1):
        th[i] = 1 / (c[i] + th[i + 1])
    return th


def _floors(c: int, th: Fraction, th_next: Fraction) -> list[tuple[Fraction, Fraction, int, Fraction]]:
    """Floors in edge-id order with (left, right, sign, shift) for y = sign*x + shift."""
    res = []
    w = th * th_next
    for k in range(c + 1):
        h = k // 2
        if k % 2 == 0:
            res.append((h * th, h * th + w, 1, -h * th))
        else:
            res.append((1 - h * th - w, 1 - h * th, -1, 1 - h * th))
    for k in range(c):
        h = k // 2
        if k % 2 == 0:
            res.append((h * th + w, (h + 1) * th, 1, -h * th))
        else:
            res.append((1 - (h + 1) * th, 1 - h * th - w, -1, 1 - h * th))
    return res


def _oracle_levels(c: Sequence[int], n_max: int):
    """Yield (level, thetas, Q, cylinders) for levels 1..n_max, cylinders mapping path -> (lo, hi) in units of 1/Q.

    With theta_0 = P/Q every endpoint lies in (1/Q)Z, and the level-l coordinate
    times D_l = Q theta_0 ... theta_{l-1} is an integer, so the refinement runs on ints.
    """
    th = convergent_thetas(c)
    Q = th[0].denominator
    D = Fraction(Q)
    cur = {(): (0, Q, 1, 0)}  # lo, hi, sign, offset with D_l y = sign m + offset
    for lvl in range(1, n_max + 1):
        floors = []
        for fl, fr, sg, sh in _floors(c[lvl - 1], th[lvl - 1], th[lvl]):
            FL, FR, SH = fl * D, fr * D, sh * D
            if not (FL.denominator == FR.denominator == SH.denominator == 1):
                raise FamilyError("oracle lattice is not integral")
            floors.append((int(FL), int(FR), sg, int(SH)))
        by_left = sorted(range(len(floors)), key=lambda e: floors[e][0])
        lefts = [floors[e][0] for e in by_left]
        nxt = {}
        for p, (lo, hi, sgn, off) in cur.items():
            y1, y2 = sorted((sgn * lo + off, sgn * hi + off))
            # floors tile [0, D], so only those starting before y2 and after the floor holding y1 can meet the image
            i0 = max(bisect.bisect_right(lefts, y1) - 1, 0)
            i1 = bisect.bisect_left(lefts, y2)
            for e in sorted(by_left[i0:i1]):
                FL, FR, sg, SH = floors[e]
                a1, a2 = (FL - off, FR - off) if sgn == 1 else (off - FR, off - FL)
                a1, a2 = max(a1, lo), min(a2, hi)
                if a2 > a1:
                    nxt[p + (e,)] = (a1, a2, sg * sgn, sg * off + SH)
        cur = nxt
        D *= th[lvl - 1]
        yield lvl, th, Q, {p: (v[0], v[1]) for p, v in cur.items()}


def _tower_structure(c: Sequence[int], n: int, th, Q: int, cyl) -> TowerStructure:
    inv = {v: p for p, v in cyl.items()}
    P = th[0].numerator
    n_i = c[n - 1] + 1  # edges below this id end at vertex 0

    def b_img(lo, hi):
        return (P - hi, P - lo) if P - hi >= 0 else (P - hi + Q, P - lo + Q)

    maps = {"a": lambda lo, hi: (Q - hi, Q - lo), "b": b_img}
    edges: dict[str, set] = {"a": set(), "b": set()}
    for p, (lo, hi) in cyl.items():
        for g, fn in maps.items():
            q = inv.get(fn(lo, hi))
            # an exact image in the other tower only arises from the rational degeneracy
            if q is not None and q != p and (q[-1] < n_i) == (p[-1] < n_i):
                edges[g].add((p, q))
    towers: dict[int, list] = {0: [], 1: []}
    for p in sorted(cyl, key=lambda q: cyl[q]):
        towers[0 if p[-1] < n_i else 1].append(p)
    frac = functools.lru_cache(maxsize=None)(lambda m: Fraction(m, Q))
    exact = {p: (frac(lo), frac(hi)) for p, (lo, hi) in cyl.items()}
    return TowerStructure(n, list(th), exact, towers, edges)


def _check_prefix(c_prefix: Sequence[int]) -> list[int]:
    c = [int(x) for x in c_prefix]
    if any(x < 2 for x in c):
        raise FamilyError("oracle requires c_i >= 2")
    return c


def interval_oracle_towers(c_prefix: Sequence[int], n: int) -> TowerStructure:
    """Exact-rational towers for theta = [0; c_0, ..., c_{k-1}] refined to level n < k."""
    c = _check_prefix(c_prefix)
    if n >= len(c) or n < 1:
        raise FamilyError("need 1 <= n < prefix length")
    for lvl, th, Q, cyl in _oracle_levels(c, n):
        if lvl == n:
            return _tower_structure(c, n, th, Q, cyl)
    raise FamilyError("unreachable")


def interval_oracle_all(c_prefix: Sequence[int]) -> list[TowerStructure]:
    """Tower structures for every level 1..k-1 in one refinement pass."""
    c = _check_prefix(c_prefix)
    return [_tower_structure(c, lvl, th, Q, cyl) for lvl, th, Q, cyl in _oracle_levels(c, len(c) - 1)]


def oracle_agreement(c_prefix: Sequence[int]) -> list[dict]:
    """Per level n < k: do the interval towers reproduce the tiles of the same prefix?"""
    from .diagram import all_paths
    from .inflation import TileSet

    c = _check_prefix(c_prefix)
    fam = CfDihedralFamily(c, levels=len(c), periodic=False)
    ts = TileSet(fam, len(c) - 1)
    out = []
    for T in interval_oracle_all(c):
        n = T.level
        tile_edges: dict[str, set] = {"a": set(), "b": set()}
        for v in (0, 1):
            for p, q, lab in ts.tile(n, v).edges():
                tile_edges[lab].add((p, q))
        verts = set(T.cylinders) == set(all_paths(fam.diagram, n))
        counts = [len(T.towers[v]) for v in (0, 1)] == [ts.tile(n, v).size for v in (0, 1)]
        order = all(
            T.towers[v] == sorted(ts.tile(n, v).vertices, key=lambda q: T.cylinders[q]) for v in (0, 1)
        )
        out.append(
            {"level": n, "vertices": verts and counts, "edges": T.edges == tile_edges, "tower_order": order}
        )
    return out
