"""Time-varying automaton of a tile inflation.

States at level m are trivial states ``1_v`` (v in V_{m+1}) and boundary
connections ``(F, g1, g2)`` of level-m points.  Reading a pair of level-(m+1)
edges ``e1|e2`` a boundary connection either stays a boundary connection, or
closes into a trivial state through a connector edge, or dies.  Branches that
cannot reach a trivial state within the lookahead horizon are pruned.

``CompiledAction`` is the deterministic input-side form used for fast path
rewriting; it is tested against both the automaton and the tile walk.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from typing import Optional, Sequence


class AutomatonError(RuntimeError):
    """Inconsistent automaton data or a violated determinism property."""


class UndefinedDomain(AutomatonError):
    """The transformation is not defined on the given cylinder at this depth."""


@dataclass(frozen=True)
class AutomatonState:
    level: int
    label: Optional[str]  # None for trivial states
    g1: object = None
    g2: object = None
    vertex: Optional[int] = None

    @property
    def trivial(self) -> bool:
        return self.label is None


def _ext(p, e):
    return (e,) if isinstance(p, int) else p + (e,)


class TimeVaryingAutomaton:
    def __init__(self, family, N: int, lookahead: int = 4, labels: Optional[Sequence[str]] = None):
        self.family = family
        self.N = N
        self.H = lookahead
        base = list(family.labels)
        self.labels = list(labels) if labels is not None else base + [
            family.inverse_label(F) for F in base if family.inverse_label(F) != F
        ]
        self.states: list[set[AutomatonState]] = []
        self.trans: list[dict[AutomatonState, list[tuple[int, int, AutomatonState]]]] = []
        self._build()

    def _bd(self, F: str, m: int) -> tuple:
        return self.family.boundary(self.family.base_of(F), m)

    def _build(self) -> None:
        fam, d = self.family, self.family.diagram
        top = self.N + self.H
        states: list[set] = [set() for _ in range(top + 1)]
        trans: list[dict] = [dict() for _ in range(top)]
        for v in range(d.level(1).n_src):
            states[0].add(AutomatonState(0, None, vertex=v))
        for F in self.labels:
            bd = self._bd(F, 0)
            for u in bd:
                for v in bd:
                    states[0].add(AutomatonState(0, F, u, v))
        for m in range(top):
            lv = d.level(m + 1)
            bd_next = {F: set(self._bd(F, m + 1)) for F in self.labels}
            dirs = {F: fam.directed(F, m + 1) for F in self.labels}
            for s in states[m]:
                out = []
                if s.trivial:
                    for e in lv.out_edges(s.vertex):
                        t = AutomatonState(m + 1, None, vertex=lv.rng[e])
                        out.append((e, e, t))
                else:
                    F = s.label
                    r1, r2 = fam.end_of(s.g1), fam.end_of(s.g2)
                    for e1 in lv.out_edges(r1):
                        q1 = _ext(s.g1, e1)
                        for e2 in lv.out_edges(r2):
                            q2 = _ext(s.g2, e2)
                            if q1 in bd_next[F] and q2 in bd_next[F]:
                                out.append((e1, e2, AutomatonState(m + 1, F, q1, q2)))
                            elif dirs[F].get(q1) == q2:
                                out.append((e1, e2, AutomatonState(m + 1, None, vertex=lv.rng[e1])))
                for _, _, t in out:
                    states[m + 1].add(t)
                trans[m][s] = out
        # prune branches that never close into a trivial state within the horizon
        alive: list[set] = [set() for _ in range(top + 1)]
        alive[top] = {s for s in states[top] if s.trivial}
        for m in range(top - 1, -1, -1):
            for s in states[m]:
                if s.trivial or any(t in alive[m + 1] for _, _, t in trans[m][s]):
                    alive[m].add(s)
        self.states = [alive[m] for m in range(self.N + 1)]
        self.trans = []
        for m in range(self.N):
            self.trans.append(
                {s: [x for x in trans[m][s] if x[2] in alive[m + 1]] for s in alive[m]}
            )
        self._index: list[dict] = []
        for m in range(self.N):
            idx: dict = {}
            for s, lst in self.trans[m].items():
                for e1, e2, t in lst:
                    idx.setdefault((s, e1), []).append((e2, t))
            self._index.append(idx)

    # queries -------------------------------------------------------------------
    def initial_states(self, F: str, v: int) -> list[AutomatonState]:
        """Level-0 states of generator F for inputs starting at vertex v."""
        res = [s for s in self.states[0] if s.label == F and s.g1 == v]
        if v not in self._bd(F, 0):
            res.append(AutomatonState(0, None, vertex=v))
        return sorted(res, key=repr)

    def run(self, branches: list[tuple[AutomatonState, tuple[int, ...]]], p: Sequence[int]):
        for e1 in p:
            nxt = []
            for s, out in branches:
                if s.level >= self.N:
                    raise AutomatonError("input exceeds the built level")
                for e2, t in self._index[s.level].get((s, e1), []):
                    nxt.append((t, out + (e2,)))
            branches = nxt
        return branches

    def apply_branches(self, branches, p: Sequence[int]) -> tuple[tuple[int, ...], AutomatonState]:
        res = self.run(branches, p)
        triv = [(t, out) for t, out in res if t.trivial]
        if len(triv) > 1:
            raise AutomatonError("two branches accept the same input")
        if triv:
            t, out = triv[0]
            return out, t
        if res:
            raise UndefinedDomain("input ends on an open boundary connection")
        raise UndefinedDomain("no transition sequence for this input")

    def apply_generator(self, F: str, p: Sequence[int]) -> tuple[int, ...]:
        if not p:
            return ()
        v = self.family.diagram.level(1).src[p[0]]
        br = [(s, ()) for s in self.initial_states(F, v)]
        out, _ = self.apply_branches(br, p)
        return out

    def to_json(self, n_max: Optional[int] = None) -> str:
        n_max = self.N if n_max is None else min(n_max, self.N)
        d = self.family.diagram

        def name(s: AutomatonState) -> str:
            if s.trivial:
                return f"1_{d.vertices(s.level + 1)[s.vertex]}"
            f = lambda g: d.vertices(1)[g] if isinstance(g, int) else d.format_path(g)
            return f"({s.label},{f(s.g1)},{f(s.g2)})"

        levels = []
        for m in range(n_max):
            rows = []
            for s in sorted(self.trans[m], key=name):
                for e1, e2, t in sorted(self.trans[m][s], key=lambda x: (x[0], x[1], name(x[2]))):
                    lv = d.level(m + 1)
                    rows.append([name(s), f"{lv.names[e1]}|{lv.names[e2]}", name(t)])
            levels.append({"level": m, "states": sorted(name(s) for s in self.states[m]), "transitions": rows})
        return json.dumps({"family": self.family.kind, "levels": levels}, indent=2, sort_keys=True)

    def to_dot(self, n_max: Optional[int] = None) -> str:
        data = json.loads(self.to_json(n_max))
        lines = ['digraph "automaton" {', "  rankdir=LR;"]
        for lvl in data["levels"]:
            m = lvl["level"]
            for a, lab, b in lvl["transitions"]:
                lines.append(f'  "{m}:{a}" -> "{m + 1}:{b}" [label="{lab}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_automaton(family, N: int, lookahead: int = 4) -> TimeVaryingAutomaton:
    return TimeVaryingAutomaton(family, N, lookahead)


def apply_state(A: TimeVaryingAutomaton, s: AutomatonState, p: Sequence[int]):
    """Run from state s over the edges at levels s.level+1 .. s.level+len(p)."""
    return A.apply_branches([(s, ())], p)


def section(A: TimeVaryingAutomaton, g, gamma: Sequence[int]) -> set[AutomatonState]:
    """States reached by reading gamma from a generator label or a single state."""
    gamma = tuple(gamma)
    if isinstance(g, AutomatonState):
        branches = [(g, ())]
    else:
        v = A.family.diagram.level(1).src[gamma[0]]
        branches = [(s, ()) for s in A.initial_states(g, v)]
    return {t for t, _ in A.run(branches, gamma)}


# ---------------------------------------------------------------------------
# deterministic input-side form
# ---------------------------------------------------------------------------

MOVED, FIXED, PENDING = "moved", "fixed", "pending"


class CompiledAction:
    """Rewrites a path by locating the level where its prefix hits an F-connector."""

    def __init__(self, family, F: str):
        self.family = family
        self.F = F
        self.base = family.base_of(F)
        self._ids: list[dict] = []
        self._trans: list[dict] = []
        self._lock = threading.Lock()

    def _ensure(self, n: int) -> None:
        if len(self._trans) >= n + 1 and len(self._ids) >= n + 1:
            return
        with self._lock:
            fam = self.family
            while len(self._ids) <= n:
                m = len(self._ids)
                pts = fam.boundary(self.base, m)
                self._ids.append({p: i for i, p in enumerate(pts)})
                if m == 0:
                    self._trans.append({})
                    continue
                dirs = fam.directed(self.F, m)
                prev = fam.boundary(self.base, m - 1)
                ids = self._ids[m]
                tr = {}
                lv = fam.diagram.level(m)
                for i, g in enumerate(prev):
                    for e in lv.out_edges(fam.end_of(g)):
                        q = _ext(g, e)
                        if q in dirs:
                            tr[(i, e)] = (1, dirs[q])
                        elif q in ids:
                            tr[(i, e)] = (0, ids[q])
                        else:
                            raise AutomatonError(f"level {m}: unclassified continuation for {self.F}")
                self._trans.append(tr)

    def apply(self, p: tuple[int, ...]) -> tuple[tuple[int, ...], str]:
        n = len(p)
        if n == 0:
            return p, PENDING
        self._ensure(n)
        v = self.family.diagram.level(1).src[p[0]]
        cur = self._ids[0].get(v)
        if cur is None:
            return p, FIXED
        for m in range(1, n + 1):
            kind, val = self._trans[m][(cur, p[m - 1])]
            if kind == 1:
                if val == p[:m]:
                    return p, FIXED
                return val + p[m:], MOVED
            cur = val
        return p, PENDING

    def pending(self, p: tuple[int, ...]) -> bool:
        return self.apply(p)[1] == PENDING
