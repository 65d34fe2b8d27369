"""Growth series, return words, traverses and exponent estimates."""
from __future__ import annotations

import hashlib
import json
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .action import Group, extend_path
from .automaton import MOVED, PENDING
from .diagram import path_counts


class GrowthError(RuntimeError):
    """Invalid estimator input or a violated bookkeeping invariant."""


# ---------------------------------------------------------------------------
# growth series
# ---------------------------------------------------------------------------

@dataclass
class GrowthPolicy:
    n_start: Optional[int] = None  # None: smallest depth with more than R_max paths
    n_step: int = 2
    stable_rounds: int = 2
    depth_cap: int = 40
    path_cap: int = 2_000_000
    cell_cap: int = 60_000_000  # frontier size times path count


@dataclass
class GrowthReport:
    radii: list[int]
    depths: list[int]
    columns: dict[int, list[int]]  # depth -> gamma^{(n)}(R) for R = 0..R_max
    gamma: list[int]
    stable: list[bool]
    certified: bool
    policy: GrowthPolicy

    def to_csv(self) -> str:
        head = ["R", "gamma", "stable"] + [f"depth_{n}" for n in self.depths]
        lines = [",".join(head)]
        for R in self.radii:
            row = [str(R), str(self.gamma[R]), str(int(self.stable[R]))]
            row += [str(self.columns[n][R]) for n in self.depths]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        d = asdict(self)
        d["columns"] = {str(k): v for k, v in self.columns.items()}
        return json.dumps(d, indent=2, sort_keys=True)


def _path_total(family, n: int) -> int:
    return int(sum(path_counts(family.diagram, n)[-1]))


class _CapReached(Exception):
    pass


def _key(a: np.ndarray) -> bytes:
    return hashlib.blake2b(a.tobytes(), digest_size=16).digest()


def _ball_column(group: Group, R_max: int, n: int, threads: int, cell_cap: int = 0) -> list[int]:
    """Number of distinct induced maps of words of length <= R on depth-n paths."""
    paths, _, tabs64 = group.tables(n)
    tabs = {s: t.astype(np.int32) for s, t in tabs64.items()}
    letters = group.letters
    ident = np.arange(len(paths), dtype=np.int32)
    seen = {_key(ident)}
    frontier = [ident]
    counts = [1]

    def expand(chunk):
        return [[tabs[s][cur] for s in letters] for cur in chunk]

    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for _ in range(R_max):
            if pool is not None and len(frontier) > 64:
                size = -(-len(frontier) // threads)
                parts = [frontier[i : i + size] for i in range(0, len(frontier), size)]
                produced = [row for part in pool.map(expand, parts) for row in part]
            else:
                produced = expand(frontier)
            nxt = []
            for row in produced:
                for new in row:
                    key = _key(new)
                    if key not in seen:
                        seen.add(key)
                        nxt.append(new)
            if len(nxt) > len(frontier) * len(letters):
                raise GrowthError("sphere exceeds the breadth-first bound")
            counts.append(counts[-1] + len(nxt))
            frontier = nxt
            if cell_cap and len(frontier) * len(paths) > cell_cap:
                raise _CapReached
    finally:
        if pool is not None:
            pool.shutdown()
    return counts


def growth_series(
    group: Group, R_max: int, policy: Optional[GrowthPolicy] = None, threads: int = 1
) -> GrowthReport:
    if R_max < 0:
        raise GrowthError("R_max must be >= 0")
    policy = policy or GrowthPolicy()
    fam = group.family
    n = policy.n_start
    if n is None:
        n = 1
        while _path_total(fam, n) <= R_max and n < policy.depth_cap:
            n += 1
    depths: list[int] = []
    columns: dict[int, list[int]] = {}
    certified = False
    while n <= policy.depth_cap and _path_total(fam, n) <= policy.path_cap:
        try:
            col = _ball_column(group, R_max, n, threads, policy.cell_cap)
        except _CapReached:
            break
        if depths:
            prev = columns[depths[-1]]
            if any(a > b for a, b in zip(prev, col)):
                raise GrowthError(f"depth {n}: counts decreased under refinement")
        depths.append(n)
        columns[n] = col
        k = policy.stable_rounds
        if len(depths) > k and all(columns[d] == col for d in depths[-k - 1 :]):
            certified = True
            break
        n += policy.n_step
    if not depths:
        raise GrowthError("no admissible depth under the caps")
    final = columns[depths[-1]]
    k = policy.stable_rounds
    tail = depths[-k - 1 :]
    stable = [len(tail) > k and all(columns[d][R] == final[R] for d in tail) for R in range(R_max + 1)]
    return GrowthReport(list(range(R_max + 1)), depths, columns, final, stable, certified, policy)


def dihedral_oracle(R_max: int) -> list[int]:
    """Ball sizes of the infinite dihedral group in its two involutions."""
    return [2 * R + 1 for R in range(R_max + 1)]


def brute_force_growth(group: Group, R_max: int, n: int) -> list[int]:
    """Reference count: every word evaluated letter by letter on every path, no memoization."""
    from .diagram import all_paths

    paths = all_paths(group.family.diagram, n)
    seen = set()
    counts = []
    words: list[list[str]] = [[]]
    for R in range(R_max + 1):
        if R > 0:
            words = [w + [s] for w in words for s in group.letters]
        for w in words:
            img = []
            for p in paths:
                q = p
                for s in w:
                    q = group.gens[s].apply(q)
                img.append(q)
            seen.add(tuple(img))
        counts.append(len(seen))
    return counts


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    points: list[tuple[int, ...]]
    status: list[str]
    depth: int


def trajectory(group: Group, word: Sequence[str], start: Sequence[int], max_depth: int = 120, seed: int = 0) -> Trajectory:
    """Points visited by the word from start, deepened until no step is undecided."""
    p = tuple(start)
    while True:
        pts, sts = [p], []
        for s in word:
            q, st = group.gens[s].apply_status(pts[-1])
            pts.append(q)
            sts.append(st)
        if PENDING not in sts:
            return Trajectory(pts, sts, len(p))
        if len(p) + 2 > max_depth:
            raise GrowthError("trajectory undecided up to the depth cap")
        p = extend_path(group.family, p, len(p) + 2, seed)


def _boundary_sets(family, n: int) -> tuple[set, dict]:
    allp = family.boundary_points_all(n)
    return set(allp), allp


# ---------------------------------------------------------------------------
# return words and incompressible words
# ---------------------------------------------------------------------------

def _anchors(group: Group, n: int, horizon: int):
    """Depth-(n+horizon) boundary points, each with all 3-level continuations."""
    fam = group.family
    N = n + horizon
    out = []
    for p, labs in sorted(fam.boundary_points_all(N).items(), key=lambda x: x[0]):
        for q in fam.continuations_to(p, N + 3):
            out.append((q, labs))
    return N, out


def _return_spans_from(group: Group, word: Sequence[str], i: int, n: int, N: int, anchors, end: Optional[int]):
    fam = group.family
    gens = group.gens
    found = set()
    F = word[i]
    base_in = gens[F].base
    for xi1, labs in anchors:
        if base_in not in labs:
            continue
        # the entering letter must move something into xi1
        y, st = gens[gens[F].inverse].apply_status(xi1)
        if st != MOVED or y[n:] == xi1[n:]:
            continue
        cur = xi1
        last = len(word) - 1 if end is None else end
        for j in range(i + 1, last + 1):
            q, st = gens[word[j]].apply_status(cur)
            if st == PENDING or q[n:] != cur[n:]:
                labs2 = fam.boundary_points_all(N).get(cur[:N], frozenset())
                if gens[word[j]].base in labs2 and (end is None or j == end):
                    found.add((i, j))
                break
            cur = q
    return found


def detect_returns(group: Group, word: Sequence[str], n: int, horizon: int = 4, end: Optional[int] = None) -> list[tuple[int, int]]:
    """Maximal spans (i, j) of the word that are return words at depth n for some placement.

    A placement starts at a depth-(n+horizon) boundary point reached by word[i] from
    outside its depth-n tile; the walk stays inside that tile until word[j] leaves it
    from a boundary point for word[j]'s label.  With ``end`` set only spans ending
    there are searched.
    """
    word = list(word)
    if len(word) < 2:
        return []
    N, anchors = _anchors(group, n, horizon)
    spans: set = set()
    starts = range(len(word) - 1) if end is None else range(end)
    for i in starts:
        spans |= _return_spans_from(group, word, i, n, N, anchors, end)
    maximal = [s for s in spans if not any(t != s and t[0] <= s[0] and s[1] <= t[1] for t in spans)]
    return sorted(maximal)


@dataclass
class IncompressibleReport:
    words: list[list[str]]
    per_length: list[int]
    window: list[int]
    stable_from: Optional[int]


def enumerate_incompressible(group: Group, L: int, n_window: Sequence[int], horizon: int = 4) -> IncompressibleReport:
    """Reduced words of length <= L free of return subwords at every depth in the window."""
    if L < 1:
        raise GrowthError("L must be >= 1")
    window = list(n_window)
    anchors = {n: _anchors(group, n, horizon) for n in window}
    layer = [[s] for s in group.letters]
    words = list(layer)
    per_length = [len(layer)]
    for _ in range(2, L + 1):
        nxt = []
        for w in layer:
            for s in group.letters:
                cand = w + [s]
                if len(group.reduce(cand)) != len(cand):
                    continue
                e = len(cand) - 1
                ok = True
                for n in window:
                    N, anc = anchors[n]
                    if any(_return_spans_from(group, cand, i, n, N, anc, e) for i in range(e)):
                        ok = False
                        break
                if ok:
                    nxt.append(cand)
        per_length.append(len(nxt))
        words.extend(nxt)
        layer = nxt
        if not nxt:
            break
    stable_from = next((k + 1 for k, c in enumerate(per_length) if c == 0), None)
    return IncompressibleReport(words, per_length, window, stable_from)


# ---------------------------------------------------------------------------
# traverses
# ---------------------------------------------------------------------------

@dataclass
class TraverseReport:
    word: list[str]
    start: tuple[int, ...]
    levels: list[int]
    typed: dict[int, dict[str, int]]  # level -> germ type -> count
    totals: dict[int, int]  # T_n, non-identity types only
    untyped: dict[int, int]  # all traverses, counted without typing
    stranded: dict[int, list[int]]
    depth: int

    def to_json(self) -> str:
        d = asdict(self)
        d["start"] = list(self.start)
        for k in ("typed", "totals", "untyped", "stranded"):
            d[k] = {str(a): b for a, b in d[k].items()}
        return json.dumps(d, indent=2, sort_keys=True)


def germ_type(group: Group, steps: Sequence[tuple[str, tuple[int, ...]]], n: int) -> str:
    """Product of germs of the letters applied at a singular position of the depth-n tile."""
    fam = group.family
    acc: dict[str, list[int]] = {}
    for s, x in steps:
        g = group.gens[s]
        if g.spec is None:
            continue
        for xi in g.spec.relevant:
            if x[:n] != fam.singular_prefix(xi, n):
                continue
            cl = fam.classifiers[xi]
            vec = g.spec.vectors.get(xi)
            if vec is None:
                vec = (g.spec.default,) * cl.modulus
            if len(vec) != cl.modulus:
                raise GrowthError(f"germ table of {s} at {xi} has the wrong width")
            cur = acc.setdefault(xi, [0] * cl.modulus)
            order = fam.orders[cl.label]
            for k, v in enumerate(vec):
                cur[k] = (cur[k] + v) % order
    parts = [f"{xi}:{''.join(map(str, v))}" for xi, v in sorted(acc.items()) if any(v)]
    return "|".join(parts) if parts else "Id"


def stranded_tiles(family, n: int) -> list[int]:
    """Level-n tiles each of whose copies at level n+1 has at most one exit.

    An exit of a copy is one of its boundary points that is glued to another copy
    or stays a boundary point one level up; a copy with a single exit can only be
    left the way it was entered.
    """
    d = family.diagram
    lv = d.level(n + 1)
    exits: dict[int, set] = {}
    for con in family.connectors(n + 1):
        if len(set(con.points)) < 2:
            continue
        for q in con.points:
            exits.setdefault(q[-1], set()).add(q[:-1])
    for q in family.boundary_points_all(n + 1):
        exits.setdefault(q[-1], set()).add(q[:-1])
    return [v for v in range(lv.n_src) if all(len(exits.get(e, ())) <= 1 for e in lv.out_edges(v))]


def _traverses_at(points: list[tuple[int, ...]], word: Sequence[str], n: int, bd: set):
    """Index pairs (k1, k2) of traverses of depth-n tiles along the point sequence."""
    res = []
    k1 = None
    for k, x in enumerate(points):
        inside_bd = x[:n] in bd
        if k1 is not None and points[k][n:] != points[k1][n:]:
            k1 = None
        if inside_bd:
            if k1 is not None:
                # loops count too: at a singular position they switch the germ branch
                res.append((k1, k))
            k1 = k
    return res


def count_traverses(
    group: Group,
    word: Sequence[str],
    start: Sequence[int],
    levels: Sequence[int],
    horizon: int = 2,
    seed: int = 0,
) -> TraverseReport:
    fam = group.family
    word = list(word)
    levels = sorted(set(levels))
    top = max(levels) + horizon
    p = tuple(start)
    if len(p) < top:
        p = extend_path(fam, p, top, seed)
    tr = trajectory(group, word, p, seed=seed)
    pts = tr.points
    typed: dict[int, dict[str, int]] = {}
    totals: dict[int, int] = {}
    untyped: dict[int, int] = {}
    stranded: dict[int, list[int]] = {}
    for n in levels:
        if n < 1:
            raise GrowthError("traverse levels start at 1")
        bd = set(fam.boundary_points_all(n))
        st = set(stranded_tiles(fam, n))
        stranded[n] = sorted(st)
        hist: dict[str, int] = {}
        raw = 0
        for k1, k2 in _traverses_at(pts, word, n, bd):
            v = fam.end_of(pts[k1][:n])
            if v in st:
                continue
            raw += 1
            h = germ_type(group, [(word[t], pts[t]) for t in range(k1, k2)], n)
            hist[h] = hist.get(h, 0) + 1
        if sum(hist.values()) != raw:
            raise GrowthError("typed and untyped traverse counts disagree")
        typed[n] = dict(sorted(hist.items()))
        totals[n] = sum(c for h, c in hist.items() if h != "Id")
        untyped[n] = raw
    return TraverseReport(word, tuple(pts[0]), levels, typed, totals, untyped, stranded, tr.depth)


def measured_L(family, upto: int = 40) -> int:
    """3N + 3 with N the largest gap between consecutive occurrence levels of any singular point."""
    gap = 1
    for xi in family.classifiers:
        lv = [o.level for o in family.occurrences_cached(xi, upto)]
        if len(lv) >= 2:
            gap = max(gap, max(b - a for a, b in zip(lv, lv[1:])))
    return 3 * gap + 3


@dataclass
class ContractionCheck:
    L: int
    pairs: list[tuple[int, int, int]]  # (n, T_{n+L}, T_n)
    violations: list[tuple[int, int, int]]


def check_contraction(reports: Sequence[TraverseReport], L: int) -> ContractionCheck:
    """T_{n+L} <= T_n at every level pair free of stranded tiles."""
    pairs, bad = [], []
    for rep in reports:
        for n in rep.levels:
            if rep.stranded.get(n) or rep.stranded.get(n + L):
                continue
            if n + L in rep.totals:
                t = (n, rep.totals[n + L], rep.totals[n])
                pairs.append(t)
                if t[1] > t[2]:
                    bad.append(t)
    return ContractionCheck(L, pairs, bad)


def sample_words(group: Group, count: int, length: int, seed: int) -> list[list[str]]:
    rng = random.Random(seed)
    return [group.random_word(rng, length) for _ in range(count)]


# ---------------------------------------------------------------------------
# exponent estimates
# ---------------------------------------------------------------------------

def transfer_matrix(diagram, m: int) -> np.ndarray:
    """M[v, u] = number of level-m edges from u to v."""
    lv = diagram.level(m)
    M = np.zeros((lv.n_rng, lv.n_src), dtype=float)
    for e in range(len(lv.names)):
        M[lv.rng[e], lv.src[e]] += 1
    return M


def eigen_beta(diagram, start: int, period: int) -> float:
    """Dominant eigenvalue of the period product of transfer matrices, per level."""
    P = np.eye(diagram.level(start).n_src)
    for m in range(start, start + period):
        P = transfer_matrix(diagram, m) @ P
    ev = np.max(np.abs(np.linalg.eigvals(P)))
    return float(ev ** (1.0 / period))


def aitken(seq: Sequence[float]) -> float:
    """Delta-squared extrapolation of the last three terms; the last term when degenerate."""
    if len(seq) < 3:
        return float(seq[-1])
    x0, x1, x2 = seq[-3:]
    den = x2 - 2 * x1 + x0
    if abs(den) < 1e-15:
        return float(x2)
    return float(x2 - (x2 - x1) ** 2 / den)


@dataclass
class ExponentEstimates:
    beta_sequence: list[float]
    beta_ratio_sequence: list[float]
    beta: float
    beta_eigen: Optional[float] = None
    eta: Optional[float] = None
    eta_fit: dict = field(default_factory=dict)
    t0: Optional[float] = None
    alpha_t0: Optional[float] = None
    alpha_eta: Optional[float] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def estimate_beta(rows: Sequence[Sequence[int]], period: int = 1, diagram=None) -> ExponentEstimates:
    """Root and ratio sequences of the total tile size, with an extrapolated limit."""
    N = len(rows) - 1
    if N < 4 or N < 2 * period + 1:
        raise GrowthError("cardinality table too short")
    s = [float(sum(r)) for r in rows]
    roots = [s[n] ** (1.0 / n) for n in range(1, N + 1)]
    ratios = [(s[n + period] / s[n]) ** (1.0 / period) for n in range(0, N - period + 1)]
    # Aitken on the subsequence sampled once per period removes the periodic wobble
    sub = ratios[(len(ratios) - 1) % period :: period]
    beta = aitken(sub)
    ev = None
    if diagram is not None:
        ev = eigen_beta(diagram, N + 1 - period, period) if period else None
    return ExponentEstimates(roots, ratios, beta, ev)


def alpha_thresholds(beta: float, t0: Optional[float] = None, eta: Optional[float] = None) -> dict[str, float]:
    if not beta > 1:
        raise GrowthError("beta must exceed 1")
    out = {}
    if t0 is not None:
        if not t0 > 1:
            raise GrowthError("t0 must exceed 1")
        out["t0"] = math.log(beta) / (math.log(beta) + math.log(t0))
    if eta is not None:
        if not 0 < eta < 1:
            raise GrowthError("eta must lie in (0, 1)")
        out["eta"] = math.log(beta) / (math.log(beta) - math.log(eta))
    if not out:
        raise GrowthError("need t0 or eta")
    return out


def fit_contraction(totals: Sequence[dict[int, int]], L: int) -> dict:
    """Least-squares rho in T_{n+L} ~ rho T_n over all reports; eta = rho^(1/L)."""
    xs, ys = [], []
    for t in totals:
        for n, v in t.items():
            if n + L in t and v > 0:
                xs.append(v)
                ys.append(t[n + L])
    if not xs:
        return {"rho": None, "eta": None, "residual": None, "samples": 0}
    x, y = np.array(xs, float), np.array(ys, float)
    rho = float(x @ y / (x @ x))
    res = float(np.sqrt(np.mean((y - rho * x) ** 2)))
    eta = rho ** (1.0 / L) if 0 < rho < 1 else None
    return {"rho": rho, "eta": eta, "residual": res, "samples": len(xs)}


def exponent_estimates(
    rows, period: int, diagram, traverse_totals: Sequence[dict[int, int]], L: int
) -> ExponentEstimates:
    est = estimate_beta(rows, period, diagram)
    fit = fit_contraction(traverse_totals, L)
    est.eta_fit = fit
    est.eta = fit["eta"]
    one = fit_contraction(traverse_totals, 1)
    if one["rho"] is not None and 0 < one["rho"] < 1:
        est.t0 = 1.0 / one["rho"]
    if est.beta > 1:
        if est.t0 is not None:
            est.alpha_t0 = alpha_thresholds(est.beta, t0=est.t0)["t0"]
        if est.eta is not None:
            est.alpha_eta = alpha_thresholds(est.beta, eta=est.eta)["eta"]
    return est


# ---------------------------------------------------------------------------
# probes
# ---------------------------------------------------------------------------

@dataclass
class SubadditivityProbe:
    s: list[float]
    C: float
    calibration: int
    violations: list[tuple[int, int]]


def subadditivity_probe(max_dist: Sequence[int], calibration: Optional[int] = None) -> SubadditivityProbe:
    """C is measured on m + n <= calibration and checked on the whole range."""
    s = [math.log(max(d, 1)) for d in max_dist]
    K = len(s) - 1
    cal = calibration if calibration is not None else K // 2
    logC = 0.0
    for m in range(1, cal + 1):
        for n in range(1, cal + 1 - m):
            logC = max(logC, s[m + n] - s[m] - s[n])
    bad = [
        (m, n)
        for m in range(1, K + 1)
        for n in range(1, K + 1 - m)
        if s[m + n] > s[m] + s[n] + logC + 1e-12
    ]
    return SubadditivityProbe(s, math.exp(logC), cal, bad)


def ball_slopes(sizes: Sequence[int], windows: Sequence[tuple[int, int]]) -> list[float]:
    """Least-squares slope of log #B(R) against log R on each radius window."""
    out = []
    for lo, hi in windows:
        R = np.arange(lo, hi + 1)
        y = np.log(np.asarray(sizes, float)[lo : hi + 1])
        out.append(float(np.polyfit(np.log(R), y, 1)[0]))
    return out


@dataclass
class OrderSample:
    word: list[str]
    orders: list[tuple[int, int]]  # (depth, order)
    stable_depth: Optional[int]


def order_stabilization(
    group: Group, words: Sequence[Sequence[str]], n_start: int = 2, run: int = 3, depth_cap: int = 12
) -> list[OrderSample]:
    """Induced-map orders by depth until ``run`` consecutive depths agree."""
    out = []
    for w in words:
        orders = []
        stable = None
        for n in range(n_start, depth_cap + 1):
            orders.append((n, group.induced_map(w, n).order()))
            last = [o for _, o in orders[-run:]]
            if len(last) == run and len(set(last)) == 1:
                stable = orders[-run][0]
                break
        out.append(OrderSample(list(w), orders, stable))
    return out


def growth_trend(gamma: Sequence[int], alpha: float, allowance: float = 0.5) -> dict:
    """log log gamma(R) / log R against the threshold, as a trend figure only."""
    vals = {}
    for R, g in enumerate(gamma):
        if R >= 3 and g > math.e:
            vals[R] = math.log(math.log(g)) / math.log(R)
    worst = max(vals.values(), default=None)
    return {"ratios": vals, "alpha": alpha, "within": worst is None or worst <= alpha + allowance}
