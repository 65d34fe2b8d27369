"""Command-line front end.

Every subcommand computes all of its outputs in memory first and writes them
only on success, so a failed run leaves the output directory untouched.
Exit codes: 0 success, 1 validation, 2 computation error, 3 instability or cap.
"""
from __future__ import annotations

import json
import os
import random
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Optional

import click
import yaml

from . import action, automaton, families, growth, inflation
from .diagram import DiagramError

EXIT_OK, EXIT_VALIDATION, EXIT_COMPUTE, EXIT_UNSTABLE = 0, 1, 2, 3

DEFAULTS: dict[str, Any] = {
    "family": "cf-dihedral",
    "params": [2, 3],
    "fragmented": False,
    "periodic": True,
    "levels": 6,
    "seed": 0,
    "threads": None,
    "out": "out",
    "radius": 16,
    "depth": None,
    "start": None,
    "word": None,
    "lookahead": 4,
    "window": 3,
    "words": 50,
    "length": 64,
    "prefix": [2, 3, 2, 3, 2, 3, 2, 3],
}


class ValidationError(Exception):
    pass


class Unstable(Exception):
    def __init__(self, message: str, files: dict[str, str]):
        super().__init__(message)
        self.files = files


@dataclass
class RunConfig:
    family: str
    params: Any
    fragmented: bool
    periodic: bool
    levels: int
    seed: int
    threads: int
    out: str
    radius: int
    depth: Optional[int]
    start: Optional[str]
    word: Optional[str]
    lookahead: int
    window: int
    words: int
    length: int
    prefix: list[int]

    def family_obj(self, levels: Optional[int] = None):
        params = self.params
        lv = max(self.levels, levels or 0) + 160  # levels are built lazily
        if self.family == "cf-dihedral":
            c = [int(x) for x in (params.replace(",", " ").split() if isinstance(params, str) else params)]
            if not self.periodic:
                lv = len(c)
            return families.CfDihedralFamily(c, levels=lv, periodic=self.periodic, actions=min(c) >= 2)
        return families.OneThreeFamily(str(params), levels=lv, periodic=self.periodic)


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}") from exc
    try:
        data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ValidationError(f"cannot parse config: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValidationError("config must be a mapping")
    data = dict(data)
    for alias in ("c", "w"):
        if alias in data:
            data.setdefault("params", data.pop(alias))
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    return data


def build_config(config_path: Optional[str], flags: dict) -> RunConfig:
    merged = dict(DEFAULTS)
    cfg = _load_config(config_path)
    if "family" in cfg and "params" not in cfg and "params" not in flags:
        merged["params"] = [2, 3] if cfg["family"] == "cf-dihedral" else "13"
    merged.update(cfg)
    merged.update({k: v for k, v in flags.items() if v is not None})
    if merged["threads"] is None:
        merged["threads"] = os.cpu_count() or 1
    cfg_obj = RunConfig(**merged)
    _validate(cfg_obj)
    return cfg_obj


def _validate(c: RunConfig) -> None:
    if c.family not in ("cf-dihedral", "one-three"):
        raise ValidationError(f"unknown family {c.family!r}")
    if isinstance(c.levels, bool) or not isinstance(c.levels, int) or c.levels < 1:
        raise ValidationError("levels must be an integer >= 1")
    for name in ("radius", "words", "length", "window", "lookahead"):
        v = getattr(c, name)
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ValidationError(f"{name} must be a nonnegative integer")
    if not isinstance(c.threads, int) or c.threads < 1:
        raise ValidationError("threads must be >= 1")
    if c.depth is not None and (not isinstance(c.depth, int) or c.depth < 1):
        raise ValidationError("depth must be >= 1")
    try:
        fam = c.family_obj()
        if c.fragmented and c.family == "cf-dihedral":
            families.fragment_dihedral(fam)
    except (families.FamilyError, DiagramError, ValueError, TypeError) as exc:
        raise ValidationError(f"invalid family parameters: {exc}") from exc
    if c.family == "cf-dihedral" and not c.periodic and c.levels > len(fam.c):
        raise ValidationError("levels exceed the finite c prefix")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (set, frozenset)):
        return sorted(o, key=repr)
    if hasattr(o, "__dataclass_fields__"):
        return asdict(o)
    if isinstance(o, tuple):
        return list(o)
    return repr(o)


def _write(out: str, files: dict[str, str]) -> None:
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(files.items()):
        (d / name).write_text(text)


def _fail(code: int, kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "exit": code, "message": message}, sort_keys=True) + "\n")
    sys.exit(code)


def _group(c: RunConfig, fam=None) -> action.Group:
    fam = fam or c.family_obj()
    return action.build_group(fam, c.fragmented)


def _parse_start(fam, text: Optional[str], n: int, seed: int) -> tuple[int, ...]:
    if text is None:
        return action.random_path(fam, n, seed)
    try:
        p = fam.diagram.parse_path(text)
    except DiagramError as exc:
        raise ValidationError(f"cannot parse start path: {exc}") from exc
    return action.extend_path(fam, p, max(n, len(p)), seed)


# ---------------------------------------------------------------------------
# subcommands (pure: config -> files)
# ---------------------------------------------------------------------------

def run_diagram(c: RunConfig) -> dict[str, str]:
    fam = c.family_obj()
    d = fam.diagram
    return {
        "diagram.dot": d.to_dot(1, c.levels),
        "diagram.json": d.to_json(c.levels) + "\n",
        "schedule.json": fam.schedule_json(c.levels) + "\n",
    }


def run_inflate(c: RunConfig) -> dict[str, str]:
    fam = c.family_obj()
    ts = inflation.build_tiles(fam, c.levels)
    rows = inflation.tile_cardinalities(fam, c.levels)
    diams = [[inflation.diameter(ts.tile(n, v)) for v in sorted(ts.levels[n])] for n in range(c.levels + 1)]
    width = max(len(r) for r in rows)
    rows = [r + [""] * (width - len(r)) for r in rows]
    diams = [r + [""] * (width - len(r)) for r in diams]
    files = {"cardinalities.csv": inflation.cardinalities_csv(rows, diams)}
    for v in sorted(ts.levels[c.levels]):
        files[f"tile_{c.levels}_{v}.dot"] = inflation.tiles_to_dot(
            ts.tile(c.levels, v), fam.diagram, f"T_{v},{c.levels}"
        )
    return files


def run_check(c: RunConfig) -> dict[str, str]:
    fam = c.family_obj(c.levels + 2)
    exp = inflation.check_expansion(fam, range(1, c.levels + 1), c.window)
    rep = inflation.check_linear_repetitivity(fam, c.levels)
    bd = {n: max(len(blk) for blks in inflation.blocks_at(fam, n).values() for blk in blks) for n in range(1, c.levels)}
    counts = {
        n: max(sum(1 for p in fam.boundary_points_all(n) if fam.end_of(p) == v) for v in range(fam.diagram.level(n).n_rng))
        for n in range(1, c.levels + 1)
    }
    sv, se = fam.diagram.sup_counts(c.levels)
    report = {
        "expansion": asdict(exp),
        "linear_repetitivity": {"table": {str(k): v for k, v in rep.table.items()}, "bounded": rep.bounded},
        "bounded_type": {
            "max_boundary_points_per_tile": {str(k): v for k, v in counts.items()},
            "max_block_size": {str(k): v for k, v in bd.items()},
            "sup_vertices": sv,
            "sup_edges": se,
            "infinite_tile_boundary_points": sorted(fam.classifiers),
        },
    }
    return {"check.json": _dump(report)}


def run_automaton(c: RunConfig) -> dict[str, str]:
    fam = c.family_obj(c.levels + c.lookahead)
    A = automaton.build_automaton(fam, c.levels, c.lookahead)
    return {"automaton.json": A.to_json() + "\n", "automaton.dot": A.to_dot()}


def run_orbit(c: RunConfig) -> dict[str, str]:
    fam = c.family_obj()
    g = _group(c, fam)
    depth = c.depth or c.levels
    start = _parse_start(fam, c.start, depth, c.seed)
    G = action.orbit(g, start[:depth], depth, cap=200_000)
    summary = {
        "depth": depth,
        "start": fam.diagram.format_path(start[:depth]),
        "size": len(G.vertices),
        "truncated": G.truncated,
        "perfectly_labeled": G.perfectly_labeled(),
        "max_degree": G.max_degree(),
        "seed": c.seed,
    }
    files = {"orbit.json": _dump(summary)}
    if len(G.vertices) <= 5000:
        files["orbit.dot"] = G.to_dot(fam.diagram)
    try:
        bt = action.ball_growth(g, start, c.radius, seed=c.seed)
    except action.ActionError as exc:
        raise Unstable(str(exc), files) from exc
    lines = ["R,size"] + [f"{R},{s}" for R, s in enumerate(bt.sizes)]
    files["balls.csv"] = "\n".join(lines) + "\n"
    summary["ball_depth"] = bt.depth
    files["orbit.json"] = _dump(summary)
    return files


def run_growth(c: RunConfig) -> dict[str, str]:
    g = _group(c)
    policy = growth.GrowthPolicy(n_start=c.depth)
    rep = growth.growth_series(g, c.radius, policy, threads=c.threads)
    files = {"growth.csv": rep.to_csv(), "growth.json": rep.to_json() + "\n"}
    if not rep.certified:
        raise Unstable("growth columns did not stabilize under the caps", files)
    return files


def _singular_starts(fam, k: int, N: int) -> tuple[int, ...]:
    rng = random.Random(k)
    xis = sorted(fam.classifiers)
    m = rng.randrange(min(8, N - 2), N - 1)
    return action.extend_path(fam, fam.singular_prefix(xis[k % len(xis)], m), N, k)


def run_traverses(c: RunConfig) -> dict[str, str]:
    fam = c.family_obj(c.levels + 8)
    g = _group(c, fam)
    if c.word is None:
        word = g.random_word(random.Random(c.seed), c.length)
    else:
        try:
            word = g.parse_word(c.word)
        except action.ActionError as exc:
            raise ValidationError(str(exc)) from exc
    N = c.levels + 4
    start = _singular_starts(fam, c.seed, N) if c.start is None else _parse_start(fam, c.start, N, c.seed)
    rep = growth.count_traverses(g, word, start, range(1, c.levels + 1), seed=c.seed)
    data = json.loads(rep.to_json())
    data["start"] = fam.diagram.format_path(rep.start)
    data["seed"] = c.seed
    return {"traverses.json": _dump(data)}


def run_estimate(c: RunConfig) -> dict[str, str]:
    N = c.levels
    fam = c.family_obj(2 * N + 8)
    period = len(fam.c) if c.family == "cf-dihedral" else len(fam.w)
    if not c.periodic:
        period = 1
    rows = inflation.tile_cardinalities(fam, max(N, 2 * period + 4))
    g = action.build_group(fam, True)
    L = growth.measured_L(fam)
    words = growth.sample_words(g, c.words, c.length, c.seed)
    top = min(N + L, 40)
    reps = [
        growth.count_traverses(g, w, _singular_starts(fam, k, top + 4), range(1, top + 1), seed=k)
        for k, w in enumerate(words)
    ]
    est = growth.exponent_estimates(rows, period, fam.diagram if c.periodic else None, [r.totals for r in reps], L)
    chk = growth.check_contraction(reps, L)
    ts = inflation.build_tiles(fam, min(N, 10))
    dists = [max(inflation.max_boundary_distance(t) for t in ts.levels[n].values()) for n in range(len(ts.levels))]
    probe = growth.subadditivity_probe(dists)
    report = {
        "estimates": asdict(est),
        "L": L,
        "contraction": {"pairs": len(chk.pairs), "violations": chk.violations},
        "subadditivity": asdict(probe),
        "seed": c.seed,
        "words": c.words,
        "length": c.length,
    }
    return {"estimate.json": _dump(report)}


def run_oracle(c: RunConfig) -> dict[str, str]:
    try:
        res = families.oracle_agreement(c.prefix)
    except families.FamilyError as exc:
        raise ValidationError(str(exc)) from exc
    ok = all(r["vertices"] and r["edges"] and r["tower_order"] for r in res)
    files = {"oracle.json": _dump({"prefix": list(c.prefix), "levels": res, "agree": ok})}
    if not ok:
        raise growth.GrowthError("interval towers disagree with the tiles")
    return files


COMMANDS = {
    "diagram": run_diagram,
    "inflate": run_inflate,
    "check": run_check,
    "automaton": run_automaton,
    "orbit": run_orbit,
    "growth": run_growth,
    "traverses": run_traverses,
    "estimate": run_estimate,
    "oracle": run_oracle,
}

COMPUTE_ERRORS = (
    growth.GrowthError,
    action.ActionError,
    automaton.AutomatonError,
    inflation.InflationError,
    families.FamilyError,
    DiagramError,
)


def execute(name: str, config_path: Optional[str], flags: dict) -> int:
    try:
        cfg = build_config(config_path, flags)
        files = COMMANDS[name](cfg)
    except ValidationError as exc:
        _fail(EXIT_VALIDATION, "validation", str(exc))
    except Unstable as exc:
        _write(cfg.out, exc.files)
        _fail(EXIT_UNSTABLE, "unstable", str(exc))
    except COMPUTE_ERRORS as exc:
        _fail(EXIT_COMPUTE, "computation", f"{type(exc).__name__}: {exc}")
    except Exception as exc:  # unexpected failures still exit with a JSON error
        _fail(EXIT_COMPUTE, "computation", f"{type(exc).__name__}: {exc}")
    _write(cfg.out, files)
    return EXIT_OK


# ---------------------------------------------------------------------------
# click wiring
# ---------------------------------------------------------------------------

def _common(f):
    opts = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None),
        click.option("--family", type=str, default=None),
        click.option("--params", type=str, default=None, help="c terms (e.g. 2,3) or a {1,3} word"),
        click.option("--fragmented/--unfragmented", default=None),
        click.option("--periodic/--finite", default=None),
        click.option("--levels", type=int, default=None),
        click.option("--out", type=str, default=None),
        click.option("--threads", type=int, default=None),
        click.option("--seed", type=int, default=None),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def _make(name: str, extra: list):
    def cmd(config_path, **kw):
        if kw.get("prefix") is not None:
            try:
                kw["prefix"] = [int(x) for x in kw["prefix"].replace(",", " ").split()]
            except ValueError:
                _fail(EXIT_VALIDATION, "validation", "prefix must be a list of integers")
        sys.exit(execute(name, config_path, kw))

    cmd.__name__ = name
    f = _common(cmd)
    for o in reversed(extra):
        f = o(f)
    return click.command(name)(f)


@click.group()
def cli() -> None:
    """Tile inflations, fragmented groups and growth estimates."""


_EXTRA = {
    "diagram": [],
    "inflate": [],
    "check": [click.option("--window", type=int, default=None)],
    "automaton": [click.option("--lookahead", type=int, default=None)],
    "orbit": [
        click.option("--depth", type=int, default=None),
        click.option("--radius", type=int, default=None),
        click.option("--start", type=str, default=None),
    ],
    "growth": [click.option("--radius", type=int, default=None), click.option("--depth", type=int, default=None)],
    "traverses": [
        click.option("--word", type=str, default=None),
        click.option("--start", type=str, default=None),
        click.option("--length", type=int, default=None),
    ],
    "estimate": [click.option("--words", type=int, default=None), click.option("--length", type=int, default=None)],
    "oracle": [click.option("--prefix", type=str, default=None)],
}

for _name, _extra in _EXTRA.items():
    cli.add_command(_make(_name, _extra))


def main(argv: Optional[list[str]] = None) -> None:
    """Console entry point; usage errors map to the validation exit code."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        _fail(EXIT_VALIDATION, "validation", "aborted")
    except click.ClickException as exc:
        _fail(EXIT_VALIDATION, "validation", exc.format_message())


if __name__ == "__main__":
    main()
