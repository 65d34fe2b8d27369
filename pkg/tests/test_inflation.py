import pytest

from artifact.families import make_family
from artifact.inflation import (
    InflationError,
    base_tiles,
    boundary_points,
    build_tiles,
    check_counts_against_paths,
    check_expansion,
    check_linear_repetitivity,
    diameter,
    inflate,
    max_boundary_distance,
    tile_cardinalities,
    tiles_to_dot,
)
from oracles import cf_recurrence, one_three_recurrence


def test_cf_c22_cardinalities():
    assert tile_cardinalities(make_family("cf-dihedral", [2, 2]), 2)[2] == [7, 5]


@pytest.mark.parametrize("r", [2, 3, 5])
def test_cf_first_level(r):
    assert tile_cardinalities(make_family("cf-dihedral", [r]), 1)[1] == [r + 1, r]


def test_one_three_identities():
    rows = tile_cardinalities(make_family("one-three", "113"), 10)
    assert rows == one_three_recurrence("113", 10)
    assert all(rows[n + 1][1] == rows[n][0] for n in range(10))


def test_counts_match_paths():
    assert check_counts_against_paths(make_family("cf-dihedral", [3, 2]), 8)
    assert check_counts_against_paths(make_family("one-three", "13"), 8)


def test_cf_two_boundary_points_per_tile():
    f = make_family("cf-dihedral", [3, 2])
    ts = build_tiles(f, 6)
    for n in range(1, 7):
        for t in ts.levels[n].values():
            assert len(boundary_points(t)) == 2


def test_one_three_case1_level2_listing():
    f = make_family("one-three", "1")
    t = build_tiles(f, 2).tile(2, 0)
    fmt = f.diagram.format_path
    edges = {(fmt(p), fmt(q), lab) for p, q, lab in t.edges() if p != q}
    assert sorted(fmt(p) for p in t.vertices) == ["00", "0e2", "e2e1"]
    assert edges == {("00", "e2e1", "a"), ("e2e1", "00", "a"), ("00", "0e2", "b"), ("0e2", "00", "b")}


def test_one_three_3_cycle_diameter():
    f = make_family("one-three", "31")
    assert diameter(build_tiles(f, 1).tile(1, 0)) == 2


def test_single_vertex_diameter():
    f = make_family("cf-dihedral", [2])
    assert diameter(build_tiles(f, 0).tile(0, 0)) == 0


def test_cf_tiles_are_segments():
    f = make_family("cf-dihedral", [2])
    ts = build_tiles(f, 8)
    for t in ts.levels[8].values():
        assert diameter(t) == t.size - 1 == max_boundary_distance(t)


def test_cf_diameter_ratio_converges():
    f = make_family("cf-dihedral", [2])
    ts = build_tiles(f, 12)
    d = [diameter(ts.tile(n, 0)) for n in range(6, 13)]
    r = [b / a for a, b in zip(d, d[1:])]
    assert abs(r[-1] - r[-2]) < 1e-3 and abs(r[-1] - (1 + 2**0.5)) < 1e-3


def test_disconnected_inflation_rejected():
    f = make_family("cf-dihedral", [2])
    t0 = base_tiles(f.diagram, f.labels, f.connectors(0))
    with pytest.raises(InflationError):
        inflate(f.diagram, t0, [], 1)


def test_non_admissible_connector_rejected():
    f = make_family("cf-dihedral", [2])
    t0 = base_tiles(f.diagram, f.labels, f.connectors(0))
    cons = list(f.connectors(1))
    with pytest.raises(InflationError):
        inflate(f.diagram, t0, cons + cons[:1], 1)


def test_expansion_cf():
    r = check_expansion(make_family("cf-dihedral", [2]), range(1, 11), 3)
    assert r.passed and r.step is not None


def test_expansion_vacuous():
    assert check_expansion(make_family("cf-dihedral", [2]), range(1, 2), 2).passed


def test_expansion_one_three_needs_step_2():
    r = check_expansion(make_family("one-three", "13"), range(1, 12), 3)
    assert r.passed and r.step == 2


def test_linear_repetitivity():
    cf = check_linear_repetitivity(make_family("cf-dihedral", [3]), 10)
    assert set(cf.table.values()) == {1} and cf.bounded
    ot = check_linear_repetitivity(make_family("one-three", "13"), 10)
    assert set(v for v in ot.table.values() if v is not None) == {2} and ot.bounded
    assert check_linear_repetitivity(make_family("cf-dihedral", [3]), 1).table == {}


def test_dot_export():
    f = make_family("one-three", "13")
    text = tiles_to_dot(build_tiles(f, 2).tile(2, 0), f.diagram)
    assert text.startswith("digraph") and "style=dashed" in text


def test_boundary_continuation():
    f = make_family("one-three", "13")
    for n in range(1, 8):
        prev = set(f.boundary_points_all(n - 1)) if n > 1 else None
        for p in f.boundary_points_all(n):
            if prev is not None:
                assert p[:-1] in prev


def test_cf_recurrence_periodic():
    f = make_family("cf-dihedral", [5, 2, 4, 3])
    assert tile_cardinalities(f, 10) == cf_recurrence([5, 2, 4, 3], 10)
