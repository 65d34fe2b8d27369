from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from artifact.action import build_group
from artifact.diagram import all_paths
from artifact.families import (
    FamilyError,
    classify_piece,
    fragment_dihedral,
    fragment_one_three,
    gc_elements,
    gc_kernel,
    interval_oracle_towers,
    make_family,
    one_three_connectors,
    oracle_agreement,
)


def _named(f, m):
    fmt = f.diagram.format_path
    return {(c.label, tuple(sorted(fmt(p) for p in c.points))) for c in f.connectors(m) if len(set(c.points)) > 1}


def test_cf_case1_level2_connectors():
    cons = _named(make_family("cf-dihedral", [3, 2]), 2)
    assert ("b", ("I_0I_0", "I_1J_0")) in cons
    assert ("a", ("I_1J_2", "I_2J_2")) in cons


def test_cf_even_c0_no_a_connectors():
    assert not [c for c in _named(make_family("cf-dihedral", [2, 3]), 2) if c[0] == "a"]


def test_one_three_connector_labels():
    f = make_family("one-three", "13")
    for m in range(1, 13):
        labels = {c.label for c in one_three_connectors(f, m) if c.arity == 2}
        assert labels == ({"b"} if m % 3 == 1 else {"a"}) or (m % 3 == 0 and labels <= {"a"})
        has_c = any(c.label == "c" for c in one_three_connectors(f, m))
        assert has_c == (f.wn(m) == 3)


def test_one_three_level1_connector():
    f = make_family("one-three", "1")
    assert _named(f, 1) == {("b", ("0", "e2"))}


@pytest.mark.parametrize("kind,par", [("cf-dihedral", [3, 2]), ("one-three", "113")])
def test_singular_truncations_are_boundary(kind, par):
    f = make_family(kind, par)
    for xi, sp in f.singular.items():
        for m in range(1, 15):
            assert f.singular_prefix(xi, m) in f.boundary(sp.label, m)


def test_cf_two_boundary_points_and_three_singular():
    f = make_family("cf-dihedral", [2, 3])
    assert len(f.singular) == 3
    for m in range(1, 8):
        for v in (0, 1):
            pts = [p for p in f.boundary_points_all(m) if f.end_of(p) == v]
            assert len(pts) <= 2 + 3


def test_actions_reject_c1():
    with pytest.raises(FamilyError):
        make_family("cf-dihedral", [1, 2])


def test_fragment_assumption_checked():
    with pytest.raises(FamilyError):
        fragment_dihedral(make_family("cf-dihedral", [2]))
    assert len(fragment_dihedral(make_family("cf-dihedral", [3, 2]))) == 11


def test_one_three_fragment_names():
    names = [s.name for s in fragment_one_three(make_family("one-three", "13"))]
    assert names == ["a0", "a1", "a2", "b0", "c0", "d0", "b1", "c1", "d1", "b2", "c2", "d2", "f1", "f2"]


def test_f2_exponents():
    specs = {s.name: s for s in fragment_one_three(make_family("one-three", "13"))}
    assert specs["f2"].vectors["delta"] == (1, 1, 1, 0)
    assert specs["f1"].vectors["delta"] == (0, 1, 2, 1)


def test_subdirect_product():
    els = gc_elements()
    assert len(els) == 9
    for i in range(4):
        assert {v[i] for v in els} == {0, 1, 2}
    assert gc_kernel(3) == [(0, 0), (0, 1), (0, 2)]


def test_singular_classified_singular():
    for kind, par in [("cf-dihedral", [3, 2]), ("one-three", "13")]:
        f = make_family(kind, par)
        for xi, cl in f.classifiers.items():
            for n in range(1, 12):
                assert classify_piece(cl, f.singular_prefix(xi, n)).kind == "singular"


@pytest.mark.parametrize("kind,par", [("cf-dihedral", [3, 2]), ("one-three", "13")])
def test_pieces_invariant(kind, par):
    f = make_family(kind, par)
    g = build_group(f)
    for n in range(1, 10):
        for p in all_paths(f.diagram, n):
            for xi, cl in f.classifiers.items():
                c = classify_piece(cl, p)
                if c.kind in ("piece", "low"):
                    q, st = g.gens[cl.label].apply_status(p)
                    assert st != "fixed"
                    if st == "moved":
                        assert classify_piece(cl, q) == c


def test_one_three_pieces_cover_support():
    f = make_family("one-three", "13")
    g = build_group(f)
    by_label = {}
    for xi, cl in f.classifiers.items():
        by_label.setdefault(cl.label, []).append(cl)
    for n in range(1, 10):
        for p in all_paths(f.diagram, n):
            for lab, cls in by_label.items():
                if g.gens[lab].apply_status(p)[1] == "moved":
                    kinds = [classify_piece(cl, p).kind for cl in cls]
                    assert sum(k in ("piece", "low") for k in kinds) == 1


def test_b0_trivial_on_piece2():
    f = make_family("cf-dihedral", [3, 2])
    g = build_group(f, True)
    cl = f.classifiers["mu"]
    base = build_group(f).gens["a"]
    hits = 0
    for p in all_paths(f.diagram, 9):
        c = classify_piece(cl, p)
        if c.kind == "piece":
            hits += 1
            moved = g.gens["b0"].apply(p) != p
            assert moved == (c.piece != 2)
            if moved:
                assert g.gens["b0"].apply(p) == base.apply(p)
    assert hits > 0


def test_oracle_c2_towers():
    T = interval_oracle_towers([2, 2, 2], 1)
    assert T.thetas[0] == Fraction(5, 12)
    assert [len(T.towers[v]) for v in (0, 1)] == [3, 2]
    th = T.thetas[0]
    assert T.cylinders[(0,)] == (0, 1 - 2 * th)
    assert T.cylinders[(3,)] == (1 - 2 * th, th)


def test_oracle_c5_level1():
    assert all(r["edges"] and r["vertices"] for r in oracle_agreement([5, 2]))


def test_oracle_rejects_bad_level():
    with pytest.raises(FamilyError):
        interval_oracle_towers([2, 3], 2)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(2, 5), min_size=2, max_size=6))
def test_oracle_agreement_random_prefix(c):
    assert all(r["vertices"] and r["edges"] and r["tower_order"] for r in oracle_agreement(c))


def test_schedule_json_roundtrip():
    import json

    data = json.loads(make_family("one-three", "13").schedule_json(4))
    assert len(data["levels"]) == 4 and "delta" in data["germ_tables"]


def test_telescope_ordinals():
    f = make_family("one-three", "113")
    ords = f.active_ordinals_via_telescope(20)
    assert sorted(ords) == f.active_levels(20)
    assert list(ords.values()) == list(range(len(ords)))
