import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact.action import (
    ActionError,
    ball_growth,
    build_group,
    extend_path,
    induced_map,
    orbit,
    permutation_order,
    random_path,
)
from artifact.diagram import all_paths
from artifact.families import CfDihedralFamily, interval_oracle_towers, make_family
from artifact.inflation import build_tiles, diameter


@pytest.fixture(scope="module")
def cf_frag():
    return build_group(make_family("cf-dihedral", [3, 2]), True)


@pytest.fixture(scope="module")
def ot_frag():
    return build_group(make_family("one-three", "13"), True)


def test_empty_word_identity(cf_frag):
    assert induced_map(cf_frag, [], 5).is_identity()


@pytest.mark.parametrize("which", ["cf_frag", "ot_frag"])
def test_word_times_inverse(which, request):
    g = request.getfixturevalue(which)
    rng = random.Random(3)
    for k in range(200):
        w = g.random_word(rng, rng.randint(1, 12))
        n = 4 + k % 7
        m = induced_map(g, list(w) + g.inverse_word(w), n)
        assert m.is_identity()


@pytest.mark.parametrize("which", ["cf_frag", "ot_frag"])
def test_truncation_compatible(which, request):
    g = request.getfixturevalue(which)
    for n in range(1, 9):
        for p in all_paths(g.family.diagram, n):
            for s, gen in g.gens.items():
                q, st = gen.apply_status(p)
                if st != "pending":
                    for e in g.family.diagram.level(n + 1).out_edges(g.family.end_of(p)):
                        assert gen.apply(p + (e,))[:n] == q


@pytest.mark.parametrize("which", ["cf_frag", "ot_frag"])
def test_fragments_fix_singular_truncations(which, request):
    g = request.getfixturevalue(which)
    f = g.family
    for s, gen in g.gens.items():
        for xi in gen.spec.relevant:
            for n in range(1, 14):
                p = f.singular_prefix(xi, n)
                assert gen.apply_status(p)[1] != "moved"


def test_tables_bijective(ot_frag):
    paths, _, tabs = ot_frag.tables(7)
    for s, t in tabs.items():
        assert sorted(t.tolist()) == list(range(len(paths)))


def test_cf_r5_depth1_transpositions():
    f = make_family("cf-dihedral", [5])
    a = build_group(f).gens["a"]
    I = lambda k: f.edge(1, "I", k)
    J = lambda k: f.edge(1, "J", k)
    for x, y in [(0, 1), (2, 3), (4, 5)]:
        assert a.apply((I(x),)) == (I(y),)
    for x, y in [(0, 1), (2, 3)]:
        assert a.apply((J(x),)) == (J(y),)
    assert a.apply_status((J(4),))[1] != "moved"


def _oracle_order(T, word):
    idx = {p: i for i, p in enumerate(sorted(T.cylinders))}
    perm = np.arange(len(idx))
    for s in word:
        mp = np.arange(len(idx))
        for p, q in T.edges[s]:
            mp[idx[p]] = idx[q]
        perm = mp[perm]
    return permutation_order(perm)


@pytest.mark.parametrize("c", [[2, 3, 2, 3, 2], [5, 2, 4, 3, 2], [3, 3, 3, 3]])
def test_ab_order_matches_interval_oracle(c):
    f = CfDihedralFamily(c, levels=len(c), periodic=False)
    g = build_group(f)
    for n in range(1, len(c)):
        T = interval_oracle_towers(c, n)
        for k in (1, 2, 3):
            w = ["a", "b"] * k
            assert induced_map(g, w, n).order() == _oracle_order(T, w)


def test_orbit_single_fixed_point():
    f = make_family("cf-dihedral", [3, 2])
    mu = f.singular_prefix("mu", 6)
    from artifact.action import Group

    sub = Group(f, True)
    sub.letters = ["b0"]
    o = orbit(sub, mu, 6)
    assert o.vertices == [mu]


def test_cf_orbit_is_segment_tile():
    f = make_family("cf-dihedral", [3, 2])
    g = build_group(f)
    ts = build_tiles(f, 6)
    for seed in range(5):
        p = random_path(f, 6, seed)
        o = orbit(g, p, 6)
        t = ts.tile(6, f.end_of(p))
        assert set(o.vertices) == set(t.vertices)
        assert o.max_degree() <= 2 and o.perfectly_labeled()
        assert diameter(t) == t.size - 1


def test_one_three_not_quasi_line():
    f = make_family("one-three", "13")
    o = orbit(build_group(f), random_path(f, 8, 1), 8)
    assert o.max_degree() >= 3


def test_orbit_cap_flag():
    f = make_family("cf-dihedral", [3, 2])
    o = orbit(build_group(f), random_path(f, 6, 0), 6, cap=5)
    assert o.truncated and not o.perfectly_labeled()


def test_ball_growth_cf_line():
    f = make_family("cf-dihedral", [2, 3])
    g = build_group(f)
    bt = ball_growth(g, random_path(f, 20, 4), 40)
    assert bt.sizes[0] == 1 and bt.stable
    assert bt.sizes == [2 * R + 1 for R in range(41)]


def test_ball_growth_deterministic():
    f = make_family("one-three", "13")
    g = build_group(f)
    c = random_path(f, 10, 2)
    assert ball_growth(g, c, 30, seed=1).sizes == ball_growth(g, c, 30, seed=1).sizes


def test_parse_word(cf_frag):
    assert cf_frag.parse_word("a' b0, c1") == ["a'", "b0", "c1"]
    with pytest.raises(ActionError):
        cf_frag.parse_word("zz")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(["a0", "a1", "b0", "c0", "f1", "F1", "f2", "F2"]), max_size=12))
def test_reduce_preserves_element(word):
    g = build_group(make_family("one-three", "13"), True)
    r = g.reduce(word)
    assert len(r) <= len(word)
    n = 6
    a = induced_map(g, word, n).table if word else np.arange(len(g.tables(n)[0]))
    b = induced_map(g, r, n).table
    assert np.array_equal(a, b)


def test_extend_path_keeps_prefix():
    f = make_family("one-three", "13")
    p = random_path(f, 5, 0)
    assert extend_path(f, p, 9, 3)[:5] == p
