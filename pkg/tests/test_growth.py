import math
import random

import pytest

from artifact.action import build_group, random_path
from artifact.families import make_family
from artifact.growth import (
    GrowthError,
    GrowthPolicy,
    alpha_thresholds,
    ball_slopes,
    brute_force_growth,
    check_contraction,
    count_traverses,
    detect_returns,
    dihedral_oracle,
    enumerate_incompressible,
    estimate_beta,
    fit_contraction,
    growth_series,
    measured_L,
    order_stabilization,
    subadditivity_probe,
)
from oracles import ALPHA_GOLDEN, dihedral_balls


@pytest.fixture(scope="module")
def cf323():
    return build_group(make_family("cf-dihedral", [3, 2, 3]), True)


@pytest.fixture(scope="module")
def ot_frag():
    return build_group(make_family("one-three", "13"), True)


def test_growth_radius_zero():
    g = build_group(make_family("cf-dihedral", [3, 2]))
    assert growth_series(g, 0).gamma == [1]


def test_growth_rejects_negative():
    g = build_group(make_family("cf-dihedral", [3, 2]))
    with pytest.raises(GrowthError):
        growth_series(g, -1)


@pytest.mark.parametrize("c", [[2], [3, 2], [5, 2, 4]])
def test_unfragmented_cf_is_dihedral(c):
    g = build_group(make_family("cf-dihedral", c))
    rep = growth_series(g, 12)
    assert rep.certified
    assert rep.gamma == dihedral_oracle(12) == dihedral_balls(12)


def test_brute_force_agrees_fragmented(ot_frag):
    pol = GrowthPolicy(n_start=5, stable_rounds=1, depth_cap=5)
    assert brute_force_growth(ot_frag, 3, 5) == [1, 10, 60, 302]
    assert growth_series(ot_frag, 3, pol).gamma == [1, 10, 60, 302]


def test_brute_force_agrees_cf(cf323):
    pol = GrowthPolicy(n_start=4, stable_rounds=1, depth_cap=4)
    assert growth_series(cf323, 3, pol).gamma == brute_force_growth(cf323, 3, 4)


def test_growth_monotone_and_bounded(ot_frag):
    rep = growth_series(ot_frag, 4, GrowthPolicy(n_start=4, stable_rounds=1, depth_cap=6))
    k = len(ot_frag.letters)
    for n in rep.depths:
        col = rep.columns[n]
        assert all(x < y for x, y in zip(col, col[1:])) or col[-1] == col[-2]
        assert all(col[R + 1] <= col[R] * (k + 1) for R in range(len(col) - 1))
    for a, b in zip(rep.depths, rep.depths[1:]):
        assert all(x <= y for x, y in zip(rep.columns[a], rep.columns[b]))


def test_growth_csv_json(cf323):
    rep = growth_series(cf323, 2, GrowthPolicy(n_start=3, stable_rounds=1, depth_cap=5))
    assert rep.to_csv().splitlines()[0].startswith("R,gamma,stable")
    assert '"gamma"' in rep.to_json()


def test_alpha_thresholds():
    assert alpha_thresholds(3.0, t0=3.0)["t0"] == pytest.approx(0.5)
    assert alpha_thresholds(2.0, t0=2.0)["t0"] == pytest.approx(0.5)
    assert alpha_thresholds(2.0, eta=0.5)["eta"] == pytest.approx(0.5)
    phi = (1 + math.sqrt(5)) / 2
    assert alpha_thresholds(2.0, eta=1 / phi**2)["eta"] == pytest.approx(math.log(2) / (math.log(2) + 2 * math.log(phi)))
    assert alpha_thresholds(1 + math.sqrt(2), eta=0.9)["eta"] == pytest.approx(ALPHA_GOLDEN, abs=1e-12)


@pytest.mark.parametrize("kw", [dict(beta=1.0, t0=2.0), dict(beta=2.0, t0=1.0), dict(beta=2.0, eta=1.0), dict(beta=2.0)])
def test_alpha_domain_errors(kw):
    with pytest.raises(GrowthError):
        alpha_thresholds(**kw)


def test_estimate_beta_doubling():
    rows = [[2**n] for n in range(10)]
    est = estimate_beta(rows)
    assert est.beta == pytest.approx(2.0)
    assert est.beta_ratio_sequence[-1] == pytest.approx(2.0)


def test_estimate_beta_short_table():
    with pytest.raises(GrowthError):
        estimate_beta([[1], [2], [4]])
    with pytest.raises(GrowthError):
        estimate_beta([[1]] * 6, period=3)


def test_detect_returns_trivial(cf323):
    assert detect_returns(cf323, [], 2) == []
    assert detect_returns(cf323, ["a'"], 2) == []


@pytest.mark.parametrize("word,n", [(["b0", "d0"], 2), (["d0", "b0"], 2), (["b1", "c1"], 3)])
def test_detect_returns_witness(cf323, word, n):
    assert detect_returns(cf323, word, n) == [(0, 1)]


def test_detect_returns_none_on_line():
    g = build_group(make_family("cf-dihedral", [3, 2, 3]))
    assert detect_returns(g, ["a", "b"] * 6, 1) == []


def test_detect_returns_end_filter(cf323):
    w = ["a'", "b0", "d0"]
    assert any(j == 2 for _, j in detect_returns(cf323, w, 2, end=2))
    assert detect_returns(cf323, w, 2, end=1) == []


def test_incompressible_length_one(cf323):
    rep = enumerate_incompressible(cf323, 1, [2])
    assert rep.words == [[s] for s in cf323.letters]
    with pytest.raises(GrowthError):
        enumerate_incompressible(cf323, 0, [2])


def test_incompressible_subword_closed(cf323):
    rep = enumerate_incompressible(cf323, 3, [2, 3])
    ws = {tuple(w) for w in rep.words}
    assert ("b0", "d0") not in ws and ("b1", "c1") not in ws
    for w in ws:
        for i in range(len(w)):
            for j in range(i + 1, len(w) + 1):
                assert w[i:j] in ws


def test_measured_L():
    assert measured_L(make_family("cf-dihedral", [3, 2])) == 15
    assert measured_L(make_family("one-three", "13")) == 12


@pytest.mark.parametrize("kind,params", [("cf-dihedral", [3, 2]), ("one-three", "13")])
def test_traverse_typed_sum(kind, params):
    f = make_family(kind, params)
    g = build_group(f, True)
    rng = random.Random(5)
    for k in range(5):
        w = g.random_word(rng, 24)
        rep = count_traverses(g, w, random_path(f, 6, k), range(1, 9))
        for n in rep.levels:
            assert sum(rep.typed[n].values()) == rep.untyped[n]
            assert rep.totals[n] == sum(v for h, v in rep.typed[n].items() if h != "Id")
        assert '"typed"' in rep.to_json()


def test_traverse_interior_word_has_none():
    f = make_family("cf-dihedral", [3, 2])
    g = build_group(f, True)
    p = random_path(f, 12, 0, avoid_singular=True)
    rep = count_traverses(g, ["a'"], p, [6])
    assert rep.totals[6] == 0


def test_check_contraction_flags():
    from artifact.growth import TraverseReport

    rep = TraverseReport([], (), [1, 2, 3], {}, {1: 4, 2: 5, 3: 6}, {}, {}, 0)
    chk = check_contraction([rep], 1)
    assert chk.pairs == [(1, 5, 4), (2, 6, 5)]
    assert chk.violations == chk.pairs


def test_fit_contraction():
    fit = fit_contraction([{1: 8, 2: 4, 3: 2}], 1)
    assert fit["rho"] == pytest.approx(0.5) and fit["eta"] == pytest.approx(0.5)
    assert fit_contraction([{}], 1)["samples"] == 0


def test_subadditivity():
    probe = subadditivity_probe([1, 2, 4, 8, 16, 32, 64])
    assert probe.C == pytest.approx(1.0) and probe.violations == []
    bad = subadditivity_probe([1, 2, 2, 2, 2, 2, 100], calibration=4)
    assert bad.violations


def test_ball_slopes():
    sizes = [2 * R + 1 for R in range(257)]
    s = ball_slopes(sizes, [(64, 128), (128, 256)])
    assert all(0.95 < x < 1.0 for x in s)
    quad = [R * R for R in range(1, 200)]
    quad.insert(0, 1)
    assert ball_slopes(quad, [(50, 150)])[0] == pytest.approx(2.0, abs=1e-9)


def test_order_stabilization_involution():
    g = build_group(make_family("cf-dihedral", [3, 2]), True)
    out = order_stabilization(g, [["a'"], ["a'", "b'"]], n_start=2, run=3, depth_cap=10)
    assert [o for _, o in out[0].orders] == [2, 2, 2]
    assert out[0].stable_depth == 2
    assert out[1].stable_depth is not None
