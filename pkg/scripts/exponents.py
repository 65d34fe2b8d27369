"""beta from tile cardinalities, eta and t0 from traverse counts, and the alpha thresholds."""
import argparse
import random

from artifact.action import build_group, extend_path
from artifact.families import make_family
from artifact.growth import count_traverses, exponent_estimates, measured_L, sample_words
from artifact.inflation import tile_cardinalities


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", default="one-three", choices=["cf-dihedral", "one-three"])
    ap.add_argument("--params", default="13")
    ap.add_argument("--words", type=int, default=20)
    ap.add_argument("--length", type=int, default=64)
    a = ap.parse_args()
    params = [int(x) for x in a.params.split(",")] if a.family == "cf-dihedral" else a.params
    f = make_family(a.family, params)
    g = build_group(f, True)
    L = measured_L(f)
    xis = sorted(f.classifiers)
    reps = []
    for k, w in enumerate(sample_words(g, a.words, a.length, 7)):
        rng = random.Random(k)
        start = extend_path(f, f.singular_prefix(xis[k % len(xis)], rng.randrange(8, 40)), 44, k)
        reps.append(count_traverses(g, w, start, range(1, 31)))
    est = exponent_estimates(tile_cardinalities(f, 20), len(params), f.diagram, [r.totals for r in reps], L)
    print(est.to_json())


if __name__ == "__main__":
    main()
