"""Induced-map orders of seeded random words by depth, until three consecutive depths agree."""
import argparse
import random

from artifact.action import build_group
from artifact.families import make_family
from artifact.growth import order_stabilization


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", default="one-three", choices=["cf-dihedral", "one-three"])
    ap.add_argument("--params", default="13")
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--max-length", type=int, default=10)
    ap.add_argument("--depth-cap", type=int, default=11)
    ap.add_argument("--seed", type=int, default=11)
    a = ap.parse_args()
    params = [int(x) for x in a.params.split(",")] if a.family == "cf-dihedral" else a.params
    g = build_group(make_family(a.family, params), True)
    rng = random.Random(a.seed)
    words = [g.random_word(rng, rng.randint(1, a.max_length)) for _ in range(a.count)]
    for o in order_stabilization(g, words, n_start=2, run=3, depth_cap=a.depth_cap):
        tail = " ".join(str(x) for _, x in o.orders[-3:])
        print(f"{' '.join(o.word):40s} stable_depth={o.stable_depth} orders ... {tail}")


if __name__ == "__main__":
    main()
