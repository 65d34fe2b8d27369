"""Mean ball-size table of the unfragmented one-three group and its log-log slopes."""
import argparse

import numpy as np

from artifact.action import ball_growth, build_group, random_path
from artifact.families import make_family
from artifact.growth import ball_slopes


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--word", default="13")
    ap.add_argument("--centers", type=int, default=32)
    ap.add_argument("--radius", type=int, default=256)
    ap.add_argument("--depth", type=int, default=12)
    a = ap.parse_args()
    f = make_family("one-three", a.word)
    g = build_group(f)
    sizes = [ball_growth(g, random_path(f, a.depth, s), a.radius, seed=s).sizes for s in range(a.centers)]
    mean = np.mean(np.array(sizes, float), axis=0)
    windows = []
    lo = 8
    while 2 * lo <= a.radius:
        windows.append((lo, 2 * lo))
        lo *= 2
    for (lo, hi), s in zip(windows, ball_slopes(mean, windows)):
        print(f"R in [{lo}, {hi}]: slope {s:.4f}")


if __name__ == "__main__":
    main()
