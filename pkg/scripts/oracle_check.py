"""Compare exact-rational interval towers with the tile combinatorics for a finite c prefix."""
import argparse

from artifact.families import oracle_agreement


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("prefix", nargs="+", type=int, help="c terms, each >= 2")
    a = ap.parse_args()
    for row in oracle_agreement(a.prefix):
        print(row)


if __name__ == "__main__":
    main()
