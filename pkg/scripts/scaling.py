"""Coarse AGC construction time against n at fixed point density."""

import argparse

from gims import perf


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[2000, 4000, 8000, 16000])
    ap.add_argument("--density", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    rows, exponent = perf.scaling_study(a.n, a.seed, a.density)
    print(perf.scaling_csv(rows), end="")
    print(f"# fitted exponent {exponent:.3f}")


if __name__ == "__main__":
    main()
