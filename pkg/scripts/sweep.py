"""Correct matches and wall time over a (beta, alpha, theta) grid on synthetic pairs."""

import argparse

from gims import experiments, trainer
from gims.pipeline import RunConfig


def floats(s):
    return [float(x) for x in s.split(",")]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=5)
    ap.add_argument("--betas", default="10,15,20,25,30")
    ap.add_argument("--alphas", default="0,2,5,10")
    ap.add_argument("--thetas", default="0,3,7,10")
    ap.add_argument("--max-kp", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    pairs = [trainer.make_pair(a.seed + k, 320, 240) for k in range(a.pairs)]
    rows = experiments.sweep(pairs, floats(a.betas), floats(a.alphas), [int(t) for t in floats(a.thetas)],
                             cfg=RunConfig(gnn_layers=0, max_kp=a.max_kp))
    print(experiments.rows_to_csv(rows), end="")


if __name__ == "__main__":
    main()
