"""AUC@5/10/25 against GraphSAGE depth on synthetic homography pairs."""

import argparse

from gims import experiments


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depths", type=int, nargs="+", default=[0, 1, 2, 3, 4, 5])
    ap.add_argument("--train-pairs", type=int, default=10)
    ap.add_argument("--eval-pairs", type=int, default=10)
    ap.add_argument("--steps", type=int, default=30)
    ap.add_argument("--max-kp", type=int, default=128)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    rows = experiments.depth_study(a.depths, a.train_pairs, a.eval_pairs, a.steps, a.seed, a.max_kp,
                                   log=lambda r: print(f"L={r['L']} done in {r['seconds']:.1f}s", flush=True))
    print(experiments.rows_to_markdown(rows))


if __name__ == "__main__":
    main()
