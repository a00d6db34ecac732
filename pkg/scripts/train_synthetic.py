"""Train encoder weights on procedurally generated pairs and report held-out precision."""

import argparse
from pathlib import Path

from gims import experiments, formats, trainer


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=300)
    ap.add_argument("--pairs", type=int, default=50)
    ap.add_argument("--max-kp", type=int, default=256)
    ap.add_argument("--lr", type=float, default=1e-4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--eval-pairs", type=int, default=10)
    ap.add_argument("--out", default="runs/train")
    a = ap.parse_args()

    cfg = trainer.TrainConfig(steps=a.steps, lr=a.lr, pairs=a.pairs, max_kp=a.max_kp, seed=a.seed)
    data = trainer.synthetic_dataset(cfg.pairs, cfg.seed, cfg)
    held = trainer.synthetic_dataset(a.eval_pairs, cfg.seed + 10_000, cfg)
    run = cfg.run_config()

    def report(step, loss, _weights):
        if step % 25 == 0:
            print(f"step {step:4d}  loss {loss:.4f}")

    res = trainer.train(data, cfg, callback=report)
    p1 = trainer.evaluate_precision(res.weights, held, run)
    s = res.smoothed_losses(20)
    print(f"smoothed loss {s[0]:.3f} -> {s[-1]:.3f} in {res.seconds:.1f}s; held-out precision {p1['precision']:.3f}")

    out = Path(a.out)
    formats.write_weights(out / "weights.gimw", res.weights)
    formats.atomic_write(out / "loss.csv", experiments.rows_to_csv(
        [{"step": i, "loss": v} for i, v in enumerate(res.losses)]))


if __name__ == "__main__":
    main()
