#!/usr/bin/env python3
"""How wide is each optimizer's stable learning-rate region?

Sweeps raw momentum (msgd) and its polar-factor variant (msgdz, muon) over
six-point logarithmic grids on the character model, labels every trial
stable or diverged, and prints the stable span in decades around the best
run. The flattened update buys a wider usable region: with every singular
value forced to one, the update norm stops depending on the gradient
scale, so the divergence cliff moves away from the sweet spot.

Run: python3 demos/lr_stability.py   (about half a minute)
"""

from specopt import HyperParams, SweepPlan, TrainConfig, classify_stability, parse_optimizer
from specopt.sweep import run_sweep

GRIDS = {
    "msgd": (0.3, 1.0, 3.0, 10.0, 30.0, 100.0),
    "msgdz": (0.003, 0.01, 0.03, 0.1, 0.3, 1.0),
}


def main():
    for token, grid in GRIDS.items():
        kind = parse_optimizer(token)
        cfg = TrainConfig(
            task="charlm",
            optimizer=kind,
            hp=HyperParams(lr_mat=grid[0]),
            total_steps=400,
            warmup_steps=40,
            batch_size=64,
            eval_every=100,
            seed=0,
        )
        report = run_sweep(cfg, SweepPlan(coarse_grid=grid, max_fine_rounds=0), [kind])
        profile = classify_stability(report.trials)
        print(f"\n{kind.describe()}")
        for lr, label in profile.labels:
            trial = next(t for t in report.trials if t.lr == lr)
            loss = "-" if not trial.completed else f"{trial.eval_loss:.4f}"
            print(f"  lr {lr:>8g}  {label:>8}  held-out {loss}")
        lo, hi = profile.span_range
        print(f"  stable span around best: {profile.span_decades:.2f} decades"
              f"  [{lo:g}, {hi:g}], best lr {profile.best_lr:g}")


if __name__ == "__main__":
    main()
