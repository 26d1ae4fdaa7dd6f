"""Forgetting curves for every replay strategy on one mixed 4-task stream.

Walkthrough: train each strategy through the same stream and print the
per-step average AUC, the previous-tasks average, and the performance drop
versus step 1. The interesting orderings: replay beats no-replay on retention;
fake-only replay forgets the most among replay strategies; the
confusion-weighted blend matches or beats every fixed weighting.

Run:  python3 demos/strategy_comparison.py
"""

import os

from genreplay import Rng, Strategy, TrainConfig, make_scenario
from genreplay.confusion import DcsConfig
from genreplay.trainer import run_incremental

SEED = 2
OUT = os.path.join(os.path.dirname(__file__), "out")

STRATEGIES = [
    Strategy("adaptive"),
    Strategy("full_replay"),
    Strategy("fake_only_replay"),
    Strategy("fixed_alpha", 0.5),
    Strategy("fixed_alpha", 0.1),
    Strategy("no_gen_real_sup"),
    Strategy("no_rs"),
    Strategy("lower_bound"),
]


def main():
    os.makedirs(OUT, exist_ok=True)
    stream = make_scenario(
        "mixed", 4, 10, Rng(SEED).fork("scenario"),
        forgery_strength=2.0, replay_strength=2.0, class_spread=0.5,
        base_shift=0.1, real_drift=0.75,
        n_train_per_class=400, n_test_per_class=300,
    )
    cfg = TrainConfig(seed=SEED, epochs=10)
    dcs = DcsConfig(normalizer="linear_over_5")

    print("== Strategy comparison on a mixed-regime 4-task stream ==\n")
    print(f"{'strategy':18s} {'final avg AUC':>13s} {'pre-avg AUC':>12s} {'drop':>7s}")

    rows = []
    for strat in STRATEGIES:
        table = run_incremental(stream, strat, cfg, dcs_cfg=dcs)
        f = table.final
        rows.append((strat.name, f.avg_auc, f.pre_avg_auc, f.pd_auc))
        print(f"{strat.name:18s} {f.avg_auc:13.3f} {f.pre_avg_auc:12.3f} {f.pd_auc:7.3f}")

    print("\nReading the table:")
    print(" - lower_bound (no replay) collapses on earlier tasks: that gap is forgetting.")
    print(" - fake_only_replay keeps the fake side but loses the real anchor, hence its drop.")
    print(" - adaptive stays at the top without hand-tuning the supervision weight.")

    path = os.path.join(OUT, "strategy_comparison.csv")
    with open(path, "w") as fh:
        fh.write("strategy,final_avg_auc,final_pre_avg_auc,final_pd_auc\n")
        for name, a, p, d in rows:
            fh.write(f"{name},{a:.4f},{p:.4f},{d:.4f}\n")
    print(f"\nwrote {path}")


if __name__ == "__main__":
    main()
