"""Why replayed "real" samples can poison a detector, and how the fix reacts.

Walkthrough: build two 3-task streams that differ only in replay-signature
geometry (orthogonal vs aligned with the final forgery direction), train a
full-replay detector and a confusion-weighted one on both, and watch (a) the
final task's AUC and (b) the per-epoch confusion weight alpha.

Run:  python3 demos/domain_confusion.py
"""

import os

from genreplay import Rng, Strategy, TrainConfig, make_scenario
from genreplay.confusion import DcsConfig
from genreplay.trainer import run_incremental

SEED = 4
OUT = os.path.join(os.path.dirname(__file__), "out")


def build(kind):
    return make_scenario(
        kind, 3, 8, Rng(SEED).fork("scenario"),
        forgery_strength=2.0, replay_strength=2.0, class_spread=0.5,
        base_shift=0.1, real_drift=0.75,
        n_train_per_class=400, n_test_per_class=300,
    )


def main():
    os.makedirs(OUT, exist_ok=True)
    cfg = TrainConfig(seed=SEED, epochs=10)
    dcs = DcsConfig(normalizer="linear_over_5")

    print("== The domain confusion effect ==\n")
    print("Two streams share identical task geometry; only the replay")
    print("generators' artifact directions differ. In the risky stream every")
    print("generated-'real' replay lands on the final task's fake cluster.\n")

    rows = []
    for strat_name, strat in (("full_replay", Strategy("full_replay")),
                              ("adaptive", Strategy("adaptive"))):
        for kind in ("domain_safe", "domain_risky"):
            table, state = run_incremental(
                build(kind), strat, cfg, dcs_cfg=dcs, return_state=True
            )
            final_current = table.rows[2].task_auc[2]
            rows.append((strat_name, kind, final_current, state.dcs_history))
            print(f"{strat_name:12s} on {kind:12s}: final-task AUC {final_current:.3f}")

    print()
    fr = {kind: auc for name, kind, auc, _ in rows if name == "full_replay"}
    ad = {kind: auc for name, kind, auc, _ in rows if name == "adaptive"}
    print(f"full_replay loses {fr['domain_safe'] - fr['domain_risky']:.3f} AUC to aligned replay;")
    print(f"adaptive loses    {ad['domain_safe'] - ad['domain_risky']:.3f}.\n")

    print("The adaptive runs' confusion weight alpha per (task, epoch):")
    print("(small alpha = replays look like current fakes = don't trust their labels)\n")
    for name, kind, _, history in rows:
        if name != "adaptive":
            continue
        trace = ", ".join(f"t{r.task_index + 1}e{r.epoch}:{r.alpha:.2f}" for r in history)
        print(f"  {kind:12s}: {trace}")

    path = os.path.join(OUT, "domain_confusion.csv")
    with open(path, "w") as fh:
        fh.write("strategy,stream,final_task_auc\n")
        for name, kind, auc, _ in rows:
            fh.write(f"{name},{kind},{auc:.4f}\n")
    print(f"\nwrote {path}")


if __name__ == "__main__":
    main()
