"""Config-driven experiment runner.

Verbs: run (one strategy), compare (several strategies on identical streams),
ablate (cartesian grid over loss/score variants), validate (config check only).
Configs are JSON with strictly validated keys; outputs are one directory per
run with a subdirectory per seed and a seed-median summary at the top level.
All files are written via write-then-rename, and identical configs produce
byte-identical CSVs.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .confusion import DISTANCE_METRICS, NORMALIZERS, DcsConfig
from .losses import RS_GRANULARITIES, RS_METRICS, LossConfig
from .metrics import table_columns, table_row_values, table_to_dict
from .numerics import Rng
from .streams import (
    SCENARIO_KINDS,
    DatasetStream,
    load_feature_dataset,
    make_scenario,
    stream_from_samples,
)
from .trainer import STRATEGY_KINDS, Strategy, TrainConfig, run_incremental


class ConfigError(Exception):
    pass


_SCENARIO_KEYS = {
    "kind", "n_tasks", "dim", "forgery_strength", "replay_strength",
    "class_spread", "base_shift", "real_drift",
    "n_train_per_class", "n_test_per_class",
}
_DATASET_KEYS = {"path", "test_fraction"}
_TRAIN_KEYS = {
    "epochs", "batch_current", "batch_gen_real", "batch_gen_fake", "lr",
    "beta1", "beta2", "eps", "arch", "init_scale", "generator_kind",
    "gmm_components", "replay_pool_size",
}
_LOSS_KEYS = {"rs_metric", "rs_granularity", "eps_cos"}
_DCS_KEYS = {"distance_metric", "normalizer", "probe_cap"}
_STRATEGY_KEYS = {"kind", "fixed_alpha"}
_GRID_KEYS = {"rs_metric", "dcs_metric", "normalizer", "rs_granularity", "strategy"}
_TOP_KEYS = {
    "scenario", "dataset", "strategy", "strategies", "grid",
    "train", "loss", "dcs", "seeds", "out_dir",
}


def _check_keys(section, mapping, allowed):
    if not isinstance(mapping, dict):
        raise ConfigError(f"config section {section!r} must be an object")
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown key {section}.{key}" if section else f"unknown key {key}")


def _parse_strategy(raw, where="strategy"):
    if isinstance(raw, str):
        raw = {"kind": raw}
    _check_keys(where, raw, _STRATEGY_KEYS)
    if "kind" not in raw:
        raise ConfigError(f"{where}: missing required field 'kind'")
    if raw["kind"] not in STRATEGY_KINDS:
        raise ConfigError(f"{where}.kind: unknown strategy {raw['kind']!r}")
    try:
        return Strategy(kind=raw["kind"], fixed_alpha=raw.get("fixed_alpha"))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_config(path, verb, seeds_override=None, out_override=None):
    """Parse and validate a config file for the given verb."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc

    _check_keys("", raw, _TOP_KEYS)
    cfg = {}

    if ("scenario" in raw) == ("dataset" in raw):
        raise ConfigError("exactly one of 'scenario' or 'dataset' is required")
    if "scenario" in raw:
        sc = dict(raw["scenario"])
        _check_keys("scenario", sc, _SCENARIO_KEYS)
        for key in ("kind", "n_tasks", "dim"):
            if key not in sc:
                raise ConfigError(f"scenario: missing required field '{key}'")
        if sc["kind"] not in SCENARIO_KINDS:
            raise ConfigError(f"scenario.kind: unknown kind {sc['kind']!r}")
        cfg["scenario"] = sc
    else:
        ds = dict(raw["dataset"])
        _check_keys("dataset", ds, _DATASET_KEYS)
        if "path" not in ds:
            raise ConfigError("dataset: missing required field 'path'")
        cfg["dataset"] = ds

    train_raw = dict(raw.get("train", {}))
    _check_keys("train", train_raw, _TRAIN_KEYS)
    if "arch" in train_raw:
        train_raw["arch"] = tuple(train_raw["arch"])
    cfg["train"] = train_raw

    loss_raw = dict(raw.get("loss", {}))
    _check_keys("loss", loss_raw, _LOSS_KEYS)
    if loss_raw.get("rs_metric", "cosine") not in RS_METRICS:
        raise ConfigError(f"loss.rs_metric: unknown value {loss_raw['rs_metric']!r}")
    if loss_raw.get("rs_granularity", "sample_wise") not in RS_GRANULARITIES:
        raise ConfigError(f"loss.rs_granularity: unknown value {loss_raw['rs_granularity']!r}")
    cfg["loss"] = loss_raw

    dcs_raw = dict(raw.get("dcs", {}))
    _check_keys("dcs", dcs_raw, _DCS_KEYS)
    if dcs_raw.get("distance_metric", "l2") not in DISTANCE_METRICS:
        raise ConfigError(f"dcs.distance_metric: unknown value {dcs_raw['distance_metric']!r}")
    if dcs_raw.get("normalizer", "tanh") not in NORMALIZERS:
        raise ConfigError(f"dcs.normalizer: unknown value {dcs_raw['normalizer']!r}")
    cfg["dcs"] = dcs_raw

    seeds = seeds_override if seeds_override is not None else raw.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("seeds: need a non-empty list of integers")
    cfg["seeds"] = seeds

    out_dir = out_override if out_override is not None else raw.get("out_dir")
    if not out_dir:
        raise ConfigError("out_dir: missing required field 'out_dir'")
    cfg["out_dir"] = out_dir

    if verb == "run":
        if "strategy" not in raw:
            raise ConfigError("missing required field 'strategy'")
        cfg["strategy"] = _parse_strategy(raw["strategy"])
    elif verb == "compare":
        strategies = raw.get("strategies")
        if not isinstance(strategies, list) or len(strategies) < 2:
            raise ConfigError("strategies: compare needs a list of >= 2 strategies")
        cfg["strategies"] = [
            _parse_strategy(s, where=f"strategies[{i}]") for i, s in enumerate(strategies)
        ]
    elif verb == "ablate":
        grid = raw.get("grid")
        if not isinstance(grid, dict):
            raise ConfigError("missing required field 'grid'")
        _check_keys("grid", grid, _GRID_KEYS)
        cfg["grid"] = {
            "rs_metric": list(grid.get("rs_metric", ["cosine"])),
            "dcs_metric": list(grid.get("dcs_metric", ["l2"])),
            "normalizer": list(grid.get("normalizer", ["tanh"])),
            "rs_granularity": list(grid.get("rs_granularity", ["sample_wise"])),
            "strategy": [
                _parse_strategy(s, where=f"grid.strategy[{i}]")
                for i, s in enumerate(grid.get("strategy", ["adaptive"]))
            ],
        }
    return cfg


def _build_stream(cfg, seed):
    if "scenario" in cfg:
        sc = cfg["scenario"]
        extras = {k: sc[k] for k in sc if k not in ("kind", "n_tasks", "dim")}
        return make_scenario(
            sc["kind"], sc["n_tasks"], sc["dim"], Rng(seed).fork("scenario"), **extras
        )
    ds = cfg["dataset"]
    samples = load_feature_dataset(ds["path"])
    return stream_from_samples(
        samples, Rng(seed).fork("split"), test_fraction=ds.get("test_fraction", 0.25)
    )


def _fmt(value):
    """4-decimal half-up display; empty for absent values."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(Decimal(repr(float(value))).quantize(Decimal("0.0001"), ROUND_HALF_UP))


def _write_file(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    _write_file(path, "\n".join(lines) + "\n")


def _write_json(path, obj):
    _write_file(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _pca_2d(features):
    centered = features - features.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:2]
    # deterministic sign: largest-magnitude loading positive
    for i in range(comps.shape[0]):
        j = np.argmax(np.abs(comps[i]))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    return centered @ comps.T


def _run_one_seed(cfg, strategy, seed, out_dir):
    """Execute one (strategy, seed) run and write its artifact files."""
    stream = _build_stream(cfg, seed)
    train_cfg = TrainConfig(seed=seed, **cfg["train"])
    loss_cfg = LossConfig(**cfg["loss"])
    dcs_cfg = DcsConfig(**cfg["dcs"])
    table, state = run_incremental(
        stream, strategy, train_cfg, loss_cfg=loss_cfg, dcs_cfg=dcs_cfg, return_state=True
    )
    os.makedirs(out_dir, exist_ok=True)

    _write_csv(
        os.path.join(out_dir, "table.csv"),
        table_columns(table.n_tasks),
        [table_row_values(table, row) for row in table.rows],
    )
    _write_json(
        os.path.join(out_dir, "summary.json"),
        {"strategy": strategy.name, "seed": seed, "table": table_to_dict(table)},
    )
    _write_csv(
        os.path.join(out_dir, "alpha.csv"),
        ["task_index", "epoch", "s", "alpha"],
        [(r.task_index, r.epoch, r.s, r.alpha) for r in state.dcs_history],
    )

    if isinstance(stream, DatasetStream):
        final_test = stream.tasks_data[-1][1]
    else:
        from .streams import draw_stream_data

        final_test = draw_stream_data(stream, Rng(seed).fork("data"))[-1][1]
    feats = state.model.forward(np.stack([s.features for s in final_test])).features
    proj = _pca_2d(feats)
    _write_csv(
        os.path.join(out_dir, "projection.csv"),
        ["x", "y", "label", "origin"],
        [
            (proj[i, 0], proj[i, 1], s.label, s.origin)
            for i, s in enumerate(final_test)
        ],
    )
    return table_to_dict(table)


def _median_summary(per_seed_tables):
    """Seed-median of every derived column, per step."""
    n_steps = len(per_seed_tables[0]["rows"])
    steps = []
    for k in range(n_steps):
        rows = [t["rows"][k] for t in per_seed_tables]

        def med(key):
            vals = [r[key] for r in rows if r[key] is not None]
            return float(np.median(vals)) if vals else None

        steps.append(
            {
                "step": k + 1,
                "avg_auc": med("avg_auc"),
                "pre_avg_auc": med("pre_avg_auc"),
                "pd_auc": med("pd_auc"),
                "acc_real": med("acc_real"),
                "acc_fake": med("acc_fake"),
                "pd_acc_real": med("pd_acc_real"),
                "pd_acc_fake": med("pd_acc_fake"),
                "alpha": med("alpha"),
            }
        )
    return {"n_seeds": len(per_seed_tables), "steps": steps}


def _execute_strategy(cfg, strategy, base_dir, jobs):
    seeds = cfg["seeds"]
    results = []
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_run_one_seed, cfg, strategy, s, os.path.join(base_dir, f"seed_{s}"))
                for s in seeds
            ]
            results = [f.result() for f in futures]
    else:
        for s in seeds:
            results.append(_run_one_seed(cfg, strategy, s, os.path.join(base_dir, f"seed_{s}")))
    summary = _median_summary(results)
    summary["strategy"] = strategy.name
    _write_json(os.path.join(base_dir, "median_summary.json"), summary)
    return summary


def cmd_run(cfg, jobs=1):
    os.makedirs(cfg["out_dir"], exist_ok=True)
    _execute_strategy(cfg, cfg["strategy"], cfg["out_dir"], jobs)
    return 0


_COMPARE_METRICS = (
    "avg_auc", "pre_avg_auc", "pd_auc",
    "acc_real", "pd_acc_real", "acc_fake", "pd_acc_fake",
)


def cmd_compare(cfg, jobs=1):
    os.makedirs(cfg["out_dir"], exist_ok=True)
    summaries = []
    for strategy in cfg["strategies"]:
        base = os.path.join(cfg["out_dir"], strategy.name)
        summaries.append(_execute_strategy(cfg, strategy, base, jobs))

    rows = []
    for summary in summaries:
        for step in summary["steps"]:
            rows.append(
                [summary["strategy"], step["step"]]
                + [step[m] for m in _COMPARE_METRICS]
            )
    _write_csv(
        os.path.join(cfg["out_dir"], "comparison.csv"),
        ["strategy", "step"] + list(_COMPARE_METRICS),
        rows,
    )

    winners = {}
    finals = {s["strategy"]: s["steps"][-1] for s in summaries}
    for metric in ("avg_auc", "pre_avg_auc", "acc_real", "acc_fake"):
        scored = {n: v[metric] for n, v in finals.items() if v[metric] is not None}
        if scored:
            winners[f"best_final_{metric}"] = max(scored, key=scored.get)
    for metric in ("pd_auc", "pd_acc_real", "pd_acc_fake"):
        scored = {n: v[metric] for n, v in finals.items() if v[metric] is not None}
        if scored:
            winners[f"lowest_final_{metric}"] = min(scored, key=scored.get)
    _write_json(os.path.join(cfg["out_dir"], "winners.json"), winners)
    return 0


def _grid_cells(grid):
    cells = []
    seen = set()
    duplicates = 0
    for strategy in grid["strategy"]:
        for rs in grid["rs_metric"]:
            for dcs in grid["dcs_metric"]:
                for norm in grid["normalizer"]:
                    for gran in grid["rs_granularity"]:
                        key = (strategy.name, rs, dcs, norm, gran)
                        if key in seen:
                            duplicates += 1
                            continue
                        seen.add(key)
                        cells.append(key)
    return cells, duplicates


def cmd_ablate(cfg, jobs=1):
    os.makedirs(cfg["out_dir"], exist_ok=True)
    cells, duplicates = _grid_cells(cfg["grid"])
    if duplicates:
        print(f"warning: {duplicates} duplicate grid cells skipped", file=sys.stderr)

    strategies = {s.name: s for s in cfg["grid"]["strategy"]}
    rows = []
    for name, rs, dcs, norm, gran in cells:
        cell_cfg = dict(cfg)
        cell_cfg["loss"] = dict(cfg["loss"], rs_metric=rs, rs_granularity=gran)
        cell_cfg["dcs"] = dict(cfg["dcs"], distance_metric=dcs, normalizer=norm)
        cell_dir = os.path.join(cfg["out_dir"], f"{name}__rs-{rs}__dcs-{dcs}__norm-{norm}__{gran}")
        summary = _execute_strategy(cell_cfg, strategies[name], cell_dir, jobs)
        final = summary["steps"][-1]
        rows.append(
            [name, rs, dcs, norm, gran, final["avg_auc"], final["pre_avg_auc"],
             final["pd_auc"], final["acc_real"], final["acc_fake"], final["alpha"]]
        )
    _write_csv(
        os.path.join(cfg["out_dir"], "ablation.csv"),
        ["strategy", "rs_metric", "dcs_metric", "normalizer", "rs_granularity",
         "avg_auc", "pre_avg_auc", "pd_auc", "acc_real", "acc_fake", "alpha"],
        rows,
    )
    return 0


def _parse_seeds(text):
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"--seeds must be a comma-separated integer list: {text!r}") from exc


def main(argv=None):
    parser = argparse.ArgumentParser(prog="genreplay", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("run", "compare", "ablate", "validate"):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None, help="override out_dir")
        p.add_argument("--seeds", default=None, help="override seeds, e.g. 1,2,3")
        p.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args(argv)

    verb = "run" if args.verb == "validate" else args.verb
    try:
        seeds = _parse_seeds(args.seeds) if args.seeds else None
        try:
            cfg = load_config(args.config, verb, seeds_override=seeds, out_override=args.out)
        except ConfigError:
            if args.verb != "validate":
                raise
            # a compare/ablate config is also valid for the validate verb
            for alt in ("compare", "ablate"):
                try:
                    cfg = load_config(args.config, alt, seeds_override=seeds, out_override=args.out)
                    break
                except ConfigError:
                    pass
            else:
                raise
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.verb == "validate":
        print("config OK")
        return 0
    try:
        if args.verb == "run":
            return cmd_run(cfg, jobs=args.jobs)
        if args.verb == "compare":
            return cmd_compare(cfg, jobs=args.jobs)
        return cmd_ablate(cfg, jobs=args.jobs)
    except Exception as exc:  # noqa: BLE001 - surface context, fail with status 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
