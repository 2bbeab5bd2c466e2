"""Command-line interface.

Verbs: ``run`` (single experiment), ``sweep`` (hyperparameter grid),
``bounds`` (bound report), ``partition`` (emit a partition manifest), and
``check`` (fast invariant suite).  Flags mirror config keys; when both a
config file and flags are given, flags win.  Exit codes: 0 success, 2 config
error, 3 numerical abort.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import streams
from .config import parse_config, to_dict
from .errors import ConfigError, ContractError, NumericalAbort
from .fedloop import run_experiment
from .metrics import emit_metrics
from .partition import (make_synthetic_dag, partition_iid, partition_lda,
                        partition_pachinko, save_manifest)
from .report import build_bound_report, save_report
from .sweep import grid_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_CONFIG_FLAGS = {
    "task": ("--task", str, "task kind (quadratic | sparse_logreg | mlp2 | linear_ae)"),
    "optimizer": ("--optimizer", str, "sgd | sgdm | adagrad | adam | yogi | scaffold"),
    "rounds": ("--rounds", int, "communication rounds T"),
    "clients_per_round": ("--clients-per-round", int, "cohort size per round"),
    "total_clients": ("--total-clients", int, "total client count m"),
    "epochs": ("--epochs", int, "local epochs E"),
    "steps": ("--steps", int, "local steps K (overrides epoch mode)"),
    "batch_size": ("--batch-size", int, "client batch size B"),
    "client_lr": ("--client-lr", float, "client learning rate"),
    "server_lr": ("--server-lr", float, "server learning rate"),
    "tau": ("--tau", float, "adaptivity parameter"),
    "beta1": ("--beta1", float, "server momentum decay"),
    "beta2": ("--beta2", float, "second-moment decay"),
    "schedule": ("--schedule", str,
                 "client-lr schedule: constant | expdecay:FACTOR:PERIOD | inv_sqrt:SCALE"),
    "seed": ("--seed", int, "experiment seed"),
    "workers": ("--workers", int, "client worker threads (capped by FEDOPT_WORKERS)"),
}


def _add_config_flags(sub):
    sub.add_argument("--config", help="JSON config file")
    for _, (flag, typ, helptext) in _CONFIG_FLAGS.items():
        sub.add_argument(flag, type=typ, help=helptext)
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--no-figures", action="store_true",
                     help="skip PNG rendering alongside the delimited output")


def _parse_schedule_flag(text: str) -> dict:
    parts = text.split(":")
    kind = parts[0]
    if kind == "constant":
        return {"kind": "constant"}
    if kind == "expdecay":
        if len(parts) != 3:
            raise ConfigError(["schedule: expected expdecay:FACTOR:PERIOD"])
        return {"kind": "expdecay", "factor": float(parts[1]), "period": int(parts[2])}
    if kind == "inv_sqrt":
        return {"kind": "inv_sqrt", "scale": float(parts[1]) if len(parts) > 1 else 1.0}
    raise ConfigError([f"schedule: unknown kind {kind!r}"])


def _config_from_args(args) -> dict:
    raw = {}
    if args.config:
        if not os.path.exists(args.config):
            raise ConfigError([f"config: no such file {args.config!r}"])
        with open(args.config) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError(["config: top level must be an object"])
    for key in _CONFIG_FLAGS:
        value = getattr(args, key, None)
        if value is None:
            continue
        if key == "task":
            raw["task"] = {"kind": value} if isinstance(raw.get("task"), type(None)) \
                else {**raw["task"], "kind": value}
        elif key == "schedule":
            raw["schedule"] = _parse_schedule_flag(value)
        else:
            raw[key] = value
    return raw


def _outdir(args, cfg=None) -> str | None:
    out = args.out or (cfg.out if cfg is not None else None)
    if not out:
        return None
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = parse_config(_config_from_args(args))
    checkpoint = None
    out = _outdir(args, cfg)
    if out and cfg.checkpoint_every > 0:
        checkpoint = os.path.join(out, "checkpoint.json")
    trace = run_experiment(cfg, checkpoint_path=checkpoint)
    if out:
        emit_metrics(trace, os.path.join(out, "metrics.csv"), timing=args.timing)
        with open(os.path.join(out, "meta.json"), "w") as fh:
            json.dump({"config": to_dict(cfg), "fingerprint": cfg.fingerprint(),
                       "metric_name": trace.metric_name}, fh, indent=1, sort_keys=True)
            fh.write("\n")
        if not args.no_figures:
            from .plots import render_trace
            render_trace(trace.records, os.path.join(out, "trace.png"),
                         metric_name=trace.metric_name)
    last = trace.records[-1] if trace.records else None
    if last is not None:
        print(f"completed {len(trace)} rounds; final train_loss="
              f"{last.train_loss:.6g}")
    else:
        print("completed 0 rounds")
    return EXIT_OK


def _grid_flag(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def cmd_sweep(args) -> int:
    cfg = parse_config(_config_from_args(args))
    eta_l_grid = _grid_flag(args.eta_l_grid) if args.eta_l_grid else None
    eta_grid = _grid_flag(args.eta_grid) if args.eta_grid else None
    tau_grid = _grid_flag(args.tau_grid) if args.tau_grid else None
    from .sweep import DEFAULT_ETA_GRID, DEFAULT_ETA_L_GRID
    result = grid_sweep(cfg, eta_l_grid or DEFAULT_ETA_L_GRID,
                        eta_grid or DEFAULT_ETA_GRID, tau_grid,
                        window=args.window, seeds=args.seeds,
                        select_on="eval" if args.select_on_eval else "train_loss",
                        workers=cfg.resolve_workers())
    best = result.best
    print(f"best cell: eta_l={best.eta_l:g} eta={best.eta:g} "
          f"tau={best.tau if best.tau is not None else '-'} score={best.score:.6g}")
    out = _outdir(args, cfg)
    if out:
        with open(os.path.join(out, "sweep.csv"), "w") as fh:
            fh.write("index,eta_l,eta,tau,score,failed\n")
            for c in result.table:
                tau = "" if c.tau is None else format(c.tau, ".17g")
                score = "" if c.score is None else format(c.score, ".17g")
                fh.write(f"{c.index},{c.eta_l:.17g},{c.eta:.17g},{tau},{score},"
                         f"{int(c.failed)}\n")
        with open(os.path.join(out, "best.json"), "w") as fh:
            json.dump({"eta_l": best.eta_l, "eta": best.eta, "tau": best.tau,
                       "score": best.score}, fh, indent=1)
            fh.write("\n")
        if not args.no_figures:
            from .plots import render_sweep
            render_sweep(result, os.path.join(out, "sweep.png"))
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = parse_config(_config_from_args(args))
    report = build_bound_report(cfg, seeds=args.seeds, slack=args.slack)
    out = _outdir(args, cfg)
    if out:
        save_report(report, os.path.join(out, "report.json"))
        if not args.no_figures:
            from .plots import render_bounds
            render_bounds(report, os.path.join(out, "bounds.png"))
    else:
        print(json.dumps(report, indent=1, sort_keys=True))
    if "empirical" in report:
        emp = report["empirical"]
        verdict = "holds" if emp["satisfied"] else "VIOLATED"
        print(f"bound {verdict}: min ||grad||^2 = {emp['min_grad_sq_mean']:.4g} "
              f"vs {args.slack} x rhs = {args.slack * emp['bound']:.4g} "
              f"(empirical constant {emp['empirical_constant']:.4g})")
    return EXIT_OK


def _validate_partition_spec(raw: dict) -> dict:
    allowed = {"pool", "partitioner", "m", "per_client", "seed"}
    errs = [f"{k}: unknown key" for k in sorted(set(raw) - allowed)]
    for req in ("pool", "partitioner", "m", "per_client"):
        if req not in raw:
            errs.append(f"{req}: required")
    if errs:
        raise ConfigError(errs)
    return raw


def cmd_partition(args) -> int:
    if not args.config:
        raise ConfigError(["config: the partition verb requires --config"])
    with open(args.config) as fh:
        raw = _validate_partition_spec(json.load(fh))
    rng = streams.partition_rng(raw.get("seed", 0))
    pool = raw["pool"]
    part = raw["partitioner"]
    m, per_client = raw["m"], raw["per_client"]
    if pool.get("kind") == "synthetic_dag":
        dag, _, fine = make_synthetic_dag(pool["coarse"], pool["fine_per_coarse"],
                                          pool["per_fine"])
        labels = fine
        if part["kind"] != "pachinko":
            raise ConfigError(["partitioner.kind: synthetic_dag pools require pachinko"])
        assignments = partition_pachinko(dag, m, per_client, part.get("alpha", 0.1),
                                         part.get("beta", 10.0), rng)
    elif pool.get("kind") == "synthetic_flat":
        labels = np.repeat(np.arange(pool["labels"]), pool["per_label"])
        if part["kind"] == "iid":
            assignments = partition_iid(labels.size, m, per_client, rng)
        elif part["kind"] == "lda":
            assignments = partition_lda(labels, m, per_client,
                                        part.get("alpha", 0.1), rng)
        else:
            raise ConfigError([f"partitioner.kind: unknown {part.get('kind')!r}"])
    else:
        raise ConfigError(["pool.kind: expected synthetic_flat or synthetic_dag"])
    out = _outdir(args) or "."
    manifest = os.path.join(out, "manifest.json")
    save_manifest(assignments, manifest)
    uniques = [len(np.unique(labels[idx])) for idx in assignments]
    print(f"wrote {manifest}: {m} clients x {per_client} examples, "
          f"median unique labels {sorted(uniques)[m // 2]}")
    if not args.no_figures:
        from .plots import render_partition
        render_partition(assignments, labels, os.path.join(out, "partition.png"))
    return EXIT_OK


def cmd_check(args) -> int:
    from .checks import run_checks
    results = run_checks()
    failed = 0
    for name, ok, detail in results:
        mark = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail and not ok else ""
        print(f"{mark}: {name}{suffix}")
        failed += 0 if ok else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedsim",
                                     description="federated optimization simulator")
    subs = parser.add_subparsers(dest="verb", required=True)

    run = subs.add_parser("run", help="run a single experiment")
    _add_config_flags(run)
    run.add_argument("--timing", action="store_true",
                     help="write measured wall_ms (breaks byte-reproducibility)")
    run.set_defaults(func=cmd_run)

    sweep = subs.add_parser("sweep", help="grid-search hyperparameters")
    _add_config_flags(sweep)
    sweep.add_argument("--eta-l-grid", help="comma-separated client lrs")
    sweep.add_argument("--eta-grid", help="comma-separated server lrs")
    sweep.add_argument("--tau-grid", help="comma-separated taus")
    sweep.add_argument("--window", type=int, default=100,
                       help="selection window (rounds)")
    sweep.add_argument("--seeds", type=int, default=1,
                       help="seeds averaged per cell")
    sweep.add_argument("--select-on-eval", action="store_true",
                       help="select on eval metric instead of training loss")
    sweep.set_defaults(func=cmd_sweep)

    bounds = subs.add_parser("bounds", help="evaluate convergence bounds")
    _add_config_flags(bounds)
    bounds.add_argument("--seeds", type=int, default=0,
                        help="empirical runs to compare against the bound")
    bounds.add_argument("--slack", type=float, default=10.0,
                        help="multiplier standing in for the suppressed constant")
    bounds.set_defaults(func=cmd_bounds)

    part = subs.add_parser("partition", help="emit a partition manifest")
    part.add_argument("--config", required=False, help="partition spec JSON")
    part.add_argument("--out", help="output directory")
    part.add_argument("--no-figures", action="store_true")
    part.set_defaults(func=cmd_partition)

    check = subs.add_parser("check", help="run the fast invariant suite")
    check.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except ContractError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
