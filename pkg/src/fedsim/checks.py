"""Fast self-contained invariant checks behind the ``check`` CLI verb.

Each check returns (name, passed, detail).  These are smoke-level
counterparts of the full acceptance suite in tests/, cheap enough to run on
every install.
"""
from __future__ import annotations

import numpy as np

from . import streams
from .config import parse_config
from .fedloop import run_experiment
from .partition import Multinomial, make_synthetic_dag, partition_pachinko, renormalize
from .schedules import Schedule, schedule_eval
from .server import init_server_state, server_step


def _quad_config(optimizer: str, **kw) -> dict:
    cfg = {
        "task": {"kind": "quadratic", "d": 8, "hetero": 1.0, "cond": 3.0,
                 "n_per_client": 4},
        "optimizer": optimizer,
        "rounds": 12, "total_clients": 6, "clients_per_round": 3,
        "epochs": 1, "client_lr": 0.1, "server_lr": 1.0, "seed": 7,
        "eval_every": 4, "weighting": "uniform",
    }
    cfg.update(kw)
    return cfg


def check_determinism():
    cfg = parse_config(_quad_config("adagrad", tau=1e-2))
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    same = all(ra.train_loss == rb.train_loss and ra.clients == rb.clients
               for ra, rb in zip(a.records, b.records))
    return "identical seeds give identical traces", same, ""


def check_worker_invariance():
    base = _quad_config("yogi", tau=1e-2)
    traces = [run_experiment(parse_config(base | {"workers": w})) for w in (1, 4)]
    same = all(x.train_loss == y.train_loss
               for x, y in zip(traces[0].records, traces[1].records))
    return "worker count does not change the trace", same, ""


def check_scale_invariance():
    rng = streams.derive_rng(3)
    deltas = [rng.standard_normal(6) for _ in range(40)]
    detail = ""
    ok = True
    for flavor in ("adagrad", "adam", "yogi"):
        for c in (0.1, 10.0):
            tau = 1e-2
            s1 = init_server_state(np.zeros(6), flavor, eta=0.5, tau=tau, beta1=0.0)
            s2 = init_server_state(np.zeros(6), flavor, eta=0.5, tau=c * tau, beta1=0.0)
            for d in deltas:
                server_step(s1, d)
                server_step(s2, c * d)
            gap = float(np.max(np.abs(s1.x - s2.x)))
            if gap > 1e-12:
                ok = False
                detail = f"{flavor} c={c}: max diff {gap:.2e}"
    return "adaptive updates are scale invariant", ok, detail


def check_scaffold_recovers_plain_averaging():
    # Client pool sized so no client repeats across rounds at this seed,
    # which is the regime where the variate corrections cancel exactly.
    base = _quad_config("sgd", rounds=10, total_clients=2000,
                        clients_per_round=3, seed=1)
    fedavg = run_experiment(parse_config(base))
    scaffold = run_experiment(parse_config(base | {"optimizer": "scaffold"}))
    sampled = [c for r in fedavg.records for c in r.clients]
    if len(sampled) != len(set(sampled)):
        return "variate-corrected runs recover plain averaging", False, \
            "seed produced repeated clients"
    same = all(ra.train_loss == rb.train_loss
               for ra, rb in zip(fedavg.records, scaffold.records))
    return "variate-corrected runs recover plain averaging", same, ""


def check_pachinko_partition():
    dag, coarse, fine = make_synthetic_dag(6, 4, 40)
    parts = partition_pachinko(dag, m=20, per_client=30, alpha=0.1, beta=10.0,
                               rng=streams.derive_rng(11))
    taken = np.concatenate(parts)
    ok = (len(parts) == 20 and all(len(p) == 30 for p in parts)
          and np.unique(taken).size == taken.size)
    return "hierarchical partition is disjoint with exact counts", ok, ""


def check_renormalize():
    theta = Multinomial(np.array([0, 1, 2]), np.array([0.2, 0.3, 0.5]))
    out = renormalize(theta, 1)
    ok = np.allclose(out.probs, [0.2 / 0.7, 0.5 / 0.7], atol=1e-15)
    return "renormalization rescales the surviving categories", ok, ""


def check_schedules():
    sched = Schedule(kind="expdecay", base=1.0, factor=0.1, period=5)
    vals = [schedule_eval(sched, t) for t in (4, 5, 10)]
    ok = bool(np.allclose(vals, [1.0, 0.1, 0.01], rtol=1e-12))
    return "staircase decay drops at the stated period", ok, ""


ALL_CHECKS = [
    check_determinism,
    check_worker_invariance,
    check_scale_invariance,
    check_scaffold_recovers_plain_averaging,
    check_pachinko_partition,
    check_renormalize,
    check_schedules,
]


def run_checks() -> list[tuple[str, bool, str]]:
    results = []
    for fn in ALL_CHECKS:
        try:
            results.append(fn())
        except Exception as exc:  # a crashed check is a failed check
            results.append((fn.__name__, False, f"{type(exc).__name__}: {exc}"))
    return results
