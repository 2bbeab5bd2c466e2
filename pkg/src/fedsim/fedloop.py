"""Round orchestration: sample, train locally, aggregate, step the server.

Client work fans out to a thread pool and fans back in; results are keyed by
client id and consumed in sorted order, and every client draws from its own
(seed, round, client) stream, so traces are identical for any worker count.
Aggregation is a single left-to-right weighted sum in client-id order.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .client import (ControlVariates, ScaffoldResult, local_epochs, local_steps,
                     scaffold_local)
from .config import ExperimentConfig, build_task
from .errors import ContractError
from .schedules import schedule_eval
from .server import (ADAPTIVE_FLAVORS, ServerState, apply_momentum,
                     init_server_state, server_step, state_from_snapshot,
                     state_snapshot)
from .tasks.base import Task
from .vectors import Vector, weighted_sum


@dataclass
class ClientUpdate:
    client: int
    delta: Vector
    n: int
    train_loss: float
    delta_c: Vector | None = None


@dataclass
class RoundRecord:
    t: int
    clients: tuple[int, ...]
    train_loss: float
    grad_norm_sq: float | None
    eval_metric: float | None
    wall_ms: float
    floor_events: int


@dataclass
class Trace:
    records: list[RoundRecord] = field(default_factory=list)
    seed: int = 0
    fingerprint: str = ""
    metric_name: str = "global_loss"

    def __len__(self):
        return len(self.records)

    def min_grad_norm_sq(self) -> float:
        vals = [r.grad_norm_sq for r in self.records if r.grad_norm_sq is not None]
        if not vals:
            raise ContractError("trace carries no gradient-norm records")
        return min(vals)

    def window_mean_train_loss(self, window: int) -> float:
        tail = [r.train_loss for r in self.records[-window:]]
        if not tail:
            raise ContractError("empty trace window")
        return float(np.mean(tail))


def sample_clients(m: int, s: int, rng) -> list[int]:
    """s distinct ids, uniform over size-s subsets of range(m)."""
    if not 1 <= s <= m:
        raise ContractError(f"need 1 <= s <= m, got s={s}, m={m}")
    ids = rng.choice(m, size=s, replace=False)
    return sorted(int(i) for i in ids)


def aggregate(updates: list[ClientUpdate], mode: str = "example") -> Vector:
    """Combine client deltas: 'uniform' mean or example-count weighting."""
    if not updates:
        raise ContractError("aggregate of an empty update list")
    if mode == "uniform":
        weights = [1.0 / len(updates)] * len(updates)
    elif mode == "example":
        n = sum(u.n for u in updates)
        weights = [u.n / n for u in updates]
    else:
        raise ContractError(f"unknown aggregation mode {mode!r}")
    return weighted_sum([u.delta for u in updates], weights)


def _aggregate_variates(updates: list[ClientUpdate], mode: str) -> Vector:
    if mode == "uniform":
        weights = [1.0 / len(updates)] * len(updates)
    else:
        n = sum(u.n for u in updates)
        weights = [u.n / n for u in updates]
    return weighted_sum([u.delta_c for u in updates], weights)


def run_round(state: ServerState, task: Task, cfg: ExperimentConfig, round_t: int,
              variates: ControlVariates | None = None, *,
              run_seed: int | None = None,
              compute_grad_norm: bool = False,
              compute_eval: bool = False,
              executor: ThreadPoolExecutor | None = None) -> RoundRecord:
    """Execute one communication round, mutating ``state`` (and variates)."""
    seed = cfg.seed if run_seed is None else run_seed
    started = time.perf_counter()
    eta_l = schedule_eval(cfg.client_lr_schedule(), round_t)
    cohort = sample_clients(cfg.total_clients, cfg.clients_per_round,
                            streams.sampler_rng(seed, round_t))
    scaffold = cfg.optimizer == "scaffold"
    if scaffold and variates is None:
        raise ContractError("scaffold rounds need control variates")

    grad_norm_sq = None
    if compute_grad_norm:
        g = task.global_grad(state.x)
        grad_norm_sq = float(g @ g)

    x_t = state.x
    c_snapshot = variates.c if scaffold else None
    client_variates = {i: variates.variate_for(i) for i in cohort} if scaffold else None

    def work(client: int) -> ClientUpdate:
        rng = streams.client_rng(seed, round_t, client)
        if scaffold:
            res: ScaffoldResult = scaffold_local(
                x_t, task, client, cfg.epochs, eta_l, c_snapshot,
                client_variates[client], rng)
            return ClientUpdate(client, res.delta, res.n, res.train_loss, res.delta_c), res
        if cfg.steps is not None:
            res = local_steps(x_t, task, client, cfg.steps, eta_l, rng)
        else:
            res = local_epochs(x_t, task, client, cfg.epochs, eta_l, rng)
        return ClientUpdate(client, res.delta, res.n, res.train_loss), res

    if executor is None:
        results = {c: work(c) for c in cohort}
    else:
        results = dict(zip(cohort, executor.map(work, cohort)))

    updates = [results[c][0] for c in cohort]  # cohort is sorted
    if scaffold:
        for upd in updates:
            variates.per_client[upd.client] = results[upd.client][1].c_i_new

    avg_delta = aggregate(updates, cfg.weighting)
    floor_before = state.floor_events
    if state.flavor in ADAPTIVE_FLAVORS:
        delta_t = apply_momentum(state, avg_delta)
    else:
        delta_t = avg_delta
    server_step(state, delta_t)
    if scaffold:
        delta_c = _aggregate_variates(updates, cfg.weighting)
        variates.c = variates.c + (len(cohort) / cfg.total_clients) * delta_c

    eval_metric = float(task.eval_metric(state.x)) if compute_eval else None
    wall_ms = (time.perf_counter() - started) * 1e3
    return RoundRecord(t=round_t, clients=tuple(cohort),
                       train_loss=float(np.mean([u.train_loss for u in updates])),
                       grad_norm_sq=grad_norm_sq, eval_metric=eval_metric,
                       wall_ms=wall_ms,
                       floor_events=state.floor_events - floor_before)


def run_experiment(cfg: ExperimentConfig, *, task: Task | None = None,
                   run_seed: int | None = None,
                   checkpoint_path=None) -> Trace:
    """Run ``cfg.rounds`` rounds from scratch; returns the completed trace."""
    if task is None:
        task = build_task(cfg)
    state = init_server_state(task.x0, cfg.server_flavor(), cfg.server_lr,
                              tau=cfg.tau, beta1=cfg.effective_beta1(),
                              beta2=cfg.beta2, check_finite=cfg.check_finite)
    variates = ControlVariates.zeros(task.dim) if cfg.optimizer == "scaffold" else None
    trace = Trace(seed=cfg.seed if run_seed is None else run_seed,
                  fingerprint=cfg.fingerprint(), metric_name=task.metric_name)
    _run_rounds(cfg, task, state, variates, trace, start=0, run_seed=run_seed,
                checkpoint_path=checkpoint_path)
    return trace


def _run_rounds(cfg, task, state, variates, trace, *, start, run_seed,
                checkpoint_path) -> None:
    workers = cfg.resolve_workers()
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for t in range(start, cfg.rounds):
            sample_metrics = cfg.eval_every > 0 and t % cfg.eval_every == 0
            record = run_round(state, task, cfg, t, variates,
                               run_seed=run_seed,
                               compute_grad_norm=sample_metrics,
                               compute_eval=sample_metrics,
                               executor=executor)
            trace.records.append(record)
            if checkpoint_path and cfg.checkpoint_every > 0 \
                    and (t + 1) % cfg.checkpoint_every == 0:
                save_checkpoint(checkpoint_path, cfg, state, variates, trace)
    finally:
        if executor is not None:
            executor.shutdown()


# ---------------------------------------------------------------------------
# Checkpoint / resume
# ---------------------------------------------------------------------------


def save_checkpoint(path, cfg: ExperimentConfig, state: ServerState,
                    variates: ControlVariates | None, trace: Trace) -> None:
    payload = {
        "fingerprint": cfg.fingerprint(),
        "resume_key": cfg.resume_key(),
        "next_round": state.t,
        "run_seed": trace.seed,
        "server": state_snapshot(state),
        "variates": None if variates is None else {
            "c": variates.c.tolist(),
            "per_client": {str(k): v.tolist() for k, v in variates.per_client.items()},
        },
        "records": [vars(r) | {"clients": list(r.clients)} for r in trace.records],
        "metric_name": trace.metric_name,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def resume_experiment(path, cfg: ExperimentConfig, *, task: Task | None = None) -> Trace:
    """Continue a checkpointed run to ``cfg.rounds`` rounds."""
    with open(path) as fh:
        payload = json.load(fh)
    if payload["resume_key"] != cfg.resume_key():
        raise ContractError("checkpoint belongs to a different configuration")
    if task is None:
        task = build_task(cfg)
    state = state_from_snapshot(payload["server"])
    variates = None
    if payload["variates"] is not None:
        variates = ControlVariates(
            c=np.asarray(payload["variates"]["c"], dtype=np.float64),
            per_client={int(k): np.asarray(v, dtype=np.float64)
                        for k, v in payload["variates"]["per_client"].items()})
    trace = Trace(seed=payload["run_seed"], fingerprint=payload["fingerprint"],
                  metric_name=payload["metric_name"])
    for raw in payload["records"]:
        raw = dict(raw)
        raw["clients"] = tuple(raw["clients"])
        trace.records.append(RoundRecord(**raw))
    run_seed = None if trace.seed == cfg.seed else trace.seed
    _run_rounds(cfg, task, state, variates, trace, start=payload["next_round"],
                run_seed=run_seed, checkpoint_path=path)
    return trace
