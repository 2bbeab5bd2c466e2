"""Experiment configuration: schema, validation, defaults, task building.

Configs are single JSON documents.  Parsing is fail-closed: unknown keys are
rejected with their field paths, as are type and constraint violations.
Every field except the task kind and optimizer has a documented default.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace

from . import streams
from .errors import ConfigError
from .schedules import Schedule, schedule_from_spec
from .server import default_beta1
from .tasks import (load_csv_pool, logreg_from_pool, make_linear_ae, make_mlp2,
                    make_quadratic_ensemble, make_sparse_logreg)
from .partition import partition_iid, partition_lda

OPTIMIZERS = ("sgd", "sgdm", "adagrad", "adam", "yogi", "scaffold")
TASK_KINDS = ("quadratic", "sparse_logreg", "mlp2", "linear_ae", "csv_logreg")
DEFAULT_TAU = 1e-3  # robust across tasks; see README

_TASK_KEYS = {
    "quadratic": {"kind", "d", "hetero", "cond", "n_per_client", "sigma_l", "x0_radius"},
    "sparse_logreg": {"kind", "d_vocab", "classes", "zipf_exponent",
                      "examples_per_client", "active_per_example", "topic_alpha",
                      "topic_boost", "sigma_l"},
    "mlp2": {"kind", "d_in", "hidden", "d_out", "n_per_client", "hetero", "sigma_l"},
    "linear_ae": {"kind", "d_in", "bottleneck", "n_per_client", "hetero", "sigma_l"},
    "csv_logreg": {"kind", "path", "partitioner", "sigma_l"},
}
_PARTITIONER_KEYS = {
    "iid": {"kind", "per_client"},
    "lda": {"kind", "per_client", "alpha"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    task: dict
    optimizer: str
    rounds: int = 100
    total_clients: int = 10
    clients_per_round: int = 10
    epochs: int = 1
    steps: int | None = None          # switches local work to fixed step count
    batch_size: int | None = None
    client_lr: float = 0.1
    server_lr: float = 1.0
    tau: float = DEFAULT_TAU
    beta1: float | None = None
    beta2: float = 0.99
    schedule: dict | None = None
    weighting: str = "example"        # or "uniform"
    seed: int = 0
    eval_every: int = 10
    checkpoint_every: int = 0
    workers: int | None = None
    check_finite: bool = True
    out: str | None = None

    # -- derived helpers -------------------------------------------------------

    def client_lr_schedule(self) -> Schedule:
        return schedule_from_spec(self.schedule, self.client_lr)

    def effective_beta1(self) -> float:
        if self.beta1 is not None:
            return self.beta1
        if self.optimizer in ("scaffold",):
            return 0.0
        return default_beta1(self.optimizer)

    def server_flavor(self) -> str:
        return "sgd" if self.optimizer == "scaffold" else self.optimizer

    def resolve_workers(self) -> int:
        cap = os.environ.get("FEDOPT_WORKERS")
        w = self.workers if self.workers is not None else (int(cap) if cap else 1)
        if cap:
            w = min(w, int(cap))
        return max(1, w)

    def fingerprint(self) -> str:
        blob = json.dumps(to_dict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def resume_key(self) -> str:
        """Fingerprint of the fields a checkpoint must agree on.

        Run length, checkpoint cadence, and worker count may change between
        the checkpointing run and the resuming run.
        """
        fields = to_dict(self)
        for free in ("rounds", "checkpoint_every", "workers", "out"):
            fields.pop(free)
        blob = json.dumps(fields, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


def to_dict(cfg: ExperimentConfig) -> dict:
    out = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
    return out


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _validate_task(spec, errs) -> None:
    if not isinstance(spec, dict):
        errs.append("task: must be an object")
        return
    kind = spec.get("kind")
    if kind not in TASK_KINDS:
        errs.append(f"task.kind: expected one of {TASK_KINDS}, got {kind!r}")
        return
    allowed = _TASK_KEYS[kind]
    for key in sorted(set(spec) - allowed):
        errs.append(f"task.{key}: unknown key")
    for key in ("d", "n_per_client", "d_vocab", "classes", "examples_per_client",
                "d_in", "hidden", "d_out", "bottleneck", "active_per_example"):
        if key in spec and (not isinstance(spec[key], int) or spec[key] < 1):
            errs.append(f"task.{key}: must be a positive integer")
    for key in ("hetero", "sigma_l", "zipf_exponent"):
        if key in spec and (not isinstance(spec[key], (int, float)) or spec[key] < 0):
            errs.append(f"task.{key}: must be a nonnegative number")
    if "cond" in spec and (not isinstance(spec["cond"], (int, float)) or spec["cond"] < 1):
        errs.append("task.cond: must be >= 1")
    if kind == "csv_logreg":
        if not isinstance(spec.get("path"), str):
            errs.append("task.path: required string")
        part = spec.get("partitioner")
        if not isinstance(part, dict):
            errs.append("task.partitioner: required object for csv_logreg")
        else:
            pkind = part.get("kind")
            if pkind not in _PARTITIONER_KEYS:
                errs.append(f"task.partitioner.kind: expected one of "
                            f"{tuple(_PARTITIONER_KEYS)}, got {pkind!r}")
            else:
                for key in sorted(set(part) - _PARTITIONER_KEYS[pkind]):
                    errs.append(f"task.partitioner.{key}: unknown key")
                if pkind == "lda":
                    alpha = part.get("alpha", 0.1)
                    if not isinstance(alpha, (int, float)) or alpha <= 0:
                        errs.append("task.partitioner.alpha: must be > 0")
            if isinstance(part, dict):
                pc = part.get("per_client")
                if pc is not None and (not isinstance(pc, int) or pc < 1):
                    errs.append("task.partitioner.per_client: must be a positive integer")


def validate(raw: dict) -> ExperimentConfig:
    """Validate a raw config dict; raises ConfigError listing field paths."""
    errs: list[str] = []
    known = set(ExperimentConfig.__dataclass_fields__)
    for key in sorted(set(raw) - known):
        errs.append(f"{key}: unknown key")
    if "task" not in raw:
        errs.append("task: required")
    if "optimizer" not in raw:
        errs.append("optimizer: required")
    if errs:
        raise ConfigError(errs)

    _validate_task(raw["task"], errs)
    opt = raw["optimizer"]
    if opt not in OPTIMIZERS:
        errs.append(f"optimizer: expected one of {OPTIMIZERS}, got {opt!r}")

    def check(name, pred, msg):
        if name in raw and raw[name] is not None and not pred(raw[name]):
            errs.append(f"{name}: {msg}")

    posint = lambda v: isinstance(v, int) and v >= 1
    check("rounds", lambda v: isinstance(v, int) and v >= 0, "must be an integer >= 0")
    check("total_clients", posint, "must be a positive integer")
    check("clients_per_round", posint, "must be a positive integer")
    check("epochs", posint, "must be a positive integer")
    check("steps", posint, "must be a positive integer")
    check("batch_size", posint, "must be a positive integer")
    check("client_lr", lambda v: isinstance(v, (int, float)) and v >= 0, "must be >= 0")
    check("server_lr", lambda v: isinstance(v, (int, float)), "must be a number")
    check("tau", lambda v: isinstance(v, (int, float)) and v > 0, "must be > 0")
    check("beta1", lambda v: isinstance(v, (int, float)) and 0 <= v < 1, "must be in [0, 1)")
    check("beta2", lambda v: isinstance(v, (int, float)) and 0 <= v < 1, "must be in [0, 1)")
    check("weighting", lambda v: v in ("example", "uniform"),
          "must be 'example' or 'uniform'")
    check("seed", lambda v: isinstance(v, int) and v >= 0, "must be an integer >= 0")
    check("eval_every", lambda v: isinstance(v, int) and v >= 0, "must be an integer >= 0")
    check("checkpoint_every", lambda v: isinstance(v, int) and v >= 0,
          "must be an integer >= 0")
    check("workers", posint, "must be a positive integer")
    check("check_finite", lambda v: isinstance(v, bool), "must be a boolean")
    check("out", lambda v: isinstance(v, str), "must be a string path")

    m = raw.get("total_clients", 10)
    if "clients_per_round" not in raw and posint(m):
        raw = dict(raw)
        raw["clients_per_round"] = min(10, m)  # default cohort capped at m
    s = raw.get("clients_per_round", 10)
    if posint(m) and posint(s) and s > m:
        errs.append("clients_per_round: must be <= total_clients")
    if raw.get("schedule") is not None:
        try:
            schedule_from_spec(raw["schedule"], raw.get("client_lr", 0.1))
        except ConfigError as exc:
            errs.extend(exc.errors)
    if opt == "scaffold" and raw.get("client_lr", 0.1) == 0:
        errs.append("client_lr: scaffold requires client_lr > 0")
    if errs:
        raise ConfigError(errs)
    return ExperimentConfig(**raw)


def parse_config(source) -> ExperimentConfig:
    """Parse a config from a dict, a JSON file path, or inline JSON text."""
    if isinstance(source, ExperimentConfig):
        return source
    if isinstance(source, dict):
        return validate(source)
    text = str(source)
    if os.path.exists(text):
        with open(text) as fh:
            text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config: invalid JSON ({exc})"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["config: top level must be an object"])
    return validate(raw)


# ---------------------------------------------------------------------------
# Task construction
# ---------------------------------------------------------------------------


def build_task(cfg: ExperimentConfig):
    """Materialize the task described by ``cfg.task`` (seeded by cfg.seed)."""
    spec = dict(cfg.task)
    kind = spec.pop("kind")
    rng = streams.task_rng(cfg.seed)
    m = cfg.total_clients
    if kind == "quadratic":
        return make_quadratic_ensemble(
            m, spec.pop("d", 20), spec.pop("hetero", 1.0), spec.pop("cond", 5.0),
            rng, n_per_client=spec.pop("n_per_client", 32),
            batch_size=cfg.batch_size, sigma_l=spec.pop("sigma_l", 0.0),
            x0_radius=spec.pop("x0_radius", 3.0))
    if kind == "sparse_logreg":
        return make_sparse_logreg(
            m, spec.pop("d_vocab", 2000), spec.pop("classes", 10),
            spec.pop("zipf_exponent", 1.2), spec.pop("examples_per_client", 50),
            rng, batch_size=cfg.batch_size if cfg.batch_size else 20,
            active_per_example=spec.pop("active_per_example", 10),
            topic_alpha=spec.pop("topic_alpha", 0.3),
            topic_boost=spec.pop("topic_boost", None),
            sigma_l=spec.pop("sigma_l", 0.0))
    if kind == "mlp2":
        return make_mlp2(
            m, rng, d_in=spec.pop("d_in", 5), hidden=spec.pop("hidden", 6),
            d_out=spec.pop("d_out", 2), n_per_client=spec.pop("n_per_client", 24),
            hetero=spec.pop("hetero", 1.0),
            batch_size=cfg.batch_size if cfg.batch_size else 8,
            sigma_l=spec.pop("sigma_l", 0.0))
    if kind == "linear_ae":
        return make_linear_ae(
            m, rng, d_in=spec.pop("d_in", 8), bottleneck=spec.pop("bottleneck", 3),
            n_per_client=spec.pop("n_per_client", 24), hetero=spec.pop("hetero", 1.0),
            batch_size=cfg.batch_size if cfg.batch_size else 8,
            sigma_l=spec.pop("sigma_l", 0.0))
    if kind == "csv_logreg":
        features, labels = load_csv_pool(spec.pop("path"))
        part = spec.pop("partitioner")
        per_client = part.get("per_client") or features.shape[0] // m
        prng = streams.partition_rng(cfg.seed)
        if part["kind"] == "iid":
            assignments = partition_iid(features.shape[0], m, per_client, prng)
        else:
            assignments = partition_lda(labels, m, per_client,
                                        part.get("alpha", 0.1), prng)
        return logreg_from_pool(features, labels, assignments,
                                batch_size=cfg.batch_size if cfg.batch_size else 20,
                                sigma_l=spec.pop("sigma_l", 0.0))
    raise ConfigError([f"task.kind: unknown kind {kind!r}"])
