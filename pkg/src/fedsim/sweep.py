"""Hyperparameter grid sweeps with the last-window selection rule.

Every (client lr, server lr, tau) cell is run and scored by its mean
training loss over the final ``window`` rounds; the argmin wins, with ties
broken toward smaller client lr, then smaller server lr, then smaller tau.
Non-adaptive optimizers ignore the tau grid.  Cells that abort numerically
are excluded with a warning rather than failing the sweep.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig, build_task
from .errors import ContractError, NumericalAbort
from .fedloop import run_experiment
from .server import ADAPTIVE_FLAVORS


def half_decade_grid(lo_exp: float, hi_exp: float) -> list[float]:
    """10^lo, 10^(lo+0.5), ..., 10^hi."""
    count = int(round((hi_exp - lo_exp) * 2)) + 1
    return [10.0 ** (lo_exp + 0.5 * i) for i in range(count)]


# Defaults mirror the evaluation grids: half-decade client/server lr ranges
# and decade-spaced adaptivity values.
DEFAULT_ETA_L_GRID = half_decade_grid(-3.0, 0.5)
DEFAULT_ETA_GRID = half_decade_grid(-3.0, 1.0)
DEFAULT_TAU_GRID = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1]


@dataclass
class CellResult:
    index: int
    eta_l: float
    eta: float
    tau: float | None
    score: float | None
    failed: bool = False
    error: str = ""


@dataclass
class SweepResult:
    best: CellResult
    table: list[CellResult]

    def best_params(self) -> tuple:
        return (self.best.eta_l, self.best.eta, self.best.tau)


def grid_sweep(base_config: ExperimentConfig, eta_l_grid, eta_grid,
               tau_grid=None, window: int = 100, *, seeds: int = 1,
               select_on: str = "train_loss", workers: int = 1,
               runner=None) -> SweepResult:
    """Run every grid cell and return the argmin plus the full table.

    ``runner`` (config, run_seed) -> Trace exists for testing the selection
    rule in isolation; it defaults to ``run_experiment`` with a task built
    once from the base seed and shared across cells.
    """
    eta_l_grid = list(eta_l_grid)
    eta_grid = list(eta_grid)
    if not eta_l_grid or not eta_grid:
        raise ContractError("learning-rate grids must be nonempty")
    if window < 1 or window > base_config.rounds:
        raise ContractError("need 1 <= window <= rounds")
    if select_on not in ("train_loss", "eval"):
        raise ContractError("select_on must be 'train_loss' or 'eval'")
    adaptive = base_config.server_flavor() in ADAPTIVE_FLAVORS
    if tau_grid is None:
        tau_grid = DEFAULT_TAU_GRID if adaptive else [None]
    tau_grid = list(tau_grid) if adaptive else [None]
    if not tau_grid:
        raise ContractError("tau grid must be nonempty for adaptive optimizers")

    if runner is None:
        shared_task = build_task(base_config)
        runner = lambda cfg, run_seed: run_experiment(cfg, task=shared_task,
                                                      run_seed=run_seed)

    cells = []
    index = 0
    for eta_l in eta_l_grid:
        for eta in eta_grid:
            for tau in tau_grid:
                cells.append(CellResult(index, eta_l, eta, tau, None))
                index += 1

    def score_cell(cell: CellResult) -> CellResult:
        overrides = {"client_lr": cell.eta_l, "server_lr": cell.eta}
        if cell.tau is not None:
            overrides["tau"] = cell.tau
        cfg = base_config.with_overrides(**overrides)
        window_means = []
        try:
            for j in range(seeds):
                run_seed = cfg.seed if seeds == 1 else cfg.seed + j
                trace = runner(cfg, run_seed)
                if select_on == "eval":
                    tail = [r.eval_metric for r in trace.records[-window:]
                            if r.eval_metric is not None]
                    if not tail:
                        raise ContractError("no eval metrics in selection window")
                    window_means.append(float(np.mean(tail)))
                else:
                    window_means.append(trace.window_mean_train_loss(window))
            score = float(np.mean(window_means))
            if not math.isfinite(score):
                raise NumericalAbort(f"window score is {score}")
            cell.score = score
        except NumericalAbort as exc:
            cell.failed = True
            cell.error = str(exc)
            warnings.warn(f"sweep cell {cell.index} "
                          f"(eta_l={cell.eta_l:g}, eta={cell.eta:g}, tau={cell.tau}) "
                          f"failed: {exc}")
        return cell

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(score_cell, cells))
    else:
        cells = [score_cell(c) for c in cells]

    ok = [c for c in cells if not c.failed]
    if not ok:
        raise NumericalAbort("every sweep cell failed")
    best = min(ok, key=lambda c: (c.score, c.eta_l, c.eta,
                                  c.tau if c.tau is not None else 0.0))
    return SweepResult(best=best, table=cells)
