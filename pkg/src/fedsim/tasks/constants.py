"""Empirical estimation of the regularity constants a task satisfies.

The estimates feed the bound evaluators: smoothness from gradient-difference
ratios over probe pairs (exact top curvature for quadratics), the gradient
bound as both a per-coordinate max and a norm max (the bounds are stated per
coordinate but consumed in norm positions, so both are reported), and the
local/client-dispersion variances from repeated stochastic draws and exact
client gradients.  All quantities are measured over the supplied probe
points, i.e. they certify local validity on the probed region only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from .base import Task


@dataclass
class AssumptionEstimates:
    l: float
    g: float          # per-coordinate gradient bound (the value bounds use)
    g_norm: float     # l2-norm variant, reported alongside
    sigma_l_sq: float
    sigma_g_sq: float

    def as_dict(self) -> dict:
        return {"L": self.l, "G": self.g, "G_norm": self.g_norm,
                "sigma_l_sq": self.sigma_l_sq, "sigma_g_sq": self.sigma_g_sq}


def estimate_constants(task: Task, probes, samples_per_probe: int = 8,
                       rng=None) -> AssumptionEstimates:
    """Measure (L, G, sigma_l^2, sigma_g^2) over the given probe points.

    Stochastic draws mirror what training sees: a uniformly chosen batch plus
    the task's injected noise.
    """
    probes = [np.asarray(p, dtype=np.float64) for p in probes]
    if len(probes) < 2:
        raise ContractError("need at least 2 probes")
    if rng is None:
        rng = np.random.default_rng(0)
    m = task.num_clients

    client_grads = np.empty((len(probes), m, task.dim))
    for pi, x in enumerate(probes):
        for ci in range(m):
            client_grads[pi, ci] = task.grad(ci, x)
    mean_grads = client_grads.mean(axis=1)

    # Smoothness: exact top curvature when the task provides it, otherwise the
    # largest gradient-difference ratio over clients and probe pairs.
    analytic = getattr(task, "smoothness_constant", None)
    if analytic is not None:
        l_const = float(analytic)
    else:
        l_const = 0.0
        for a in range(len(probes)):
            for b in range(a + 1, len(probes)):
                gap = float(np.linalg.norm(probes[a] - probes[b]))
                if gap == 0:
                    continue
                diffs = client_grads[a] - client_grads[b]
                l_const = max(l_const, float(np.linalg.norm(diffs, axis=1).max()) / gap)

    g_coord = float(np.abs(client_grads).max())
    g_norm = float(np.linalg.norm(client_grads, axis=2).max())
    sigma_l_sq = 0.0
    for pi, x in enumerate(probes):
        for ci in range(m):
            nb = task.client_data(ci).num_batches
            draws = np.empty((samples_per_probe, task.dim))
            for s in range(samples_per_probe):
                draws[s] = task.grad(ci, x, batch=int(rng.integers(nb)), rng=rng)
            g_coord = max(g_coord, float(np.abs(draws).max()))
            g_norm = max(g_norm, float(np.linalg.norm(draws, axis=1).max()))
            if samples_per_probe > 1:
                var = draws.var(axis=0, ddof=1).sum()
                sigma_l_sq = max(sigma_l_sq, float(var))

    sigma_g_sq = 0.0
    for pi in range(len(probes)):
        dev = client_grads[pi] - mean_grads[pi]
        sigma_g_sq = max(sigma_g_sq, float(np.mean(np.sum(dev * dev, axis=1))))

    return AssumptionEstimates(l=l_const, g=g_coord, g_norm=g_norm,
                               sigma_l_sq=sigma_l_sq, sigma_g_sq=sigma_g_sq)


def probe_points(task: Task, count: int = 4, radius: float = 10.0, rng=None):
    """Default probe box: the task's start point plus scaled random offsets."""
    if rng is None:
        rng = np.random.default_rng(1)
    pts = [task.x0.copy()]
    for _ in range(count - 1):
        direction = rng.standard_normal(task.dim)
        direction /= np.linalg.norm(direction)
        pts.append(task.x0 + radius * rng.uniform(0.1, 1.0) * direction)
    return pts
