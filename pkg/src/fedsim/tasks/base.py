"""Task interface: per-client differentiable objectives over batched data.

A task owns ``m`` client datasets and exposes loss/gradient evaluation for a
single client on one batch or on the client's full data.  Gradients are
analytic; when a task carries a local-noise level, ``grad`` adds zero-mean
per-coordinate Gaussian noise so the stochastic-gradient variance is a known
input rather than an estimated one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError

# Sentinel batch selector: evaluate on the client's entire dataset.
FULL = "full"


def make_batches(n: int, batch_size: int) -> list[np.ndarray]:
    """Split indices 0..n-1 into consecutive batches; last may be smaller."""
    if n < 1:
        raise ContractError("empty client dataset")
    if batch_size < 1:
        raise ContractError(f"batch_size must be >= 1, got {batch_size}")
    return [np.arange(s, min(s + batch_size, n)) for s in range(0, n, batch_size)]


@dataclass
class ClientData:
    """Batch structure of one client's examples."""

    n: int
    batch_size: int
    batches: list[np.ndarray] = field(repr=False)

    @classmethod
    def of_size(cls, n: int, batch_size: int | None) -> "ClientData":
        b = n if batch_size is None else min(batch_size, n)
        return cls(n=n, batch_size=b, batches=make_batches(n, b))

    @property
    def num_batches(self) -> int:
        return len(self.batches)


class Task:
    """Base class; subclasses implement ``_loss_grad`` over index arrays."""

    kind: str = "abstract"
    metric_name: str = "global_loss"

    def __init__(self, dim: int, num_clients: int, clients: list[ClientData],
                 x0: np.ndarray, sigma_l: float = 0.0):
        self.dim = dim
        self.num_clients = num_clients
        self._clients = clients
        self.x0 = np.asarray(x0, dtype=np.float64)
        self.sigma_l = float(sigma_l)
        # Uniform per-coordinate split so that sum_j sigma_{l,j}^2 = sigma_l^2.
        self.noise_per_coord = self.sigma_l / np.sqrt(dim) if self.sigma_l > 0 else 0.0

    # -- data access ---------------------------------------------------------

    def client_data(self, client: int) -> ClientData:
        if not 0 <= client < self.num_clients:
            raise KeyError(f"unknown client {client}")
        return self._clients[client]

    def _resolve(self, client: int, batch) -> np.ndarray:
        data = self.client_data(client)
        if batch is FULL or (isinstance(batch, str) and batch == FULL):
            return np.arange(data.n)
        if not 0 <= batch < data.num_batches:
            raise IndexError(f"client {client} has no batch {batch}")
        return data.batches[batch]

    # -- evaluation ----------------------------------------------------------

    def _loss_grad(self, client: int, idx: np.ndarray, x: np.ndarray):
        raise NotImplementedError

    def loss(self, client: int, x: np.ndarray, batch=FULL) -> float:
        value, _ = self._loss_grad(client, self._resolve(client, batch), x)
        return value

    def grad(self, client: int, x: np.ndarray, batch=FULL, rng=None) -> np.ndarray:
        _, g = self._loss_grad(client, self._resolve(client, batch), x)
        return self._with_noise(g, rng)

    def loss_and_grad(self, client: int, x: np.ndarray, batch, rng=None):
        value, g = self._loss_grad(client, self._resolve(client, batch), x)
        return value, self._with_noise(g, rng)

    def _with_noise(self, g: np.ndarray, rng) -> np.ndarray:
        if rng is None or self.noise_per_coord == 0.0:
            return g
        return g + rng.standard_normal(self.dim) * self.noise_per_coord

    # -- global objective ----------------------------------------------------

    def global_loss(self, x: np.ndarray) -> float:
        """f(x) = mean over clients of the exact client loss."""
        return float(np.mean([self.loss(i, x, FULL) for i in range(self.num_clients)]))

    def global_grad(self, x: np.ndarray) -> np.ndarray:
        total = np.zeros(self.dim)
        for i in range(self.num_clients):
            total += self.grad(i, x, FULL)
        return total / self.num_clients

    def eval_metric(self, x: np.ndarray) -> float:
        return self.global_loss(x)
