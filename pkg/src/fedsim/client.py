"""Client-side local training.

Two local-work units: a fixed number of SGD steps on uniformly sampled
batches (the unit the analysis is stated in), and full epochs over the
client's batch list in a shuffled-per-epoch order (the unit experiments use).
The control-variate variant corrects each gradient by (c - c_i); the
correction is added as a single term so that it cancels *exactly* when
c_i == c, which is what makes the plain-averaging recovery claims hold bit
for bit.

Training loss is recorded on each batch before the step that consumes it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .tasks.base import Task
from .vectors import Vector


@dataclass
class LocalResult:
    delta: Vector
    n: int
    steps_taken: int
    train_loss: float


@dataclass
class ScaffoldResult:
    delta: Vector
    delta_c: Vector
    c_i_new: Vector
    n: int
    steps_taken: int
    train_loss: float


@dataclass
class ControlVariates:
    """Server variate ``c`` plus lazily created per-client variates."""

    c: Vector
    per_client: dict[int, Vector] = field(default_factory=dict)

    @classmethod
    def zeros(cls, dim: int) -> "ControlVariates":
        return cls(c=np.zeros(dim))

    def variate_for(self, client: int) -> Vector:
        # First contact initializes c_i to the current server variate.
        if client not in self.per_client:
            self.per_client[client] = self.c.copy()
        return self.per_client[client]


def local_steps(x_start: Vector, task: Task, client: int, steps: int,
                eta_l: float, rng) -> LocalResult:
    """Run ``steps`` SGD iterations on uniformly sampled batches."""
    if steps < 1:
        raise ContractError("steps must be >= 1")
    if eta_l < 0:
        raise ContractError("eta_l must be >= 0")
    data = task.client_data(client)
    x = x_start.copy()
    losses = np.empty(steps)
    for k in range(steps):
        batch = int(rng.integers(data.num_batches))
        loss, g = task.loss_and_grad(client, x, batch, rng=rng)
        losses[k] = loss
        x -= eta_l * g
    return LocalResult(delta=x - x_start, n=data.n, steps_taken=steps,
                       train_loss=float(losses.mean()))


def local_epochs(x_start: Vector, task: Task, client: int, epochs: int,
                 eta_l: float, rng) -> LocalResult:
    """Run ``epochs`` passes over the client's batches, shuffled per epoch."""
    if epochs < 1:
        raise ContractError("epochs must be >= 1")
    if eta_l < 0:
        raise ContractError("eta_l must be >= 0")
    data = task.client_data(client)
    x = x_start.copy()
    losses = []
    for _ in range(epochs):
        for batch in rng.permutation(data.num_batches):
            loss, g = task.loss_and_grad(client, x, int(batch), rng=rng)
            losses.append(loss)
            x -= eta_l * g
    return LocalResult(delta=x - x_start, n=data.n,
                       steps_taken=epochs * data.num_batches,
                       train_loss=float(np.mean(losses)))


def scaffold_local(x_start: Vector, task: Task, client: int, epochs: int,
                   eta_l: float, c: Vector, c_i: Vector, rng) -> ScaffoldResult:
    """Variate-corrected local epochs.

    Each step uses g + (c - c_i); afterwards the client variate becomes the
    mean gradient it actually applied, shifted by its stale correction:
    c_i+ = c_i - c + (x_start - x_end) / (steps * eta_l).
    """
    if epochs < 1:
        raise ContractError("epochs must be >= 1")
    if eta_l <= 0:
        raise ContractError("eta_l must be > 0 for the variate update")
    data = task.client_data(client)
    correction = c - c_i
    x = x_start.copy()
    losses = []
    for _ in range(epochs):
        for batch in rng.permutation(data.num_batches):
            loss, g = task.loss_and_grad(client, x, int(batch), rng=rng)
            losses.append(loss)
            x -= eta_l * (g + correction)
    steps = epochs * data.num_batches
    c_i_new = (x_start - x) / (steps * eta_l) - correction
    return ScaffoldResult(delta=x - x_start, delta_c=c_i_new - c_i, c_i_new=c_i_new,
                          n=data.n, steps_taken=steps, train_loss=float(np.mean(losses)))


def drift_profile(x_broadcast: Vector, task: Task, steps: int, eta_l: float,
                  client_rngs) -> np.ndarray:
    """Mean squared client displacement at each local step index.

    Returns drift[k] = (1/m) sum_i ||x_{i,k} - x_broadcast||^2 for
    k = 0..steps-1, with batches sampled uniformly as in ``local_steps``.
    """
    m = task.num_clients
    drift = np.zeros(steps)
    for client in range(m):
        rng = client_rngs(client)
        data = task.client_data(client)
        x = x_broadcast.copy()
        for k in range(steps):
            diff = x - x_broadcast
            drift[k] += float(diff @ diff)
            batch = int(rng.integers(data.num_batches))
            g = task.grad(client, x, batch, rng=rng)
            x -= eta_l * g
    return drift / m
