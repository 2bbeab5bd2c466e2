"""Heterogeneous quadratic ensembles.

Client i minimizes F_i(x) = 0.5 (x - b_i)^T A (x - b_i) with a curvature
matrix A shared by all clients (largest eigenvalue = the smoothness constant
by construction) and centers b_i spread on a sphere whose radius is the
heterogeneity knob.  Gradient differences between clients are then constant
in x, so the client-dispersion variance is available in closed form, which is
what makes these ensembles usable as ground truth for bound checks.
"""
from __future__ import annotations

import numpy as np

from .base import ClientData, Task


class QuadraticEnsemble(Task):
    kind = "quadratic"

    def __init__(self, matrix: np.ndarray, centers: np.ndarray, x0: np.ndarray,
                 eigenvalues: np.ndarray, n_per_client: int, batch_size: int | None,
                 sigma_l: float):
        m, d = centers.shape
        clients = [ClientData.of_size(n_per_client, batch_size) for _ in range(m)]
        super().__init__(dim=d, num_clients=m, clients=clients, x0=x0, sigma_l=sigma_l)
        self.matrix = matrix
        self.centers = centers
        self.eigenvalues = eigenvalues

    # Batch content is irrelevant: all examples of a client share one gradient.
    def _loss_grad(self, client: int, idx: np.ndarray, x: np.ndarray):
        r = x - self.centers[client]
        q = self.matrix @ r
        return float(0.5 * r @ q), q

    # -- closed forms used by the theory checks -------------------------------

    @property
    def smoothness_constant(self) -> float:
        return float(self.eigenvalues.max())

    @property
    def minimizer(self) -> np.ndarray:
        return self.centers.mean(axis=0)

    @property
    def min_value(self) -> float:
        return self.global_loss(self.minimizer)

    def optimality_gap(self, x: np.ndarray) -> float:
        return self.global_loss(x) - self.min_value

    @property
    def dispersion_sq(self) -> float:
        """Exact mean squared client-gradient deviation (constant in x)."""
        dev = (self.centers - self.minimizer) @ self.matrix.T
        return float(np.mean(np.sum(dev * dev, axis=1)))


def make_quadratic_ensemble(m: int, d: int, hetero: float, cond: float, rng,
                            *, smoothness: float = 1.0, n_per_client: int = 32,
                            batch_size: int | None = None, sigma_l: float = 0.0,
                            x0_radius: float = 3.0) -> QuadraticEnsemble:
    """Build an ensemble of ``m`` quadratic clients in dimension ``d``.

    ``hetero = 0`` gives identical clients; ``cond`` is the condition number
    of the shared curvature matrix.
    """
    if m < 1 or d < 1:
        raise ValueError("m and d must be >= 1")
    if hetero < 0 or cond < 1:
        raise ValueError("hetero must be >= 0 and cond >= 1")
    if d == 1:
        eigs = np.array([smoothness])
        basis = np.ones((1, 1))
    else:
        eigs = smoothness * np.logspace(-np.log10(cond), 0, d)
        gauss = rng.standard_normal((d, d))
        basis, r = np.linalg.qr(gauss)
        basis = basis * np.sign(np.diag(r))  # fix QR sign ambiguity
    matrix = (basis * eigs) @ basis.T
    matrix = 0.5 * (matrix + matrix.T)  # exact symmetry

    directions = rng.standard_normal((m, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    centers = hetero * directions
    if hetero == 0:
        centers = np.zeros((m, d))

    x0_dir = rng.standard_normal(d)
    x0 = x0_radius * x0_dir / np.linalg.norm(x0_dir)
    return QuadraticEnsemble(matrix, centers, x0, eigs, n_per_client, batch_size, sigma_l)
