"""Synthetic objectives with analytic gradients, plus constant estimation."""

from .base import FULL, ClientData, Task, make_batches
from .constants import AssumptionEstimates, estimate_constants, probe_points
from .logreg import (LogisticRegressionTask, load_csv_pool, logreg_from_pool,
                     make_sparse_logreg)
from .nets import LinearAutoencoder, TwoLayerSigmoidNet, make_linear_ae, make_mlp2
from .quadratic import QuadraticEnsemble, make_quadratic_ensemble

__all__ = [
    "FULL", "ClientData", "Task", "make_batches",
    "AssumptionEstimates", "estimate_constants", "probe_points",
    "LogisticRegressionTask", "load_csv_pool", "logreg_from_pool", "make_sparse_logreg",
    "LinearAutoencoder", "TwoLayerSigmoidNet", "make_linear_ae", "make_mlp2",
    "QuadraticEnsemble", "make_quadratic_ensemble",
]
