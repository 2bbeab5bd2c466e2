"""Multinomial logistic regression over bag-of-feature vectors.

The synthetic generator produces long-tailed feature frequencies (Zipf law)
with rare features concentrated on few clients, which is the regime where
per-coordinate server adaptivity pays off: feature columns a client never
touches contribute exactly-zero gradient coordinates.
"""
from __future__ import annotations

import csv

import numpy as np

from ..errors import ContractError
from .base import ClientData, Task


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class LogisticRegressionTask(Task):
    """Cross-entropy loss; parameters are the (classes x vocab) weight matrix."""

    kind = "sparse_logreg"
    metric_name = "accuracy"

    def __init__(self, features: list[np.ndarray], labels: list[np.ndarray],
                 classes: int, batch_size: int | None, sigma_l: float = 0.0):
        m = len(features)
        vocab = features[0].shape[1]
        clients = [ClientData.of_size(f.shape[0], batch_size) for f in features]
        super().__init__(dim=classes * vocab, num_clients=m, clients=clients,
                         x0=np.zeros(classes * vocab), sigma_l=sigma_l)
        self.classes = classes
        self.vocab = vocab
        self.features = features
        self.labels = labels

    def _loss_grad(self, client: int, idx: np.ndarray, x: np.ndarray):
        w = x.reshape(self.classes, self.vocab)
        feats = self.features[client][idx]
        labs = self.labels[client][idx]
        probs = _softmax(feats @ w.T)
        b = idx.shape[0]
        loss = -float(np.mean(np.log(probs[np.arange(b), labs] + 1e-300)))
        probs[np.arange(b), labs] -= 1.0
        grad = (probs.T @ feats) / b
        return loss, grad.reshape(-1)

    def eval_metric(self, x: np.ndarray) -> float:
        """Classification accuracy over the union of all client examples."""
        w = x.reshape(self.classes, self.vocab)
        correct = 0
        total = 0
        for feats, labs in zip(self.features, self.labels):
            pred = np.argmax(feats @ w.T, axis=1)
            correct += int(np.sum(pred == labs))
            total += labs.shape[0]
        return correct / total


def make_sparse_logreg(m: int, d_vocab: int, classes: int, zipf_exponent: float,
                       examples_per_client: int, rng, *, batch_size: int | None = 20,
                       active_per_example: int = 10, topic_alpha: float = 0.3,
                       topic_boost: float | None = None,
                       sigma_l: float = 0.0) -> LogisticRegressionTask:
    """Generate a heterogeneous bag-of-features classification task.

    Feature v carries Zipf weight (v+1)^-zipf_exponent and has a home class
    (v mod classes); each class's feature distribution boosts its home
    features, and each client draws labels from its own Dirichlet mixture, so
    tail features end up concentrated on few clients.  ``zipf_exponent = 0``
    gives uniform feature frequencies (the dense-gradient control).
    """
    if not d_vocab >= classes >= 2:
        raise ContractError("need d_vocab >= classes >= 2")
    if topic_boost is None:
        topic_boost = 4.0 * classes
    zipf = (np.arange(1, d_vocab + 1, dtype=np.float64)) ** (-zipf_exponent)
    home = np.arange(d_vocab) % classes
    class_feature_dists = np.empty((classes, d_vocab))
    for c in range(classes):
        w = zipf * np.where(home == c, topic_boost, 1.0)
        class_feature_dists[c] = w / w.sum()

    features, labels = [], []
    for _ in range(m):
        mixture = rng.dirichlet(np.full(classes, topic_alpha))
        labs = rng.choice(classes, size=examples_per_client, p=mixture)
        feats = np.zeros((examples_per_client, d_vocab))
        for row, y in enumerate(labs):
            drawn = rng.choice(d_vocab, size=active_per_example, p=class_feature_dists[y])
            np.add.at(feats[row], drawn, 1.0)
        feats /= active_per_example  # normalized bag-of-features
        features.append(feats)
        labels.append(labs.astype(np.int64))
    return LogisticRegressionTask(features, labels, classes, batch_size, sigma_l)


def logreg_from_pool(features: np.ndarray, labels: np.ndarray,
                     assignments: list[np.ndarray], *, batch_size: int | None = 20,
                     classes: int | None = None,
                     sigma_l: float = 0.0) -> LogisticRegressionTask:
    """Build a logistic-regression task from a labeled pool plus a partition.

    ``assignments`` maps each client to example indices into the pool, e.g.
    the output of the partitioners.
    """
    if classes is None:
        classes = int(labels.max()) + 1
    feats = [np.asarray(features[idx], dtype=np.float64) for idx in assignments]
    labs = [np.asarray(labels[idx], dtype=np.int64) for idx in assignments]
    return LogisticRegressionTask(feats, labs, classes, batch_size, sigma_l)


def load_csv_pool(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a ``label,f0,f1,...`` CSV into (features, labels) arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "label" or len(header) < 2:
            raise ContractError(f"{path}: expected header 'label,f0,f1,...'")
        expected = ["label"] + [f"f{i}" for i in range(len(header) - 1)]
        if header != expected:
            raise ContractError(f"{path}: malformed header {header[:4]}...")
        rows = [row for row in reader if row]
    if not rows:
        raise ContractError(f"{path}: no data rows")
    labels = np.array([int(r[0]) for r in rows], dtype=np.int64)
    features = np.array([[float(v) for v in r[1:]] for r in rows], dtype=np.float64)
    if labels.min() < 0:
        raise ContractError(f"{path}: labels must be nonnegative integers")
    return features, labels
