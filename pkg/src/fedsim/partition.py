"""Assigning a labeled example pool to clients.

Three partitioners: uniform (iid), single-level Dirichlet over labels, and a
two-level scheme over a coarse/fine label hierarchy where each client first
draws a multinomial over coarse groups and, per group, one over its fine
labels.  Sampling is without replacement; exhausting a fine label prunes it
from the hierarchy and renormalizes the affected multinomials, so later
clients draw their Dirichlets over one fewer category.

Partitioning is order-dependent across clients (pruning) and runs once,
single-threaded, before training.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ContractError, DomainError

PROB_SUM_TOL = 1e-12


@dataclass
class Multinomial:
    """Distribution over a node's current children."""

    categories: np.ndarray  # category ids, parallel to probs
    probs: np.ndarray

    def __post_init__(self):
        self.categories = np.asarray(self.categories)
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.categories.shape != self.probs.shape:
            raise ContractError("categories and probs must be parallel")
        if np.any(self.probs < 0):
            raise DomainError("negative probability")
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise DomainError(f"probabilities sum to {self.probs.sum()!r}")

    def sample(self, rng) -> int:
        return int(rng.choice(self.categories, p=self.probs))

    def index_of(self, category) -> int:
        hits = np.flatnonzero(self.categories == category)
        if hits.size == 0:
            raise KeyError(f"category {category} not present")
        return int(hits[0])


def symmetric_dirichlet(categories, concentration: float, rng) -> Multinomial:
    """Draw a multinomial over ``categories`` from Dir(concentration)."""
    cats = np.asarray(categories)
    if cats.size == 1:
        return Multinomial(cats, np.ones(1))
    probs = rng.dirichlet(np.full(cats.size, float(concentration)))
    return Multinomial(cats, probs)


def renormalize(theta: Multinomial, index: int) -> Multinomial:
    """Drop category at position ``index`` and rescale the rest to sum 1."""
    k = theta.categories.size
    if k < 2:
        raise ContractError("cannot renormalize a single-category multinomial")
    if not 0 <= index < k:
        raise ContractError(f"index {index} out of range for {k} categories")
    keep = np.arange(k) != index
    remaining = float(theta.probs[keep].sum())
    if remaining <= 0.0:
        raise DomainError("removed category carries all probability mass")
    return Multinomial(theta.categories[keep], theta.probs[keep] / remaining)


# ---------------------------------------------------------------------------
# Flat partitioners
# ---------------------------------------------------------------------------


def partition_iid(pool_size: int, m: int, per_client: int, rng) -> list[np.ndarray]:
    """Disjoint uniform assignment of ``per_client`` examples to each client."""
    if m < 1 or per_client < 1:
        raise ContractError("m and per_client must be >= 1")
    if m * per_client > pool_size:
        raise CapacityError(f"pool of {pool_size} cannot supply {m}x{per_client}")
    chosen = rng.permutation(pool_size)[: m * per_client]
    return [np.sort(chunk) for chunk in chosen.reshape(m, per_client)]


def partition_lda(labels: np.ndarray, m: int, per_client: int, alpha: float,
                  rng) -> list[np.ndarray]:
    """Dirichlet-over-labels assignment, sampling without replacement.

    Each client draws its own label multinomial from Dir(alpha) over the
    labels that still have examples; drawing an exhausted label renormalizes
    that client's multinomial and redraws.
    """
    labels = np.asarray(labels)
    if alpha <= 0:
        raise ContractError("alpha must be > 0")
    if m * per_client > labels.size:
        raise CapacityError(f"pool of {labels.size} cannot supply {m}x{per_client}")
    pools = {int(y): list(np.flatnonzero(labels == y)) for y in np.unique(labels)}
    out = []
    for _ in range(m):
        alive = np.array(sorted(y for y, p in pools.items() if p))
        theta = symmetric_dirichlet(alive, alpha, rng)
        mine = np.empty(per_client, dtype=np.int64)
        for k in range(per_client):
            while True:
                y = theta.sample(rng)
                pool = pools[y]
                if pool:
                    break
                theta = renormalize(theta, theta.index_of(y))
            pick = int(rng.integers(len(pool)))
            pool[pick], pool[-1] = pool[-1], pool[pick]
            mine[k] = pool.pop()
        out.append(np.sort(mine))
    return out


# ---------------------------------------------------------------------------
# Two-level hierarchical partitioner
# ---------------------------------------------------------------------------


@dataclass
class LabelDag:
    """Root -> coarse groups -> fine labels -> example pools."""

    children: dict[int, list[int]]          # coarse -> surviving fine labels
    pools: dict[int, list[int]] = field(repr=False)  # fine -> example indices

    @classmethod
    def from_labels(cls, coarse: np.ndarray, fine: np.ndarray) -> "LabelDag":
        coarse = np.asarray(coarse)
        fine = np.asarray(fine)
        if coarse.shape != fine.shape:
            raise ContractError("coarse and fine label arrays must align")
        children: dict[int, list[int]] = {}
        pools: dict[int, list[int]] = {}
        parent: dict[int, int] = {}
        for idx, (c, y) in enumerate(zip(coarse.tolist(), fine.tolist())):
            if y in parent and parent[y] != c:
                raise ContractError(f"fine label {y} has two coarse parents")
            parent[y] = c
            children.setdefault(c, [])
            if y not in children[c]:
                children[c].append(y)
            pools.setdefault(y, []).append(idx)
        return cls(children, pools)

    def copy(self) -> "LabelDag":
        return LabelDag({c: list(ys) for c, ys in self.children.items()},
                        {y: list(p) for y, p in self.pools.items()})

    @property
    def total_examples(self) -> int:
        return sum(len(p) for p in self.pools.values())

    def surviving_coarse(self) -> list[int]:
        return sorted(self.children)


def make_synthetic_dag(n_coarse: int, fine_per_coarse: int, per_fine: int):
    """Balanced hierarchy: returns (dag, coarse_labels, fine_labels)."""
    total = n_coarse * fine_per_coarse * per_fine
    fine = np.repeat(np.arange(n_coarse * fine_per_coarse), per_fine)
    coarse = fine // fine_per_coarse
    return LabelDag.from_labels(coarse, fine), coarse, fine


def partition_pachinko(dag: LabelDag, m: int, per_client: int, alpha: float,
                       beta: float, rng) -> list[np.ndarray]:
    """Hierarchical Dirichlet assignment over a coarse/fine label DAG.

    Per client: draw a root multinomial from Dir(alpha) over surviving coarse
    groups and one multinomial from Dir(beta) per surviving group; then draw
    ``per_client`` examples root -> coarse -> fine -> uniform example,
    removing each drawn example and pruning/renormalizing exhausted nodes in
    place.  Later clients see the pruned hierarchy.
    """
    if dag.total_examples < m * per_client:
        raise CapacityError(
            f"dag holds {dag.total_examples} examples, need {m * per_client}")
    work = dag.copy()
    out = []
    for _ in range(m):
        coarse_alive = np.array(work.surviving_coarse())
        theta_root = symmetric_dirichlet(coarse_alive, alpha, rng)
        theta_groups = {int(c): symmetric_dirichlet(np.array(work.children[int(c)]), beta, rng)
                        for c in coarse_alive}
        mine = np.empty(per_client, dtype=np.int64)
        for k in range(per_client):
            c = theta_root.sample(rng)
            theta_c = theta_groups[c]
            y = theta_c.sample(rng)
            pool = work.pools[y]
            pick = int(rng.integers(len(pool)))
            pool[pick], pool[-1] = pool[-1], pool[pick]
            mine[k] = pool.pop()
            if pool:
                continue
            # Fine label y is exhausted: prune it and renormalize theta_c.
            del work.pools[y]
            work.children[c].remove(y)
            if work.children[c]:
                theta_groups[c] = renormalize(theta_c, theta_c.index_of(y))
            else:
                # Coarse group c is exhausted: prune it and renormalize root.
                del work.children[c]
                del theta_groups[c]
                if theta_root.categories.size > 1:
                    theta_root = renormalize(theta_root, theta_root.index_of(c))
                elif k + 1 < per_client:
                    raise CapacityError("hierarchy exhausted mid-client")
        out.append(np.sort(mine))
    return out


# ---------------------------------------------------------------------------
# Manifest round-trip
# ---------------------------------------------------------------------------


def save_manifest(assignments: list[np.ndarray], path) -> None:
    """Write client -> example-index lists as a JSON manifest."""
    payload = {str(i): [int(v) for v in idx] for i, idx in enumerate(assignments)}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> list[np.ndarray]:
    with open(path) as fh:
        payload = json.load(fh)
    return [np.asarray(payload[str(i)], dtype=np.int64) for i in range(len(payload))]
