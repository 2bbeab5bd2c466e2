"""Deterministic derivation of random streams.

Every stochastic decision in a run is drawn from a generator keyed by
(seed, round, client) plus a purpose tag, never from shared mutable RNG
state.  Traces therefore do not depend on thread scheduling, worker counts,
or the order in which client results arrive, and a run can be resumed from
any round boundary without replaying earlier rounds.
"""
from __future__ import annotations

import numpy as np

# Purpose tags keep streams for different uses disjoint even when the
# remaining key components collide.
TAG_TASK = 0x7A51
TAG_PARTITION = 0x9A27
TAG_SAMPLER = 0x51ED
TAG_CLIENT = 0xC11E
TAG_CELL = 0x5EED


def derive_rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(key)))


def task_rng(seed: int) -> np.random.Generator:
    """Stream that generates task data (fixed per experiment seed)."""
    return derive_rng(seed, TAG_TASK)


def partition_rng(seed: int) -> np.random.Generator:
    return derive_rng(seed, TAG_PARTITION)


def sampler_rng(seed: int, round_t: int) -> np.random.Generator:
    """Stream for cohort selection at one round."""
    return derive_rng(seed, round_t, TAG_SAMPLER)


def client_rng(seed: int, round_t: int, client_id: int) -> np.random.Generator:
    """Stream owned by one client's local work in one round."""
    return derive_rng(seed, round_t, client_id, TAG_CLIENT)


def cell_seed(seed: int, cell_index: int) -> int:
    """Derived integer seed for one sweep cell."""
    ss = np.random.SeedSequence([seed, cell_index, TAG_CELL])
    return int(ss.generate_state(1, dtype=np.uint64)[0] % (2**63))
