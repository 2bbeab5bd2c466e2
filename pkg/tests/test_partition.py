"""Partitioner contracts: disjointness, exhaustion handling, statistics."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fedsim import streams
from fedsim.errors import CapacityError, ContractError
from fedsim.partition import (LabelDag, Multinomial, load_manifest,
                              make_synthetic_dag, partition_iid, partition_lda,
                              partition_pachinko, renormalize, save_manifest)


def assert_valid_partition(parts, m, per_client, pool_size):
    assert len(parts) == m
    taken = np.concatenate(parts)
    assert all(len(p) == per_client for p in parts)
    assert np.unique(taken).size == taken.size  # disjoint
    assert taken.min() >= 0 and taken.max() < pool_size


# ---------------------------------------------------------------------------
# renormalize
# ---------------------------------------------------------------------------


def test_renormalize_hand_value():
    theta = Multinomial(np.arange(3), np.array([0.2, 0.3, 0.5]))
    out = renormalize(theta, 1)
    np.testing.assert_allclose(out.probs, [0.2857142857142857, 0.7142857142857143],
                               rtol=1e-12)
    np.testing.assert_array_equal(out.categories, [0, 2])


def test_renormalize_two_categories_forces_unit_mass():
    theta = Multinomial(np.arange(2), np.array([0.5, 0.5]))
    assert renormalize(theta, 0).probs[0] == pytest.approx(1.0, abs=1e-15)
    assert renormalize(theta, 1).probs[0] == pytest.approx(1.0, abs=1e-15)


def test_renormalize_rejects_degenerate_inputs():
    with pytest.raises(ContractError):
        renormalize(Multinomial(np.arange(1), np.array([1.0])), 0)
    from fedsim.errors import DomainError
    with pytest.raises(DomainError):
        renormalize(Multinomial(np.arange(2), np.array([1.0, 0.0])), 0)


@given(st.integers(2, 12), st.integers(0, 11), st.integers(0, 2**31 - 1))
@settings(max_examples=200)
def test_renormalize_output_sums_to_one(k, drop, seed):
    drop = drop % k
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.ones(k))
    if 1.0 - probs[drop] <= 0:
        return
    out = renormalize(Multinomial(np.arange(k), probs), drop)
    assert abs(out.probs.sum() - 1.0) <= 1e-12
    assert out.categories.size == k - 1


# ---------------------------------------------------------------------------
# iid
# ---------------------------------------------------------------------------


def test_iid_single_client_owns_everything():
    parts = partition_iid(10, 1, 10, streams.partition_rng(0))
    np.testing.assert_array_equal(parts[0], np.arange(10))


def test_iid_two_clients_partition_pool():
    parts = partition_iid(6, 2, 3, streams.partition_rng(1))
    assert_valid_partition(parts, 2, 3, 6)
    np.testing.assert_array_equal(np.sort(np.concatenate(parts)), np.arange(6))


def test_iid_capacity_error():
    with pytest.raises(CapacityError):
        partition_iid(5, 2, 3, streams.partition_rng(0))


def test_iid_label_histogram_matches_pool():
    # Aggregate label counts of a 500x100 assignment from a 60k pool should
    # not be distinguishable from the pool's multinomial proportions.
    labels = np.repeat(np.arange(10), 6000)
    parts = partition_iid(labels.size, 500, 100, streams.partition_rng(3))
    taken = np.concatenate(parts)
    counts = np.bincount(labels[taken], minlength=10)
    _, p_value = stats.chisquare(counts, f_exp=np.full(10, counts.sum() / 10))
    assert p_value > 0.01


def test_iid_deterministic_for_fixed_seed():
    a = partition_iid(100, 5, 10, streams.partition_rng(7))
    b = partition_iid(100, 5, 10, streams.partition_rng(7))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


# ---------------------------------------------------------------------------
# single-level Dirichlet
# ---------------------------------------------------------------------------


def cifar_shaped_labels():
    return np.repeat(np.arange(10), 5000)  # 50k examples, 10 labels


def mean_tv_to_pool(parts, labels, num_labels):
    pool_dist = np.bincount(labels, minlength=num_labels) / labels.size
    tvs = []
    for idx in parts:
        counts = np.bincount(labels[idx], minlength=num_labels)
        tvs.append(0.5 * np.abs(counts / counts.sum() - pool_dist).sum())
    return float(np.mean(tvs))


def test_lda_clients_disjoint():
    labels = np.repeat(np.arange(4), 25)
    parts = partition_lda(labels, 5, 15, 0.5, streams.partition_rng(2))
    assert_valid_partition(parts, 5, 15, labels.size)


def test_lda_large_alpha_approaches_iid_behavior():
    labels = cifar_shaped_labels()
    lda = partition_lda(labels, 500, 100, 1e6, streams.partition_rng(11))
    iid = partition_iid(labels.size, 500, 100, streams.partition_rng(11))
    tv_lda = mean_tv_to_pool(lda, labels, 10)
    tv_iid = mean_tv_to_pool(iid, labels, 10)
    # The iid split is the oracle for what finite-sample noise alone does.
    assert abs(tv_lda - tv_iid) < 0.05


def test_lda_small_alpha_concentrates_labels():
    labels = cifar_shaped_labels()
    lda = partition_lda(labels, 500, 100, 0.1, streams.partition_rng(13))
    iid = partition_iid(labels.size, 500, 100, streams.partition_rng(13))
    uniq = lambda parts: np.mean([np.unique(labels[i]).size for i in parts])
    assert uniq(lda) < uniq(iid)
    assert_valid_partition(lda, 500, 100, labels.size)


def test_lda_requires_positive_alpha():
    with pytest.raises(ContractError):
        partition_lda(np.zeros(10, dtype=int), 2, 2, 0.0, streams.partition_rng(0))


# ---------------------------------------------------------------------------
# two-level hierarchy
# ---------------------------------------------------------------------------


def test_pachinko_disjoint_exact_counts_full_exhaustion():
    dag, _, _ = make_synthetic_dag(20, 5, 500)  # exactly 50k examples
    parts = partition_pachinko(dag, 500, 100, 0.1, 10.0, streams.partition_rng(17))
    assert_valid_partition(parts, 500, 100, 50_000)
    # Full exhaustion: the union is the entire pool.
    assert np.concatenate(parts).size == 50_000


def test_pachinko_survivors_always_have_examples():
    dag, _, fine = make_synthetic_dag(4, 3, 10)
    rng = streams.partition_rng(23)
    work = dag.copy()
    # Run the partitioner client by client against a shadow copy.
    for start in range(6):
        parts = partition_pachinko(work, 1, 15, 0.2, 5.0, rng)
        taken = parts[0]
        for idx in taken:
            y = int(fine[idx])
            work.pools[y].remove(int(idx))
            if not work.pools[y]:
                del work.pools[y]
                for c, ys in list(work.children.items()):
                    if y in ys:
                        ys.remove(y)
                        if not ys:
                            del work.children[c]
        for c, ys in work.children.items():
            assert ys, f"coarse {c} lost all children"
            for y in ys:
                assert work.pools[y], f"fine {y} survived with empty pool"


def test_pachinko_single_path_forced():
    dag, _, _ = make_synthetic_dag(1, 1, 12)
    parts = partition_pachinko(dag, 3, 4, 0.5, 0.5, streams.partition_rng(5))
    assert_valid_partition(parts, 3, 4, 12)


def test_pachinko_capacity_error():
    dag, _, _ = make_synthetic_dag(2, 2, 3)
    with pytest.raises(CapacityError):
        partition_pachinko(dag, 5, 3, 0.1, 10.0, streams.partition_rng(0))


def test_pachinko_unique_label_distribution_shape():
    dag, _, fine = make_synthetic_dag(20, 5, 500)
    parts = partition_pachinko(dag, 500, 100, 0.1, 10.0, streams.partition_rng(29))
    uniques = np.array([np.unique(fine[idx]).size for idx in parts])
    assert 15 <= np.median(uniques) <= 35
    assert uniques.max() > 40  # heavy upper tail present
    assert uniques.min() < 15  # a few clients see very few labels


def test_label_dag_rejects_inconsistent_parents():
    with pytest.raises(ContractError):
        LabelDag.from_labels(np.array([0, 1]), np.array([5, 5]))


def test_partitions_deterministic_across_processes():
    dag, _, _ = make_synthetic_dag(4, 3, 20)
    a = partition_pachinko(dag, 6, 10, 0.3, 2.0, streams.partition_rng(31))
    b = partition_pachinko(dag, 6, 10, 0.3, 2.0, streams.partition_rng(31))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


# ---------------------------------------------------------------------------
# manifest round-trip
# ---------------------------------------------------------------------------


def test_manifest_round_trip(tmp_path):
    parts = partition_iid(40, 4, 10, streams.partition_rng(1))
    path = tmp_path / "manifest.json"
    save_manifest(parts, path)
    loaded = load_manifest(path)
    assert len(loaded) == 4
    for x, y in zip(parts, loaded):
        np.testing.assert_array_equal(x, y)


# ---------------------------------------------------------------------------
# heterogeneity ordering across partitioners
# ---------------------------------------------------------------------------


def test_sigma_g_ordering_iid_vs_dirichlet():
    # Classification pools partitioned three ways, then measured through the
    # client-dispersion estimate of a model trained on nothing (probes near 0).
    from fedsim.tasks import estimate_constants, logreg_from_pool

    rng = np.random.default_rng(4)
    classes, per_label, fdim = 6, 200, 12
    centers = rng.standard_normal((classes, fdim)) * 2.0
    labels = np.repeat(np.arange(classes), per_label)
    features = np.abs(centers[labels] + rng.standard_normal((labels.size, fdim)))
    m, per_client = 20, 30

    def sigma_g(parts):
        task = logreg_from_pool(features, labels, parts, batch_size=10)
        probes = [np.zeros(task.dim), 0.01 * np.ones(task.dim),
                  0.05 * np.random.default_rng(1).standard_normal(task.dim)]
        return estimate_constants(task, probes, samples_per_probe=2,
                                  rng=np.random.default_rng(0)).sigma_g_sq

    iid = sigma_g(partition_iid(labels.size, m, per_client,
                                streams.partition_rng(8)))
    lda_tame = sigma_g(partition_lda(labels, m, per_client, 100.0,
                                     streams.partition_rng(8)))
    lda_skewed = sigma_g(partition_lda(labels, m, per_client, 0.1,
                                       streams.partition_rng(8)))
    assert iid <= lda_tame <= lda_skewed
    assert lda_skewed > 5 * iid  # the low-concentration split is far apart
