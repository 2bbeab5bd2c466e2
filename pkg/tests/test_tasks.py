"""Task-level oracles: hand values, finite differences, unbiasedness."""
import numpy as np
import pytest

from conftest import TASK_KINDS, finite_difference_grad, small_task
from fedsim import streams
from fedsim.errors import ContractError
from fedsim.tasks import FULL, estimate_constants, load_csv_pool, logreg_from_pool
from fedsim.tasks.base import make_batches
from fedsim.tasks.quadratic import make_quadratic_ensemble


def identity_quadratic(m=3, d=2, hetero=0.0):
    """Ensemble with A = I (cond = 1) for closed-form checks."""
    return make_quadratic_ensemble(m, d, hetero, 1.0, streams.task_rng(5),
                                   n_per_client=6, batch_size=3)


# ---------------------------------------------------------------------------
# losses and gradients
# ---------------------------------------------------------------------------


def test_quadratic_loss_hand_value():
    # A = I, b = 0: loss([3,4]) = 0.5 * 25
    task = identity_quadratic()
    assert task.loss(0, np.array([3.0, 4.0]), FULL) == pytest.approx(12.5, abs=1e-12)


def test_loss_at_minimizer_is_minimum():
    task = identity_quadratic()
    assert task.loss(0, task.centers[0].copy(), FULL) == pytest.approx(0.0, abs=1e-15)


def test_logreg_all_zero_weights_gives_log_classes():
    task = small_task("sparse_logreg", classes=4)
    x = np.zeros(task.dim)
    assert task.loss(0, x, FULL) == pytest.approx(np.log(4), rel=1e-12)


def test_quadratic_grad_hand_value():
    task = identity_quadratic()
    np.testing.assert_allclose(task.grad(0, np.array([3.0, 4.0])), [3.0, 4.0],
                               atol=1e-12)


def test_grad_zero_at_minimizer():
    task = small_task("quadratic")
    g = task.grad(1, task.centers[1].copy(), FULL)
    np.testing.assert_allclose(g, 0.0, atol=1e-12)


@pytest.mark.parametrize("kind", TASK_KINDS)
def test_gradients_match_central_finite_differences(kind):
    task = small_task(kind)
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = rng.standard_normal(task.dim) * 0.5
        client = int(rng.integers(task.num_clients))
        analytic = task.grad(client, x, FULL)
        fd = finite_difference_grad(task, client, x)
        denom = max(np.linalg.norm(analytic), 1e-6)
        assert np.linalg.norm(fd - analytic) / denom < 1e-5


def test_unknown_client_raises():
    task = identity_quadratic()
    with pytest.raises(KeyError):
        task.loss(99, np.zeros(2))
    with pytest.raises(IndexError):
        task.loss(0, np.zeros(2), batch=42)


def test_stochastic_gradient_is_unbiased():
    task = small_task("quadratic", sigma_l=0.7)
    x = np.full(task.dim, 0.3)
    exact = task.grad(0, x, batch=0)  # noise off without an rng
    rng = np.random.default_rng(0)
    draws = np.stack([task.grad(0, x, batch=0, rng=rng) for _ in range(10_000)])
    mean = draws.mean(axis=0)
    stderr = draws.std(axis=0, ddof=1) / np.sqrt(draws.shape[0])
    assert np.all(np.abs(mean - exact) <= 3 * stderr + 1e-12)


def test_global_loss_is_mean_of_client_losses(any_task):
    x = np.linspace(-0.2, 0.4, any_task.dim)
    manual = sum(any_task.loss(i, x, FULL) for i in range(any_task.num_clients))
    manual /= any_task.num_clients
    assert any_task.global_loss(x) == pytest.approx(manual, rel=1e-12, abs=1e-12)


def test_batches_partition_examples():
    batches = make_batches(10, 4)
    assert [len(b) for b in batches] == [4, 4, 2]  # remainder batch kept
    np.testing.assert_array_equal(np.concatenate(batches), np.arange(10))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def test_quadratic_identical_clients_at_zero_hetero():
    task = small_task("quadratic", hetero=0.0)
    assert task.dispersion_sq == 0.0
    x = np.full(task.dim, 0.7)
    g0 = task.grad(0, x)
    for i in range(1, task.num_clients):
        np.testing.assert_array_equal(task.grad(i, x), g0)


def test_single_client_global_equals_local():
    task = small_task("quadratic", m=1)
    x = np.full(task.dim, -0.4)
    assert task.global_loss(x) == pytest.approx(task.loss(0, x, FULL), rel=1e-12)


def test_identity_matrix_smoothness_is_one():
    task = identity_quadratic()
    assert task.smoothness_constant == pytest.approx(1.0, abs=1e-12)


def test_logreg_uniform_features_at_zero_zipf():
    task = small_task("sparse_logreg", zipf_exponent=0.0, examples_per_client=200,
                      m=8, d_vocab=12)
    counts = sum(f.sum(axis=0) for f in task.features)
    freq = counts / counts.sum()
    # No Zipf tilt: within-class boosts still average out across classes.
    assert freq.max() / freq.min() < 2.0


def test_logreg_absent_features_have_zero_gradient():
    task = small_task("sparse_logreg")
    x = np.random.default_rng(3).standard_normal(task.dim) * 0.1
    g = task.grad(0, x, batch=0).reshape(task.classes, task.vocab)
    batch_idx = task.client_data(0).batches[0]
    present = task.features[0][batch_idx].sum(axis=0) > 0
    assert np.all(g[:, ~present] == 0.0)
    assert np.any(g[:, present] != 0.0)


# ---------------------------------------------------------------------------
# constants estimation
# ---------------------------------------------------------------------------


def test_estimate_constants_requires_two_probes():
    task = identity_quadratic()
    with pytest.raises(ContractError):
        estimate_constants(task, [np.zeros(2)])


def test_sigma_g_zero_for_identical_clients():
    task = small_task("quadratic", hetero=0.0)
    probes = [np.zeros(task.dim), np.ones(task.dim)]
    est = estimate_constants(task, probes, samples_per_probe=4)
    assert est.sigma_g_sq == pytest.approx(0.0, abs=1e-24)


def test_smoothness_estimate_uses_analytic_eigenvalue():
    task = identity_quadratic()
    probes = [np.zeros(2), np.array([5.0, -3.0])]
    est = estimate_constants(task, probes)
    assert est.l == pytest.approx(1.0, abs=1e-12)


def test_sigma_l_zero_for_deterministic_tasks():
    task = small_task("quadratic", sigma_l=0.0, batch_size=None)
    probes = [np.zeros(task.dim), np.ones(task.dim)]
    est = estimate_constants(task, probes, samples_per_probe=6)
    # identical draws; only mean-subtraction rounding fuzz remains
    assert est.sigma_l_sq < 1e-24


def test_sigma_g_monotone_in_hetero():
    lo = small_task("quadratic", hetero=0.0)
    hi = small_task("quadratic", hetero=1.0)
    probes = [np.zeros(lo.dim), 0.5 * np.ones(lo.dim)]
    est_lo = estimate_constants(lo, probes)
    est_hi = estimate_constants(hi, probes)
    assert est_hi.sigma_g_sq > est_lo.sigma_g_sq


def test_injected_noise_matches_declared_variance():
    # sigma_l is a controlled input: the empirical estimate should recover it.
    task = small_task("quadratic", sigma_l=0.5, batch_size=None)
    probes = [np.zeros(task.dim), np.ones(task.dim)]
    est = estimate_constants(task, probes, samples_per_probe=4000,
                             rng=np.random.default_rng(2))
    assert est.sigma_l_sq == pytest.approx(0.25, rel=0.15)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


def test_csv_pool_round_trip(tmp_path):
    path = tmp_path / "pool.csv"
    path.write_text("label,f0,f1,f2\n0,1.0,0.0,2.0\n1,0.5,1.5,0.0\n0,0.0,1.0,1.0\n")
    features, labels = load_csv_pool(path)
    assert features.shape == (3, 3)
    np.testing.assert_array_equal(labels, [0, 1, 0])
    task = logreg_from_pool(features, labels, [np.array([0, 1]), np.array([2])],
                            batch_size=2)
    assert task.num_clients == 2
    assert task.loss(0, np.zeros(task.dim), FULL) == pytest.approx(np.log(2), rel=1e-12)


def test_csv_pool_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("label,x0\n0,1.0\n")
    with pytest.raises(ContractError):
        load_csv_pool(path)
