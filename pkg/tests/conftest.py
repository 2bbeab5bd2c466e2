import numpy as np
import pytest

from fedsim import streams
from fedsim.tasks import (FULL, make_linear_ae, make_mlp2,
                          make_quadratic_ensemble, make_sparse_logreg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def small_task(kind, **kw):
    """Deterministically seeded small instance of each task kind."""
    gen = streams.task_rng(kw.pop("seed", 99))
    if kind == "quadratic":
        args = dict(m=4, d=6, hetero=1.0, cond=4.0, n_per_client=8, batch_size=4)
        args.update(kw)
        return make_quadratic_ensemble(args.pop("m"), args.pop("d"),
                                       args.pop("hetero"), args.pop("cond"),
                                       gen, **args)
    if kind == "sparse_logreg":
        args = dict(m=5, d_vocab=30, classes=3, zipf_exponent=1.0,
                    examples_per_client=12, batch_size=4)
        args.update(kw)
        return make_sparse_logreg(args.pop("m"), args.pop("d_vocab"),
                                  args.pop("classes"), args.pop("zipf_exponent"),
                                  args.pop("examples_per_client"), gen, **args)
    if kind == "mlp2":
        args = dict(m=3, n_per_client=10, batch_size=5)
        args.update(kw)
        return make_mlp2(args.pop("m"), gen, **args)
    if kind == "linear_ae":
        args = dict(m=3, n_per_client=10, batch_size=5)
        args.update(kw)
        return make_linear_ae(args.pop("m"), gen, **args)
    raise ValueError(kind)


TASK_KINDS = ("quadratic", "sparse_logreg", "mlp2", "linear_ae")


@pytest.fixture(params=TASK_KINDS)
def any_task(request):
    return small_task(request.param)


# ---------------------------------------------------------------------------
# Independent oracles shared by the unit and acceptance suites.
# ---------------------------------------------------------------------------


def finite_difference_grad(task, client, x, h=1e-6):
    """Central differences on the full-data client loss."""
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (task.loss(client, x + e, FULL) - task.loss(client, x - e, FULL)) / (2 * h)
    return g


def plain_averaging_oracle(task, *, rounds, s, epochs, eta_l, seed):
    """Local SGD plus uniform model averaging, written directly on the task.

    Re-derives cohorts and batch orders from the stream-keying convention and
    advances the model by x + mean(client model - x), the displayed identity
    for averaging local models.  Independent of client/server/fedloop.
    """
    x = task.x0.copy()
    trajectory = []
    for t in range(rounds):
        rng = streams.sampler_rng(seed, t)
        ids = sorted(int(i) for i in rng.choice(task.num_clients, size=s,
                                                replace=False))
        acc = None
        for i in ids:
            crng = streams.client_rng(seed, t, i)
            xi = x.copy()
            data = task.client_data(i)
            for _ in range(epochs):
                for b in crng.permutation(data.num_batches):
                    xi -= eta_l * task.grad(i, xi, int(b), rng=crng)
            share = (1.0 / s) * (xi - x)
            acc = share if acc is None else acc + share
        x = x + acc
        trajectory.append(x.copy())
    return trajectory


def centralized_adaptive_oracle(flavor, task, *, steps, eta, eta_l, tau, beta2):
    """Reference Adagrad / Adam-without-bias-correction / Yogi on scaled
    full-batch gradients of client 0."""
    x = task.x0.copy()
    v = np.full(task.dim, tau * tau)
    out = []
    for _ in range(steps):
        g = eta_l * task.grad(0, x)
        sq = g * g
        if flavor == "adagrad":
            v = v + sq
        elif flavor == "yogi":
            v = np.maximum(v - (1 - beta2) * sq * np.sign(v - sq), tau * tau)
        else:
            v = np.maximum(beta2 * v + (1 - beta2) * sq, tau * tau)
        x = x - eta * g / (np.sqrt(v) + tau)
        out.append(x.copy())
    return out
