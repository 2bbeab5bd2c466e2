"""Small nonconvex regression tasks with hand-derived backprop.

Two architectures: a one-hidden-layer sigmoid network trained with squared
loss, and a linear bottleneck autoencoder.  Both are deliberately tiny; they
exist to exercise the nonconvex setting of the convergence analysis, not to
model anything.
"""
from __future__ import annotations

import numpy as np

from .base import ClientData, Task


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


class TwoLayerSigmoidNet(Task):
    """y_hat = W2 sigmoid(W1 u + b1) + b2, loss = mean 0.5 ||y_hat - y||^2."""

    kind = "mlp2"

    def __init__(self, inputs, targets, d_in, hidden, d_out, x0, batch_size, sigma_l=0.0):
        clients = [ClientData.of_size(u.shape[0], batch_size) for u in inputs]
        dim = hidden * d_in + hidden + d_out * hidden + d_out
        super().__init__(dim=dim, num_clients=len(inputs), clients=clients,
                         x0=x0, sigma_l=sigma_l)
        self.inputs = inputs
        self.targets = targets
        self.d_in, self.hidden, self.d_out = d_in, hidden, d_out

    def _unpack(self, x):
        h, p, o = self.hidden, self.d_in, self.d_out
        s0, s1, s2 = h * p, h * p + h, h * p + h + o * h
        return (x[:s0].reshape(h, p), x[s0:s1], x[s1:s2].reshape(o, h), x[s2:])

    def _loss_grad(self, client, idx, x):
        w1, b1, w2, b2 = self._unpack(x)
        u = self.inputs[client][idx]
        y = self.targets[client][idx]
        b = idx.shape[0]
        hid = _sigmoid(u @ w1.T + b1)
        pred = hid @ w2.T + b2
        resid = pred - y
        loss = float(0.5 * np.sum(resid * resid) / b)
        d_pred = resid / b
        g_w2 = d_pred.T @ hid
        g_b2 = d_pred.sum(axis=0)
        d_hid = (d_pred @ w2) * hid * (1.0 - hid)
        g_w1 = d_hid.T @ u
        g_b1 = d_hid.sum(axis=0)
        return loss, np.concatenate([g_w1.reshape(-1), g_b1, g_w2.reshape(-1), g_b2])


class LinearAutoencoder(Task):
    """u_hat = W2 W1 u through a k-dimensional bottleneck, squared loss."""

    kind = "linear_ae"

    def __init__(self, inputs, d_in, bottleneck, x0, batch_size, sigma_l=0.0):
        clients = [ClientData.of_size(u.shape[0], batch_size) for u in inputs]
        super().__init__(dim=2 * bottleneck * d_in, num_clients=len(inputs),
                         clients=clients, x0=x0, sigma_l=sigma_l)
        self.inputs = inputs
        self.d_in, self.bottleneck = d_in, bottleneck

    def _unpack(self, x):
        k, p = self.bottleneck, self.d_in
        return x[: k * p].reshape(k, p), x[k * p:].reshape(p, k)

    def _loss_grad(self, client, idx, x):
        w1, w2 = self._unpack(x)
        u = self.inputs[client][idx]
        b = idx.shape[0]
        hid = u @ w1.T
        resid = hid @ w2.T - u
        loss = float(0.5 * np.sum(resid * resid) / b)
        d = resid / b
        g_w2 = d.T @ hid
        g_w1 = (d @ w2).T @ u
        return loss, np.concatenate([g_w1.reshape(-1), g_w2.reshape(-1)])


def make_mlp2(m, rng, *, d_in=5, hidden=6, d_out=2, n_per_client=24,
              hetero=1.0, batch_size=8, sigma_l=0.0, target_noise=0.05):
    """Clients share a teacher network but see shifted input distributions."""
    t_w1 = rng.standard_normal((hidden, d_in))
    t_b1 = rng.standard_normal(hidden) * 0.3
    t_w2 = rng.standard_normal((d_out, hidden)) / np.sqrt(hidden)
    t_b2 = rng.standard_normal(d_out) * 0.3
    inputs, targets = [], []
    for _ in range(m):
        shift = hetero * rng.standard_normal(d_in) * 0.5
        u = rng.standard_normal((n_per_client, d_in)) + shift
        y = _sigmoid(u @ t_w1.T + t_b1) @ t_w2.T + t_b2
        y += target_noise * rng.standard_normal(y.shape)
        inputs.append(u)
        targets.append(y)
    dim = hidden * d_in + hidden + d_out * hidden + d_out
    x0 = 0.3 * rng.standard_normal(dim)
    return TwoLayerSigmoidNet(inputs, targets, d_in, hidden, d_out, x0, batch_size, sigma_l)


def make_linear_ae(m, rng, *, d_in=8, bottleneck=3, n_per_client=24,
                   hetero=1.0, batch_size=8, sigma_l=0.0, ambient_noise=0.05):
    """Client inputs live near client-specific low-rank subspaces."""
    latent = bottleneck + 1  # not exactly representable through the bottleneck
    base = rng.standard_normal((d_in, latent))
    inputs = []
    for _ in range(m):
        mix = base + hetero * 0.4 * rng.standard_normal((d_in, latent))
        z = rng.standard_normal((n_per_client, latent))
        u = z @ mix.T + ambient_noise * rng.standard_normal((n_per_client, d_in))
        inputs.append(u)
    x0 = 0.3 * rng.standard_normal(2 * bottleneck * d_in)
    return LinearAutoencoder(inputs, d_in, bottleneck, x0, batch_size, sigma_l)
