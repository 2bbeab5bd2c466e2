"""Numerical evaluation of the convergence guarantees.

Evaluators take measured constants and hyperparameters and return the
right-hand sides of the adaptive-optimizer guarantees, the local-drift
bound, the simplified asymptotic rate, and the extra variance term incurred
by partial participation.  All suppressed universal constants are set to 1;
empirical comparisons report the measured ratio and use an explicit slack
factor, so the checks stay falsifiable without inventing constants.

Conventions: sigma_sq = sigma_l_sq + 6 K sigma_g_sq, and G is the
per-coordinate gradient bound (the norm variant is reported alongside where
callers track it).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .fedloop import Trace


@dataclass(frozen=True)
class BoundInputs:
    l: float
    g: float
    sigma_l_sq: float
    sigma_g_sq: float
    eta_l: float
    eta: float
    tau: float
    beta2: float
    k: int
    t: int
    m: int
    d: int
    f0_minus_fstar: float

    @property
    def sigma_sq(self) -> float:
        return self.sigma_l_sq + 6.0 * self.k * self.sigma_g_sq

    def as_dict(self) -> dict:
        out = {name: getattr(self, name) for name in self.__dataclass_fields__}
        out["sigma_sq"] = self.sigma_sq
        return out


@dataclass(frozen=True)
class ConditionReport:
    condition_i: bool
    condition_ii: bool
    limit_i: float
    limit_ii: float
    binding_term: str  # which min-term determines the Condition II limit


@dataclass(frozen=True)
class DriftBound:
    value: float
    condition_i_ok: bool


@dataclass(frozen=True)
class AdagradBound:
    psi: float
    psi_var: float
    psi_var_tilde: float
    rhs_i: float
    rhs_i_and_ii: float


@dataclass(frozen=True)
class AdamBound:
    psi: float
    psi_var: float
    rhs: float


@dataclass(frozen=True)
class BoundComparison:
    min_grad_sq: float
    satisfied: bool
    margin: float
    ratio: float  # empirical constant: min_grad_sq / bound


def check_conditions(kind: str, inputs: BoundInputs) -> ConditionReport:
    """Evaluate the two client learning-rate conditions for a flavor."""
    if kind not in ("adagrad", "adam"):
        raise ContractError(f"kind must be 'adagrad' or 'adam', got {kind!r}")
    b = inputs
    limit_i = 1.0 / (8.0 * b.l * b.k)
    if kind == "adagrad":
        term_a = b.t ** (-0.1) * (b.tau ** 3 / (b.l ** 2 * b.g ** 3)) ** 0.2
        term_b = b.t ** (-0.125) * (b.tau ** 2 / (b.l ** 3 * b.g * b.eta)) ** 0.25
        limit_ii = min(term_a, term_b) / (3.0 * b.k)
    else:
        term_a = (b.tau / (b.g * b.l)) ** 0.5
        term_b = (b.tau ** 2 / (b.g * b.l ** 3 * b.eta)) ** 0.25
        limit_ii = min(term_a, term_b) / (6.0 * b.k)
    return ConditionReport(
        condition_i=b.eta_l <= limit_i,
        condition_ii=b.eta_l <= limit_ii,
        limit_i=limit_i,
        limit_ii=limit_ii,
        binding_term="first" if term_a <= term_b else "second",
    )


def drift_bound(inputs: BoundInputs, grad_norm_sq: float) -> DriftBound:
    """Bound on the mean squared local displacement at any step index.

    Uses the constants the unrolled recursion actually yields,
    5 K eta_l^2 (sigma_l^2 + 6 K sigma_g^2) + 30 K^2 eta_l^2 ||grad||^2;
    valid under Condition I, reported as a flag rather than an error.
    """
    b = inputs
    value = 5.0 * b.k * b.eta_l ** 2 * b.sigma_sq \
        + 30.0 * b.k ** 2 * b.eta_l ** 2 * grad_norm_sq
    ok = b.eta_l <= 1.0 / (8.0 * b.l * b.k)
    return DriftBound(value=value, condition_i_ok=ok)


def _psi(b: BoundInputs) -> float:
    return b.f0_minus_fstar / b.eta \
        + 5.0 * b.eta_l ** 3 * b.k ** 2 * b.l ** 2 * b.t / (2.0 * b.tau) * b.sigma_sq


def adagrad_bound(inputs: BoundInputs) -> AdagradBound:
    b = inputs
    psi = _psi(b)
    log_arg = (b.tau ** 2 + b.eta_l ** 2 * b.k ** 2 * b.g ** 2 * b.t) / b.tau ** 2
    psi_var = b.d * (b.eta_l * b.k * b.g ** 2 + b.tau * b.eta * b.l) / b.tau \
        * (1.0 + math.log(log_arg))
    psi_var_tilde = (2.0 * b.eta_l * b.k * b.g ** 2 + b.tau * b.eta * b.l) / b.tau ** 2 \
        * (2.0 * b.eta_l ** 2 * b.k * b.t / b.m * b.sigma_l_sq
           + 10.0 * b.eta_l ** 4 * b.k ** 3 * b.l ** 2 * b.t * b.sigma_sq)
    prefactor = b.g / math.sqrt(b.t) + b.tau / (b.eta_l * b.k * b.t)
    return AdagradBound(psi=psi, psi_var=psi_var, psi_var_tilde=psi_var_tilde,
                        rhs_i=prefactor * (psi + psi_var),
                        rhs_i_and_ii=prefactor * (psi + psi_var_tilde))


def adam_bound(inputs: BoundInputs) -> AdamBound:
    b = inputs
    psi = _psi(b)
    psi_var = (b.g + b.eta * b.l / 2.0) \
        * (4.0 * b.eta_l ** 2 * b.k * b.t / (b.m * b.tau ** 2) * b.sigma_l_sq
           + 20.0 * b.eta_l ** 4 * b.k ** 3 * b.l ** 2 * b.t / b.tau ** 2 * b.sigma_sq)
    prefactor = (math.sqrt(b.beta2) * b.eta_l * b.k * b.g + b.tau) / (b.eta_l * b.k * b.t)
    return AdamBound(psi=psi, psi_var=psi_var, rhs=prefactor * (psi + psi_var))


def corollary_rate(kind: str, inputs: BoundInputs) -> float:
    """Simplified rate under the prescribed hyperparameter substitutions.

    The expression is identical for both adaptive flavors; ``kind`` is
    accepted for symmetry with the full bounds.
    """
    if kind not in ("adagrad", "adam"):
        raise ContractError(f"kind must be 'adagrad' or 'adam', got {kind!r}")
    b = inputs
    sigma_sq = b.sigma_sq
    root_mkt = math.sqrt(b.m * b.k * b.t)
    return (b.f0_minus_fstar / root_mkt
            + 2.0 * b.sigma_l_sq * b.l / (b.g ** 2 * root_mkt)
            + sigma_sq / (b.g * b.k * b.t)
            + sigma_sq * b.l * math.sqrt(b.m) / (b.g ** 2 * math.sqrt(b.k) * b.t ** 1.5))


def corollary_hyperparams(l: float, g: float, k: int, t: int, m: int):
    """The (eta_l, eta, tau) substitutions the simplified rate assumes."""
    return 1.0 / (k * l * math.sqrt(t)), math.sqrt(k * m), g / l


def partial_participation_term(inputs: BoundInputs, s: int) -> float:
    """Extra variance from sampling s of m clients per round."""
    b = inputs
    if not 1 <= s <= b.m:
        raise ContractError(f"need 1 <= s <= m, got s={s}, m={b.m}")
    return 6.0 * b.eta_l ** 2 * b.k ** 2 * b.t * b.sigma_g_sq / b.tau ** 2 \
        * (1.0 - s / b.m)


def compare_trace_to_bound(traces, bound: float, slack: float = 1.0) -> BoundComparison:
    """Seed-averaged minimum squared gradient norm against ``slack * bound``.

    Accepts a single trace or a sequence of traces (one per seed).
    """
    if isinstance(traces, Trace):
        traces = [traces]
    mins = [tr.min_grad_norm_sq() for tr in traces]
    point = float(np.mean(mins))
    limit = slack * bound
    return BoundComparison(min_grad_sq=point, satisfied=point <= limit,
                           margin=limit - point,
                           ratio=point / bound if bound > 0 else math.inf)


def seed_mean_with_stderr(values) -> tuple[float, float]:
    """(mean, standard error) across seeds; stderr 0 for a single value."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise ContractError("no values")
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))
