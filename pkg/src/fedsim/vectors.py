"""Dense float64 vector kernels used by every optimizer.

All model state in this package is a flat 1-D float64 array of fixed
per-experiment length.  The helpers here validate the contracts that numpy
broadcasting would silently paper over (length mismatches, zero divisors,
negative sqrt inputs) and provide the reduction used for client aggregation.

``weighted_sum`` accumulates strictly left to right so that results are
reproducible bit for bit regardless of how callers obtained the summands.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, DomainError, NumericalAbort, ShapeError

Vector = np.ndarray

WEIGHT_SUM_TOL = 1e-12


def as_vector(values) -> Vector:
    """Coerce ``values`` to a finite 1-D float64 array."""
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 1:
        raise ShapeError(f"expected a 1-D vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("vector contains NaN or Inf entries")
    return a


def _check_lengths(a: Vector, b: Vector) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"length mismatch: {a.shape} vs {b.shape}")


def square(a: Vector) -> Vector:
    return a * a


def sqrt(a: Vector) -> Vector:
    if np.any(a < 0):
        raise DomainError("sqrt of a vector with negative entries")
    return np.sqrt(a)


def sign(a: Vector) -> Vector:
    # np.sign maps 0 -> 0, matching the convention used by the Yogi update.
    return np.sign(a)


def add(a: Vector, b: Vector) -> Vector:
    _check_lengths(a, b)
    return a + b


def sub(a: Vector, b: Vector) -> Vector:
    _check_lengths(a, b)
    return a - b


def div(a: Vector, b: Vector) -> Vector:
    _check_lengths(a, b)
    if np.any(b == 0):
        raise DomainError("division by a vector with zero entries")
    return a / b


def scaled_add(alpha: float, a: Vector, beta: float, b: Vector) -> Vector:
    """Return ``alpha * a + beta * b``."""
    _check_lengths(a, b)
    return alpha * a + beta * b


_ELEMENTWISE = {"square": square, "sqrt": sqrt, "sign": sign}


def elementwise(kind: str, a: Vector) -> Vector:
    """Dispatching form of the unary kernels: kind in {square, sqrt, sign}."""
    try:
        op = _ELEMENTWISE[kind]
    except KeyError:
        raise ContractError(f"unknown elementwise kind {kind!r}") from None
    return op(a)


def combine(kind: str, a: Vector, b: Vector, alpha: float = 1.0, beta: float = 1.0) -> Vector:
    """Dispatching form of the binary kernels: kind in {add, sub, div, scaled_add}."""
    if kind == "add":
        return add(a, b)
    if kind == "sub":
        return sub(a, b)
    if kind == "div":
        return div(a, b)
    if kind == "scaled_add":
        return scaled_add(alpha, a, beta, b)
    raise ContractError(f"unknown combine kind {kind!r}")


def weighted_sum(vectors: Sequence[Vector], weights: Iterable[float]) -> Vector:
    """Return sum_i w_i v_i for nonnegative weights summing to 1.

    Accumulation order is the order of ``vectors``; callers that need
    bit-reproducibility must pass summands in a canonical order.
    """
    vectors = list(vectors)
    w = np.asarray(list(weights), dtype=np.float64)
    if len(vectors) == 0:
        raise ContractError("weighted_sum of an empty list")
    if len(vectors) != w.shape[0]:
        raise ContractError(f"{len(vectors)} vectors but {w.shape[0]} weights")
    if np.any(w < 0):
        raise ContractError("weights must be nonnegative")
    if abs(float(w.sum()) - 1.0) > WEIGHT_SUM_TOL:
        raise ContractError(f"weights sum to {w.sum()!r}, expected 1 within {WEIGHT_SUM_TOL}")
    out = w[0] * vectors[0]
    for wi, vi in zip(w[1:], vectors[1:]):
        _check_lengths(out, vi)
        out = out + wi * vi
    return out


def ensure_finite(a: Vector, context: str) -> None:
    """Abort with a diagnostic if ``a`` contains NaN or Inf."""
    if np.all(np.isfinite(a)):
        return
    bad = np.flatnonzero(~np.isfinite(a))
    raise NumericalAbort(
        f"non-finite value in {context}: coordinate {int(bad[0])} of {a.size} "
        f"({a[bad[0]]!r}); {bad.size} coordinate(s) affected"
    )
