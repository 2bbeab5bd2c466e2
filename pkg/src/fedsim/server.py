"""Server-side optimizer state and update rules.

The server treats the negated average client delta as a pseudo-gradient.
Five flavors: plain SGD, SGD with heavy-ball momentum, and three adaptive
rules that differ only in how the second-moment accumulator evolves:

    adagrad:  v <- v + delta^2
    yogi:     v <- v - (1 - beta2) * delta^2 * sign(v - delta^2)
    adam:     v <- beta2 * v + (1 - beta2) * delta^2

followed by x <- x + eta * delta / (sqrt(v) + tau).  The first-moment line
delta_t = beta1 * delta_{t-1} + (1 - beta1) * avg_delta applies before the
accumulator update, and the accumulator consumes the post-momentum delta.

For yogi and adam the accumulator is floored at tau^2 after every update
(the adagrad accumulator never drops below its initialization), keeping the
denominator lower bound the analysis relies on; floor events are counted so
callers can observe how often the clamp fires.  There is no bias correction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .vectors import Vector, div, ensure_finite, sign, sqrt, square

FLAVORS = ("sgd", "sgdm", "adagrad", "adam", "yogi")
ADAPTIVE_FLAVORS = ("adagrad", "adam", "yogi")
SGDM_MOMENTUM = 0.9


@dataclass
class ServerState:
    x: Vector
    v: Vector
    momentum: Vector            # previous post-momentum delta; velocity for sgdm
    t: int
    flavor: str
    eta: float
    tau: float
    beta1: float
    beta2: float
    check_finite: bool = True
    floor_events: int = field(default=0)  # total floored coordinates so far


def default_beta1(flavor: str) -> float:
    return 0.9 if flavor in ("adam", "yogi") else 0.0


def init_server_state(x0: Vector, flavor: str, eta: float, tau: float = 1e-3,
                      beta1: float | None = None, beta2: float = 0.99,
                      v_init: Vector | None = None,
                      check_finite: bool = True) -> ServerState:
    if flavor not in FLAVORS:
        raise ContractError(f"unknown server flavor {flavor!r}")
    x0 = np.asarray(x0, dtype=np.float64)
    d = x0.shape[0]
    if beta1 is None:
        beta1 = default_beta1(flavor)
    if flavor in ADAPTIVE_FLAVORS:
        if tau <= 0:
            raise ContractError("adaptive flavors require tau > 0")
        if v_init is None:
            v = np.full(d, tau * tau)
        else:
            v = np.asarray(v_init, dtype=np.float64).copy()
            if v.shape != x0.shape:
                raise ContractError("v_init length mismatch")
            # tolerate rounding of tau^2 at the v = tau^2 boundary
            if np.any(v < tau * tau * (1.0 - 1e-12)):
                raise ContractError("accumulator must start at >= tau^2")
    else:
        v = np.zeros(d)
    return ServerState(x=x0.copy(), v=v, momentum=np.zeros(d), t=0, flavor=flavor,
                       eta=eta, tau=tau, beta1=beta1, beta2=beta2,
                       check_finite=check_finite)


def apply_momentum(state: ServerState, avg_delta: Vector) -> Vector:
    """delta_t = beta1 * delta_{t-1} + (1 - beta1) * avg_delta; stores it back."""
    if avg_delta.shape != state.momentum.shape:
        raise ContractError("avg_delta length mismatch")
    delta_t = state.beta1 * state.momentum + (1.0 - state.beta1) * avg_delta
    state.momentum = delta_t
    return delta_t


def server_step(state: ServerState, delta_t: Vector) -> ServerState:
    """Apply one flavor-dispatched update for pseudo-gradient -delta_t."""
    if delta_t.shape != state.x.shape:
        raise ContractError("delta_t length mismatch")
    # overflow surfaces through the explicit finiteness check, not a warning
    with np.errstate(over="ignore", invalid="ignore"):
        _apply_update(state, delta_t)
    state.t += 1
    if state.check_finite:
        ensure_finite(state.x, f"server model after round {state.t - 1}")
        ensure_finite(state.v, f"server accumulator after round {state.t - 1}")
    return state


def _apply_update(state: ServerState, delta_t: Vector) -> None:
    if state.flavor == "sgd":
        state.x = state.x + state.eta * delta_t
    elif state.flavor == "sgdm":
        state.momentum = SGDM_MOMENTUM * state.momentum + delta_t
        state.x = state.x + state.eta * state.momentum
    else:
        sq = square(delta_t)
        if state.flavor == "adagrad":
            state.v = state.v + sq
        elif state.flavor == "yogi":
            state.v = state.v - (1.0 - state.beta2) * sq * sign(state.v - sq)
        else:  # adam
            state.v = state.beta2 * state.v + (1.0 - state.beta2) * sq
        if state.flavor in ("yogi", "adam"):
            floor = state.tau * state.tau
            below = state.v < floor
            hits = int(np.count_nonzero(below))
            if hits:
                state.floor_events += hits
                state.v = np.maximum(state.v, floor)
        state.x = state.x + div(state.eta * delta_t, sqrt(state.v) + state.tau)


# ---------------------------------------------------------------------------
# Snapshots (checkpoint/resume)
# ---------------------------------------------------------------------------


def state_snapshot(state: ServerState) -> dict:
    """JSON-serializable snapshot; floats survive round-trips exactly."""
    return {
        "x": state.x.tolist(),
        "v": state.v.tolist(),
        "momentum": state.momentum.tolist(),
        "t": state.t,
        "flavor": state.flavor,
        "eta": state.eta,
        "tau": state.tau,
        "beta1": state.beta1,
        "beta2": state.beta2,
        "check_finite": state.check_finite,
        "floor_events": state.floor_events,
    }


def state_from_snapshot(snap: dict) -> ServerState:
    return ServerState(
        x=np.asarray(snap["x"], dtype=np.float64),
        v=np.asarray(snap["v"], dtype=np.float64),
        momentum=np.asarray(snap["momentum"], dtype=np.float64),
        t=int(snap["t"]),
        flavor=snap["flavor"],
        eta=float(snap["eta"]),
        tau=float(snap["tau"]),
        beta1=float(snap["beta1"]),
        beta2=float(snap["beta2"]),
        check_finite=bool(snap["check_finite"]),
        floor_events=int(snap["floor_events"]),
    )


def save_state(state: ServerState, path) -> None:
    with open(path, "w") as fh:
        json.dump(state_snapshot(state), fh)


def load_state(path) -> ServerState:
    with open(path) as fh:
        return state_from_snapshot(json.load(fh))
