"""Client learning-rate schedules."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

KINDS = ("constant", "expdecay", "inv_sqrt")


@dataclass(frozen=True)
class Schedule:
    kind: str = "constant"
    base: float = 1.0
    factor: float = 0.1   # expdecay: multiplier applied every ``period`` rounds
    period: int = 500
    scale: float = 1.0    # inv_sqrt: base / sqrt(scale * t + 1)

    def __post_init__(self):
        errs = []
        if self.kind not in KINDS:
            errs.append(f"schedule.kind: unknown kind {self.kind!r}")
        if not 0 < self.factor <= 1:
            errs.append("schedule.factor: must be in (0, 1]")
        if self.period < 1:
            errs.append("schedule.period: must be >= 1")
        if self.scale <= 0:
            errs.append("schedule.scale: must be > 0")
        if errs:
            raise ConfigError(errs)


def schedule_eval(sched: Schedule, t: int) -> float:
    """Learning rate at round ``t`` (t >= 0)."""
    if t < 0:
        raise ConfigError(["schedule round index must be >= 0"])
    if sched.kind == "constant":
        return sched.base
    if sched.kind == "expdecay":
        return sched.base * sched.factor ** (t // sched.period)
    return sched.base / math.sqrt(sched.scale * t + 1.0)


def schedule_from_spec(spec: dict | None, base: float) -> Schedule:
    """Build a schedule from a config sub-dict, rejecting unknown keys."""
    if spec is None:
        return Schedule(kind="constant", base=base)
    allowed = {"kind", "factor", "period", "scale"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError([f"schedule.{k}: unknown key" for k in sorted(unknown)])
    kwargs = {k: spec[k] for k in allowed if k in spec}
    return Schedule(base=base, **kwargs)
