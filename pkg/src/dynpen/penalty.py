"""Penalty terms for soft constraints and the dynamic penalty-factor schedule."""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Union


class ScheduleEvent(str, enum.Enum):
    UNCHANGED = "unchanged"
    UPDATED = "updated"
    SATURATED = "saturated"


@dataclass
class PenaltySchedule:
    """Geometric growth of the penalty factor, driven by the training loss.

    Starts at ``mu_min``. Whenever the (optionally smoothed) loss drops strictly
    below ``(100 - alpha)`` percent of the largest loss seen since the last
    change, ``mu`` is multiplied by ``growth``. The first value reaching
    ``mu_max`` is clamped to it and the schedule stops moving.

    ``max_loss_seen`` restarts from the triggering loss after every change, so
    each growth period has to build its own peak.
    """

    mu_min: float = 0.05
    mu_max: float = 20.0
    growth: float = 2.0
    alpha: float = 60.0
    window: int = 1
    mu: Optional[float] = None
    max_loss_seen: float = 0.0
    saturated: bool = False
    _recent: deque = field(default_factory=deque, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 0 < self.mu_min <= self.mu_max:
            raise ValueError(f"need 0 < mu_min <= mu_max, got {self.mu_min}, {self.mu_max}")
        if not self.growth > 1:
            raise ValueError(f"growth factor must exceed 1, got {self.growth}")
        if not 0 < self.alpha < 100:
            raise ValueError(f"alpha must lie in (0, 100), got {self.alpha}")
        if self.window < 1:
            raise ValueError(f"smoothing window must be >= 1, got {self.window}")
        if self.mu is None:
            self.mu = self.mu_min
        if not self.mu_min <= self.mu <= self.mu_max:
            raise ValueError(f"mu={self.mu} outside [{self.mu_min}, {self.mu_max}]")
        if self.mu >= self.mu_max:
            self.mu = self.mu_max
            self.saturated = True
        self._recent = deque(maxlen=self.window)

    @property
    def trigger_fraction(self) -> float:
        return (100.0 - self.alpha) / 100.0

    def observe(self, loss: float) -> ScheduleEvent:
        """Feed the loss of one parameter update; returns what happened to ``mu``."""
        loss = float(loss)
        if not math.isfinite(loss) or loss < 0:
            raise ValueError(f"loss must be finite and non-negative, got {loss}")
        self._recent.append(loss)
        smoothed = loss if self.window == 1 else sum(self._recent) / len(self._recent)
        self.max_loss_seen = max(self.max_loss_seen, smoothed)
        if self.saturated or not smoothed < self.trigger_fraction * self.max_loss_seen:
            return ScheduleEvent.UNCHANGED
        self.max_loss_seen = smoothed
        self.mu = self.growth * self.mu
        if self.mu >= self.mu_max:
            self.mu = self.mu_max
            self.saturated = True
            return ScheduleEvent.SATURATED
        return ScheduleEvent.UPDATED

    def reset(self) -> None:
        self.mu = self.mu_min
        self.max_loss_seen = 0.0
        self.saturated = self.mu >= self.mu_max
        self._recent.clear()


@dataclass(frozen=True)
class Uniform:
    """Constant penalty ``level`` for any violation."""

    level: float

    def __post_init__(self) -> None:
        if self.level < 0:
            raise ValueError("uniform penalty level must be non-negative")

    name = "uniform"


@dataclass(frozen=True)
class Linear:
    """Penalty ``factor * violation``."""

    factor: float

    def __post_init__(self) -> None:
        if self.factor < 0:
            raise ValueError("linear penalty factor must be non-negative")

    name = "linear"


@dataclass
class Dynamic:
    """Penalty ``mu * violation`` with ``mu`` read live from a schedule."""

    schedule: PenaltySchedule = field(default_factory=PenaltySchedule)

    name = "dynamic"

    @property
    def mu(self) -> float:
        return self.schedule.mu


PenaltyKind = Union[Uniform, Linear, Dynamic]


def penalty_value(kind: PenaltyKind, ks: float) -> float:
    """Penalty for an aggregated constraint value; zero whenever ``ks <= 0``."""
    ks = float(ks)
    if not math.isfinite(ks):
        raise ValueError(f"constraint value must be finite, got {ks}")
    if ks <= 0.0:
        return 0.0
    if isinstance(kind, Uniform):
        return kind.level
    if isinstance(kind, Linear):
        return kind.factor * ks
    if isinstance(kind, Dynamic):
        return kind.schedule.mu * ks
    raise TypeError(f"unknown penalty kind {kind!r}")


def current_factor(kind: PenaltyKind) -> float:
    """The scalar that parameterises ``kind``: level, factor or live ``mu``."""
    if isinstance(kind, Uniform):
        return kind.level
    if isinstance(kind, Linear):
        return kind.factor
    return kind.mu


def make_penalty(
    name: str,
    *,
    level: float = 20.0,
    factor: float = 20.0,
    mu_min: float = 0.05,
    mu_max: float = 20.0,
    growth: float = 2.0,
    alpha: float = 60.0,
    window: int = 1,
) -> PenaltyKind:
    """Build a fresh penalty kind by name (``uniform``, ``linear`` or ``dynamic``)."""
    name = name.lower()
    if name == "uniform":
        return Uniform(level)
    if name == "linear":
        return Linear(factor)
    if name == "dynamic":
        return Dynamic(PenaltySchedule(mu_min, mu_max, growth, alpha, window))
    raise ValueError(f"unknown penalty kind {name!r}")
