"""Inequality-constraint residuals and Kreisselmeier-Steinhauser aggregation.

A residual ``g(state, action)`` is feasible when ``g <= 0``. A
:class:`ConstraintSet` holds an ordered list of residual evaluators together
with the aggregation sharpness ``rho`` and collapses them into one smooth
scalar that upper-bounds the largest residual by at most ``ln(n) / rho``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

Residual = Callable[[np.ndarray, Any], float]


class InputDomainError(ValueError):
    """Raised when a state, action or residual is not finite."""


def _check_finite(name: str, value: Any) -> None:
    if value is None:
        return
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputDomainError(f"{name} must be finite, got {value!r}")


def ks_aggregate(residuals: Sequence[float] | np.ndarray, rho: float) -> float:
    """Aggregate constraint residuals with the KS function.

    Computed as ``g_max + ln(sum(exp(rho * (g_i - g_max)))) / rho`` so every
    exponent is non-positive. The shifted terms are summed in sorted order,
    which makes the result bit-identical under any permutation of the input.

    Parameters
    ----------
    residuals : sequence of float
        Constraint values, negative means satisfied.
    rho : float
        Aggregation sharpness, strictly positive.

    Returns
    -------
    float
        The aggregated constraint value.
    """
    g = np.asarray(residuals, dtype=float).ravel()
    if g.size == 0:
        raise ValueError("ks_aggregate needs at least one residual")
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    _check_finite("residuals", g)
    g_max = g.max()
    terms = np.sort(np.exp(rho * (g - g_max)))
    return float(g_max + math.log(terms.sum()) / rho)


@dataclass(frozen=True)
class ConstraintSet:
    """Ordered residual evaluators ``g_i(state, action)`` and KS sharpness."""

    residuals: tuple[Residual, ...]
    rho: float = 50.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "residuals", tuple(self.residuals))
        if len(self.residuals) < 1:
            raise ValueError("a ConstraintSet needs at least one residual")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    def __len__(self) -> int:
        return len(self.residuals)

    def evaluate(self, state: Any, action: Any = None) -> np.ndarray:
        return evaluate_residuals(self, state, action)

    def aggregate(self, state: Any, action: Any = None) -> float:
        return ks_aggregate(self.evaluate(state, action), self.rho)

    def violated(self, state: Any, action: Any = None) -> bool:
        """True when any single residual is strictly positive."""
        return bool(np.any(self.evaluate(state, action) > 0.0))


def evaluate_residuals(cs: ConstraintSet, state: Any, action: Any = None) -> np.ndarray:
    """Evaluate every residual of ``cs`` in order."""
    _check_finite("state", state)
    _check_finite("action", action)
    x = np.asarray(state, dtype=float)
    out = np.array([float(g(x, action)) for g in cs.residuals])
    _check_finite("residual values", out)
    return out


def box_constraints(lower: Sequence[float], upper: Sequence[float], rho: float = 50.0) -> ConstraintSet:
    """Decompose ``lower <= state <= upper`` into ``2 * dim`` residuals.

    Residuals are ordered per coordinate as ``lower_j - x_j`` then
    ``x_j - upper_j``.
    """
    if len(lower) != len(upper):
        raise ValueError("lower and upper bounds differ in length")
    residuals: list[Residual] = []
    for j, (lo, hi) in enumerate(zip(lower, upper)):
        if lo > hi:
            raise ValueError(f"empty interval for coordinate {j}: [{lo}, {hi}]")
        residuals.append(lambda x, u, j=j, lo=float(lo): lo - x[j])
        residuals.append(lambda x, u, j=j, hi=float(hi): x[j] - hi)
    return ConstraintSet(tuple(residuals), rho)


def vehicle_constraints(
    position: tuple[float, float] = (-1.0, 1.0),
    velocity: tuple[float, float] = (-0.25, 1.0),
    rho: float = 50.0,
) -> ConstraintSet:
    """Position and velocity bounds of the double-integrator vehicle.

    Gives the four residuals ``-1 - x1``, ``x1 - 1``, ``-0.25 - x2`` and
    ``x2 - 1`` for the default bounds. The action does not enter.
    """
    return box_constraints((position[0], velocity[0]), (position[1], velocity[1]), rho)
