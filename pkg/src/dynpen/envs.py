"""Problem definitions: the double-integrator vehicle and the penalized 1-D target."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .constraints import ConstraintSet, vehicle_constraints
from .penalty import Linear, PenaltyKind, Uniform, penalty_value

ACTION_GRID = np.linspace(-0.25, 0.25, 41)
INTEGRATORS = ("euler", "zoh")


class StepResult(NamedTuple):
    next_state: np.ndarray
    cost: float
    ks: float


def reward(cost: float, ks: float, kind: PenaltyKind) -> float:
    """Negated penalized stage cost; the agent maximises this."""
    return -(float(cost) + penalty_value(kind, ks))


@dataclass(frozen=True)
class VehicleEnv:
    """Discrete-action double integrator: position ``x1``, velocity ``x2``, acceleration ``u``.

    States are never clamped; leaving the box only shows up through the
    aggregated constraint value of the state the action leads to.
    """

    position: tuple[float, float] = (-1.0, 1.0)
    velocity: tuple[float, float] = (-0.25, 1.0)
    rho: float = 50.0
    horizon: int = 20
    dt: float = 1.0
    integrator: str = "euler"
    actions: np.ndarray = field(default_factory=lambda: ACTION_GRID.copy(), compare=False)
    constraints: ConstraintSet = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be at least one step")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        object.__setattr__(self, "actions", np.asarray(self.actions, dtype=float))
        object.__setattr__(self, "constraints", vehicle_constraints(self.position, self.velocity, self.rho))

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def dynamics(self, state, u: float) -> np.ndarray:
        x1, x2 = float(state[0]), float(state[1])
        if self.integrator == "euler":
            return np.array([x1 + self.dt * x2, x2 + self.dt * u])
        return np.array([x1 + self.dt * x2 + 0.5 * self.dt ** 2 * u, x2 + self.dt * u])

    def stage_cost(self, state, u: float) -> float:
        return float(state[0]) ** 2 + u * u

    def step(self, state, action: int) -> StepResult:
        """Advance one control interval. Cost is charged on the current state, KS on the next."""
        if not 0 <= action < self.n_actions:
            raise IndexError(f"action index {action} outside [0, {self.n_actions})")
        u = float(self.actions[action])
        nxt = self.dynamics(state, u)
        return StepResult(nxt, self.stage_cost(state, u), self.constraints.aggregate(nxt))

    def violated(self, state) -> bool:
        return self.constraints.violated(state)

    def sample_initial(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform draw from the feasible position/velocity rectangle."""
        return np.array([rng.uniform(*self.position), rng.uniform(*self.velocity)])


@dataclass
class RegressionTarget:
    """``V(x) = 1 + cos(x/2) + 0.05 (x-1)(x+2) + p(x)`` with ``p`` penalizing ``x`` outside the bounds.

    Bound violations are measured directly as ``max(lower - x, x - upper)``;
    no KS smoothing is applied here.
    """

    kind: PenaltyKind
    bounds: tuple[float, float] = (-5.0, 5.0)
    sample_range: tuple[float, float] = (-10.0, 10.0)
    samples_per_episode: int = 20

    def __post_init__(self) -> None:
        lo, hi = self.bounds
        if not self.sample_range[0] <= lo <= hi <= self.sample_range[1]:
            raise ValueError("feasible bounds must lie inside the sampling range")

    @staticmethod
    def objective(x):
        x = np.asarray(x, dtype=float)
        return 1.0 + np.cos(0.5 * x) + 0.05 * (x - 1.0) * (x + 2.0)

    def violation(self, x):
        x = np.asarray(x, dtype=float)
        return np.maximum(self.bounds[0] - x, x - self.bounds[1])

    def penalty(self, x):
        v = self.violation(x)
        hit = v > 0.0
        kind = self.kind
        if isinstance(kind, Uniform):
            return np.where(hit, kind.level, 0.0)
        scale = kind.factor if isinstance(kind, Linear) else kind.mu
        return np.where(hit, scale * v, 0.0)

    def value(self, x):
        """Penalized target at ``x`` under the penalty in effect right now."""
        out = self.objective(x) + self.penalty(x)
        return float(out) if np.ndim(out) == 0 else out

    def sample_episode(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        xs = rng.uniform(*self.sample_range, size=self.samples_per_episode)
        return xs, self.value(xs)


def target_value_1d(x, kind: PenaltyKind) -> float:
    return RegressionTarget(kind).value(x)

