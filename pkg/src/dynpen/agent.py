"""Deep Q-learning on top of the NumPy network: epsilon-greedy acting,
TD targets from a periodically synced frozen copy, minibatch updates, and
exploration-free policy evaluation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .envs import VehicleEnv
from .mlp import Network, TrainingDiverged, make_optimizer, mlp_layers
from .penalty import Dynamic, PenaltyKind
from .replay import Batch, ReplayBuffer


@dataclass
class AgentConfig:
    gamma: float = 0.99
    eps_start: float = 1.0
    eps_end: float = 0.05
    # fraction of training episodes over which epsilon decays linearly
    eps_decay_fraction: float = 0.5
    batch_size: int = 64
    sync_period: int = 200
    lr: float = 1e-3
    optimizer: str = "adam"
    hidden: tuple[int, ...] = (64, 64, 64)
    updates_per_step: int = 1

    def __post_init__(self) -> None:
        self.hidden = tuple(int(h) for h in self.hidden)
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        for name in ("eps_start", "eps_end", "eps_decay_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.batch_size < 1 or self.sync_period < 1:
            raise ValueError("batch_size and sync_period must be positive")

    def epsilon(self, episode: int, total_episodes: int) -> float:
        """Exploration rate for a 0-based training episode."""
        horizon = self.eps_decay_fraction * total_episodes
        if horizon <= 0 or episode >= horizon:
            return self.eps_end
        return self.eps_start + (self.eps_end - self.eps_start) * episode / horizon


class DQNAgent:
    def __init__(
        self,
        state_dim: int,
        n_actions: int,
        config: Optional[AgentConfig] = None,
        rng: Optional[np.random.Generator] = None,
        penalty: Optional[PenaltyKind] = None,
    ):
        self.config = config or AgentConfig()
        rng = rng if rng is not None else np.random.default_rng()
        self.n_actions = n_actions
        self.online = Network.init(mlp_layers(state_dim, self.config.hidden, n_actions), rng)
        self.target = self.online.copy()
        self.optimizer = make_optimizer(self.config.optimizer, self.config.lr)
        self.penalty = penalty
        self.updates = 0

    def q_values(self, state) -> np.ndarray:
        return self.online.forward(state)

    def greedy_action(self, state) -> int:
        # np.argmax returns the lowest index among ties
        return int(np.argmax(self.online.forward(state)))

    def select_action(self, state, epsilon: float, rng: np.random.Generator) -> int:
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
        if epsilon > 0.0 and rng.random() < epsilon:
            return int(rng.integers(self.n_actions))
        return self.greedy_action(state)

    def td_targets(self, batch: Batch) -> np.ndarray:
        if len(batch) == 0:
            raise ValueError("empty batch")
        boot = self.target.forward(batch.next_states).max(axis=1)
        return batch.rewards + self.config.gamma * np.where(batch.terminals, 0.0, boot)

    def sync_target(self) -> None:
        self.target.load_params(self.online)

    def train_step(self, buffer: ReplayBuffer, rng: np.random.Generator) -> float:
        """One minibatch Q-update; returns its mean squared TD error."""
        batch = buffer.sample(self.config.batch_size, rng)
        targets = self.td_targets(batch)
        grad, loss = self.online.backward_selected(batch.states, batch.actions, targets)
        if not math.isfinite(loss):
            raise TrainingDiverged(f"non-finite TD loss at update {self.updates}")
        self.optimizer.step(self.online, grad)
        self.updates += 1
        if self.updates % self.config.sync_period == 0:
            self.sync_target()
        if isinstance(self.penalty, Dynamic):
            self.penalty.schedule.observe(loss)
        return loss


@dataclass
class Trajectory:
    cost: float
    violations: int
    states: np.ndarray
    actions: list[int] = field(default_factory=list)


def rollout(env: VehicleEnv, policy, initial_state) -> Trajectory:
    """Run ``policy(state) -> action index`` for one horizon.

    ``cost`` sums stage costs only (no penalty). ``violations`` counts visited
    states, the initial one included, where some residual is positive.
    """
    state = np.asarray(initial_state, dtype=float)
    states = [state]
    actions = []
    cost = 0.0
    violations = int(env.violated(state))
    for _ in range(env.horizon):
        a = policy(state)
        state, l, _ = env.step(state, a)
        cost += l
        violations += int(env.violated(state))
        states.append(state)
        actions.append(a)
    return Trajectory(cost, violations, np.array(states), actions)


def evaluate_policy(agent: DQNAgent, env: VehicleEnv, initial_states: Sequence) -> list[Trajectory]:
    """Greedy rollouts, one per initial state."""
    return [rollout(env, agent.greedy_action, s) for s in initial_states]
