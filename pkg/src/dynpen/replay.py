"""Fixed-capacity FIFO experience replay with uniform sampling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class BufferNotReady(RuntimeError):
    """Sampling was requested from an empty buffer."""


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


@dataclass(frozen=True)
class Batch:
    """Column-wise view of sampled transitions."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, i: int) -> Transition:
        return Transition(self.states[i], int(self.actions[i]), float(self.rewards[i]),
                          self.next_states[i], bool(self.terminals[i]))


class ReplayBuffer:
    """Ring buffer of transitions; the oldest entry is overwritten once full.

    Storage is allocated on the first push, when the state width is known.
    """

    def __init__(self, capacity: int = 10_000, n_actions: Optional[int] = None):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.n_actions = n_actions
        self.size = 0
        self.cursor = 0
        self._states: np.ndarray | None = None

    def __len__(self) -> int:
        return self.size

    def _allocate(self, dim: int) -> None:
        self._states = np.zeros((self.capacity, dim))
        self._next_states = np.zeros((self.capacity, dim))
        self._actions = np.zeros(self.capacity, dtype=np.int64)
        self._rewards = np.zeros(self.capacity)
        self._terminals = np.zeros(self.capacity, dtype=bool)

    def push(self, transition: Transition) -> None:
        state = np.asarray(transition.state, dtype=float).ravel()
        action = int(transition.action)
        if action < 0 or (self.n_actions is not None and action >= self.n_actions):
            raise ValueError(f"action index {action} outside [0, {self.n_actions})")
        if self._states is None:
            self._allocate(state.size)
        i = self.cursor
        self._states[i] = state
        self._next_states[i] = np.asarray(transition.next_state, dtype=float).ravel()
        self._actions[i] = action
        self._rewards[i] = transition.reward
        self._terminals[i] = transition.terminal
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def add(self, state, action: int, reward: float, next_state, terminal: bool) -> None:
        self.push(Transition(state, action, reward, next_state, terminal))

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise BufferNotReady("cannot sample from an empty replay buffer")
        return rng.integers(0, self.size, size=batch_size)

    def gather(self, idx: np.ndarray) -> Batch:
        return Batch(self._states[idx], self._actions[idx], self._rewards[idx],
                     self._next_states[idx], self._terminals[idx])

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Draw ``batch_size`` transitions uniformly, with replacement."""
        return self.gather(self.sample_indices(batch_size, rng))

    def __getitem__(self, age: int) -> Transition:
        """Entry by insertion age among those retained, 0 being the oldest."""
        if not 0 <= age < self.size:
            raise IndexError(age)
        start = self.cursor if self.size == self.capacity else 0
        return self.gather(np.array([(start + age) % self.capacity]))[0]
