"""Single seeded runs of the two studies, plus their on-disk record format."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..agent import DQNAgent, evaluate_policy
from ..envs import RegressionTarget, reward
from ..mlp import Network, TrainingDiverged, make_optimizer, mlp_layers
from ..penalty import Dynamic, current_factor
from ..replay import ReplayBuffer
from .config import RunConfig

log = logging.getLogger(__name__)


@dataclass
class EvalBlock:
    episode: int
    costs: list[float]
    violations: list[int]
    passed: bool

    @property
    def mean_cost(self) -> float:
        return float(np.mean(self.costs))


def is_sufficient_feasible(costs, violations, threshold: float = 4.0) -> bool:
    """Every trajectory stays feasible and costs at most ``threshold``."""
    return all(v == 0 for v in violations) and all(c <= threshold for c in costs)


@dataclass
class RunRecord:
    study: str
    kind: str
    seed: int
    losses: list[float] = field(default_factory=list)
    mus: list[float] = field(default_factory=list)
    evaluations: list[EvalBlock] = field(default_factory=list)
    status: str = "ok"
    message: str = ""
    metrics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def first_success(self) -> Optional[int]:
        """Episode of the first passing evaluation, if any."""
        return next((b.episode for b in self.evaluations if b.passed), None)

    @property
    def best_cost(self) -> Optional[float]:
        """Lowest mean evaluation cost over passing checkpoints."""
        passing = [b.mean_cost for b in self.evaluations if b.passed]
        return min(passing) if passing else None

    def final_loss(self, window: int = 100) -> float:
        return float(np.mean(self.losses[-window:])) if self.losses else math.nan

    def to_json(self) -> dict:
        out = asdict(self)
        out["first_success"] = self.first_success
        out["best_cost"] = self.best_cost
        return out

    @classmethod
    def from_json(cls, data: dict) -> "RunRecord":
        data = dict(data)
        data.pop("first_success", None)
        data.pop("best_cost", None)
        data["evaluations"] = [EvalBlock(**b) for b in data.get("evaluations", [])]
        return cls(**data)


@dataclass
class RegressResult:
    record: RunRecord
    network: Network
    grid: np.ndarray
    curves: dict[int, np.ndarray]


def _streams(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generators for init, environment, exploration and sampling."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def interior_error(net: Network, lo: float, hi: float, points: int = 901) -> float:
    """Largest absolute error against the unpenalized objective on ``[lo, hi]``."""
    xs = np.linspace(lo, hi, points)
    pred = net.forward(xs[:, None])[:, 0]
    return float(np.max(np.abs(pred - RegressionTarget.objective(xs))))


def run_regress1d(config: RunConfig) -> RegressResult:
    """Fit the penalized 1-D target from a replay buffer, one minibatch per episode."""
    rp = config.regress
    init_rng, env_rng, replay_rng = _streams(config.seed, 3)
    kind = config.penalty.build()
    target = RegressionTarget(kind, samples_per_episode=rp.samples_per_episode)
    net = Network.init(mlp_layers(1, rp.hidden, 1), init_rng)
    opt = make_optimizer(rp.optimizer, rp.lr)
    buffer = ReplayBuffer(config.replay.capacity, n_actions=1)
    record = RunRecord("regress1d", config.penalty.kind, config.seed)
    grid = np.linspace(*target.sample_range, rp.grid_points)
    curves: dict[int, np.ndarray] = {}

    try:
        for episode in range(1, config.episodes + 1):
            xs, values = target.sample_episode(env_rng)
            for x, v in zip(xs, values):
                buffer.add((x,), 0, v, (x,), True)
            losses = []
            for _ in range(rp.updates_per_episode):
                batch = buffer.sample(rp.batch_size, replay_rng)
                grad, loss = net.backward(batch.states, batch.rewards[:, None])
                if not math.isfinite(loss):
                    raise TrainingDiverged(f"non-finite loss in episode {episode}")
                opt.step(net, grad)
                if isinstance(kind, Dynamic):
                    kind.schedule.observe(loss)
                losses.append(loss)
            record.losses.append(float(np.mean(losses)))
            record.mus.append(current_factor(kind))
            if episode in rp.snapshot_episodes:
                curves[episode] = net.forward(grid[:, None])[:, 0]
    except TrainingDiverged as exc:
        record.status, record.message = "diverged", str(exc)
        log.warning("regress1d %s seed %d diverged: %s", record.kind, record.seed, exc)

    curves[len(record.losses)] = net.forward(grid[:, None])[:, 0]
    if record.ok:
        record.metrics = {
            "final_loss": record.final_loss(rp.final_window),
            "interior_error": interior_error(net, *rp.interior),
        }
    return RegressResult(record, net, grid, curves)


def run_vehicle(config: RunConfig, agent_out: Optional[list] = None) -> RunRecord:
    """Train a DQN agent on the vehicle and test it greedily at fixed intervals.

    ``agent_out``, when given, receives the trained agent.
    """
    init_rng, env_rng, explore_rng, replay_rng = _streams(config.seed, 4)
    env = config.env.build()
    kind = config.penalty.build()
    agent = DQNAgent(2, env.n_actions, config.agent, init_rng, penalty=kind)
    buffer = ReplayBuffer(config.replay.capacity, n_actions=env.n_actions)
    starts = config.eval.initial_states()
    record = RunRecord("vehicle", config.penalty.kind, config.seed)
    total = config.episodes

    try:
        for episode in range(1, total + 1):
            eps = config.agent.epsilon(episode - 1, total)
            state = env.sample_initial(env_rng)
            losses = []
            for t in range(env.horizon):
                action = agent.select_action(state, eps, explore_rng)
                nxt, cost, ks = env.step(state, action)
                buffer.add(state, action, reward(cost, ks, kind), nxt, t == env.horizon - 1)
                for _ in range(config.agent.updates_per_step):
                    losses.append(agent.train_step(buffer, replay_rng))
                state = nxt
            record.losses.append(float(np.mean(losses)) if losses else 0.0)
            record.mus.append(current_factor(kind))
            if episode % config.eval.interval == 0:
                trajs = evaluate_policy(agent, env, starts)
                costs = [t.cost for t in trajs]
                viols = [t.violations for t in trajs]
                passed = is_sufficient_feasible(costs, viols, config.eval.cost_threshold)
                record.evaluations.append(EvalBlock(episode, costs, viols, passed))
                log.debug("vehicle %s seed %d ep %d: worst cost %.3f, violations %d",
                          record.kind, record.seed, episode, max(costs), sum(viols))
    except TrainingDiverged as exc:
        record.status, record.message = "diverged", str(exc)
        log.warning("vehicle %s seed %d diverged: %s", record.kind, record.seed, exc)

    if agent_out is not None:
        agent_out.append(agent)
    return record


def _fmt(x: float) -> str:
    return repr(float(x))


def write_record(record: RunRecord, out: Path) -> None:
    """``loss.csv``, ``eval.csv`` and ``record.json`` for one run."""
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "loss.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode", "mean_loss", "mu"])
        for i, (loss, mu) in enumerate(zip(record.losses, record.mus), start=1):
            w.writerow([i, _fmt(loss), _fmt(mu)])
    with open(out / "eval.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode", "init_idx", "cost", "violations", "pass"])
        for block in record.evaluations:
            for i, (cost, viol) in enumerate(zip(block.costs, block.violations)):
                w.writerow([block.episode, i, _fmt(cost), viol, int(block.passed)])
    (out / "record.json").write_text(json.dumps(record.to_json(), indent=1) + "\n")


def write_curves(result: RegressResult, out: Path) -> None:
    """Predicted curves on the dense grid, one row per (episode, x)."""
    with open(out / "curves.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode", "x", "prediction"])
        for episode in sorted(result.curves):
            for x, y in zip(result.grid, result.curves[episode]):
                w.writerow([episode, _fmt(x), _fmt(y)])


def read_record(run_dir: Path) -> RunRecord:
    return RunRecord.from_json(json.loads((run_dir / "record.json").read_text()))


def execute(config: RunConfig, out: Optional[Path] = None) -> RunRecord:
    """Run one configuration and, if ``out`` is given, write its artifacts there."""
    if config.study == "regress1d":
        result = run_regress1d(config)
        record, net = result.record, result.network
    else:
        holder: list = []
        record = run_vehicle(config, holder)
        net = holder[0].online
    if out is not None:
        out = Path(out)
        write_record(record, out)
        config.dump(out / "config.toml")
        net.save(out / "network.bin")
        if config.study == "regress1d":
            write_curves(result, out)
    return record
