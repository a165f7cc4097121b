"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v -s`` or
``python tests/test_acceptance.py``. The vehicle study (criteria 7 and 9)
trains 60 agents for 2000 episodes each and dominates the runtime; it uses
one worker process per CPU.
"""
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from dynpen.agent import AgentConfig, DQNAgent
from dynpen.constraints import ks_aggregate
from dynpen.harness.config import RunConfig
from dynpen.harness.runs import execute
from dynpen.harness.study import run_dir, run_study
from dynpen.mlp import Network, mlp_layers
from dynpen.penalty import PenaltySchedule
from dynpen.replay import ReplayBuffer

from oracles import finite_difference_gradient, max_relative_error, value_iteration

KINDS = ["uniform", "linear", "dynamic"]
JOBS = os.cpu_count() or 1


def verdict(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def regress_study(tmp_path_factory):
    out = tmp_path_factory.mktemp("regress1d")
    start = time.perf_counter()
    summary = run_study(RunConfig.for_study("regress1d"), KINDS, range(10), jobs=JOBS, out=out)
    return out, summary, time.perf_counter() - start


@pytest.fixture(scope="module")
def vehicle_study(tmp_path_factory):
    out = tmp_path_factory.mktemp("vehicle")
    start = time.perf_counter()
    summary = run_study(RunConfig.for_study("vehicle"), KINDS, range(20), jobs=JOBS, out=out)
    return out, summary, time.perf_counter() - start


def test_criterion_1_ks_bounds(capsys):
    rng = np.random.default_rng(2024)
    rhos = [1.0, 10.0, 50.0, 1e3, 1e6]
    vectors = [rng.uniform(-5, 5, size=rng.integers(1, 11)) for _ in range(10_000)]
    worst = -math.inf
    start = time.perf_counter()
    for i, g in enumerate(vectors):
        rho = rhos[i % len(rhos)]
        ks = ks_aggregate(g, rho)
        lo, hi = g.max(), g.max() + math.log(len(g)) / rho
        worst = max(worst, lo - ks, ks - hi)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 1.0
    verdict(capsys, 1, "KS bounds", ok, f"worst bound excess {worst:.2e}, {elapsed:.3f} s")


def test_criterion_2_scheduler_replay(capsys):
    schedule = PenaltySchedule(mu_min=0.05, mu_max=20.0, growth=2.0, alpha=60.0)
    start = time.perf_counter()
    mus = [schedule.mu]
    for loss in [10.0, 3.9] * 12:
        schedule.observe(loss)
        if schedule.mu != mus[-1]:
            mus.append(schedule.mu)
    elapsed = time.perf_counter() - start
    expected = [0.05 * 2 ** k for k in range(9)] + [20.0]
    ok = mus == expected and schedule.saturated and elapsed < 1e-3
    verdict(capsys, 2, "scheduler replay", ok, f"mu ladder {mus}, {elapsed * 1e3:.3f} ms")


def test_criterion_3_gradient_check(capsys):
    rng = np.random.default_rng(7)
    worst = 0.0
    start = time.perf_counter()
    for _ in range(20):
        n_in, n_out = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        hidden = [int(h) for h in rng.integers(2, 7, size=rng.integers(1, 4))]
        net = Network.init(mlp_layers(n_in, hidden, n_out), rng)
        # nonzero biases everywhere keep pre-activations off the relu kink,
        # where central differences are not a valid reference
        net.params += rng.normal(0, 0.1, size=net.params.size)
        x = rng.normal(size=(int(rng.integers(1, 9)), n_in))
        y = rng.normal(size=(len(x), n_out))
        analytic, _ = net.backward(x, y)
        numeric = finite_difference_gradient(lambda: float(np.mean((net.forward(x) - y) ** 2)), net.params, 1e-5)
        worst = max(worst, max_relative_error(analytic, numeric))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 5.0
    verdict(capsys, 3, "gradient check", ok, f"max relative error {worst:.2e}, {elapsed:.2f} s")


def test_criterion_4_tabular_oracle(capsys):
    rewards = np.array([[1.0, 0.0], [-1.0, 2.0]])
    nxt = np.array([[0, 1], [0, 1]])
    gamma = 0.9
    q_star = value_iteration(rewards, nxt, gamma)
    eye = np.eye(2)
    errors = []
    start = time.perf_counter()
    for seed in range(5):
        agent = DQNAgent(2, 2, AgentConfig(gamma=gamma, sync_period=50), np.random.default_rng(seed))
        buf = ReplayBuffer(4, n_actions=2)
        for s in range(2):
            for a in range(2):
                buf.add(eye[s], a, rewards[s, a], eye[nxt[s, a]], False)
        rng = np.random.default_rng(1000 + seed)
        for _ in range(5000):
            agent.train_step(buf, rng)
        errors.append(float(np.abs(agent.online.forward(eye) - q_star).max()))
    elapsed = time.perf_counter() - start
    ok = max(errors) < 0.05 and elapsed < 30.0
    verdict(capsys, 4, "tabular oracle", ok, f"max |Q - Q*| per seed {np.round(errors, 4).tolist()}, {elapsed:.1f} s")


@pytest.mark.slow
def test_criterion_5_regression_final_loss(capsys, regress_study):
    _, summary, elapsed = regress_study
    med = {k: summary["kinds"][k]["median_final_loss"] for k in KINDS}
    failed = summary["failed"]
    ok = (failed == 0 and med["dynamic"] < med["uniform"] and med["dynamic"] < med["linear"]
          and elapsed < 600)
    detail = ", ".join(f"{k} {v:.4g}" for k, v in med.items())
    verdict(capsys, 5, "1-D median final-100 loss lowest for dynamic", ok,
            f"{detail}; {failed} failed runs, {elapsed:.0f} s")


@pytest.mark.slow
def test_criterion_6_regression_interior_error(capsys, regress_study):
    _, summary, _ = regress_study
    dyn = summary["kinds"]["dynamic"]["median_interior_error"]
    uni = summary["kinds"]["uniform"]["median_interior_error"]
    verdict(capsys, 6, "1-D interior error dynamic below uniform", dyn < uni,
            f"median max error on [-4.5, 4.5]: dynamic {dyn:.4g}, uniform {uni:.4g}")


@pytest.mark.slow
def test_criterion_7_vehicle_direction(capsys, vehicle_study):
    _, summary, elapsed = vehicle_study
    rows = summary["kinds"]
    found = {k: rows[k]["sufficient_feasible"] for k in KINDS}
    cost = {k: rows[k]["average_cost"] for k in KINDS}
    ok = found["dynamic"] >= found["uniform"] and found["dynamic"] >= found["linear"]
    if cost["dynamic"] is not None and cost["uniform"] is not None:
        ok = ok and cost["dynamic"] <= cost["uniform"]
    ok = ok and summary["failed"] == 0 and elapsed < 7200
    assert "table3" in summary["published_reference"]
    detail = ", ".join(f"{k} {found[k]}/20 avg {cost[k] if cost[k] is None else round(cost[k], 4)}" for k in KINDS)
    verdict(capsys, 7, "vehicle study direction", ok, f"{detail}; {elapsed / 60:.1f} min with {JOBS} workers")


@pytest.mark.slow
def test_criterion_8_determinism(capsys, tmp_path, regress_study, vehicle_study):
    mismatched = []
    for (root, _, _), study, files in ((regress_study, "regress1d", ("loss.csv",)),
                                       (vehicle_study, "vehicle", ("loss.csv", "eval.csv"))):
        for kind, seed in (("dynamic", 0), ("uniform", 3)):
            cfg = RunConfig.for_study(study, seed=seed).updated({"penalty.kind": kind})
            again = tmp_path / f"{study}_{kind}_{seed}"
            execute(cfg, again)
            for name in files:
                if (run_dir(root, kind, seed) / name).read_bytes() != (again / name).read_bytes():
                    mismatched.append(f"{study}/{kind}/{seed}/{name}")
    verdict(capsys, 8, "byte-identical reruns", not mismatched,
            f"mismatches: {mismatched}" if mismatched else "4 reruns reproduced all CSVs")


@pytest.mark.slow
def test_criterion_9_checkpoint_shape(capsys, vehicle_study):
    _, summary, _ = vehicle_study
    problems = []
    for kind, row in summary["kinds"].items():
        counts = [row["checkpoints"][c] for c in ("500", "1000", "1500", "2000")]
        if counts != sorted(counts) or counts[-1] != row["sufficient_feasible"]:
            problems.append(f"{kind} {counts} vs total {row['sufficient_feasible']}")
    shapes = {k: list(r["checkpoints"].values()) for k, r in summary["kinds"].items()}
    verdict(capsys, 9, "checkpoint counts monotone and consistent", not problems,
            "; ".join(problems) if problems else str(shapes))


if __name__ == "__main__":
    sys.exit(pytest.main([str(Path(__file__)), "-v", "-s"]))
