import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynpen.penalty import (
    Dynamic,
    Linear,
    PenaltySchedule,
    ScheduleEvent,
    Uniform,
    current_factor,
    make_penalty,
    penalty_value,
)

VEHICLE = dict(mu_min=0.05, mu_max=20.0, growth=2.0, alpha=60.0)

kinds = st.one_of(
    st.floats(0, 100).map(Uniform),
    st.floats(0, 100).map(Linear),
    st.sampled_from([0.05, 0.4, 20.0]).map(lambda mu: Dynamic(PenaltySchedule(**VEHICLE, mu=mu))),
)


@pytest.mark.parametrize("kind", [Uniform(20), Linear(20), Dynamic(PenaltySchedule(**VEHICLE))])
def test_feasible_point_has_no_penalty(kind):
    assert penalty_value(kind, -0.1) == 0.0
    assert penalty_value(kind, 0.0) == 0.0


def test_penalty_values():
    assert penalty_value(Linear(20), 0.5) == 10.0
    assert penalty_value(Uniform(20), 0.001) == 20.0
    assert penalty_value(Dynamic(PenaltySchedule(**VEHICLE, mu=0.4)), 0.5) == 0.2


def test_penalty_rejects_non_finite():
    with pytest.raises(ValueError):
        penalty_value(Linear(1), math.nan)


def test_negative_levels_rejected():
    with pytest.raises(ValueError):
        Uniform(-1)
    with pytest.raises(ValueError):
        Linear(-1)


@settings(max_examples=200, deadline=None)
@given(kinds, st.floats(-10, 10), st.floats(0, 10))
def test_penalty_non_decreasing_in_ks(kind, ks, delta):
    assert penalty_value(kind, ks + delta) >= penalty_value(kind, ks)


def test_continuity_at_zero():
    tiny = 1e-12
    assert penalty_value(Linear(50), tiny) < 1e-9
    assert penalty_value(Dynamic(PenaltySchedule(**VEHICLE, mu=20.0)), tiny) < 1e-9
    assert penalty_value(Uniform(50), tiny) == 50


def test_trigger_fires_below_threshold():
    s = PenaltySchedule(**VEHICLE, max_loss_seen=10.0)
    assert s.observe(3.9) is ScheduleEvent.UPDATED
    assert s.mu == 0.1
    assert s.max_loss_seen == 3.9


def test_trigger_is_strict():
    s = PenaltySchedule(**VEHICLE, max_loss_seen=10.0)
    assert s.observe(4.0) is ScheduleEvent.UNCHANGED
    assert s.mu == 0.05


def test_clamp_to_mu_max():
    s = PenaltySchedule(**VEHICLE, mu=12.8, max_loss_seen=10.0)
    assert s.observe(1.0) is ScheduleEvent.SATURATED
    assert s.mu == 20.0 and s.saturated
    # saturated schedules never move again
    s.observe(100.0)
    assert s.observe(0.0) is ScheduleEvent.UNCHANGED
    assert s.mu == 20.0


def test_first_clamp_after_nine_doublings():
    assert min(k for k in range(20) if 0.05 * 2 ** k >= 20) == 9


def test_max_loss_tracks_running_peak():
    s = PenaltySchedule(**VEHICLE)
    for loss in (1.0, 5.0, 3.0):
        assert s.observe(loss) is ScheduleEvent.UNCHANGED
    assert s.max_loss_seen == 5.0
    assert s.observe(1.99) is ScheduleEvent.UPDATED


def test_smoothing_window():
    s = PenaltySchedule(**VEHICLE, window=2)
    s.observe(10.0)
    # mean(10, 3) = 6.5 is not below 0.4 * 10
    assert s.observe(3.0) is ScheduleEvent.UNCHANGED
    # mean(3, 1) = 2 is
    assert s.observe(1.0) is ScheduleEvent.UPDATED


@pytest.mark.parametrize("kwargs", [
    dict(mu_min=0.0), dict(mu_min=5, mu_max=1), dict(growth=1.0), dict(alpha=0), dict(alpha=100),
    dict(window=0), dict(mu=100.0),
])
def test_schedule_validation(kwargs):
    with pytest.raises(ValueError):
        PenaltySchedule(**{**VEHICLE, **kwargs})


def test_reset():
    s = PenaltySchedule(**VEHICLE, mu=1.6, max_loss_seen=3.0)
    s.reset()
    assert (s.mu, s.max_loss_seen, s.saturated) == (0.05, 0.0, False)


def _reference_mu_trace(losses, mu_min, mu_max, c, alpha):
    """Direct transcription of the update steps, kept independent of PenaltySchedule."""
    mu, peak, done, out = mu_min, 0.0, False, []
    for loss in losses:
        peak = max(peak, loss)
        if not done and loss < (100 - alpha) / 100 * peak:
            mu, peak = c * mu, loss
            if mu >= mu_max:
                mu, done = mu_max, True
        out.append(mu)
    return out


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(0, 1e4), max_size=200))
def test_mu_trajectory_is_clamped_geometric_prefix(losses):
    s = PenaltySchedule(**VEHICLE)
    trace = []
    for loss in losses:
        s.observe(loss)
        trace.append(s.mu)
    assert trace == _reference_mu_trace(losses, 0.05, 20.0, 2.0, 60.0)
    ladder = [0.05 * 2 ** k for k in range(9)] + [20.0]
    previous = 0.05
    for mu in trace:
        assert mu in ladder
        assert ladder.index(mu) - ladder.index(previous) in (0, 1)
        previous = mu


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1e4), max_size=50))
def test_scheduler_deterministic(losses):
    a, b = PenaltySchedule(**VEHICLE), PenaltySchedule(**VEHICLE)
    assert [a.observe(x) for x in losses] == [b.observe(x) for x in losses]
    assert a == b


def test_make_penalty():
    assert make_penalty("uniform", level=50) == Uniform(50)
    assert make_penalty("linear", factor=50) == Linear(50)
    dyn = make_penalty("dynamic", mu_min=0.1, mu_max=50)
    assert isinstance(dyn, Dynamic) and dyn.mu == 0.1 and current_factor(dyn) == 0.1
    with pytest.raises(ValueError):
        make_penalty("logistic")
