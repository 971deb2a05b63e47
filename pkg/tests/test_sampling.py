import numpy as np
import pytest

from core.config import DEFAULT_SERVICE_TIMES
from core.sampling import (
    InspectionOutcome,
    RandomStreams,
    draw_profile,
    inspection_outcome,
    sample_arrivals,
    sample_service_time,
    seconds_to_ticks,
    tick_seconds,
)
from core.yard import CIRCUIT, StationKind


def test_tick_is_one_cell_at_fixed_speed():
    tick = tick_seconds(16.1)
    assert tick == pytest.approx(36.0 / 16.1)
    assert seconds_to_ticks(3600.0, tick) == 1610
    assert seconds_to_ticks(600.0, tick) == 269
    assert seconds_to_ticks(1200.0, tick) == 537
    assert seconds_to_ticks(0.0, tick) == 0
    assert seconds_to_ticks(tick * 3, tick) == 3


def test_zero_demand_means_no_arrivals():
    assert sample_arrivals(0, 5 * 3600, np.random.default_rng(1)) == []


def test_arrivals_sorted_inside_window():
    times = sample_arrivals(80, 5 * 3600, np.random.default_rng(2))
    assert times == sorted(times)
    assert all(0 <= t < 5 * 3600 for t in times)


def test_arrivals_reject_bad_arguments():
    with pytest.raises(ValueError):
        sample_arrivals(-1, 3600, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sample_arrivals(10, 0, np.random.default_rng(0))


@pytest.mark.slow
def test_poisson_count_matches_demand():
    rng = np.random.default_rng(3)
    counts = np.array([len(sample_arrivals(80, 3600.0, rng)) for _ in range(10_000)])
    # three standard errors of the mean count
    assert abs(counts.mean() - 80) < 3 * np.sqrt(80 / counts.size)


@pytest.mark.slow
def test_inspection_failure_fraction():
    rng = np.random.default_rng(4)
    fails = sum(inspection_outcome(rng, 0.005) == InspectionOutcome.FAIL for _ in range(100_000))
    assert 0.0040 <= fails / 100_000 <= 0.0060


@pytest.mark.slow
@pytest.mark.parametrize("kind", list(CIRCUIT))
def test_clamped_service_means_stay_close(kind):
    rng = np.random.default_rng(5)
    draws = np.array([sample_service_time(kind, rng, DEFAULT_SERVICE_TIMES) for _ in range(100_000)])
    assert draws.min() >= 60.0
    if kind == StationKind.CHARGING:
        assert draws.max() <= 7200.0
    assert abs(draws.mean() - DEFAULT_SERVICE_TIMES[kind].mean_s) / DEFAULT_SERVICE_TIMES[kind].mean_s < 0.02


def test_streams_are_independent_per_vehicle():
    streams = RandomStreams(99)
    first = draw_profile(streams, 7, DEFAULT_SERVICE_TIMES, (0.0, 10.0), 0.005)
    # drawing other vehicles first must not change vehicle 7
    again = RandomStreams(99)
    for vid in range(5):
        draw_profile(again, vid, DEFAULT_SERVICE_TIMES, (0.0, 10.0), 0.005)
    assert draw_profile(again, 7, DEFAULT_SERVICE_TIMES, (0.0, 10.0), 0.005) == first
    assert first.remaining_charge_time == first.service_times[StationKind.CHARGING]
    assert 0.0 <= first.trust_score <= 10.0


def test_unknown_stream_is_rejected():
    with pytest.raises(KeyError):
        RandomStreams(1).generator("weather")


def test_different_seeds_differ():
    a = draw_profile(RandomStreams(1), 0, DEFAULT_SERVICE_TIMES, (0.0, 10.0), 0.005)
    b = draw_profile(RandomStreams(2), 0, DEFAULT_SERVICE_TIMES, (0.0, 10.0), 0.005)
    assert a.service_times != b.service_times
