import numpy as np
import pytest

from agents.scorer import (
    ScoringAgent,
    charge_urgency,
    expected_circuit_time,
    lateness,
    priority_score,
    priority_total,
    rank_vehicles,
)
from core.config import DEFAULT_SERVICE_TIMES, ScoreWeights
from core.vehicle import Vehicle
from core.yard import CIRCUIT, StationKind


def make_vehicle(vid=0, charge_s=3600.0, entry=0.0, trust=0.0, completed=()):
    return Vehicle(
        id=vid,
        entry_time=entry,
        remaining_charge_time=charge_s,
        trust_score=trust,
        completed=set(completed),
    )


@pytest.mark.parametrize(
    "charge_s, expected",
    [(120 * 60, 0.5), (60 * 60, 1.0), (0.0, 60.0), (30.0, 60.0)],
)
def test_charge_urgency(charge_s, expected):
    assert charge_urgency(make_vehicle(charge_s=charge_s)) == pytest.approx(expected)


@pytest.mark.parametrize("elapsed, expected", [(1000.0, 0.0), (1030.0, 30.0), (990.0, 0.0)])
def test_lateness(elapsed, expected):
    v = make_vehicle(entry=100.0)
    assert lateness(v, now=100.0 + elapsed, expected_circuit_time=1000.0) == expected


@pytest.mark.parametrize(
    "b, c, t, tau, total",
    [(1.0, 2, 0.0, 5.0, 105.0), (0.0, 0, 0.0, 0.0, 0.0), (0.5, 3, 10.0, 2.0, 142.0)],
)
def test_priority_total(b, c, t, tau, total):
    assert priority_total(b, c, t, tau) == pytest.approx(total)


def test_custom_weights():
    weights = ScoreWeights(charge=1, circuit=0, lateness=0, trust=0)
    assert priority_total(2.0, 3, 50.0, 9.0, weights) == 2.0


def test_score_matches_independent_evaluation():
    rng = np.random.default_rng(12)
    for vid in range(1000):
        completed = [k for k in CIRCUIT if rng.random() < 0.5]
        v = make_vehicle(
            vid,
            charge_s=float(rng.uniform(0, 7200)),
            entry=float(rng.uniform(0, 18000)),
            trust=float(rng.uniform(0, 10)),
            completed=completed,
        )
        now = v.entry_time + float(rng.uniform(0, 20000))
        expected_time = 6000.0
        b = 1.0 / max(v.remaining_charge_time / 3600.0, 1.0 / 60.0)
        t = max(0.0, now - v.entry_time - expected_time)
        reference = 60 * b + 20 * len(completed) + 5 * t + v.trust_score
        score = priority_score(v, now, expected_time)
        assert abs(score.total - reference) <= 1e-12 * max(1.0, abs(reference))
        assert score.total == pytest.approx(
            score.charge_term + score.circuit_term + score.lateness_term + score.trust_term
        )


def test_ranking_order_and_ties():
    # 60 + 40 + 0 + 5 = 105 against 30 + 60 + 50 + 2 = 142
    low = make_vehicle(0, charge_s=3600.0, entry=100.0, trust=5.0, completed=[StationKind.CHARGING, StationKind.CLEANING])
    high = make_vehicle(1, charge_s=7200.0, entry=0.0, trust=2.0, completed=list(CIRCUIT[:3]))
    assert priority_score(high, 100.0, 90.0).total == pytest.approx(142.0)
    assert priority_score(low, 100.0, 90.0).total == pytest.approx(105.0)
    assert rank_vehicles([low, high], now=100.0, expected_circuit_time=90.0) == [high, low]

    late_entry = make_vehicle(2, entry=20.0)
    early_entry = make_vehicle(3, entry=10.0)
    assert rank_vehicles([late_entry, early_entry], now=30.0, expected_circuit_time=1e9) == [
        early_entry,
        late_entry,
    ]
    same = [make_vehicle(5), make_vehicle(4)]
    assert [v.id for v in rank_vehicles(same, 0.0, 1e9)] == [4, 5]
    assert rank_vehicles([], 0.0, 0.0) == []


def test_expected_circuit_time_on_row_yard(row_layout):
    # entrance -> c -> i -> w -> l -> exit is 6 cells
    service = sum(DEFAULT_SERVICE_TIMES[k].mean_s for k in CIRCUIT)
    assert expected_circuit_time(row_layout, DEFAULT_SERVICE_TIMES, 2.0) == service + 6 * 2.0
    agent = ScoringAgent(row_layout, DEFAULT_SERVICE_TIMES, tick_s=2.0)
    assert agent.expected_circuit_time == service + 12.0
    v = make_vehicle()
    assert agent.rank([v], 0.0) == [v]
