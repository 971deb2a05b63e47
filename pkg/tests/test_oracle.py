import pytest
from pydantic import ValidationError

from core.oracle import (
    OracleScenario,
    VehicleSnapshot,
    exhaustive_single_vehicle_cases,
    literal_assignment,
    oracle_layout,
    oracle_replan,
    run_oracle,
)
from core.yard import StationKind


@pytest.fixture
def layout():
    return oracle_layout()


@pytest.fixture
def gates(layout):
    return {kind.value: layout.gate(kind) for kind in StationKind}


def snapshot(vid=0, completed=(), previous=None, reservation=None, cell=(2, 0), charge_s=3600.0, entry=0.0):
    return VehicleSnapshot(
        id=vid,
        completed=frozenset(completed),
        previous=previous,
        reservation=reservation,
        berth=None,
        cell=cell,
        entry_time=entry,
        remaining_charge_time=charge_s,
        trust=0.0,
    )


def test_oracle_layout_has_two_berths_per_kind(layout):
    assert all(s.berth_count == 2 for s in layout.stations)


def test_literal_steps(layout, gates):
    free = {"charging": 2, "inspection": 2, "cleaning": 2, "loading": 2, "parking": 2}
    assert literal_assignment(snapshot(), free, layout, gates) == "charging"
    assert literal_assignment(snapshot(previous="cleaning", reservation="cleaning"), free, layout, gates) == "cleaning"

    only_loading = dict(free, charging=0, inspection=0, cleaning=0)
    assert literal_assignment(snapshot(), only_loading, layout, gates) == "parking"
    nothing = dict(only_loading, parking=0)
    assert literal_assignment(snapshot(), nothing, layout, gates) == "impossible"
    done = ("charging", "inspection", "cleaning", "loading")
    assert literal_assignment(snapshot(completed=done), nothing, layout, gates) == "exit"


def test_oracle_replan_two_vehicle_example(layout, gates):
    free = {"charging": 1, "inspection": 0, "cleaning": 0, "loading": 0, "parking": 2}
    urgent = snapshot(0, charge_s=600.0)
    relaxed = snapshot(1, charge_s=7200.0)
    result = oracle_replan([relaxed, urgent], free, layout, gates, now=0.0, expected=1e9)
    assert result == {0: "charging", 1: "parking"}


def test_oracle_replan_hands_back_promises_first(layout, gates):
    # the relaxed vehicle already holds the only charging berth
    free = {"charging": 0, "inspection": 0, "cleaning": 0, "loading": 0, "parking": 2}
    urgent = snapshot(0, charge_s=600.0)
    relaxed = snapshot(1, previous="charging", reservation="charging", charge_s=7200.0)
    result = oracle_replan([relaxed, urgent], free, layout, gates, now=0.0, expected=1e9)
    assert result == {0: "charging", 1: "parking"}


def test_exhaustive_cases_cover_every_history(layout):
    cases = list(exhaustive_single_vehicle_cases(layout))
    histories = {snap.completed for snap, _ in cases}
    assert len(histories) == 9
    for snap, extra in cases[:200]:
        assert all(0 <= count <= 2 for count in extra.values())


def test_small_oracle_run_is_clean():
    report = run_oracle(OracleScenario(seed=3, exhaustive_assignment=False, replan_cases=50, path_cases=50))
    assert report.ok, report.mismatches[:3]
    assert (report.replan_checked, report.path_checked) == (50, 50)


def test_scenario_rejects_unknown_keys():
    with pytest.raises(ValidationError):
        OracleScenario.model_validate({"seed": 1, "cases": 10})
    with pytest.raises(ValidationError):
        OracleScenario(max_grid=9)
