from dataclasses import dataclass
from itertools import permutations
from typing import List, Mapping, Optional, Sequence, Tuple

from core.config import ScoreWeights, ServiceDistribution
from core.vehicle import Vehicle
from core.yard import CIRCUIT, StationKind, YardLayout, grid_distance
from utils.logger import logger

# Remaining charge below one minute scores as one minute
MIN_CHARGE_HOURS = 1.0 / 60.0


@dataclass(frozen=True)
class PriorityScore:
    total: float
    charge_term: float
    circuit_term: float
    lateness_term: float
    trust_term: float
    tiebreak_key: Tuple[float, int]

    @property
    def sort_key(self) -> Tuple[float, float, int]:
        return (-self.total, self.tiebreak_key[0], self.tiebreak_key[1])


def charge_urgency(vehicle: Vehicle) -> float:
    """Inverse of the hours still needed to reach a full charge, capped at 60 per hour"""
    hours = vehicle.remaining_charge_time / 3600.0
    return 1.0 / max(hours, MIN_CHARGE_HOURS)


def lateness(vehicle: Vehicle, now: float, expected_circuit_time: float) -> float:
    """Seconds spent in the yard beyond the expected circuit time"""
    return max(0.0, (now - vehicle.entry_time) - expected_circuit_time)


def priority_total(
    charge: float,
    completed: int,
    late: float,
    trust: float,
    weights: ScoreWeights = ScoreWeights(),
) -> float:
    return (
        weights.charge * charge
        + weights.circuit * completed
        + weights.lateness * late
        + weights.trust * trust
    )


def priority_score(
    vehicle: Vehicle,
    now: float,
    expected_circuit_time: float,
    weights: ScoreWeights = ScoreWeights(),
) -> PriorityScore:
    charge_term = weights.charge * charge_urgency(vehicle)
    circuit_term = weights.circuit * len(vehicle.completed)
    lateness_term = weights.lateness * lateness(vehicle, now, expected_circuit_time)
    trust_term = weights.trust * vehicle.trust_score
    return PriorityScore(
        total=charge_term + circuit_term + lateness_term + trust_term,
        charge_term=charge_term,
        circuit_term=circuit_term,
        lateness_term=lateness_term,
        trust_term=trust_term,
        tiebreak_key=(vehicle.entry_time, vehicle.id),
    )


def rank_vehicles(
    vehicles: Sequence[Vehicle],
    now: float,
    expected_circuit_time: float,
    weights: ScoreWeights = ScoreWeights(),
) -> List[Vehicle]:
    """Highest priority first; ties go to the earlier entry, then the smaller id"""
    keyed = [(priority_score(v, now, expected_circuit_time, weights).sort_key, v) for v in vehicles]
    keyed.sort(key=lambda item: item[0])
    return [v for _, v in keyed]


def expected_circuit_time(
    layout: YardLayout,
    distributions: Mapping[StationKind, ServiceDistribution],
    tick_s: float,
) -> float:
    """
    Mean service time of the four circuit stations plus the shortest drive
    entrance -> charging/inspection/cleaning in the best order -> loading -> exit.
    """
    service = sum(distributions[kind].mean_s for kind in CIRCUIT)

    free_order = [k for k in CIRCUIT if k != StationKind.LOADING]
    best: Optional[int] = None
    for order in permutations(free_order):
        stops = [layout.entrance_cell]
        stops += [layout.gate(k) for k in order]
        stops += [layout.gate(StationKind.LOADING), layout.exit_cell]
        legs = [grid_distance(layout, a, b) for a, b in zip(stops, stops[1:])]
        if any(leg is None for leg in legs):
            continue
        cells = sum(legs)
        if best is None or cells < best:
            best = cells

    if best is None:
        raise ValueError(f"layout {layout.name} has no complete circuit")
    return service + best * tick_s


class ScoringAgent:
    """Agent responsible for ranking vehicles by priority"""

    def __init__(
        self,
        layout: YardLayout,
        distributions: Mapping[StationKind, ServiceDistribution],
        tick_s: float,
        weights: ScoreWeights = ScoreWeights(),
    ):
        self.weights = weights
        self.expected_circuit_time = expected_circuit_time(layout, distributions, tick_s)
        logger.info(
            f"Scoring Agent initialized (expected circuit {self.expected_circuit_time / 60:.1f} min)"
        )

    def score(self, vehicle: Vehicle, now: float) -> PriorityScore:
        return priority_score(vehicle, now, self.expected_circuit_time, self.weights)

    def rank(self, vehicles: Sequence[Vehicle], now: float) -> List[Vehicle]:
        return rank_vehicles(vehicles, now, self.expected_circuit_time, self.weights)
