import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Tuple

import numpy as np

from core.config import ServiceDistribution
from core.yard import CIRCUIT, StationKind

STREAMS: Tuple[str, ...] = ("arrivals", "service", "trust", "inspection", "dwell")

SERVICE_FLOOR_S = 60.0
CHARGING_CEILING_S = 2 * 3600.0


class InspectionOutcome(str, Enum):
    PASS = "Pass"
    FAIL = "Fail"


def tick_seconds(speed_kmh: float, cell_size_m: float = 10.0) -> float:
    """Duration of one cell traversal"""
    return cell_size_m / (speed_kmh * 1000.0 / 3600.0)


def seconds_to_ticks(seconds: float, tick_s: float) -> int:
    """Round a duration up to whole ticks, tolerating float noise on exact multiples"""
    if seconds <= 0:
        return 0
    return int(math.ceil(seconds / tick_s - 1e-9))


class RandomStreams:
    """
    Independent generators derived from one master seed.

    Each (stream, key...) pair maps to its own SeedSequence spawn key, so a vehicle's
    service times or inspection result do not depend on how many draws other vehicles
    or other streams consumed. Both controllers therefore see the same inputs.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def generator(self, stream: str, *key: int) -> np.random.Generator:
        if stream not in STREAMS:
            raise KeyError(f"unknown random stream {stream!r}")
        spawn_key = (STREAMS.index(stream),) + tuple(int(k) for k in key)
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=spawn_key))


def sample_arrivals(demand: float, window_s: float, rng: np.random.Generator) -> List[float]:
    """Homogeneous Poisson arrivals on [0, window): Poisson count, uniform order statistics"""
    if demand < 0:
        raise ValueError(f"demand must be nonnegative, got {demand}")
    if window_s <= 0:
        raise ValueError(f"window must be positive, got {window_s}")
    n = int(rng.poisson(demand))
    if n == 0:
        return []
    return sorted(float(t) for t in rng.uniform(0.0, window_s, size=n))


def sample_service_time(
    kind: StationKind,
    rng: np.random.Generator,
    distributions: Mapping[StationKind, ServiceDistribution],
    floor_s: float = SERVICE_FLOOR_S,
    charging_ceiling_s: float = CHARGING_CEILING_S,
) -> float:
    """Normal draw in seconds, clamped to the floor (and the charging ceiling)"""
    dist = distributions[kind]
    value = float(rng.normal(dist.mean_s, dist.sd_s))
    value = max(value, floor_s)
    if kind == StationKind.CHARGING:
        value = min(value, charging_ceiling_s)
    return value


def inspection_outcome(rng: np.random.Generator, fail_rate: float) -> InspectionOutcome:
    if rng.random() < fail_rate:
        return InspectionOutcome.FAIL
    return InspectionOutcome.PASS


@dataclass(frozen=True)
class VehicleProfile:
    """Everything random about one vehicle, fixed at its entrance"""

    service_times: Dict[StationKind, float]
    trust_score: float
    inspection: InspectionOutcome

    @property
    def remaining_charge_time(self) -> float:
        return self.service_times[StationKind.CHARGING]


def draw_profile(
    streams: RandomStreams,
    vehicle_id: int,
    distributions: Mapping[StationKind, ServiceDistribution],
    trust_range: Tuple[float, float],
    fail_rate: float,
    floor_s: float = SERVICE_FLOOR_S,
    charging_ceiling_s: float = CHARGING_CEILING_S,
) -> VehicleProfile:
    service_rng = streams.generator("service", vehicle_id)
    service_times = {
        kind: sample_service_time(kind, service_rng, distributions, floor_s, charging_ceiling_s)
        for kind in CIRCUIT
    }
    low, high = trust_range
    trust = float(streams.generator("trust", vehicle_id).uniform(low, high))
    inspection = inspection_outcome(streams.generator("inspection", vehicle_id), fail_rate)
    return VehicleProfile(service_times=service_times, trust_score=trust, inspection=inspection)
