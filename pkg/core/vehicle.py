from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Optional, Set, Tuple, Union

import numpy as np

from core.pathing import SpaceTimePath
from core.yard import CIRCUIT, PREREQUISITES, Cell, StationKind

EXIT = "exit"

# A station kind (Parking included) or EXIT once the circuit is complete
Assignment = Union[StationKind, str]


class VehicleStatus(str, Enum):
    MOVING = "Moving"
    SERVING = "Serving"
    PARKED = "Parked"
    STRANDED = "Stranded"
    EXITED = "Exited"
    IMPOUNDED = "ImpoundedInParking"


TERMINAL_STATUSES: FrozenSet[VehicleStatus] = frozenset(
    {VehicleStatus.STRANDED, VehicleStatus.EXITED, VehicleStatus.IMPOUNDED}
)

ALLOWED_TRANSITIONS: Dict[VehicleStatus, FrozenSet[VehicleStatus]] = {
    VehicleStatus.MOVING: frozenset(
        {VehicleStatus.SERVING, VehicleStatus.PARKED, VehicleStatus.STRANDED, VehicleStatus.EXITED}
    ),
    VehicleStatus.SERVING: frozenset({VehicleStatus.MOVING, VehicleStatus.IMPOUNDED}),
    VehicleStatus.PARKED: frozenset({VehicleStatus.MOVING}),
    VehicleStatus.STRANDED: frozenset(),
    VehicleStatus.EXITED: frozenset(),
    VehicleStatus.IMPOUNDED: frozenset(),
}


@dataclass(eq=False)
class Vehicle:
    """A delivery vehicle working through the station circuit"""

    id: int
    entry_time: float
    remaining_charge_time: float
    trust_score: float
    position: Optional[Cell] = None
    completed: Set[StationKind] = field(default_factory=set)
    assignment: Optional[Assignment] = None
    planned_path: Optional[SpaceTimePath] = None
    status: VehicleStatus = VehicleStatus.MOVING

    # station the vehicle is inside (position is None while it is, finished or not)
    station: Optional[StationKind] = None
    # capacity units held: inbound promise and occupied berth
    reservation: Optional[StationKind] = None
    berth: Optional[StationKind] = None

    # engine bookkeeping
    service_times: Dict[StationKind, float] = field(default_factory=dict, repr=False)
    fails_inspection: bool = False
    service_end_tick: Optional[int] = None
    found_full: Set[StationKind] = field(default_factory=set)
    needs_plan: bool = False
    impound_pending: bool = False
    rng: Optional[np.random.Generator] = field(default=None, repr=False)

    @property
    def circuit_complete(self) -> bool:
        return all(kind in self.completed for kind in CIRCUIT)

    def transition(self, status: VehicleStatus) -> None:
        if status == self.status:
            return
        if status not in ALLOWED_TRANSITIONS[self.status]:
            raise ValueError(
                f"vehicle {self.id}: illegal status change {self.status.value} -> {status.value}"
            )
        if status == VehicleStatus.EXITED and not self.circuit_complete:
            raise ValueError(f"vehicle {self.id} cannot exit with circuit {sorted(self.completed)}")
        self.status = status

    def complete(self, kind: StationKind) -> None:
        """Record a finished service; charging also drains the remaining charge time"""
        if kind not in CIRCUIT:
            raise ValueError(f"{kind.value} is not part of the circuit")
        if kind in self.completed:
            raise ValueError(f"vehicle {self.id} already completed {kind.value}")
        if not prerequisites_met(self, kind):
            raise ValueError(f"vehicle {self.id} completed {kind.value} before its prerequisites")
        self.completed.add(kind)
        if kind == StationKind.CHARGING:
            self.remaining_charge_time = 0.0


def remaining_stations(vehicle: Vehicle) -> Tuple[StationKind, ...]:
    """Circuit kinds still to visit, in the fixed kind order"""
    return tuple(kind for kind in CIRCUIT if kind not in vehicle.completed)


def prerequisites_met(vehicle: Vehicle, kind: StationKind) -> bool:
    return PREREQUISITES[kind] <= vehicle.completed
