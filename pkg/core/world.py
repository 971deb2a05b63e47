from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

from core.vehicle import TERMINAL_STATUSES, Vehicle, VehicleStatus
from core.yard import Cell, Station, StationKind, YardLayout


class CapacityError(RuntimeError):
    """Capacity bookkeeping went out of balance"""


@dataclass
class StationState:
    """Live occupancy of one station; every unit is a berth occupied, held or promised"""

    station: Station
    occupied: int = 0
    permanent_holds: int = 0
    inbound: int = 0

    @property
    def kind(self) -> StationKind:
        return self.station.kind

    @property
    def used(self) -> int:
        return self.occupied + self.permanent_holds + self.inbound

    def free(self) -> int:
        return self.station.berth_count - self.used

    def _check(self) -> None:
        if min(self.occupied, self.permanent_holds, self.inbound) < 0:
            raise CapacityError(f"{self.kind.value} counters went negative: {self}")
        if self.used > self.station.berth_count:
            raise CapacityError(
                f"{self.kind.value} over capacity: {self.used} > {self.station.berth_count}"
            )

    def reserve(self) -> None:
        self.inbound += 1
        self._check()

    def cancel(self) -> None:
        self.inbound -= 1
        self._check()

    def admit_reserved(self) -> None:
        self.inbound -= 1
        self.occupied += 1
        self._check()

    def admit_walk_in(self) -> None:
        self.occupied += 1
        self._check()

    def vacate(self) -> None:
        self.occupied -= 1
        self._check()

    def hold_permanently(self) -> None:
        self.permanent_holds += 1
        self._check()


@dataclass
class WorldView:
    """The yard as the controllers see it at one tick"""

    layout: YardLayout
    stations: Dict[StationKind, StationState]
    vehicles: Dict[int, Vehicle] = field(default_factory=dict)
    clock: int = 0
    tick_seconds: float = 1.0

    @classmethod
    def for_layout(
        cls,
        layout: YardLayout,
        tick_seconds: float,
        prefilled: Optional[Mapping[StationKind, int]] = None,
    ) -> "WorldView":
        stations = {s.kind: StationState(station=s) for s in layout.stations}
        for kind, count in (prefilled or {}).items():
            stations[kind].permanent_holds = count
            stations[kind]._check()
        return cls(layout=layout, stations=stations, tick_seconds=tick_seconds)

    @property
    def now_seconds(self) -> float:
        return self.clock * self.tick_seconds

    def state(self, kind: StationKind) -> StationState:
        return self.stations[kind]

    def locate(self, vehicle: Vehicle) -> Cell:
        """Grid cell of a vehicle; inside a station its gate, waiting to enter the entrance"""
        if vehicle.position is not None:
            return vehicle.position
        if vehicle.station is not None:
            return self.layout.gate(vehicle.station)
        return self.layout.entrance_cell

    def active_vehicles(self) -> List[Vehicle]:
        return [v for v in self.vehicles.values() if v.status not in TERMINAL_STATUSES]

    def count(self, status: VehicleStatus) -> int:
        return sum(1 for v in self.vehicles.values() if v.status == status)


def reserve_assignment(vehicle: Vehicle, kind: StationKind, world: WorldView) -> None:
    if vehicle.reservation is not None:
        raise CapacityError(f"vehicle {vehicle.id} already holds a {vehicle.reservation.value} promise")
    world.stations[kind].reserve()
    vehicle.reservation = kind


def release_assignment(vehicle: Vehicle, world: WorldView, berth: bool = False) -> WorldView:
    """
    Give back the capacity unit a vehicle holds: its inbound promise, or with berth=True the
    berth it occupies. Releasing something the vehicle does not hold is a bookkeeping bug.
    """
    if berth:
        if vehicle.berth is None:
            raise CapacityError(f"vehicle {vehicle.id} released a berth it does not occupy")
        world.stations[vehicle.berth].vacate()
        vehicle.berth = None
    else:
        if vehicle.reservation is None:
            raise CapacityError(f"vehicle {vehicle.id} released a reservation it does not hold")
        world.stations[vehicle.reservation].cancel()
        vehicle.reservation = None
    return world


def admit_vehicle(vehicle: Vehicle, kind: StationKind, world: WorldView) -> None:
    """Move the vehicle's unit from inbound to occupied, or take a free berth on the spot"""
    if vehicle.berth is not None:
        raise CapacityError(f"vehicle {vehicle.id} already occupies a {vehicle.berth.value} berth")
    state = world.stations[kind]
    if vehicle.reservation == kind:
        state.admit_reserved()
        vehicle.reservation = None
    else:
        if vehicle.reservation is not None:
            release_assignment(vehicle, world)
        state.admit_walk_in()
    vehicle.berth = kind


def conservation_holds(world: WorldView, arrivals: int) -> bool:
    """arrivals = exited + impounded + stranded + still in the yard"""
    resolved = sum(world.count(status) for status in TERMINAL_STATUSES)
    return arrivals == resolved + len(world.active_vehicles())


def capacity_holds(world: WorldView) -> bool:
    units: Dict[StationKind, int] = {kind: 0 for kind in world.stations}
    for v in world.vehicles.values():
        if v.berth is not None:
            units[v.berth] += 1
        if v.reservation is not None:
            units[v.reservation] += 1
    for kind, state in world.stations.items():
        if state.used > state.station.berth_count:
            return False
        if units[kind] != state.occupied + state.inbound:
            return False
    return True
