from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Union

from core.vehicle import Assignment, Vehicle
from core.world import WorldView
from core.yard import Cell, StationKind


@dataclass(frozen=True)
class NewVehicleEntered:
    vehicle_id: int


@dataclass(frozen=True)
class StationCompleted:
    vehicle_id: int
    kind: StationKind


@dataclass(frozen=True)
class BerthFreed:
    """A vehicle drove out of a station or the parking lot"""

    vehicle_id: int
    kind: StationKind


Trigger = Union[NewVehicleEntered, StationCompleted, BerthFreed]


class GateDecision(str, Enum):
    ENTER = "Enter"
    CONTINUE = "Continue"
    STRANDED = "Stranded"


class AssignmentImpossible(Exception):
    """Every needed station and the parking lot are at capacity"""

    def __init__(self, vehicle_id: int, partial: Optional[Mapping[int, Assignment]] = None):
        self.vehicle_id = vehicle_id
        # assignments already made in the same pass
        self.partial: Dict[int, Assignment] = dict(partial or {})
        super().__init__(f"vehicle {vehicle_id} found all stations and parking at capacity")


class ControllerAgent(ABC):
    """Decision layer plugged into the simulation engine"""

    name: str = "controller"

    # Parked vehicles wait out a sampled dwell before moving again
    parking_dwell: bool = False

    @abstractmethod
    def on_spawn(self, vehicle: Vehicle, world: WorldView) -> None:
        """A vehicle has just arrived at the entrance"""

    @abstractmethod
    def on_service_done(self, vehicle: Vehicle, kind: StationKind, world: WorldView) -> None:
        """The vehicle finished its time at station kind and is still inside it"""

    @abstractmethod
    def on_triggers(self, triggers: Sequence[Trigger], world: WorldView) -> Dict[int, Assignment]:
        """Handle the triggers fired this tick; returns the assignments that were (re)computed"""

    @abstractmethod
    def on_gate_arrival(self, vehicle: Vehicle, kind: StationKind, world: WorldView) -> GateDecision:
        """The vehicle reached the gate of its target station"""

    @abstractmethod
    def planning_order(self, vehicles: Sequence[Vehicle], world: WorldView) -> List[Vehicle]:
        """Order in which vehicles reserve space-time paths"""

    def wants_to_leave_parking(self, vehicle: Vehicle) -> bool:
        """Whether a parked vehicle with no dwell left should head back out"""
        return vehicle.assignment is not None and vehicle.assignment != StationKind.PARKING

    def route_for(self, vehicle: Vehicle, start: Cell, goal: Cell) -> Optional[Sequence[Cell]]:
        """Fixed cells the vehicle should drive from start to goal, or None to route freely"""
        return None
