from typing import Dict, List, Optional, Sequence, Tuple

from agents.base import (
    AssignmentImpossible,
    ControllerAgent,
    GateDecision,
    Trigger,
)
from agents.scorer import ScoringAgent
from core.vehicle import EXIT, Assignment, Vehicle, VehicleStatus, prerequisites_met, remaining_stations
from core.world import WorldView, release_assignment, reserve_assignment
from core.yard import CIRCUIT, StationKind, grid_distance
from utils.logger import logger

UNREACHABLE = 10**9


def has_capacity(kind: StationKind, vehicle: Vehicle, world: WorldView) -> bool:
    """A berth is available to this vehicle, counting the promise it already holds"""
    if kind == StationKind.PARKING and vehicle.berth == StationKind.PARKING:
        return True
    own = 1 if vehicle.reservation == kind else 0
    return world.stations[kind].free() + own > 0


def assign_one(vehicle: Vehicle, world: WorldView) -> Assignment:
    """
    Station choice for one vehicle:

    1. keep the previous station if it still has capacity (parking is never kept here)
    2. keep remaining stations whose prerequisites are met and that have capacity
    3. of those, the gate closest to the vehicle, ties by kind order
    4. otherwise parking, or AssignmentImpossible when parking is full too

    A vehicle with its circuit complete heads for the exit.
    """
    remaining = remaining_stations(vehicle)
    if not remaining:
        return EXIT

    previous = vehicle.assignment
    if (
        isinstance(previous, StationKind)
        and previous != StationKind.PARKING
        and previous in remaining
        and has_capacity(previous, vehicle, world)
    ):
        return previous

    candidates = [
        kind
        for kind in remaining
        if prerequisites_met(vehicle, kind) and has_capacity(kind, vehicle, world)
    ]
    if candidates:
        here = world.locate(vehicle)

        def closeness(kind: StationKind) -> Tuple[int, int]:
            distance = grid_distance(world.layout, here, world.layout.gate(kind))
            return (UNREACHABLE if distance is None else distance, CIRCUIT.index(kind))

        return min(candidates, key=closeness)

    if has_capacity(StationKind.PARKING, vehicle, world):
        return StationKind.PARKING

    raise AssignmentImpossible(vehicle.id)


def apply_assignment(vehicle: Vehicle, assignment: Assignment, world: WorldView) -> None:
    """Move the vehicle's inbound promise to the new assignment"""
    needs_unit = isinstance(assignment, StationKind) and not (
        assignment == StationKind.PARKING and vehicle.berth == StationKind.PARKING
    )
    if vehicle.reservation is not None and (not needs_unit or vehicle.reservation != assignment):
        release_assignment(vehicle, world)
    if needs_unit and vehicle.reservation is None:
        reserve_assignment(vehicle, assignment, world)
    vehicle.assignment = assignment


class AssignmentAgent(ControllerAgent):
    """Orchestrated controller: priority-ordered, capacity-aware station assignment"""

    name = "orchestrated"
    parking_dwell = False

    def __init__(self, scorer: ScoringAgent):
        self.scorer = scorer
        self.replans = 0
        logger.info("Assignment Agent initialized")

    def replan(self, triggers: Sequence[Trigger], world: WorldView) -> Dict[int, Assignment]:
        """
        Reassign every vehicle not being served, highest priority first.

        All inbound promises are handed back before the pass, so a vehicle keeps its previous
        station only if a berth is still free once everyone ranked above it has chosen.
        Occupied berths (parked vehicles, finished vehicles still inside) are not touched.
        """
        for trigger in triggers:
            if trigger.vehicle_id not in world.vehicles:
                raise KeyError(f"trigger for unknown vehicle {trigger.vehicle_id}")

        candidates = [
            v
            for v in world.vehicles.values()
            if v.status in (VehicleStatus.MOVING, VehicleStatus.PARKED) and not v.impound_pending
        ]
        ranked = self.scorer.rank(candidates, world.now_seconds)
        for vehicle in ranked:
            if vehicle.reservation is not None:
                release_assignment(vehicle, world)

        result: Dict[int, Assignment] = {}
        for vehicle in ranked:
            try:
                assignment = assign_one(vehicle, world)
            except AssignmentImpossible as err:
                raise AssignmentImpossible(vehicle.id, partial=result) from err
            apply_assignment(vehicle, assignment, world)
            result[vehicle.id] = assignment

        self.replans += 1
        return result

    def on_spawn(self, vehicle: Vehicle, world: WorldView) -> None:
        # Assignment happens in the replan fired by the entry trigger
        vehicle.assignment = None

    def on_service_done(self, vehicle: Vehicle, kind: StationKind, world: WorldView) -> None:
        if kind != StationKind.PARKING:
            vehicle.assignment = None

    def on_triggers(self, triggers: Sequence[Trigger], world: WorldView) -> Dict[int, Assignment]:
        if not triggers:
            return {}
        return self.replan(triggers, world)

    def on_gate_arrival(self, vehicle: Vehicle, kind: StationKind, world: WorldView) -> GateDecision:
        # The berth was promised when the assignment was made
        return GateDecision.ENTER

    def planning_order(self, vehicles: Sequence[Vehicle], world: WorldView) -> List[Vehicle]:
        return self.scorer.rank(vehicles, world.now_seconds)


def describe(assignment: Optional[Assignment]) -> str:
    if assignment is None:
        return "none"
    return assignment.value if isinstance(assignment, StationKind) else str(assignment)
