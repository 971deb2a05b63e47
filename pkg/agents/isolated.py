from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from agents.base import ControllerAgent, GateDecision, Trigger
from core.vehicle import EXIT, Assignment, Vehicle, prerequisites_met, remaining_stations
from core.world import WorldView
from core.yard import Cell, StationKind, YardLayout, shortest_cell_path
from utils.logger import logger

LOOP_ORDER: Tuple[StationKind, ...] = (
    StationKind.CHARGING,
    StationKind.INSPECTION,
    StationKind.CLEANING,
    StationKind.LOADING,
    StationKind.PARKING,
)


@dataclass(frozen=True)
class LoopRoute:
    """The fixed gate-to-gate loop, with one static shortest path per leg"""

    order: Tuple[StationKind, ...]
    legs: Dict[Tuple[StationKind, StationKind], Tuple[Cell, ...]]

    @classmethod
    def for_layout(cls, layout: YardLayout, order: Tuple[StationKind, ...] = LOOP_ORDER) -> "LoopRoute":
        legs = {}
        for here, there in zip(order, order[1:] + order[:1]):
            path = shortest_cell_path(layout, layout.gate(here), layout.gate(there))
            if path is None:
                raise ValueError(f"no road from the {here.value} gate to the {there.value} gate")
            legs[(here, there)] = path
        return cls(order=order, legs=legs)

    def successor(self, kind: StationKind) -> StationKind:
        return self.order[(self.order.index(kind) + 1) % len(self.order)]

    def leg(self, here: StationKind) -> Tuple[Cell, ...]:
        return self.legs[(here, self.successor(here))]

    def corridor(self, here: StationKind, there: StationKind) -> Tuple[Cell, ...]:
        """Cells driven from gate here to gate there, passing every gate in between"""
        cells = [self.leg(here)[0]]
        kind = here
        while True:
            cells.extend(self.leg(kind)[1:])
            kind = self.successor(kind)
            if kind == there:
                return tuple(cells)

    @property
    def length_cells(self) -> int:
        return sum(len(path) - 1 for path in self.legs.values())


def next_target(
    vehicle: Vehicle, current: Optional[StationKind], order: Tuple[StationKind, ...] = LOOP_ORDER
) -> Assignment:
    """
    Next stop along the loop after current (or from the top of the loop).

    Skips completed kinds, kinds with unmet prerequisites and kinds already found
    full in this pass. Occupancy is deliberately not an input.
    """
    needed = [k for k in remaining_stations(vehicle) if prerequisites_met(vehicle, k)]
    if not needed:
        return EXIT
    if set(needed) <= vehicle.found_full:
        return StationKind.PARKING

    start = 0 if current is None else order.index(current) + 1
    for step in range(len(order)):
        kind = order[(start + step) % len(order)]
        if kind in needed and kind not in vehicle.found_full:
            return kind
    return StationKind.PARKING


class IsolatedAgent(ControllerAgent):
    """Static-rules baseline: loop circulation, capacity seen only at the gate"""

    name = "isolated"
    parking_dwell = True

    def __init__(self, layout: YardLayout):
        self.route = LoopRoute.for_layout(layout)
        self.gate_kinds: Dict[Cell, StationKind] = {layout.gate(kind): kind for kind in self.route.order}
        self.driving: Dict[int, Tuple[Cell, ...]] = {}
        logger.info(f"Isolated Agent initialized (loop of {self.route.length_cells} cells)")

    def on_spawn(self, vehicle: Vehicle, world: WorldView) -> None:
        vehicle.found_full.clear()
        vehicle.assignment = next_target(vehicle, None, self.route.order)

    def on_service_done(self, vehicle: Vehicle, kind: StationKind, world: WorldView) -> None:
        if kind == StationKind.PARKING:
            vehicle.assignment = next_target(vehicle, None, self.route.order)
        else:
            vehicle.assignment = next_target(vehicle, kind, self.route.order)

    def on_triggers(self, triggers: Sequence[Trigger], world: WorldView) -> Dict[int, Assignment]:
        return {}

    def on_gate_arrival(self, vehicle: Vehicle, kind: StationKind, world: WorldView) -> GateDecision:
        if world.stations[kind].free() > 0:
            vehicle.found_full.clear()
            self.driving.pop(vehicle.id, None)
            return GateDecision.ENTER

        vehicle.found_full.add(kind)
        needed = {k for k in remaining_stations(vehicle) if prerequisites_met(vehicle, k)}
        if kind == StationKind.PARKING and needed <= vehicle.found_full:
            return GateDecision.STRANDED

        vehicle.assignment = next_target(vehicle, kind, self.route.order)
        return GateDecision.CONTINUE

    def planning_order(self, vehicles: Sequence[Vehicle], world: WorldView) -> List[Vehicle]:
        return sorted(vehicles, key=lambda v: (v.entry_time, v.id))

    def route_for(self, vehicle: Vehicle, start: Cell, goal: Cell) -> Optional[Sequence[Cell]]:
        """
        Gate to gate the vehicle follows the loop's legs. Replanning part way along, it
        keeps to the rest of the corridor it was on; the entrance and exit are free driving.
        """
        here, there = self.gate_kinds.get(start), self.gate_kinds.get(goal)
        if here is not None and there is not None and here != there:
            corridor = self.route.corridor(here, there)
            self.driving[vehicle.id] = corridor
            return corridor

        corridor = self.driving.get(vehicle.id)
        if corridor is None or corridor[-1] != goal or start not in corridor:
            return None
        at = len(corridor) - 1 - corridor[::-1].index(start)
        return corridor[at:]
