import heapq
import json
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Deque, Dict, List, Optional, Set, Tuple

from agents.assigner import AssignmentAgent, describe
from agents.base import (
    AssignmentImpossible,
    BerthFreed,
    ControllerAgent,
    GateDecision,
    NewVehicleEntered,
    StationCompleted,
    Trigger,
)
from agents.isolated import IsolatedAgent
from agents.scorer import ScoringAgent
from core.config import SimConfig
from core.pathing import (
    NoPath,
    ReservationTable,
    SpaceTimePath,
    commit_path,
    plan_along,
    plan_path,
    release_future,
    wait_in_place,
)
from core.sampling import (
    InspectionOutcome,
    RandomStreams,
    draw_profile,
    sample_arrivals,
    sample_service_time,
    seconds_to_ticks,
)
from core.vehicle import EXIT, Vehicle, VehicleStatus
from core.world import WorldView, admit_vehicle, release_assignment
from core.yard import Cell, StationKind
from utils.logger import logger


class RunStatus(str, Enum):
    COMPLETED = "Completed"
    FACILITY_FAILURE = "FacilityFailure"
    TIME_CAP = "TimeCap"
    ERROR = "Error"


@dataclass(frozen=True)
class EventRecord:
    tick: int
    vehicle_id: int
    kind: str
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))


@dataclass
class RunOutcome:
    status: RunStatus
    arrivals: int
    exited_count: int
    failure_time: Optional[float]
    last_exit_time: Optional[float]
    events: List[EventRecord]
    scheduled_arrivals: int = 0
    exits_within_window: int = 0
    impounded_count: int = 0
    stranded_count: int = 0
    end_time: float = 0.0
    window_seconds: float = 0.0
    trajectories: Optional[Dict[int, Dict[int, Cell]]] = None

    def events_ndjson(self) -> str:
        return "".join(event.to_json() + "\n" for event in self.events)


def build_controller(config: SimConfig) -> ControllerAgent:
    if config.controller == "orchestrated":
        scorer = ScoringAgent(
            config.layout, config.service_distributions, config.tick_seconds, config.score_weights
        )
        return AssignmentAgent(scorer)
    return IsolatedAgent(config.layout)


class YardSimulation:
    """
    One run of the yard, advanced tick by tick.

    Each tick: vehicles move along committed paths and act at their target gates,
    service timers fire, arrivals reach the entrance, the controller handles this
    tick's triggers, and vehicles that need a route plan one. A vehicle inside a
    station (or still outside the entrance) only takes the grid once its path commits.
    """

    PRUNE_EVERY = 50

    def __init__(self, config: SimConfig):
        self.config = config
        self.layout = config.layout
        self.tick_s = config.tick_seconds
        self.streams = RandomStreams(config.seed)
        self.world = WorldView.for_layout(self.layout, self.tick_s, config.prefilled_berths)
        self.table = ReservationTable(self.layout.terminal_cells, config.dwell_margin_ticks)
        self.agent = build_controller(config)
        self.max_tick = seconds_to_ticks(config.max_sim_seconds, self.tick_s)

        if config.arrival_times is not None:
            arrival_times = list(config.arrival_times)
        else:
            arrival_times = sample_arrivals(
                config.demand, config.window_seconds, self.streams.generator("arrivals")
            )
        self.scheduled: Deque[Tuple[int, float]] = deque(
            (seconds_to_ticks(a, self.tick_s), a) for a in arrival_times
        )
        self.scheduled_count = len(arrival_times)
        self.queue: Deque[Tuple[int, float]] = deque()
        self.next_id = 0

        self.timers: List[Tuple[int, int, StationKind]] = []
        self.triggers: List[Trigger] = []
        self.stalled: Set[int] = set()

        self.events: List[EventRecord] = []
        self.trajectories: Optional[Dict[int, Dict[int, Cell]]] = (
            {} if config.record_trajectories else None
        )

        self.exit_ticks: List[int] = []
        self.status: Optional[RunStatus] = None
        self.failure_tick: Optional[int] = None
        self.tick = 0
        self.last_prune = 0

    # -------- main loop --------

    def run(self) -> RunOutcome:
        logger.info(
            f"Starting {self.config.controller} run on {self.layout.name} "
            f"(demand {self.config.demand:g}, seed {self.config.seed}, "
            f"{self.scheduled_count} arrivals)"
        )
        t = 0
        while self.status is None:
            self.step(t)
            if self.status is not None:
                break
            if self._all_resolved():
                self.status = RunStatus.COMPLETED
                break

            t = self._next_tick(t)
            if t > self.max_tick:
                self.tick = self.max_tick
                self.status = RunStatus.TIME_CAP
                logger.warning(f"Run hit the time cap at {self.config.max_sim_seconds / 3600:.1f} h")

        outcome = self._outcome()
        logger.info(
            f"Run finished: {outcome.status.value}, {outcome.exited_count}/{outcome.arrivals} exited"
        )
        return outcome

    def step(self, t: int) -> None:
        """Run every phase of tick t; ticks must be stepped in increasing order"""
        self.tick = t
        self.world.clock = t

        self._advance(t)
        if self.status is None:
            self._serve(t)
            self._admit_arrivals(t)
            self._dispatch(t)
        if self.status is None:
            self._plan_all(t)

        if t - self.last_prune >= self.PRUNE_EVERY:
            self.table.prune(t)
            self.last_prune = t

    # -------- phase A: movement and gate arrivals --------

    def _advance(self, t: int) -> None:
        on_grid = self._on_grid()
        for v in on_grid:
            if v.planned_path is not None:
                v.position = v.planned_path.cell_at(t)
            self._record(v, t)

        for v in on_grid:
            path = v.planned_path
            if path is None or t < path.end_tick:
                continue
            target = self._target_cell(v)
            if target is not None and v.position == target == path.goal:
                self._arrive(v, t)
            else:
                v.needs_plan = True
            if self.status is not None:
                return

    def _arrive(self, v: Vehicle, t: int) -> None:
        if v.assignment == EXIT:
            v.transition(VehicleStatus.EXITED)
            v.position = None
            v.planned_path = None
            v.needs_plan = False
            self.exit_ticks.append(t)
            self._event(t, v.id, "exited", elapsed_s=round(t * self.tick_s - v.entry_time, 3))
            return

        kind: StationKind = v.assignment
        decision = self.agent.on_gate_arrival(v, kind, self.world)

        if decision == GateDecision.ENTER:
            admit_vehicle(v, kind, self.world)
            v.position = None
            v.station = kind
            v.planned_path = None
            v.needs_plan = False
            if kind == StationKind.PARKING:
                v.transition(VehicleStatus.PARKED)
                self._event(t, v.id, "parked")
                if self.agent.parking_dwell:
                    dwell = sample_service_time(
                        kind, v.rng, self.config.service_distributions, self.config.service_floor_seconds
                    )
                    self._start_timer(v, t, kind, dwell)
            else:
                v.transition(VehicleStatus.SERVING)
                self._event(t, v.id, "gate_enter", station=kind.value)
                self._start_timer(v, t, kind, v.service_times[kind])
        elif decision == GateDecision.CONTINUE:
            v.needs_plan = True
            self._event(t, v.id, "gate_continue", station=kind.value, next=describe(v.assignment))
        else:
            v.transition(VehicleStatus.STRANDED)
            self._event(t, v.id, "stranded", station=kind.value)
            self._fail(t, v.id)

    def _start_timer(self, v: Vehicle, t: int, kind: StationKind, seconds: float) -> None:
        end = t + max(1, seconds_to_ticks(seconds, self.tick_s))
        v.service_end_tick = end
        heapq.heappush(self.timers, (end, v.id, kind))

    # -------- phase B: service completions and impounds --------

    def _serve(self, t: int) -> None:
        while self.timers and self.timers[0][0] <= t:
            _, vid, kind = heapq.heappop(self.timers)
            v = self.world.vehicles[vid]
            v.service_end_tick = None
            if kind == StationKind.INSPECTION and v.fails_inspection:
                self._impound(v, t)
                continue
            if kind != StationKind.PARKING:
                # finished but still inside, holding the berth until it drives out
                v.complete(kind)
                v.transition(VehicleStatus.MOVING)
                self.triggers.append(StationCompleted(vid, kind))
            self.agent.on_service_done(v, kind, self.world)
            self._event(t, vid, "service_done", station=kind.value)

        for v in self._vehicles():
            if v.impound_pending and self.world.stations[StationKind.PARKING].free() > 0:
                self._impound(v, t)

    def _impound(self, v: Vehicle, t: int) -> None:
        parking = self.world.stations[StationKind.PARKING]
        if parking.free() <= 0:
            if not v.impound_pending:
                v.impound_pending = True
                self._event(t, v.id, "impound_pending")
            return
        release_assignment(v, self.world, berth=True)
        parking.hold_permanently()
        v.impound_pending = False
        v.station = StationKind.PARKING
        v.transition(VehicleStatus.IMPOUNDED)
        self.triggers.append(StationCompleted(v.id, StationKind.INSPECTION))
        self._event(t, v.id, "impounded")

    # -------- phase C: arrivals --------

    def _admit_arrivals(self, t: int) -> None:
        while self.scheduled and self.scheduled[0][0] <= t:
            arrival_tick, arrival_s = self.scheduled.popleft()
            self.queue.append((arrival_tick, arrival_s))

        entrance = self.layout.entrance_cell
        if self.queue and not self._entrant_waiting() and self.table.is_free(entrance, t):
            arrival_tick, arrival_s = self.queue.popleft()
            self._spawn(t, arrival_s, t - arrival_tick)

        for arrival_tick, arrival_s in self.queue:
            if arrival_tick == t:
                self._event(t, -1, "arrival_queued", arrival_s=round(arrival_s, 3))

    def _spawn(self, t: int, arrival_s: float, waited: int) -> None:
        """The vehicle is at the entrance and known to the controller; it drives in in phase E"""
        vid = self.next_id
        self.next_id += 1
        profile = draw_profile(
            self.streams,
            vid,
            self.config.service_distributions,
            self.config.trust_range,
            self.config.inspection_fail_rate,
            self.config.service_floor_seconds,
            self.config.charging_ceiling_seconds,
        )
        v = Vehicle(
            id=vid,
            entry_time=t * self.tick_s,
            remaining_charge_time=profile.remaining_charge_time,
            trust_score=profile.trust_score,
            service_times=dict(profile.service_times),
            fails_inspection=profile.inspection == InspectionOutcome.FAIL,
            rng=self.streams.generator("dwell", vid),
        )
        self.world.vehicles[vid] = v
        self.triggers.append(NewVehicleEntered(vid))
        self.agent.on_spawn(v, self.world)
        self._event(t, vid, "spawned", arrival_s=round(arrival_s, 3), waited_ticks=waited)

    # -------- phase D: controller triggers --------

    def _dispatch(self, t: int) -> None:
        triggers, self.triggers = self.triggers, []
        before = {vid: v.assignment for vid, v in self.world.vehicles.items()}
        try:
            assignments = self.agent.on_triggers(triggers, self.world)
        except AssignmentImpossible as e:
            self._fail(t, e.vehicle_id)
            return

        for vid, assignment in sorted(assignments.items()):
            if before.get(vid) != assignment:
                self._event(t, vid, "assigned", station=describe(assignment))

        for v in self._on_grid():
            target = self._target_cell(v)
            if target is not None and (v.planned_path is None or v.planned_path.goal != target):
                v.needs_plan = True

    # -------- phase E: path planning --------

    def _plan_all(self, t: int) -> None:
        pending = [v for v in self._vehicles() if self._wants_path(v)]
        for v in self.agent.planning_order(pending, self.world):
            # an earlier arrival in this pass may have ended the run
            if self.status is not None:
                return
            if v.position is None:
                self._drive_in(v, t)
            elif v.needs_plan:
                self._plan_vehicle(v, t, allow_arrival=True)

    def _wants_path(self, v: Vehicle) -> bool:
        if self._target_cell(v) is None:
            return False
        if v.position is not None:
            return v.status == VehicleStatus.MOVING and v.needs_plan
        if v.status == VehicleStatus.MOVING:
            return True
        return (
            v.status == VehicleStatus.PARKED
            and v.service_end_tick is None
            and self.agent.wants_to_leave_parking(v)
        )

    def _drive_in(self, v: Vehicle, t: int) -> None:
        """Bring a vehicle onto the grid from its gate or the entrance, if a path commits now"""
        start = self.world.locate(v)
        if not self.table.is_free(start, t):
            return
        path = self._route(v, start, self._target_cell(v), t)
        if path is None:
            return

        v.position = start
        self._record(v, t)
        if v.station is not None:
            kind = v.station
            release_assignment(v, self.world, berth=True)
            v.station = None
            v.transition(VehicleStatus.MOVING)
            self.triggers.append(BerthFreed(v.id, kind))
            self._event(t, v.id, "emerged", station=kind.value)
        else:
            self._event(t, v.id, "entered_grid")
        self._take_path(v, path, t)

    def _plan_vehicle(self, v: Vehicle, t: int, allow_arrival: bool) -> None:
        here = v.position
        target = self._target_cell(v)
        old = v.planned_path
        if old is not None:
            release_future(old, t, self.table, owner=v.id)

        path: Optional[SpaceTimePath] = None
        if here != target or allow_arrival:
            path = self._route(v, here, target, t)

        if path is not None:
            self._take_path(v, path, t)
            return
        self._stall(v, old, t)

    def _route(self, v: Vehicle, start: Cell, goal: Cell, t: int) -> Optional[SpaceTimePath]:
        corridor = self.agent.route_for(v, start, goal)
        if corridor is not None:
            try:
                return plan_along(corridor, t, self.table, self.layout)
            except NoPath:
                pass
        try:
            return plan_path(start, goal, t, self.table, self.layout)
        except NoPath:
            return None

    def _take_path(self, v: Vehicle, path: SpaceTimePath, t: int) -> None:
        commit_path(path, self.table, owner=v.id)
        v.planned_path = path
        v.needs_plan = False
        self.stalled.discard(v.id)
        self._event(t, v.id, "path", goal=list(path.goal), end_tick=path.end_tick)
        if path.end_tick == t:
            self._arrive(v, t)
            if v.needs_plan and v.position is not None and self.status is None:
                self._plan_vehicle(v, t, allow_arrival=False)

    def _stall(self, v: Vehicle, old: Optional[SpaceTimePath], t: int) -> None:
        """No path now: keep what is left of the old one, else wait where it stands"""
        if v.id not in self.stalled:
            self.stalled.add(v.id)
            self._event(t, v.id, "stalled", cell=list(v.position), target=describe(v.assignment))

        if old is not None and old.end_tick > t:
            remainder = SpaceTimePath(t, old.steps[t - old.start_tick:])
            commit_path(remainder, self.table, owner=v.id)
            v.planned_path = remainder
            return

        paths = {u.id: u.planned_path for u in self._on_grid() if u.planned_path is not None}
        paths[v.id] = old if old is not None else SpaceTimePath(t, (v.position,))
        for vid in wait_in_place(v.id, t, self.table, paths):
            u = self.world.vehicles[vid]
            u.planned_path = paths[vid]
            u.needs_plan = True
            if vid != v.id:
                self._event(t, vid, "yielded", cell=list(u.position), to=v.id)

    # -------- helpers --------

    def _vehicles(self) -> List[Vehicle]:
        return list(self.world.vehicles.values())

    def _on_grid(self) -> List[Vehicle]:
        return [
            v
            for v in self.world.vehicles.values()
            if v.status == VehicleStatus.MOVING and v.position is not None
        ]

    def _entrant_waiting(self) -> bool:
        return any(
            v.status == VehicleStatus.MOVING and v.position is None and v.station is None
            for v in self.world.vehicles.values()
        )

    def _target_cell(self, v: Vehicle) -> Optional[Cell]:
        if v.assignment is None:
            return None
        if v.assignment == EXIT:
            return self.layout.exit_cell
        return self.layout.gate(v.assignment)

    def _record(self, v: Vehicle, t: int) -> None:
        if self.trajectories is not None and v.position is not None:
            self.trajectories.setdefault(v.id, {})[t] = v.position

    def _event(self, t: int, vid: int, kind: str, **detail: Any) -> None:
        self.events.append(EventRecord(t, vid, kind, detail))
        logger.trace("t={} vehicle={} {} {}", t, vid, kind, detail)

    def _fail(self, t: int, vid: int) -> None:
        self.status = RunStatus.FACILITY_FAILURE
        self.failure_tick = t
        self._event(t, vid, "facility_failure")
        logger.warning(
            f"Facility failure at {t * self.tick_s / 3600:.2f} h: vehicle {vid} found everything full"
        )

    def _all_resolved(self) -> bool:
        if self.scheduled or self.queue:
            return False
        return not self.world.active_vehicles()

    def _next_tick(self, t: int) -> int:
        """Next tick with anything to do; jumps over stretches where every vehicle is inside"""
        busy = (
            self.queue
            or self.triggers
            or any(v.status == VehicleStatus.MOVING for v in self.world.vehicles.values())
            or any(self._wants_path(v) for v in self.world.vehicles.values())
        )
        if busy:
            return t + 1
        upcoming = []
        if self.timers:
            upcoming.append(self.timers[0][0])
        if self.scheduled:
            upcoming.append(self.scheduled[0][0])
        if not upcoming:
            # nothing will ever change again
            return self.max_tick + 1
        return max(t + 1, min(upcoming))

    def _outcome(self) -> RunOutcome:
        window_ticks = self.config.window_seconds / self.tick_s
        last_exit = max(self.exit_ticks) if self.exit_ticks else None
        return RunOutcome(
            status=self.status,
            arrivals=self.next_id,
            exited_count=len(self.exit_ticks),
            failure_time=(
                self.failure_tick * self.tick_s if self.failure_tick is not None else None
            ),
            last_exit_time=last_exit * self.tick_s if last_exit is not None else None,
            events=self.events,
            scheduled_arrivals=self.scheduled_count,
            exits_within_window=sum(1 for x in self.exit_ticks if x < window_ticks),
            impounded_count=self.world.count(VehicleStatus.IMPOUNDED),
            stranded_count=self.world.count(VehicleStatus.STRANDED),
            end_time=self.tick * self.tick_s,
            window_seconds=self.config.window_seconds,
            trajectories=self.trajectories,
        )


def run(config: SimConfig) -> RunOutcome:
    """Simulate one configuration; equal configs give equal outcomes"""
    return YardSimulation(config).run()
