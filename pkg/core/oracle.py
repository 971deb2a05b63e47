"""
Brute-force references for the assignment steps and the space-time planner.

Everything here is written from the rules directly (own BFS, own scoring, own
capacity counters) so that it can be compared against the production code on
small instances.
"""

from collections import deque
from dataclasses import dataclass, field, replace
from itertools import combinations, product
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from agents.assigner import AssignmentAgent, assign_one, describe
from agents.base import AssignmentImpossible
from agents.scorer import ScoringAgent
from core.config import DEFAULT_SERVICE_TIMES
from core.pathing import NoPath, ReservationTable, plan_path
from core.vehicle import Vehicle, VehicleStatus
from core.world import WorldView
from core.yard import Cell, StationKind, YardLayout, parse_layout
from utils.logger import logger

ORDER = ("charging", "inspection", "cleaning", "loading")
PARKING = "parking"
IMPOSSIBLE = "impossible"

ORACLE_LAYOUT = """\
; two berths per station, gates on the middle road
CCIIWWLLPP
c.i.w.l.p.
E........X
"""


class OracleScenario(BaseModel):
    """Sizes of the randomized and exhaustive oracle comparisons"""

    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=7, ge=0)
    exhaustive_assignment: bool = True
    replan_cases: int = Field(default=200, ge=0)
    max_vehicles: int = Field(default=4, ge=1, le=4)
    path_cases: int = Field(default=200, ge=0)
    max_grid: int = Field(default=6, ge=2, le=6)
    max_ticks: int = Field(default=40, ge=1)
    reservation_density: float = Field(default=0.15, ge=0, le=1)


@dataclass
class OracleReport:
    assignment_checked: int = 0
    replan_checked: int = 0
    path_checked: int = 0
    mismatches: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def oracle_layout() -> YardLayout:
    return parse_layout(ORACLE_LAYOUT, name="oracle")


# -------- assignment --------


def bfs_distance(layout: YardLayout, start: Cell, goal: Cell) -> Optional[int]:
    seen = {start: 0}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        if cell == goal:
            return seen[cell]
        r, c = cell
        for nxt in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if nxt not in seen and layout.is_traversable(nxt):
                seen[nxt] = seen[cell] + 1
                queue.append(nxt)
    return None


@dataclass
class VehicleSnapshot:
    id: int
    completed: FrozenSet[str]
    previous: Optional[str]
    reservation: Optional[str]
    berth: Optional[str]
    cell: Cell
    entry_time: float
    remaining_charge_time: float
    trust: float


def literal_assignment(
    snap: VehicleSnapshot, free: Dict[str, int], layout: YardLayout, gates: Dict[str, Cell]
) -> str:
    remaining = [k for k in ORDER if k not in snap.completed]
    if not remaining:
        return "exit"

    def capacity(kind: str) -> bool:
        if kind == PARKING and snap.berth == PARKING:
            return True
        return free[kind] + (1 if snap.reservation == kind else 0) >= 1

    # step 1
    if snap.previous in remaining and capacity(snap.previous):
        return snap.previous

    # step 2
    legal = []
    for kind in remaining:
        if kind == "loading" and not {"charging", "inspection", "cleaning"} <= snap.completed:
            continue
        if capacity(kind):
            legal.append(kind)

    # step 3
    if legal:
        best = None
        for kind in legal:
            d = bfs_distance(layout, snap.cell, gates[kind])
            key = (d if d is not None else 10**9, ORDER.index(kind))
            if best is None or key < best[0]:
                best = (key, kind)
        return best[1]

    # step 4
    if capacity(PARKING):
        return PARKING
    return IMPOSSIBLE


def oracle_score(snap: VehicleSnapshot, now: float, expected: float) -> float:
    hours = snap.remaining_charge_time / 3600.0
    b = 1.0 / max(hours, 1.0 / 60.0)
    t = now - snap.entry_time - expected
    if t < 0:
        t = 0.0
    return 60.0 * b + 20.0 * len(snap.completed) + 5.0 * t + snap.trust


def oracle_replan(
    snaps: Sequence[VehicleSnapshot],
    free: Dict[str, int],
    layout: YardLayout,
    gates: Dict[str, Cell],
    now: float,
    expected: float,
) -> Dict[int, str]:
    """
    Literal steps applied in priority order with running capacity counters.
    Every promise is handed back first; occupied parking berths stay with their vehicles.
    """
    free = dict(free)
    for snap in snaps:
        if snap.reservation is not None:
            free[snap.reservation] += 1
    order = sorted(snaps, key=lambda s: (-oracle_score(s, now, expected), s.entry_time, s.id))
    result: Dict[int, str] = {}
    for snap in order:
        unpromised = replace(snap, reservation=None)
        choice = literal_assignment(unpromised, free, layout, gates)
        if choice == IMPOSSIBLE:
            result[snap.id] = IMPOSSIBLE
            return result
        keeps_berth = choice == PARKING and snap.berth == PARKING
        if choice != "exit" and not keeps_berth:
            free[choice] -= 1
        result[snap.id] = choice
    return result


def _kind(name: Optional[str]) -> Optional[StationKind]:
    return StationKind(name) if name is not None else None


def build_world(
    layout: YardLayout, snaps: Sequence[VehicleSnapshot], extra_occupied: Dict[str, int], clock: int
) -> WorldView:
    world = WorldView.for_layout(layout, tick_seconds=1.0)
    world.clock = clock
    for snap in snaps:
        parked = snap.berth == PARKING
        v = Vehicle(
            id=snap.id,
            entry_time=snap.entry_time,
            remaining_charge_time=snap.remaining_charge_time,
            trust_score=snap.trust,
            position=None if parked else snap.cell,
            completed={StationKind(k) for k in snap.completed},
            assignment=_kind(snap.previous),
            status=VehicleStatus.PARKED if parked else VehicleStatus.MOVING,
            station=StationKind.PARKING if parked else None,
            reservation=_kind(snap.reservation),
            berth=_kind(snap.berth),
        )
        world.vehicles[v.id] = v
        if snap.reservation is not None:
            world.stations[StationKind(snap.reservation)].inbound += 1
        if parked:
            world.stations[StationKind.PARKING].occupied += 1
    for name, count in extra_occupied.items():
        world.stations[StationKind(name)].occupied += count
    for state in world.stations.values():
        state._check()
    return world


def free_counts(world: WorldView) -> Dict[str, int]:
    return {kind.value: state.free() for kind, state in world.stations.items()}


def reachable_targets(completed: FrozenSet[str]) -> List[str]:
    """Stations a vehicle with this history could have been sent to"""
    targets = [k for k in ORDER if k not in completed]
    if not {"charging", "inspection", "cleaning"} <= completed:
        targets = [k for k in targets if k != "loading"]
    return targets + [PARKING]


def legal_completed_sets() -> List[FrozenSet[str]]:
    base = ["charging", "inspection", "cleaning"]
    sets = [frozenset(c) for r in range(4) for c in combinations(base, r)]
    sets.append(frozenset(ORDER))
    return sets


def exhaustive_single_vehicle_cases(layout: YardLayout) -> Iterable[Tuple[VehicleSnapshot, Dict[str, int]]]:
    """Every completed set x previous assignment x free berth pattern x a few positions"""
    kinds = list(ORDER) + [PARKING]
    cells = [layout.entrance_cell, (1, 1), (1, 5), (2, 9)]
    for completed in legal_completed_sets():
        previous_options: List[Tuple[Optional[str], Optional[str], Optional[str]]] = [(None, None, None)]
        for kind in reachable_targets(completed):
            previous_options.append((kind, kind, None))
        previous_options.append((PARKING, None, PARKING))
        for previous, reservation, berth in previous_options:
            for pattern in product((0, 1), repeat=len(kinds)):
                for cell in cells:
                    extra = {}
                    for kind, free in zip(kinds, pattern):
                        own = 1 if kind in (reservation, berth) else 0
                        extra[kind] = 2 - free - own
                    snap = VehicleSnapshot(
                        id=0,
                        completed=completed,
                        previous=previous,
                        reservation=reservation,
                        berth=berth,
                        cell=layout.gate(StationKind.PARKING) if berth else cell,
                        entry_time=0.0,
                        remaining_charge_time=3600.0,
                        trust=1.0,
                    )
                    yield snap, extra


def random_replan_case(
    rng: np.random.Generator, layout: YardLayout, max_vehicles: int
) -> Tuple[List[VehicleSnapshot], Dict[str, int], int]:
    kinds = list(ORDER) + [PARKING]
    sets = legal_completed_sets()
    units = {k: 0 for k in kinds}
    cells = layout.road_cells()
    snaps = []
    for vid in range(int(rng.integers(1, max_vehicles + 1))):
        completed = sets[int(rng.integers(len(sets)))]
        options = reachable_targets(completed)
        previous = None
        if rng.random() < 0.6:
            previous = options[int(rng.integers(len(options)))]
        reservation = berth = None
        if previous is not None:
            if units[previous] >= 2:
                previous = None
            elif previous == PARKING and rng.random() < 0.5:
                berth = PARKING
                units[PARKING] += 1
            else:
                reservation = previous
                units[previous] += 1
        snaps.append(
            VehicleSnapshot(
                id=vid,
                completed=completed,
                previous=previous,
                reservation=reservation,
                berth=berth,
                cell=layout.gate(StationKind.PARKING) if berth else cells[int(rng.integers(len(cells)))],
                entry_time=float(rng.integers(0, 4)) * 10.0,
                remaining_charge_time=0.0 if "charging" in completed else float(rng.uniform(60, 7200)),
                trust=float(np.round(rng.uniform(0, 10), 1)),
            )
        )
    extra = {k: int(rng.integers(0, 2 - units[k] + 1)) for k in kinds}
    clock = int(rng.integers(0, 8000))
    return snaps, extra, clock


def check_assignment(scenario: OracleScenario, report: OracleReport) -> None:
    layout = oracle_layout()
    gates = {kind.value: layout.gate(kind) for kind in StationKind}

    if scenario.exhaustive_assignment:
        for snap, extra in exhaustive_single_vehicle_cases(layout):
            world = build_world(layout, [snap], extra, clock=0)
            expected = literal_assignment(snap, free_counts(world), layout, gates)
            try:
                got = assign_one(world.vehicles[snap.id], world)
                got_name = got.value if isinstance(got, StationKind) else str(got)
            except AssignmentImpossible:
                got_name = IMPOSSIBLE
            report.assignment_checked += 1
            if got_name != expected:
                report.mismatches.append(f"assign_one {snap} extra={extra}: got {got_name}, oracle {expected}")

    rng = np.random.default_rng(scenario.seed)
    scorer = ScoringAgent(layout, DEFAULT_SERVICE_TIMES, tick_s=1.0)
    agent = AssignmentAgent(scorer)
    for _ in range(scenario.replan_cases):
        snaps, extra, clock = random_replan_case(rng, layout, scenario.max_vehicles)
        world = build_world(layout, snaps, extra, clock)
        expected = oracle_replan(
            snaps, free_counts(world), layout, gates, float(clock), scorer.expected_circuit_time
        )
        try:
            got = {vid: describe(a) for vid, a in agent.replan([], world).items()}
        except AssignmentImpossible as e:
            # compare what was assigned before the pass gave up
            got = {vid: describe(a) for vid, a in e.partial.items()}
            got[e.vehicle_id] = IMPOSSIBLE
        report.replan_checked += 1
        if got != expected:
            report.mismatches.append(f"replan {snaps} extra={extra} clock={clock}: got {got}, oracle {expected}")


# -------- pathing --------


def open_grid(rows: Sequence[str]) -> YardLayout:
    """Bare grid for path tests: '.' free, '#' blocked, no stations"""
    height = len(rows)
    width = max(len(r) for r in rows)
    traversable = tuple(
        tuple(c < len(row) and row[c] != "#" for c in range(width)) for row in rows
    )
    free_cells = [(r, c) for r in range(height) for c in range(width) if traversable[r][c]]
    anchor = free_cells[0] if free_cells else (0, 0)
    return YardLayout(
        width=width,
        height=height,
        traversable=traversable,
        stations=(),
        entrance_cell=anchor,
        exit_cell=anchor,
        name="grid",
    )


def brute_force_arrival_tick(
    layout: YardLayout, start: Cell, goal: Cell, start_tick: int, table: ReservationTable
) -> Optional[int]:
    """Layered BFS over the space-time graph using the raw reservation sets"""
    vertices: Set[Tuple[Cell, int]] = table.vertex_reservations
    edges = table.edge_reservations
    bound = max(start_tick, table.horizon) + 4 * (layout.width + layout.height)

    def free(cell: Cell, tick: int) -> bool:
        return (cell, tick) not in vertices

    def settles(tick: int) -> bool:
        if goal in table.terminal_cells:
            return True
        return all(free(goal, tick + k) for k in range(1, table.dwell_margin + 1))

    if start == goal and settles(start_tick):
        return start_tick

    frontier = {start}
    tick = start_tick
    while frontier and tick < bound:
        nxt_frontier = set()
        for cell in frontier:
            r, c = cell
            for nxt in (cell, (r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if not layout.is_traversable(nxt) or not free(nxt, tick + 1):
                    continue
                if nxt != cell and (cell, nxt, tick) in edges:
                    continue
                nxt_frontier.add(nxt)
        tick += 1
        frontier = nxt_frontier
        if goal in frontier and settles(tick):
            return tick
    return None


def random_grid_case(
    rng: np.random.Generator, max_grid: int, max_ticks: int, density: float
) -> Tuple[YardLayout, Cell, Cell, ReservationTable]:
    height = int(rng.integers(1, max_grid + 1))
    width = int(rng.integers(2, max_grid + 1))
    rows = ["".join("#" if rng.random() < 0.2 else "." for _ in range(width)) for _ in range(height)]
    layout = open_grid(rows)
    cells = layout.road_cells()
    if len(cells) < 2:
        layout = open_grid(["." * width] * height)
        cells = layout.road_cells()
    start = cells[int(rng.integers(len(cells)))]
    goal = cells[int(rng.integers(len(cells)))]

    terminal = [goal] if rng.random() < 0.5 else []
    table = ReservationTable(terminal_cells=terminal, dwell_margin=int(rng.integers(0, 2)))
    for cell in cells:
        for tick in range(1, max_ticks + 1):
            if rng.random() < density and (cell, tick) != (start, 0):
                table.reserve_vertex(cell, tick)
    for cell in cells:
        for nxt in layout.neighbors(cell):
            for tick in range(0, max_ticks):
                if rng.random() < density / 4 and table.is_edge_free(cell, nxt, tick):
                    table.reserve_edge(cell, nxt, tick)
    return layout, start, goal, table


def check_paths(scenario: OracleScenario, report: OracleReport) -> None:
    rng = np.random.default_rng(scenario.seed + 1)
    for case in range(scenario.path_cases):
        layout, start, goal, table = random_grid_case(
            rng, scenario.max_grid, scenario.max_ticks, scenario.reservation_density
        )
        expected = brute_force_arrival_tick(layout, start, goal, 0, table)
        try:
            got: Optional[int] = plan_path(start, goal, 0, table, layout).end_tick
        except NoPath:
            got = None
        report.path_checked += 1
        if got != expected:
            report.mismatches.append(
                f"path case {case} {start}->{goal} on {layout.width}x{layout.height}: "
                f"got {got}, brute force {expected}"
            )


def run_oracle(scenario: OracleScenario) -> OracleReport:
    report = OracleReport()
    check_assignment(scenario, report)
    check_paths(scenario, report)
    logger.info(
        f"Oracle: {report.assignment_checked} assign_one, {report.replan_checked} replan, "
        f"{report.path_checked} path cases, {len(report.mismatches)} mismatches"
    )
    return report
