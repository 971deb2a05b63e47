import heapq
from dataclasses import dataclass
from itertools import count
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, MutableMapping, Optional, Sequence, Set, Tuple

from core.yard import Cell, YardLayout

Edge = Tuple[Cell, Cell, int]

# owner of reservations made outside any vehicle's path
UNOWNED = -1


class NoPath(Exception):
    """No conflict-free path exists within the search bound"""

    def __init__(self, start: Cell, goal: Cell, start_tick: int, reason: str = ""):
        self.start = start
        self.goal = goal
        self.start_tick = start_tick
        message = f"no path from {start} to {goal} starting at tick {start_tick}"
        super().__init__(f"{message} ({reason})" if reason else message)


class ReservationConflict(RuntimeError):
    """A commit touched a reserved vertex or edge"""


@dataclass(frozen=True)
class SpaceTimePath:
    """One cell per tick starting at start_tick; repeated cells are waits"""

    start_tick: int
    steps: Tuple[Cell, ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a path needs at least its start cell")
        for a, b in zip(self.steps, self.steps[1:]):
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) > 1:
                raise ValueError(f"path jumps from {a} to {b}")

    @property
    def end_tick(self) -> int:
        return self.start_tick + len(self.steps) - 1

    @property
    def goal(self) -> Cell:
        return self.steps[-1]

    @property
    def move_count(self) -> int:
        return sum(1 for a, b in zip(self.steps, self.steps[1:]) if a != b)

    def cell_at(self, tick: int) -> Cell:
        """Cell occupied at tick; clamps to the endpoints outside the path's span"""
        index = min(max(tick - self.start_tick, 0), len(self.steps) - 1)
        return self.steps[index]

    def timed_cells(self) -> Iterable[Tuple[Cell, int]]:
        for offset, cell in enumerate(self.steps):
            yield cell, self.start_tick + offset

    def moves(self) -> Iterable[Edge]:
        """Directed moves as (from, to, departure tick); waits are skipped"""
        for offset, (a, b) in enumerate(zip(self.steps, self.steps[1:])):
            if a != b:
                yield a, b, self.start_tick + offset


class ReservationTable:
    """
    Space-time occupancy shared by every planned path in a run.

    Vertex reservations are kept per cell as tick -> owner, edge reservations as
    (from, to, departure tick) -> owner with the opposite direction stored alongside so
    swaps are blocked too. Owners are vehicle ids, so one vehicle's future can be given
    back without touching anyone else's.
    """

    def __init__(self, terminal_cells: Iterable[Cell] = (), dwell_margin: int = 1):
        self.terminal_cells: FrozenSet[Cell] = frozenset(terminal_cells)
        self.dwell_margin = dwell_margin
        self._vertices: Dict[Cell, Dict[int, int]] = {}
        self._edges: Dict[Edge, int] = {}
        self._horizon = 0

    # -------- queries --------

    def is_free(self, cell: Cell, tick: int) -> bool:
        ticks = self._vertices.get(cell)
        return not ticks or tick not in ticks

    def is_edge_free(self, a: Cell, b: Cell, tick: int) -> bool:
        return (a, b, tick) not in self._edges

    def owner_at(self, cell: Cell, tick: int) -> Optional[int]:
        ticks = self._vertices.get(cell)
        return ticks.get(tick) if ticks else None

    def can_dwell(self, cell: Cell, tick: int) -> bool:
        """Whether a path reaching cell at tick could also keep its dwell margin there"""
        if cell in self.terminal_cells:
            return True
        return all(self.is_free(cell, tick + k) for k in range(1, self.dwell_margin + 1))

    @property
    def horizon(self) -> int:
        """Highest tick ever reserved; never decreases"""
        return self._horizon

    @property
    def vertex_reservations(self) -> Set[Tuple[Cell, int]]:
        return {(cell, t) for cell, ticks in self._vertices.items() for t in ticks}

    @property
    def edge_reservations(self) -> Set[Edge]:
        return set(self._edges)

    def search_bound(self, start_tick: int, layout: YardLayout) -> int:
        return max(start_tick, self._horizon) + 4 * (layout.width + layout.height)

    # -------- reservations --------

    def reserve_vertex(self, cell: Cell, tick: int, owner: int = UNOWNED) -> None:
        if not self.is_free(cell, tick):
            raise ReservationConflict(
                f"cell {cell} already reserved at tick {tick} by vehicle {self.owner_at(cell, tick)}"
            )
        self._vertices.setdefault(cell, {})[tick] = owner
        self._horizon = max(self._horizon, tick)

    def reserve_edge(self, a: Cell, b: Cell, tick: int, owner: int = UNOWNED) -> None:
        if not self.is_edge_free(a, b, tick):
            raise ReservationConflict(f"move {a}->{b} already reserved at tick {tick}")
        self._edges[(a, b, tick)] = owner
        self._edges[(b, a, tick)] = owner

    def release_vertex(self, cell: Cell, tick: int, owner: Optional[int] = None) -> None:
        """Drop (cell, tick) if it is owner's, or whoever's when owner is None"""
        ticks = self._vertices.get(cell)
        if not ticks or tick not in ticks:
            return
        if owner is not None and ticks[tick] != owner:
            return
        del ticks[tick]
        if not ticks:
            del self._vertices[cell]

    def release_edge(self, a: Cell, b: Cell, tick: int, owner: Optional[int] = None) -> None:
        for key in ((a, b, tick), (b, a, tick)):
            if key in self._edges and (owner is None or self._edges[key] == owner):
                del self._edges[key]

    def prune(self, before_tick: int) -> None:
        """Drop reservations strictly older than before_tick"""
        for cell in list(self._vertices):
            ticks = {t: o for t, o in self._vertices[cell].items() if t >= before_tick}
            if ticks:
                self._vertices[cell] = ticks
            else:
                del self._vertices[cell]
        self._edges = {e: o for e, o in self._edges.items() if e[2] >= before_tick}

    def dwell_ticks(self, path: SpaceTimePath) -> range:
        if path.goal in self.terminal_cells:
            return range(0)
        return range(path.end_tick + 1, path.end_tick + self.dwell_margin + 1)


def plan_path(
    start: Cell,
    goal: Cell,
    start_tick: int,
    table: ReservationTable,
    layout: YardLayout,
) -> SpaceTimePath:
    """
    Space-time A* from (start, start_tick) to goal.

    States are (cell, tick); actions are wait or one of the four moves. The heuristic is the
    exact static distance to goal, so the first goal pop has the minimum arrival tick. The
    start vertex itself is not checked: it belongs to the vehicle being planned.
    """
    distances = layout.distances_from(goal)
    if start not in distances:
        raise NoPath(start, goal, start_tick, "goal unreachable on the static grid")

    if start == goal and table.can_dwell(goal, start_tick):
        return SpaceTimePath(start_tick, (start,))

    bound = table.search_bound(start_tick, layout)
    tie = count()
    open_heap: List[Tuple[int, int, int, int, Cell]] = []
    parents: Dict[Tuple[Cell, int], Optional[Tuple[Cell, int]]] = {(start, start_tick): None}

    h0 = distances[start]
    heapq.heappush(open_heap, (h0, h0, start_tick, next(tie), start))

    while open_heap:
        _, h, tick, _, cell = heapq.heappop(open_heap)

        if cell == goal and tick > start_tick and table.can_dwell(goal, tick):
            return SpaceTimePath(start_tick, _unwind(parents, (cell, tick)))

        nxt_tick = tick + 1
        if nxt_tick > bound:
            continue

        for nxt in [cell] + layout.neighbors(cell):
            state = (nxt, nxt_tick)
            if state in parents:
                continue
            if not table.is_free(nxt, nxt_tick):
                continue
            if nxt != cell and not table.is_edge_free(cell, nxt, tick):
                continue
            parents[state] = (cell, tick)
            nh = distances[nxt]
            heapq.heappush(open_heap, (nxt_tick - start_tick + nh, nh, nxt_tick, next(tie), nxt))

    raise NoPath(start, goal, start_tick, f"search bound tick {bound} exhausted")


def plan_along(
    route: Sequence[Cell],
    start_tick: int,
    table: ReservationTable,
    layout: YardLayout,
) -> SpaceTimePath:
    """
    Earliest conflict-free traversal of a fixed cell sequence.

    States are (index along route, tick) and the only actions are wait and step to the
    next cell, so the result is the route with waits inserted. A route may pass the same
    cell twice.
    """
    if not route:
        raise ValueError("a route needs at least its start cell")
    start, goal = route[0], route[-1]
    last = len(route) - 1

    if last == 0 and table.can_dwell(goal, start_tick):
        return SpaceTimePath(start_tick, (start,))

    bound = table.search_bound(start_tick, layout)
    tie = count()
    open_heap: List[Tuple[int, int, int, int]] = [(last, start_tick, next(tie), 0)]
    parents: Dict[Tuple[int, int], Optional[Tuple[int, int]]] = {(0, start_tick): None}

    while open_heap:
        _, tick, _, index = heapq.heappop(open_heap)

        if index == last and tick > start_tick and table.can_dwell(goal, tick):
            return SpaceTimePath(start_tick, tuple(route[i] for i in _unwind(parents, (index, tick))))

        nxt_tick = tick + 1
        if nxt_tick > bound:
            continue

        for nxt in (index, index + 1) if index < last else (index,):
            state = (nxt, nxt_tick)
            if state in parents:
                continue
            if not table.is_free(route[nxt], nxt_tick):
                continue
            if nxt != index and not table.is_edge_free(route[index], route[nxt], tick):
                continue
            parents[state] = (index, tick)
            heapq.heappush(open_heap, (nxt_tick - start_tick + last - nxt, nxt_tick, next(tie), nxt))

    raise NoPath(start, goal, start_tick, f"route blocked until tick {bound}")


def commit_path(
    path: SpaceTimePath, table: ReservationTable, owner: int = UNOWNED, dwell: bool = True
) -> ReservationTable:
    """Reserve every vertex, move and swap of path, plus its dwell margin unless dwell is off"""
    dwell_ticks = table.dwell_ticks(path) if dwell else range(0)
    for cell, tick in path.timed_cells():
        if not table.is_free(cell, tick):
            raise ReservationConflict(f"commit conflicts at {cell} tick {tick}")
    for a, b, tick in path.moves():
        if not table.is_edge_free(a, b, tick):
            raise ReservationConflict(f"commit conflicts on move {a}->{b} at tick {tick}")
    for tick in dwell_ticks:
        if not table.is_free(path.goal, tick):
            raise ReservationConflict(f"dwell at {path.goal} conflicts at tick {tick}")

    for cell, tick in path.timed_cells():
        table.reserve_vertex(cell, tick, owner)
    for a, b, tick in path.moves():
        table.reserve_edge(a, b, tick, owner)
    for tick in dwell_ticks:
        table.reserve_vertex(path.goal, tick, owner)
    return table


def release_future(
    path: SpaceTimePath, from_tick: int, table: ReservationTable, owner: Optional[int] = None
) -> ReservationTable:
    """
    Remove the path's reservations at ticks >= from_tick; earlier ones stay.
    With an owner, only that owner's entries go, so cells someone else took since are kept.
    """
    timed = list(path.timed_cells()) + [(path.goal, t) for t in table.dwell_ticks(path)]
    for cell, tick in timed:
        if tick >= from_tick:
            table.release_vertex(cell, tick, owner)
    for a, b, tick in path.moves():
        if tick >= from_tick:
            table.release_edge(a, b, tick, owner)
    return table


def wait_in_place(
    owner: int,
    tick: int,
    table: ReservationTable,
    paths: MutableMapping[int, SpaceTimePath],
) -> List[int]:
    """
    Keep owner on its cell for tick and tick + 1, giving up the rest of its path.

    Whoever had (cell, tick + 1) is made to wait where it stands too, and so on down the
    chain. paths maps vehicle id to committed path for every vehicle on the grid and is
    updated in place. Returns the ids that now wait, owner first.
    """
    waiting: List[int] = []
    current = owner
    while True:
        here = paths[current].cell_at(tick)
        release_future(paths[current], tick, table, owner=current)
        blocker = table.owner_at(here, tick + 1)
        if blocker is not None:
            if blocker not in paths:
                raise ReservationConflict(f"cell {here} is pinned at tick {tick + 1} by {blocker}")
            release_future(paths[blocker], tick, table, owner=blocker)
        wait = SpaceTimePath(tick, (here, here))
        commit_path(wait, table, owner=current, dwell=False)
        paths[current] = wait
        waiting.append(current)
        if blocker is None:
            return waiting
        current = blocker


@dataclass(frozen=True)
class Conflict:
    kind: str  # "vertex" or "swap"
    tick: int
    cells: Tuple[Cell, ...]
    vehicle_ids: Tuple[int, int]


def audit_conflicts(trajectories: Mapping[int, Mapping[int, Cell]]) -> List[Conflict]:
    """Every vertex and swap conflict among recorded per-tick positions"""
    conflicts: List[Conflict] = []
    occupancy: Dict[Tuple[Cell, int], int] = {}

    for vid in sorted(trajectories):
        for tick, cell in sorted(trajectories[vid].items()):
            other = occupancy.get((cell, tick))
            if other is not None:
                conflicts.append(Conflict("vertex", tick, (cell,), (other, vid)))
            else:
                occupancy[(cell, tick)] = vid

    for vid in sorted(trajectories):
        track = trajectories[vid]
        for tick, cell in sorted(track.items()):
            nxt = track.get(tick + 1)
            if nxt is None or nxt == cell:
                continue
            other = occupancy.get((nxt, tick))
            if other is None or other == vid or other < vid:
                continue
            if trajectories[other].get(tick + 1) == cell:
                conflicts.append(Conflict("swap", tick, (cell, nxt), (vid, other)))

    return conflicts


def _unwind(
    parents: Mapping[Tuple[Any, int], Optional[Tuple[Any, int]]], state: Tuple[Any, int]
) -> Tuple[Any, ...]:
    """First elements of the states from the root to state"""
    nodes = []
    node: Optional[Tuple[Any, int]] = state
    while node is not None:
        nodes.append(node[0])
        node = parents[node]
    return tuple(reversed(nodes))
