from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple


Cell = Tuple[int, int]

LAYOUT_DIR = Path(__file__).resolve().parent.parent / "layouts"
CELL_SIZE_M = 10.0


class StationKind(str, Enum):
    """Station kinds in the fixed tie-break order used everywhere"""

    CHARGING = "charging"
    INSPECTION = "inspection"
    CLEANING = "cleaning"
    LOADING = "loading"
    PARKING = "parking"


CIRCUIT: Tuple[StationKind, ...] = (
    StationKind.CHARGING,
    StationKind.INSPECTION,
    StationKind.CLEANING,
    StationKind.LOADING,
)

PREREQUISITES: Dict[StationKind, FrozenSet[StationKind]] = {
    StationKind.CHARGING: frozenset(),
    StationKind.INSPECTION: frozenset(),
    StationKind.CLEANING: frozenset(),
    StationKind.LOADING: frozenset(
        {StationKind.CHARGING, StationKind.INSPECTION, StationKind.CLEANING}
    ),
    StationKind.PARKING: frozenset(),
}

BERTH_CHARS: Dict[str, StationKind] = {
    "C": StationKind.CHARGING,
    "I": StationKind.INSPECTION,
    "W": StationKind.CLEANING,
    "L": StationKind.LOADING,
    "P": StationKind.PARKING,
}
GATE_CHARS: Dict[str, StationKind] = {ch.lower(): kind for ch, kind in BERTH_CHARS.items()}
KIND_CHARS: Dict[StationKind, str] = {kind: ch for ch, kind in BERTH_CHARS.items()}

ROAD, BLOCKED, ENTRANCE, EXIT = ".", "#", "E", "X"

# up, down, left, right
DIRECTIONS: Tuple[Cell, ...] = ((-1, 0), (1, 0), (0, -1), (0, 1))


class YardSize(str, Enum):
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"


class LayoutError(ValueError):
    """Raised when a layout file cannot be turned into a valid yard"""

    def __init__(self, message: str, violations: Optional[List[str]] = None):
        self.violations = list(violations or [])
        if self.violations:
            message = f"{message}: " + "; ".join(self.violations)
        super().__init__(message)


@dataclass(frozen=True)
class Station:
    kind: StationKind
    gate_cell: Cell
    berth_count: int
    berth_cells: Tuple[Cell, ...] = ()


@dataclass(frozen=True)
class YardLayout:
    """Immutable yard grid. Cells are (row, col); station interiors are not grid cells."""

    width: int
    height: int
    traversable: Tuple[Tuple[bool, ...], ...]
    stations: Tuple[Station, ...]
    entrance_cell: Cell
    exit_cell: Cell
    cell_size: float = CELL_SIZE_M
    name: str = field(default="custom", compare=False)
    _distance_cache: Dict[Cell, Dict[Cell, int]] = field(
        default_factory=dict, compare=False, repr=False, hash=False
    )

    def in_bounds(self, cell: Cell) -> bool:
        row, col = cell
        return 0 <= row < self.height and 0 <= col < self.width

    def is_traversable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and self.traversable[cell[0]][cell[1]]

    def neighbors(self, cell: Cell) -> List[Cell]:
        result = []
        for dr, dc in DIRECTIONS:
            nxt = (cell[0] + dr, cell[1] + dc)
            if self.is_traversable(nxt):
                result.append(nxt)
        return result

    def station(self, kind: StationKind) -> Station:
        for station in self.stations:
            if station.kind == kind:
                return station
        raise KeyError(f"layout {self.name} has no {kind.value} station")

    def gate(self, kind: StationKind) -> Cell:
        return self.station(kind).gate_cell

    @property
    def gate_cells(self) -> FrozenSet[Cell]:
        return frozenset(s.gate_cell for s in self.stations)

    @property
    def terminal_cells(self) -> FrozenSet[Cell]:
        """Cells where a vehicle leaves the grid on arrival (gates and the exit)"""
        return self.gate_cells | {self.exit_cell}

    def road_cells(self) -> List[Cell]:
        return [
            (r, c)
            for r in range(self.height)
            for c in range(self.width)
            if self.traversable[r][c]
        ]

    def distances_from(self, source: Cell) -> Dict[Cell, int]:
        """BFS distance map from source over traversable cells, cached per layout"""
        cached = self._distance_cache.get(source)
        if cached is not None:
            return cached

        distances: Dict[Cell, int] = {}
        if self.is_traversable(source):
            distances[source] = 0
            queue = deque([source])
            while queue:
                cell = queue.popleft()
                for nxt in self.neighbors(cell):
                    if nxt not in distances:
                        distances[nxt] = distances[cell] + 1
                        queue.append(nxt)

        self._distance_cache[source] = distances
        return distances


def grid_distance(layout: YardLayout, start: Cell, goal: Cell) -> Optional[int]:
    """Shortest 4-connected distance in cells; None when unreachable"""
    return layout.distances_from(goal).get(start)


def shortest_cell_path(layout: YardLayout, start: Cell, goal: Cell) -> Optional[Tuple[Cell, ...]]:
    """One static shortest path, ignoring time and other vehicles"""
    distances = layout.distances_from(goal)
    if start not in distances:
        return None

    path = [start]
    cell = start
    while cell != goal:
        cell = min(
            (n for n in layout.neighbors(cell) if distances.get(n) == distances[cell] - 1),
        )
        path.append(cell)
    return tuple(path)


def validate_layout(layout: YardLayout) -> List[str]:
    """Return every invariant violation; an empty list means the layout is usable"""
    violations: List[str] = []

    for label, cell in (("entrance", layout.entrance_cell), ("exit", layout.exit_cell)):
        if not layout.is_traversable(cell):
            violations.append(f"{label} at {cell} is not on a traversable cell")

    kinds_seen = [s.kind for s in layout.stations]
    for kind in StationKind:
        count = kinds_seen.count(kind)
        if count == 0:
            violations.append(f"no {kind.value} station")
        elif count > 1:
            violations.append(f"{count} {kind.value} stations, expected one")

    from_entrance = layout.distances_from(layout.entrance_cell)
    from_exit = layout.distances_from(layout.exit_cell)

    for station in layout.stations:
        name = station.kind.value
        if station.berth_count < 1:
            violations.append(f"{name} station has {station.berth_count} berths")
        if not layout.is_traversable(station.gate_cell):
            violations.append(f"{name} gate at {station.gate_cell} is not on a traversable cell")
            continue
        if station.gate_cell not in from_entrance:
            violations.append(f"{name} gate at {station.gate_cell} is unreachable from the entrance")
        if station.gate_cell not in from_exit:
            violations.append(f"exit is unreachable from the {name} gate at {station.gate_cell}")

    return violations


def parse_layout(text: str, name: str = "custom") -> YardLayout:
    """Parse the ASCII layout format; raises LayoutError on any structural problem"""
    rows = [line.rstrip("\r\n") for line in text.splitlines() if not line.startswith(";")]
    while rows and not rows[-1].strip():
        rows.pop()
    if not rows:
        raise LayoutError(f"layout {name} is empty")

    width = max(len(row) for row in rows)
    height = len(rows)

    traversable: List[Tuple[bool, ...]] = []
    entrances: List[Cell] = []
    exits: List[Cell] = []
    gates: Dict[StationKind, List[Cell]] = {kind: [] for kind in StationKind}
    berths: Dict[StationKind, List[Cell]] = {kind: [] for kind in StationKind}

    for r, row in enumerate(rows):
        flags = []
        for c, ch in enumerate(row.ljust(width, BLOCKED)):
            cell = (r, c)
            if ch == ROAD:
                flags.append(True)
            elif ch == BLOCKED:
                flags.append(False)
            elif ch == ENTRANCE:
                entrances.append(cell)
                flags.append(True)
            elif ch == EXIT:
                exits.append(cell)
                flags.append(True)
            elif ch in BERTH_CHARS:
                berths[BERTH_CHARS[ch]].append(cell)
                flags.append(False)
            elif ch in GATE_CHARS:
                gates[GATE_CHARS[ch]].append(cell)
                flags.append(True)
            else:
                raise LayoutError(f"unknown character {ch!r} at row {r}, column {c} in {name}")
        traversable.append(tuple(flags))

    for label, found in (("entrance", entrances), ("exit", exits)):
        if not found:
            raise LayoutError(f"layout {name} has no {label}")
        if len(found) > 1:
            raise LayoutError(f"layout {name} has {len(found)} {label} cells")

    stations = []
    for kind in StationKind:
        if not berths[kind]:
            raise LayoutError(f"layout {name} has zero {kind.value} berths")
        if len(gates[kind]) != 1:
            raise LayoutError(
                f"layout {name} needs exactly one {kind.value} gate, found {len(gates[kind])}"
            )
        stations.append(
            Station(
                kind=kind,
                gate_cell=gates[kind][0],
                berth_count=len(berths[kind]),
                berth_cells=tuple(berths[kind]),
            )
        )

    layout = YardLayout(
        width=width,
        height=height,
        traversable=tuple(traversable),
        stations=tuple(stations),
        entrance_cell=entrances[0],
        exit_cell=exits[0],
        name=name,
    )

    violations = validate_layout(layout)
    if violations:
        raise LayoutError(f"layout {name} failed validation", violations)

    return layout


def serialize_layout(layout: YardLayout) -> str:
    """Inverse of parse_layout (comments are not preserved)"""
    grid = [
        [ROAD if layout.traversable[r][c] else BLOCKED for c in range(layout.width)]
        for r in range(layout.height)
    ]
    for station in layout.stations:
        for r, c in station.berth_cells:
            grid[r][c] = KIND_CHARS[station.kind]
        gr, gc = station.gate_cell
        grid[gr][gc] = KIND_CHARS[station.kind].lower()
    grid[layout.entrance_cell[0]][layout.entrance_cell[1]] = ENTRANCE
    grid[layout.exit_cell[0]][layout.exit_cell[1]] = EXIT
    return "\n".join("".join(row) for row in grid) + "\n"


@lru_cache(maxsize=None)
def builtin_layout(size: str) -> YardLayout:
    """Shipped layout for a yard size"""
    size = YardSize(str(size).lower()).value
    path = LAYOUT_DIR / f"{size}.txt"
    layout = parse_layout(path.read_text(encoding="utf-8"), name=size)
    return layout


def load_layout(ref: str) -> YardLayout:
    """Resolve a builtin size name or read a layout file"""
    if str(ref).lower() in {s.value for s in YardSize}:
        return builtin_layout(str(ref).lower())

    path = Path(ref)
    return parse_layout(path.read_text(encoding="utf-8"), name=path.stem)
