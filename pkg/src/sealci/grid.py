"""Cell grid geometry, target masks, exclusive occupancy and the similarity score.

Coordinates are ``(x, y)`` with the origin at the top-left corner and ``y``
growing downward, so row ``y`` of a pattern file is row ``y`` of the grid.
Masks are numpy boolean arrays indexed ``mask[y, x]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

Position = Tuple[int, int]

PATTERN_MAGIC = "P-PAT"
DATA_DIR = Path(__file__).parent / "data"


class Boundary(str, enum.Enum):
    BOUNDED = "BOUNDED"
    TOROIDAL = "TOROIDAL"


class Direction(enum.Enum):
    UP = (0, -1)
    DOWN = (0, 1)
    LEFT = (-1, 0)
    RIGHT = (1, 0)

    @property
    def dx(self) -> int:
        return self.value[0]

    @property
    def dy(self) -> int:
        return self.value[1]


DIRECTIONS = (Direction.UP, Direction.DOWN, Direction.LEFT, Direction.RIGHT)
PERPENDICULAR = {
    Direction.UP: (Direction.LEFT, Direction.RIGHT),
    Direction.DOWN: (Direction.LEFT, Direction.RIGHT),
    Direction.LEFT: (Direction.UP, Direction.DOWN),
    Direction.RIGHT: (Direction.UP, Direction.DOWN),
}


class PatternError(ValueError):
    """Base class for pattern-file parse failures."""


class HeaderError(PatternError):
    pass


class RowLengthError(PatternError):
    pass


class EmptyPatternError(PatternError):
    pass


class OccupiedError(Exception):
    """Destination cell already holds another agent."""


class UnknownAgentError(KeyError):
    pass


@dataclass(frozen=True)
class GridSpec:
    width: int
    height: int
    boundary: Boundary = Boundary.BOUNDED

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.width}x{self.height}")

    @property
    def cells(self) -> int:
        return self.width * self.height

    def contains(self, pos: Position) -> bool:
        x, y = pos
        return 0 <= x < self.width and 0 <= y < self.height


def labeled_count(mask: np.ndarray) -> int:
    return int(np.count_nonzero(mask))


def load_pattern(text: str) -> Tuple[GridSpec, np.ndarray]:
    """Parse pattern-file text into a bounded grid spec and a labeled mask."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise HeaderError("empty pattern file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != PATTERN_MAGIC:
        raise HeaderError(f"bad header line: {lines[0]!r}")
    try:
        width, height = int(header[1]), int(header[2])
    except ValueError:
        raise HeaderError(f"non-integer dimensions in header: {lines[0]!r}") from None
    if width < 1 or height < 1:
        raise HeaderError(f"non-positive dimensions in header: {lines[0]!r}")
    rows = lines[1:]
    if len(rows) != height:
        raise RowLengthError(f"expected {height} rows, found {len(rows)}")
    mask = np.zeros((height, width), dtype=bool)
    for y, row in enumerate(rows):
        if len(row) != width:
            raise RowLengthError(f"row {y} has {len(row)} cells, expected {width}")
        bad = set(row) - {"0", "1"}
        if bad:
            raise PatternError(f"row {y} contains invalid characters {sorted(bad)}")
        mask[y] = [c == "1" for c in row]
    if not mask.any():
        raise EmptyPatternError("pattern has zero labeled cells")
    return GridSpec(width, height, Boundary.BOUNDED), mask


def dump_pattern(mask: np.ndarray, agents: Iterable[Position] = ()) -> str:
    """Serialize a mask; cells listed in ``agents`` are overlaid with ``A``."""
    height, width = mask.shape
    grid = [["1" if v else "0" for v in row] for row in mask]
    for x, y in agents:
        grid[y][x] = "A"
    return f"{PATTERN_MAGIC} {width} {height}\n" + "".join("".join(r) + "\n" for r in grid)


def load_pattern_file(path) -> Tuple[GridSpec, np.ndarray]:
    return load_pattern(Path(path).read_text(encoding="utf-8"))


def reference_pattern() -> Tuple[GridSpec, np.ndarray]:
    """The shipped 28x28 digit "4" (119 labeled cells)."""
    return load_pattern_file(DATA_DIR / "four.pat")


_DELTA = {d: d.value for d in Direction}


def neighbor(pos: Position, direction: Direction, spec: GridSpec) -> Optional[Position]:
    dx, dy = _DELTA[direction]
    x, y = pos[0] + dx, pos[1] + dy
    if spec.boundary is Boundary.TOROIDAL:
        return x % spec.width, y % spec.height
    if 0 <= x < spec.width and 0 <= y < spec.height:
        return x, y
    return None


def axis_displacement(a: int, b: int, size: int, wrap: bool) -> int:
    """Signed step count from ``a`` to ``b`` along one axis (shortest way round if wrapping)."""
    d = b - a
    if wrap:
        d %= size
        if d > size // 2:
            d -= size
    return d


def torus_distance(a: Position, b: Position, spec: GridSpec) -> float:
    wrap = spec.boundary is Boundary.TOROIDAL
    dx = axis_displacement(a[0], b[0], spec.width, wrap)
    dy = axis_displacement(a[1], b[1], spec.height, wrap)
    return math.hypot(dx, dy)


def max_distance(spec: GridSpec) -> float:
    """Largest value ``torus_distance`` can take on this grid."""
    if spec.boundary is Boundary.TOROIDAL:
        return math.hypot(spec.width // 2, spec.height // 2)
    return math.hypot(spec.width - 1, spec.height - 1)


class Occupancy:
    """Bidirectional cell <-> agent map enforcing one agent per cell."""

    def __init__(self, placements: Optional[Dict[int, Position]] = None):
        self._by_agent: Dict[int, Position] = {}
        self._by_cell: Dict[Position, int] = {}
        for agent, pos in (placements or {}).items():
            self.place(agent, pos)

    def place(self, agent: int, pos: Position) -> None:
        if agent in self._by_agent:
            raise ValueError(f"agent {agent} already placed")
        if pos in self._by_cell:
            raise OccupiedError(f"cell {pos} already holds agent {self._by_cell[pos]}")
        self._by_agent[agent] = pos
        self._by_cell[pos] = agent

    def move(self, agent: int, to: Position) -> "Occupancy":
        try:
            src = self._by_agent[agent]
        except KeyError:
            raise UnknownAgentError(agent) from None
        if to == src:
            return self
        holder = self._by_cell.get(to)
        if holder is not None:
            raise OccupiedError(f"cell {to} already holds agent {holder}")
        del self._by_cell[src]
        self._by_cell[to] = agent
        self._by_agent[agent] = to
        return self

    def position(self, agent: int) -> Position:
        return self._by_agent[agent]

    def agent_at(self, pos: Position) -> Optional[int]:
        return self._by_cell.get(pos)

    def is_free(self, pos: Position) -> bool:
        return pos not in self._by_cell

    def agents(self):
        return self._by_agent.keys()

    def positions(self):
        return self._by_cell.keys()

    def items(self):
        return self._by_agent.items()

    def __len__(self) -> int:
        return len(self._by_agent)

    def __contains__(self, agent: int) -> bool:
        return agent in self._by_agent

    def copy(self) -> "Occupancy":
        new = Occupancy()
        new._by_agent = dict(self._by_agent)
        new._by_cell = dict(self._by_cell)
        return new

    def check(self, spec: Optional[GridSpec] = None, live: Optional[Iterable[int]] = None) -> None:
        """Raise ``AssertionError`` if exclusivity or agent conservation is broken."""
        assert len(self._by_cell) == len(self._by_agent), "cell/agent map sizes differ"
        for agent, pos in self._by_agent.items():
            assert self._by_cell.get(pos) == agent, f"agent {agent} not registered at {pos}"
            if spec is not None:
                assert spec.contains(pos), f"agent {agent} out of bounds at {pos}"
        if live is not None:
            assert set(live) == set(self._by_agent), "mapped agents differ from live agents"

    def __eq__(self, other) -> bool:
        return isinstance(other, Occupancy) and self._by_agent == other._by_agent

    def __repr__(self) -> str:
        return f"Occupancy({self._by_agent!r})"


def move_agent(occ: Occupancy, agent: int, to: Position) -> Occupancy:
    return occ.move(agent, to)


def occupied_neighbors(pos: Position, occ: Occupancy, spec: GridSpec) -> int:
    count = 0
    for d in DIRECTIONS:
        nb = neighbor(pos, d, spec)
        if nb is not None and not occ.is_free(nb):
            count += 1
    return count


def similarity(occ: Occupancy, mask: np.ndarray) -> float:
    """Fraction of labeled cells currently holding an agent."""
    hits = sum(1 for x, y in occ.positions() if mask[y, x])
    return hits / labeled_count(mask)
