"""The stigmergy-driven pattern-formation loop.

Each tick: pick the highest-priority agents, let each sample an attractor
from the pheromone it senses, move one cell toward it (sidestepping when
blocked), deposit pheromone on arrival, then update every agent's priority
from the reward table and let the field decay.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .grid import (
    DIRECTIONS,
    PERPENDICULAR,
    Boundary,
    Direction,
    GridSpec,
    Occupancy,
    Position,
    axis_displacement,
    labeled_count,
    neighbor,
    occupied_neighbors,
    similarity,
)
from .pheromone import PheromoneField, PheromoneParams, response_amplitude
from .serial import stable_hash


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class RewardTable:
    """Priority delta keyed by (on_labeled, occupied 4-neighbour count)."""

    unlabeled: Tuple[float, ...]
    labeled: Tuple[float, ...]

    def __post_init__(self):
        if len(self.unlabeled) != 5 or len(self.labeled) != 5:
            raise ConfigError("reward table needs 5 entries (0..4 neighbours) per label")
        object.__setattr__(self, "unlabeled", tuple(float(v) for v in self.unlabeled))
        object.__setattr__(self, "labeled", tuple(float(v) for v in self.labeled))

    def __call__(self, on_labeled: bool, neighbors: int) -> float:
        return (self.labeled if on_labeled else self.unlabeled)[neighbors]

    @classmethod
    def reference(cls) -> "RewardTable":
        # settled agents sink (more so when surrounded), stray agents rise
        return cls(unlabeled=(1.0, 1.0, 1.0, 1.0, 1.0),
                   labeled=(-1.0, -1.2, -1.4, -1.6, -1.8))

    def to_dict(self) -> dict:
        return {"unlabeled": list(self.unlabeled), "labeled": list(self.labeled)}

    @classmethod
    def from_dict(cls, d: dict) -> "RewardTable":
        return cls(unlabeled=tuple(d["unlabeled"]), labeled=tuple(d["labeled"]))


@dataclass(frozen=True)
class SealConfig:
    active_fraction: float = 0.5
    sense_radius: int = 3
    response_sigma: float = 1.0
    pheromone: PheromoneParams = field(default_factory=PheromoneParams)
    noise_std: float = 0.0
    reward_table: RewardTable = field(default_factory=RewardTable.reference)
    max_iterations: int = 300
    seed: int = 0
    priority_min: float = -10.0
    priority_max: float = 10.0
    hold_on_labeled: bool = True

    def __post_init__(self):
        if not 0.0 < self.active_fraction <= 1.0:
            raise ConfigError("active_fraction must lie in (0, 1]")
        if self.sense_radius < 1:
            raise ConfigError("sense_radius must be a positive integer")
        if self.response_sigma <= 0:
            raise ConfigError("response_sigma must be positive")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be non-negative")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.priority_min > self.priority_max:
            raise ConfigError("priority_min exceeds priority_max")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["reward_table"] = self.reward_table.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SealConfig":
        d = dict(d)
        try:
            if "pheromone" in d:
                d["pheromone"] = PheromoneParams(**d["pheromone"])
            if "reward_table" in d:
                d["reward_table"] = RewardTable.from_dict(d["reward_table"])
            return cls(**d)
        except (TypeError, KeyError, ValueError) as exc:
            raise ConfigError(f"invalid SEAL config: {exc}") from exc

    def replace(self, **changes) -> "SealConfig":
        d = asdict(self)
        d.update(pheromone=self.pheromone, reward_table=self.reward_table)
        d.update(changes)
        return SealConfig(**d)

    def config_hash(self) -> str:
        return stable_hash(self.to_dict())


@dataclass
class AgentState:
    id: int
    pos: Position
    priority: float = 0.0


@dataclass
class World:
    spec: GridSpec
    mask: np.ndarray
    occ: Occupancy
    field: PheromoneField
    agents: Dict[int, AgentState]

    def on_labeled(self, pos: Position) -> bool:
        return bool(self.mask[pos[1], pos[0]])

    def similarity(self) -> float:
        return similarity(self.occ, self.mask)

    def check(self) -> None:
        try:
            self.occ.check(self.spec, live=self.agents.keys())
            for a in self.agents.values():
                assert self.occ.position(a.id) == a.pos, f"agent {a.id} position out of sync"
        except AssertionError as exc:
            raise InvariantViolation(str(exc)) from exc
        amt = self.field.amount
        if amt.min() < 0.0 or amt.max() > self.field.params.amount_cap:
            raise InvariantViolation("pheromone amount outside [0, cap]")


@dataclass
class RunRecord:
    similarity: List[float]
    final_positions: Dict[int, Position]
    config_hash: str
    seed: int
    initial_similarity: float = 0.0
    algo: str = "SEAL"

    def at(self, iteration: int) -> float:
        """Similarity after ``iteration`` ticks (1-based); 0 gives the starting value."""
        return self.initial_similarity if iteration == 0 else self.similarity[iteration - 1]


def make_world(spec: GridSpec, mask: np.ndarray, agent_count: int, rng: np.random.Generator,
               pheromone: PheromoneParams = PheromoneParams(),
               positions: Optional[Sequence[Position]] = None) -> World:
    """Place agents uniformly at random over free cells, or at ``positions`` if given."""
    if agent_count < 0 or agent_count > spec.cells:
        raise ConfigError(f"cannot place {agent_count} agents on {spec.cells} cells")
    if positions is None:
        flat = rng.choice(spec.cells, size=agent_count, replace=False)
        positions = [(int(i % spec.width), int(i // spec.width)) for i in flat]
    elif len(positions) != agent_count:
        raise ConfigError("positions list length differs from agent_count")
    occ = Occupancy()
    agents = {}
    for i, pos in enumerate(positions):
        occ.place(i, tuple(pos))
        agents[i] = AgentState(i, tuple(pos))
    return World(spec, mask, occ, PheromoneField(spec, pheromone), agents)


def active_count(n: int, fraction: float) -> int:
    # round() guards against 0.1 * 30 = 3.0000000000000004 style ceilings
    return min(n, math.ceil(round(fraction * n, 9)))


def select_active(agents: Sequence[AgentState], fraction: float, rng: np.random.Generator) -> Set[int]:
    """Ids of the ceil(fraction * N) highest-priority agents, ties broken at random."""
    if not agents:
        return set()
    prio = np.array([a.priority for a in agents])
    order = np.lexsort((rng.random(len(agents)), -prio))
    k = active_count(len(agents), fraction)
    return {agents[i].id for i in order[:k]}


def _draw(weights: np.ndarray, rng: np.random.Generator) -> Optional[int]:
    total = float(weights.sum())
    if not total > 0.0:
        return None
    cum = np.cumsum(weights)
    idx = int(np.searchsorted(cum, rng.random() * total, side="right"))
    return min(idx, len(weights) - 1)


def attractor_weights(pos: Position, xs: np.ndarray, ys: np.ndarray, perceived: np.ndarray,
                      sigma: float, spec: GridSpec) -> np.ndarray:
    dx, dy = xs - pos[0], ys - pos[1]
    if spec.boundary is Boundary.TOROIDAL:
        dx = (dx + spec.width // 2) % spec.width - spec.width // 2
        dy = (dy + spec.height // 2) % spec.height - spec.height // 2
    return perceived * response_amplitude(np.hypot(dx, dy), sigma)


def select_attractor(agent: AgentState, sensed: Sequence[Tuple[Position, float]], sigma: float,
                     rng: np.random.Generator, spec: Optional[GridSpec] = None) -> Optional[Position]:
    """Sample a sensed cell with probability proportional to pheromone times Gaussian response."""
    if not sensed:
        return None
    spec = spec or GridSpec(2**31 - 1, 2**31 - 1)
    xs = np.array([p[0] for p, _ in sensed])
    ys = np.array([p[1] for p, _ in sensed])
    perceived = np.array([v for _, v in sensed], dtype=float)
    idx = _draw(attractor_weights(agent.pos, xs, ys, perceived, sigma, spec), rng)
    return None if idx is None else sensed[idx][0]


def step_move(agent: AgentState, attractor: Optional[Position], occ: Occupancy, spec: GridSpec,
              rng: np.random.Generator, hold: bool = False) -> Position:
    """One cell toward ``attractor``, sidestepping when blocked; random free step without one.

    With ``hold`` set (the agent stands on a labeled cell) a blocked agent stops
    instead of sidestepping.
    """
    pos = agent.pos
    if attractor is None:
        free = [nb for d in DIRECTIONS
                if (nb := neighbor(pos, d, spec)) is not None and occ.is_free(nb)]
        if not free:
            return pos
        return free[int(rng.integers(len(free)))]

    wrap = spec.boundary is Boundary.TOROIDAL
    dx = axis_displacement(pos[0], attractor[0], spec.width, wrap)
    dy = axis_displacement(pos[1], attractor[1], spec.height, wrap)
    horizontal = abs(dx) > abs(dy) or (abs(dx) == abs(dy) and rng.random() < 0.5)
    if horizontal:
        primary = Direction.RIGHT if dx > 0 else Direction.LEFT
    else:
        primary = Direction.DOWN if dy > 0 else Direction.UP
    nb = neighbor(pos, primary, spec)
    if nb is not None and occ.is_free(nb):
        return nb
    if hold:
        return pos
    sides = PERPENDICULAR[primary]
    if rng.random() < 0.5:
        sides = sides[::-1]
    for d in sides:
        nb = neighbor(pos, d, spec)
        if nb is not None and occ.is_free(nb):
            return nb
    return pos


def update_priority(agent: AgentState, table: RewardTable, occ: Occupancy, mask: np.ndarray,
                    spec: GridSpec, pmin: float = -10.0, pmax: float = 10.0) -> float:
    on_labeled = bool(mask[agent.pos[1], agent.pos[0]])
    delta = table(on_labeled, occupied_neighbors(agent.pos, occ, spec))
    return min(max(agent.priority + delta, pmin), pmax)


def move_and_deposit(world: World, agent: AgentState, cfg: SealConfig, rng: np.random.Generator) -> None:
    xs, ys, perceived = world.field.sense_arrays(agent.pos, cfg.sense_radius, cfg.noise_std, rng)
    w = attractor_weights(agent.pos, xs, ys, perceived, cfg.response_sigma, world.spec)
    idx = _draw(w, rng)
    attractor = None if idx is None else (int(xs[idx]), int(ys[idx]))
    hold = cfg.hold_on_labeled and world.on_labeled(agent.pos)
    new = step_move(agent, attractor, world.occ, world.spec, rng, hold)
    if new != agent.pos:
        world.occ.move(agent.id, new)
        agent.pos = new
        world.field.deposit(new, world.on_labeled(new))


def tick(world: World, cfg: SealConfig, rng: np.random.Generator, check: bool = True) -> World:
    agents = list(world.agents.values())
    if agents:
        active = select_active(agents, cfg.active_fraction, rng)
        for aid in rng.permutation(sorted(active)):
            move_and_deposit(world, world.agents[int(aid)], cfg, rng)
        for a in agents:
            a.priority = update_priority(a, cfg.reward_table, world.occ, world.mask, world.spec,
                                         cfg.priority_min, cfg.priority_max)
    world.field.decay_tick()
    if check:
        world.check()
    return world


def run(cfg: SealConfig, spec: GridSpec, mask: np.ndarray, agent_count: int,
        positions: Optional[Sequence[Position]] = None, check: bool = True) -> RunRecord:
    free = spec.cells
    if agent_count < 1 or agent_count > free:
        raise ConfigError(f"agent_count {agent_count} outside [1, {free}]")
    rng = np.random.default_rng(cfg.seed)
    world = make_world(spec, mask, agent_count, rng, cfg.pheromone, positions)
    start = world.similarity()
    trace = []
    for _ in range(cfg.max_iterations):
        tick(world, cfg, rng, check)
        trace.append(world.similarity())
    return RunRecord(trace, dict(world.occ.items()), cfg.config_hash(), cfg.seed, start)


def final_frame(record: RunRecord, mask: np.ndarray) -> str:
    from .grid import dump_pattern
    return dump_pattern(mask, record.final_positions.values())


__all__ = [
    "AgentState", "ConfigError", "InvariantViolation", "RewardTable", "RunRecord", "SealConfig",
    "World", "labeled_count", "make_world", "run", "select_active", "select_attractor",
    "step_move", "tick", "update_priority",
]
