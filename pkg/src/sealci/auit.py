"""Anytime universal intelligence test for agent teams.

A toroidal grid holds a team of agents and two special objects, Good and
Evil, that follow fixed movement patterns. Each agent earns
``(d_evil - d_good) / D`` per step, where ``D`` is the largest distance the
torus allows. Teams differ in how agents pool what they observe (direct
talk, biased indirect reports, or imitating nearby agents), and the test
varies pattern complexity and grid size to probe sensitivity.
"""

from __future__ import annotations

import enum
import math
import zlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .grid import Boundary, GridSpec, Position, max_distance, torus_distance


class AuitAction(enum.Enum):
    LEFT = (-1, 0)
    RIGHT = (1, 0)
    UP = (0, -1)
    DOWN = (0, 1)
    UP_LEFT = (-1, -1)
    UP_RIGHT = (1, -1)
    DOWN_LEFT = (-1, 1)
    DOWN_RIGHT = (1, 1)
    STAY = (0, 0)


ACTIONS = tuple(AuitAction)
MNEMONICS = {
    AuitAction.LEFT: "L", AuitAction.RIGHT: "R", AuitAction.UP: "U", AuitAction.DOWN: "D",
    AuitAction.UP_LEFT: "UL", AuitAction.UP_RIGHT: "UR", AuitAction.DOWN_LEFT: "DL",
    AuitAction.DOWN_RIGHT: "DR", AuitAction.STAY: "S",
}
BY_MNEMONIC = {v: k for k, v in MNEMONICS.items()}
EVAL_LENGTH = 1024


def apply_action(pos: Position, action: AuitAction, spec: GridSpec) -> Position:
    dx, dy = action.value
    return (pos[0] + dx) % spec.width, (pos[1] + dy) % spec.height


@dataclass(frozen=True)
class MovementPattern:
    """A finite action string replayed cyclically."""

    actions: Tuple[AuitAction, ...]
    name: str = ""

    def __post_init__(self):
        if not self.actions:
            raise ValueError("movement pattern must be non-empty")

    def __getitem__(self, cursor: int) -> AuitAction:
        return self.actions[cursor % len(self.actions)]

    def expand(self, length: int = EVAL_LENGTH) -> Tuple[AuitAction, ...]:
        return tuple(self[i] for i in range(length))

    @classmethod
    def parse(cls, text: str, name: str = "") -> "MovementPattern":
        tokens = [t.strip() for t in text.replace("\n", ",").split(",") if t.strip()]
        try:
            return cls(tuple(BY_MNEMONIC[t] for t in tokens), name)
        except KeyError as exc:
            raise ValueError(f"unknown action mnemonic {exc.args[0]!r}") from None

    def dumps(self) -> str:
        return ",".join(MNEMONICS[a] for a in self.actions) + "\n"

    @classmethod
    def constant(cls, action: AuitAction = AuitAction.RIGHT) -> "MovementPattern":
        return cls((action,), "constant")

    @classmethod
    def cycle(cls, actions: Sequence[AuitAction], name: str = "") -> "MovementPattern":
        return cls(tuple(actions), name or f"period{len(actions)}")

    @classmethod
    def random_walk(cls, seed: int, length: int = EVAL_LENGTH) -> "MovementPattern":
        rng = np.random.default_rng(seed)
        return cls(tuple(ACTIONS[i] for i in rng.integers(len(ACTIONS), size=length)), "random")


def reference_patterns() -> Dict[str, MovementPattern]:
    """Low, medium and high complexity patterns used by the evaluation grid."""
    period8 = (AuitAction.RIGHT, AuitAction.RIGHT, AuitAction.DOWN, AuitAction.DOWN_RIGHT,
               AuitAction.LEFT, AuitAction.UP, AuitAction.UP_LEFT, AuitAction.STAY)
    return {
        "constant": MovementPattern.constant(AuitAction.RIGHT),
        "period8": MovementPattern.cycle(period8, "period8"),
        "random": MovementPattern.random_walk(20200817),
    }


def pattern_complexity(pattern: MovementPattern, length: int = EVAL_LENGTH) -> int:
    """Compressed size in bits of the expanded pattern: an ordinal Kolmogorov proxy."""
    symbols = bytes(ACTIONS.index(a) + 48 for a in pattern.expand(length))
    return 8 * len(zlib.compress(symbols, 9))


def env_entropy(spec: GridSpec) -> float:
    return math.log2(spec.width * spec.height)


@dataclass
class AuitSpace:
    spec: GridSpec
    agents: List[Position]
    good: Position
    evil: Position

    def __post_init__(self):
        if self.spec.boundary is not Boundary.TOROIDAL:
            raise ValueError("AUIT space must be toroidal")

    def copy(self) -> "AuitSpace":
        return AuitSpace(self.spec, list(self.agents), self.good, self.evil)

    def swapped(self) -> "AuitSpace":
        return AuitSpace(self.spec, list(self.agents), self.evil, self.good)


def reward(space: AuitSpace, pos: Position) -> float:
    d_good = torus_distance(pos, space.good, space.spec)
    d_evil = torus_distance(pos, space.evil, space.spec)
    scale = max_distance(space.spec)
    return (d_evil - d_good) / scale if scale > 0 else 0.0  # 1x1 torus: every object co-located


def step_auit(space: AuitSpace, actions: Sequence[AuitAction], patterns: Tuple[MovementPattern, MovementPattern],
              cursors: Tuple[int, int]) -> Tuple[AuitSpace, List[float]]:
    """Agents act, then Good and Evil each advance one pattern symbol, then rewards are paid."""
    if len(actions) != len(space.agents):
        raise ValueError("need exactly one action per agent")
    spec = space.spec
    agents = [apply_action(p, a, spec) for p, a in zip(space.agents, actions)]
    good = apply_action(space.good, patterns[0][cursors[0]], spec)
    evil = apply_action(space.evil, patterns[1][cursors[1]], spec)
    new = AuitSpace(spec, agents, good, evil)
    return new, [reward(new, p) for p in agents]


class CommKind(str, enum.Enum):
    DIRECT = "DIRECT"
    INDIRECT = "INDIRECT"
    IMITATION = "IMITATION"


@dataclass(frozen=True)
class CommMode:
    kind: CommKind = CommKind.DIRECT
    bias_std: float = 1.0
    obs_range: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CommKind(self.kind))
        if self.bias_std < 0 or self.obs_range < 0:
            raise ValueError("bias_std and obs_range must be non-negative")


@dataclass
class Belief:
    objects: Dict[str, Position] = field(default_factory=dict)
    imitated: Tuple[AuitAction, ...] = ()


def observe(space: AuitSpace, radius: float) -> List[Dict[str, Position]]:
    """Each agent sees Good and Evil when they lie within ``radius`` of it."""
    out = []
    for p in space.agents:
        seen = {}
        for name, obj in (("good", space.good), ("evil", space.evil)):
            if torus_distance(p, obj, space.spec) <= radius:
                seen[name] = obj
        out.append(seen)
    return out


def share_observations(observations: Sequence[Dict[str, Position]], mode: CommMode,
                       rng: np.random.Generator, space: Optional[AuitSpace] = None,
                       last_actions: Optional[Sequence[AuitAction]] = None) -> List[Belief]:
    """Turn private observations into per-agent beliefs under a communication mode.

    Own observations always win; a missing object is filled from the lowest
    indexed agent that reported it (exactly under DIRECT, with rounded
    Gaussian position bias under INDIRECT). IMITATION shares no positions,
    only the last actions of agents within ``mode.obs_range``.
    """
    n = len(observations)
    if mode.kind is CommKind.IMITATION:
        beliefs = []
        for i in range(n):
            copied = []
            if mode.obs_range > 0 and space is not None and last_actions is not None:
                for j in range(n):
                    if j != i and torus_distance(space.agents[i], space.agents[j], space.spec) <= mode.obs_range:
                        copied.append(last_actions[j])
            beliefs.append(Belief(dict(observations[i]), tuple(copied)))
        return beliefs

    reports = []  # (source agent, object, position) as received by others
    for j, obs in enumerate(observations):
        for name in sorted(obs):
            pos = obs[name]
            if mode.kind is CommKind.INDIRECT and mode.bias_std > 0:
                bias = np.rint(rng.normal(0.0, mode.bias_std, size=2)).astype(int)
                pos = (pos[0] + int(bias[0]), pos[1] + int(bias[1]))
                if space is not None:
                    pos = (pos[0] % space.spec.width, pos[1] % space.spec.height)
            reports.append((j, name, pos))
    beliefs = []
    for i in range(n):
        objs = dict(observations[i])
        for j, name, pos in reports:
            if j != i and name not in objs:
                objs[name] = pos
        beliefs.append(Belief(objs))
    return beliefs


Policy = Callable[[int, Position, Belief, GridSpec, np.random.Generator], AuitAction]


def stay_policy(i, pos, belief, spec, rng) -> AuitAction:
    return AuitAction.STAY


def random_policy(i, pos, belief, spec, rng) -> AuitAction:
    return ACTIONS[int(rng.integers(len(ACTIONS)))]


def greedy_policy(i, pos, belief, spec, rng) -> AuitAction:
    """Step toward Good if believed known, else copy the commonest imitated action, else wander."""
    target = belief.objects.get("good")
    if target is not None:
        dists = [torus_distance(apply_action(pos, a, spec), target, spec) for a in ACTIONS]
        return ACTIONS[int(np.argmin(dists))]
    if belief.imitated:
        return Counter(belief.imitated).most_common(1)[0][0]
    return random_policy(i, pos, belief, spec, rng)


POLICIES = {"stay": stay_policy, "random": random_policy, "greedy": greedy_policy}


@dataclass
class Team:
    policies: Sequence[Policy]
    comm: CommMode = field(default_factory=CommMode)
    sense_radius: float = 3.0

    def __post_init__(self):
        if not self.policies:
            raise ValueError("team must contain at least one agent")

    @classmethod
    def uniform(cls, policy: Policy, size: int = 5, **kw) -> "Team":
        return cls([policy] * size, **kw)


@dataclass(frozen=True)
class ComplexityCell:
    pattern_id: str
    pattern: MovementPattern
    width: int
    height: int


@dataclass
class CellScores:
    cell: ComplexityCell
    step_scores: List[float]  # team-mean reward per step, episodes concatenated
    rows: List[tuple]  # (episode, prefix_steps, anytime_score)

    def anytime(self, n: int) -> float:
        return float(np.mean(self.step_scores[:n]))

    @property
    def score(self) -> float:
        return float(np.mean(self.step_scores)) if self.step_scores else 0.0


def run_episode(team: Team, pattern: MovementPattern, spec: GridSpec, steps: int,
                rng: np.random.Generator, swap: bool = False) -> List[float]:
    """One episode from a random start; returns the team-mean reward per step.

    ``swap`` exchanges the roles of Good and Evil (start cells and pattern
    phase), which negates every reward for agents that ignore the objects.
    """
    n = len(team.policies)
    cells = rng.choice(spec.cells, size=n + 2, replace=True)
    pts = [(int(c % spec.width), int(c // spec.width)) for c in cells]
    good, evil = pts[n], pts[n + 1]
    phase_good, phase_evil = 0, len(pattern.actions) // 2
    if swap:
        good, evil = evil, good
        phase_good, phase_evil = phase_evil, phase_good
    space = AuitSpace(spec, pts[:n], good, evil)
    last = [AuitAction.STAY] * n
    scores = []
    for t in range(steps):
        obs = observe(space, team.sense_radius)
        beliefs = share_observations(obs, team.comm, rng, space, last)
        acts = [team.policies[i](i, space.agents[i], beliefs[i], spec, rng) for i in range(n)]
        space, rewards = step_auit(space, acts, (pattern, pattern), (phase_good + t, phase_evil + t))
        last = acts
        scores.append(sum(rewards) / n)
    return scores


def evaluate_ci(team: Team, episodes: int, steps: int, cells: Sequence[ComplexityCell], seed: int,
                checkpoint_every: Optional[int] = None, antithetic: bool = False) -> List[CellScores]:
    """Score a team on every complexity cell.

    The anytime score at a checkpoint is the running mean of all team step
    scores so far in that cell, so evaluation can stop at any prefix. With
    ``antithetic`` odd episodes replay the previous start with Good and Evil
    exchanged.
    """
    every = checkpoint_every or steps
    out = []
    for ci, cell in enumerate(cells):
        spec = GridSpec(cell.width, cell.height, Boundary.TOROIDAL)
        stream: List[float] = []
        rows = []
        for ep in range(episodes):
            base = ep - 1 if antithetic and ep % 2 else ep
            rng = np.random.default_rng([seed, ci, base])
            scores = run_episode(team, cell.pattern, spec, steps, rng, swap=antithetic and ep % 2 == 1)
            for t, s in enumerate(scores, start=1):
                stream.append(s)
                if t % every == 0 or t == steps:
                    rows.append((ep, t, sum(stream) / len(stream)))
        out.append(CellScores(cell, stream, rows))
    return out


SCORE_HEADER = ("pattern_id", "space_w", "space_h", "comm_mode", "episode", "prefix_steps", "anytime_score")


def score_rows(results: Sequence[CellScores], comm: CommMode):
    for r in results:
        for ep, t, score in r.rows:
            yield (r.cell.pattern_id, r.cell.width, r.cell.height, comm.kind.value, ep, t, float(score))
