"""Tabular multi-agent Q-learning baselines on the pattern-formation task.

Independent (IQL), hysteretic (HQL) and lenient (LMRL) learners act in the
same world the stigmergy loop uses: same grid, mask, seeded placement,
movement budget per tick and pheromone medium. Each agent keeps its own
table over the 288 local views and five actions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np

from .grid import DIRECTIONS, GridSpec, neighbor, occupied_neighbors
from .seal import ConfigError, RunRecord, SealConfig, active_count, make_world
from .serial import stable_hash
from .views import encode_state, observe

N_ACTIONS = 5  # UP, DOWN, LEFT, RIGHT, STAY
STAY = 4
LENIENCY_EPS = 1e-12


class Algo(str, enum.Enum):
    IQL = "IQL"
    HQL = "HQL"
    LMRL = "LMRL"


class QTable:
    """Sparse action-value table; unseen entries read as 0."""

    def __init__(self, n_actions: int = N_ACTIONS):
        self.n_actions = n_actions
        self._rows: Dict[int, np.ndarray] = {}

    def row(self, s) -> np.ndarray:
        r = self._rows.get(s)
        return np.zeros(self.n_actions) if r is None else r

    def _mutable_row(self, s) -> np.ndarray:
        r = self._rows.get(s)
        if r is None:
            r = self._rows[s] = np.zeros(self.n_actions)
        return r

    def __getitem__(self, key) -> float:
        s, a = key
        return float(self.row(s)[a])

    def __setitem__(self, key, value: float) -> None:
        s, a = key
        self._mutable_row(s)[a] = value

    def max(self, s) -> float:
        return float(self.row(s).max())

    def items(self):
        for s, r in self._rows.items():
            for a, v in enumerate(r):
                yield (s, a), float(v)

    def as_dict(self) -> dict:
        return {k: v for k, v in self.items() if v != 0.0}

    def copy(self) -> "QTable":
        new = QTable(self.n_actions)
        new._rows = {s: r.copy() for s, r in self._rows.items()}
        return new

    def __eq__(self, other) -> bool:
        return isinstance(other, QTable) and self.as_dict() == other.as_dict()


@dataclass(frozen=True)
class HqlParams:
    alpha: float = 0.1
    beta: float = 0.01
    gamma: float = 0.9

    def __post_init__(self):
        if not (0 < self.alpha <= 1 and 0 < self.beta <= 1 and 0 <= self.gamma < 1):
            raise ConfigError("HQL parameters out of range")
        if self.beta > self.alpha:
            raise ConfigError("HQL needs beta <= alpha")


class LenientParams:
    """Learning rate, discount and per-(state, action) temperatures that cool on every visit."""

    def __init__(self, alpha: float = 0.1, gamma: float = 0.9, t0: float = 1.0,
                 kappa: float = 0.995, k: float = 1.0):
        if not (0 < alpha <= 1 and 0 <= gamma < 1 and t0 >= 0 and 0 < kappa < 1 and k > 0):
            raise ConfigError("LMRL parameters out of range")
        self.alpha, self.gamma, self.t0, self.kappa, self.k = alpha, gamma, t0, kappa, k
        self.temperature: Dict[tuple, float] = {}

    def temp(self, s, a) -> float:
        return self.temperature.get((s, a), self.t0)

    def leniency(self, s, a) -> float:
        return math.exp(-self.k / max(self.temp(s, a), LENIENCY_EPS))


def iql_update(Q: QTable, s, a: int, r: float, s_next, alpha: float, gamma: float) -> QTable:
    q = Q[s, a]
    Q[s, a] = q + alpha * (r + gamma * Q.max(s_next) - q)
    return Q


def hql_update(Q: QTable, s, a: int, r: float, s_next, params: HqlParams) -> QTable:
    q = Q[s, a]
    delta = r + params.gamma * Q.max(s_next) - q
    rate = params.alpha if delta >= 0 else params.beta
    Q[s, a] = q + rate * delta
    return Q


def lmrl_update(Q: QTable, s, a: int, r: float, s_next, params: LenientParams,
                rng: np.random.Generator):
    """Positive TD errors always apply; negative ones are forgiven with probability
    equal to the current leniency. The visited pair then cools by ``kappa``."""
    q = Q[s, a]
    delta = r + params.gamma * Q.max(s_next) - q
    apply = True
    if delta <= 0:
        leniency = params.leniency(s, a)
        # a fully cooled pair draws nothing, so its trace matches plain IQL
        if leniency > 0.0:
            apply = rng.random() >= leniency
    if apply:
        Q[s, a] = q + params.alpha * delta
    params.temperature[(s, a)] = params.kappa * params.temp(s, a)
    return Q, params


def epsilon_greedy(Q: QTable, s, epsilon: float, rng: np.random.Generator) -> int:
    if rng.random() < epsilon:
        return int(rng.integers(Q.n_actions))
    row = Q.row(s)
    best = np.flatnonzero(row == row.max())
    if len(best) == 1:
        return int(best[0])
    return int(best[rng.integers(len(best))])


@dataclass(frozen=True)
class BaselineParams:
    alpha: float = 0.1
    beta: float = 0.01
    gamma: float = 0.9
    epsilon_start: float = 0.1
    epsilon_end: float = 0.01
    t0: float = 1.0
    kappa: float = 0.995
    k: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BaselineParams":
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"invalid baseline params: {exc}") from exc

    def epsilon(self, iteration: int, total: int) -> float:
        if total <= 1:
            return self.epsilon_start
        frac = iteration / (total - 1)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac


def step_reward(world, pos, table) -> float:
    # priority deltas push stray agents up; as a learning signal the sign flips
    return -table(world.on_labeled(pos), occupied_neighbors(pos, world.occ, world.spec))


class _Learner:
    def __init__(self, algo: Algo, params: BaselineParams):
        self.algo = algo
        self.Q = QTable()
        if algo is Algo.HQL:
            self.hql = HqlParams(params.alpha, params.beta, params.gamma)
        elif algo is Algo.LMRL:
            self.lenient = LenientParams(params.alpha, params.gamma, params.t0, params.kappa, params.k)
        self.params = params

    def update(self, s, a, r, s_next, rng) -> None:
        p = self.params
        if self.algo is Algo.IQL:
            iql_update(self.Q, s, a, r, s_next, p.alpha, p.gamma)
        elif self.algo is Algo.HQL:
            hql_update(self.Q, s, a, r, s_next, self.hql)
        else:
            lmrl_update(self.Q, s, a, r, s_next, self.lenient, rng)


def run_baseline(algo, cfg: SealConfig, spec: GridSpec, mask: np.ndarray, agent_count: int,
                 params: BaselineParams = BaselineParams(), check: bool = True,
                 learners: Optional[dict] = None) -> RunRecord:
    """Run one seeded baseline episode with the environment settings of ``cfg``.

    The active set each tick is a uniform random ceil(fraction * N) subset,
    matching the stigmergy loop's movement budget. ``learners`` (if given) is
    filled with the per-agent learners for inspection.
    """
    algo = Algo(algo)
    if agent_count < 1 or agent_count > spec.cells:
        raise ConfigError(f"agent_count {agent_count} outside [1, {spec.cells}]")
    rng = np.random.default_rng(cfg.seed)
    world = make_world(spec, mask, agent_count, rng, cfg.pheromone)
    agents = {i: _Learner(algo, params) for i in world.agents}
    if learners is not None:
        learners.update(agents)
    start = world.similarity()
    trace = []
    ids = sorted(world.agents)
    k = active_count(len(ids), cfg.active_fraction)
    for it in range(cfg.max_iterations):
        eps = params.epsilon(it, cfg.max_iterations)
        for aid in rng.permutation(ids)[:k]:
            agent = world.agents[int(aid)]
            learner = agents[agent.id]
            s = encode_state(observe(world, agent.pos, cfg.sense_radius, cfg.noise_std, rng))
            a = epsilon_greedy(learner.Q, s, eps, rng)
            if a != STAY:
                nb = neighbor(agent.pos, DIRECTIONS[a], spec)
                if nb is not None and world.occ.is_free(nb):
                    world.occ.move(agent.id, nb)
                    agent.pos = nb
                    world.field.deposit(nb, world.on_labeled(nb))
            r = step_reward(world, agent.pos, cfg.reward_table)
            s_next = encode_state(observe(world, agent.pos, cfg.sense_radius, cfg.noise_std, rng))
            learner.update(s, a, r, s_next, rng)
        world.field.decay_tick()
        if check:
            world.check()
        trace.append(world.similarity())
    cfg_hash = stable_hash({"algo": algo.value, "env": cfg.to_dict(), "params": params.to_dict()})
    return RunRecord(trace, dict(world.occ.items()), cfg_hash, cfg.seed, start, algo.value)
