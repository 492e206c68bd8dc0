"""Digital pheromone medium: deposit, multiplicative decay and noisy sensing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from .grid import Boundary, GridSpec, Position

DECAY_FLOOR = 1e-6


@dataclass(frozen=True)
class PheromoneParams:
    decay: float = 0.9
    deposit_inc: float = 1.0
    deposit_dec: float = 1.0
    amount_cap: float = 10.0

    def __post_init__(self):
        if not 0.0 <= self.decay < 1.0:
            raise ValueError("decay must lie in [0, 1)")
        if self.deposit_inc <= 0 or self.deposit_dec <= 0 or self.amount_cap <= 0:
            raise ValueError("deposit amounts and cap must be positive")


class PheromoneField:
    def __init__(self, spec: GridSpec, params: PheromoneParams = PheromoneParams()):
        self.spec = spec
        self.params = params
        self.amount = np.zeros((spec.height, spec.width), dtype=float)

    def __getitem__(self, pos: Position) -> float:
        return float(self.amount[pos[1], pos[0]])

    def total(self) -> float:
        return float(self.amount.sum())

    def deposit(self, pos: Position, on_labeled: bool) -> "PheromoneField":
        p = self.params
        x, y = pos
        delta = p.deposit_inc if on_labeled else -p.deposit_dec
        self.amount[y, x] = min(max(self.amount[y, x] + delta, 0.0), p.amount_cap)
        return self

    def decay_tick(self) -> "PheromoneField":
        a = self.amount
        a *= self.params.decay
        a[a < DECAY_FLOOR] = 0.0
        return self

    def window(self, pos: Position, radius: int) -> Tuple[np.ndarray, np.ndarray]:
        """Coordinates of every cell within Chebyshev ``radius`` of ``pos``, excluding ``pos``.

        Cells are listed row-major. Bounded grids clip at the edge; toroidal
        grids wrap (duplicates dropped when the window exceeds the grid).
        """
        x0, y0 = pos
        dx, dy = _offsets(radius)
        xs, ys = x0 + dx, y0 + dy
        if self.spec.boundary is Boundary.TOROIDAL:
            xs %= self.spec.width
            ys %= self.spec.height
            flat = np.unique(ys * self.spec.width + xs)
            flat = flat[flat != y0 * self.spec.width + x0]
            return flat % self.spec.width, flat // self.spec.width
        inside = (xs >= 0) & (xs < self.spec.width) & (ys >= 0) & (ys < self.spec.height)
        return xs[inside], ys[inside]

    def sense_arrays(self, pos: Position, radius: int, noise_std: float, rng: np.random.Generator):
        xs, ys = self.window(pos, radius)
        perceived = self.amount[ys, xs]
        if noise_std > 0:
            perceived = np.maximum(perceived + rng.normal(0.0, noise_std, size=perceived.shape), 0.0)
        return xs, ys, perceived

    def sense(self, pos: Position, radius: int, noise_std: float,
              rng: np.random.Generator) -> List[Tuple[Position, float]]:
        xs, ys, perceived = self.sense_arrays(pos, radius, noise_std, rng)
        return [((int(x), int(y)), float(v)) for x, y, v in zip(xs, ys, perceived)]

    def snapshot(self) -> str:
        """Fixed-point text dump, one grid row per line."""
        return "".join(" ".join(f"{v:.6f}" for v in row) + "\n" for row in self.amount)

    def copy(self) -> "PheromoneField":
        new = PheromoneField(self.spec, self.params)
        new.amount = self.amount.copy()
        return new


@lru_cache(maxsize=None)
def _offsets(radius: int) -> Tuple[np.ndarray, np.ndarray]:
    offs = np.arange(-radius, radius + 1)
    dx, dy = np.meshgrid(offs, offs)
    dx, dy = dx.ravel(), dy.ravel()
    keep = (dx != 0) | (dy != 0)
    dx, dy = dx[keep], dy[keep]
    dx.flags.writeable = dy.flags.writeable = False
    return dx, dy


def response_amplitude(distance, sigma: float):
    """Gaussian response exp(-d^2 / (2 sigma^2)); accepts scalars or arrays."""
    if isinstance(distance, (int, float)):
        return math.exp(-distance * distance / (2.0 * sigma * sigma))
    return np.exp(-np.square(distance) / (2.0 * sigma * sigma))
