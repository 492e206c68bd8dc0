"""What a pattern-formation agent perceives locally, and its compact encodings."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .grid import DIRECTIONS, Position, neighbor

N_GRADIENT_DIRS = 9  # 0 = flat, 1..8 = compass sectors counter-clockwise from east
N_STATES = 2 * 16 * N_GRADIENT_DIRS


@dataclass(frozen=True)
class LocalView:
    on_labeled: bool
    neighbors: tuple  # occupancy bits for UP, DOWN, LEFT, RIGHT
    gradient_dir: int

    def __post_init__(self):
        if len(self.neighbors) != 4:
            raise ValueError("neighbors needs 4 occupancy bits")
        if not 0 <= self.gradient_dir < N_GRADIENT_DIRS:
            raise ValueError(f"gradient_dir must lie in [0, {N_GRADIENT_DIRS})")


def all_views():
    for lab, bits, d in product((False, True), product((0, 1), repeat=4), range(N_GRADIENT_DIRS)):
        yield LocalView(lab, bits, d)


def encode_state(view: LocalView) -> int:
    bits = 0
    for b in view.neighbors:
        bits = (bits << 1) | int(bool(b))
    return (int(view.on_labeled) * 16 + bits) * N_GRADIENT_DIRS + view.gradient_dir


def decode_state(key: int) -> LocalView:
    rest, d = divmod(key, N_GRADIENT_DIRS)
    lab, bits = divmod(rest, 16)
    return LocalView(bool(lab), tuple((bits >> s) & 1 for s in (3, 2, 1, 0)), d)


def gradient_direction(pos: Position, xs: np.ndarray, ys: np.ndarray, perceived: np.ndarray) -> int:
    """Quantize the pheromone-weighted mean bearing of sensed cells into 8 sectors (0 if none)."""
    dx, dy = xs - pos[0], ys - pos[1]
    norm = np.hypot(dx, dy)
    gx = float(np.sum(perceived * dx / norm))
    gy = float(np.sum(perceived * -dy / norm))  # y grows downward on the grid
    if math.hypot(gx, gy) < 1e-9:
        return 0
    sector = round(math.atan2(gy, gx) / (math.pi / 4)) % 8
    return 1 + sector


def observe(world, pos: Position, radius: int, noise_std: float, rng: np.random.Generator) -> LocalView:
    bits = tuple(int(nb is not None and not world.occ.is_free(nb))
                 for nb in (neighbor(pos, d, world.spec) for d in DIRECTIONS))
    xs, ys, perceived = world.field.sense_arrays(pos, radius, noise_std, rng)
    return LocalView(world.on_labeled(pos), bits, gradient_direction(pos, xs, ys, perceived))
