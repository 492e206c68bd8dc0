"""Federated semi-gradient TD learning of a shared linear action-value function.

Every agent turns its local experience into a gradient of the mean squared
TD error; a cloud aggregator averages the gradients and takes one descent
step on the shared parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence

import numpy as np

from .views import N_GRADIENT_DIRS, LocalView

N_ACTIONS = 5  # UP, DOWN, LEFT, RIGHT, STAY
FEATURE_DIM = 1 + 4 + N_GRADIENT_DIRS


def featurize(view: LocalView) -> np.ndarray:
    x = np.zeros(FEATURE_DIM)
    x[0] = float(view.on_labeled)
    x[1:5] = [float(bool(b)) for b in view.neighbors]
    x[5 + view.gradient_dir] = 1.0
    return x


@dataclass(frozen=True)
class Transition:
    features: np.ndarray
    action: int
    reward: float
    next_features: np.ndarray
    terminal: bool = False


def param_dim(feature_dim: int = FEATURE_DIM, n_actions: int = N_ACTIONS) -> int:
    return feature_dim * n_actions


def _blocks(params: np.ndarray, feature_dim: int) -> np.ndarray:
    if params.size % feature_dim:
        raise ValueError(f"parameter size {params.size} is not a multiple of {feature_dim}")
    return params.reshape(-1, feature_dim)


def q_value(params: np.ndarray, features: np.ndarray, action: int) -> float:
    """Linear value: dot product of ``features`` with the parameter block of ``action``."""
    params, features = np.asarray(params, float), np.asarray(features, float)
    blocks = _blocks(params, features.size)
    return float(blocks[action] @ features)


def q_values(params: np.ndarray, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, float)
    return _blocks(np.asarray(params, float), features.size) @ features


def td_loss(params: np.ndarray, batch: Sequence[Transition], gamma: float,
            target_params: np.ndarray = None) -> float:
    """Mean squared TD error; bootstrap targets are computed from ``target_params``."""
    target_params = params if target_params is None else target_params
    total = 0.0
    for t in batch:
        target = t.reward
        if not t.terminal:
            target += gamma * float(q_values(target_params, t.next_features).max())
        total += (target - q_value(params, t.features, t.action)) ** 2
    return total / len(batch)


def local_gradient(params: np.ndarray, batch: Sequence[Transition], gamma: float) -> np.ndarray:
    """Semi-gradient of the mean squared TD error (targets held fixed)."""
    if not batch:
        raise ValueError("empty experience batch")
    params = np.asarray(params, float)
    dim = batch[0].features.size
    grad = np.zeros_like(params)
    g = _blocks(grad, dim)
    for t in batch:
        target = t.reward
        if not t.terminal:
            target += gamma * float(q_values(params, t.next_features).max())
        delta = target - q_value(params, t.features, t.action)
        g[t.action] -= 2.0 * delta * t.features
    return grad / len(batch)


def aggregate(grads: Sequence[np.ndarray]) -> np.ndarray:
    """Element-wise mean of the agents' gradients."""
    if len(grads) == 0:
        raise ValueError("no gradients to aggregate")
    arrs = [np.asarray(g, float) for g in grads]
    shape = arrs[0].shape
    if any(a.shape != shape for a in arrs):
        raise ValueError("gradient dimensions differ")
    # exact rational mean, rounded once: order-free and idempotent bit for bit
    k = len(arrs)
    columns = zip(*(a.ravel().tolist() for a in arrs))
    mean = [float(sum(map(Fraction, col)) / k) for col in columns]
    return np.array(mean).reshape(shape)


def apply_update(params: np.ndarray, grad: np.ndarray, learning_rate: float) -> np.ndarray:
    params, grad = np.asarray(params, float), np.asarray(grad, float)
    if params.shape != grad.shape:
        raise ValueError("parameter and gradient dimensions differ")
    return params - learning_rate * grad


def federated_round(params: np.ndarray, batches: Sequence[Sequence[Transition]], gamma: float,
                    learning_rate: float) -> np.ndarray:
    """One cloud step: local gradients on each agent's batch, averaged, then applied."""
    grads = [local_gradient(params, b, gamma) for b in batches if len(b)]
    if not grads:
        return np.asarray(params, float)
    return apply_update(params, aggregate(grads), learning_rate)


def params_to_csv(params: np.ndarray) -> str:
    params = np.asarray(params, float)
    header = ",".join(f"p{i}" for i in range(params.size))
    return f"{header}\n" + ",".join(f"{v:.6f}" for v in params) + "\n"


def params_from_csv(text: str) -> np.ndarray:
    lines = text.strip().split("\n")
    if len(lines) != 2:
        raise ValueError("parameter CSV needs a header row and one value row")
    header, values = lines[0].split(","), lines[1].split(",")
    if len(header) != len(values):
        raise ValueError("header and value row lengths differ")
    return np.array([float(v) for v in values])


def gradient_check_csv(rows: List[tuple]) -> str:
    body = "".join(f"{i},{err:.6e}\n" for i, err in rows)
    return "instance,max_rel_error\n" + body
