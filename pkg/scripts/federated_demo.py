"""Train a shared linear action-value function from swarm experience by federated averaging.

Agents wander the reference pattern with uniformly random moves; each tick
every active agent contributes its own transition batch, the aggregator
averages the local semi-gradients and takes one step. Prints the mean TD
loss on a held-out batch before and after training, and the greedy action
the learned model picks on and off the shape.

    python3 scripts/federated_demo.py [--ticks 200] [--lr 0.05] [--seed 0]
"""

import argparse

import numpy as np

from sealci.baselines import STAY, step_reward
from sealci.federated import (Transition, featurize, federated_round, param_dim, q_values,
                              td_loss)
from sealci.grid import DIRECTIONS, neighbor, reference_pattern
from sealci.seal import SealConfig, active_count, make_world
from sealci.views import LocalView, observe

ACTION_NAMES = ("UP", "DOWN", "LEFT", "RIGHT", "STAY")


def collect(world, cfg, rng, k):
    """One tick of random exploration; returns a batch per acting agent."""
    batches = []
    for aid in rng.permutation(sorted(world.agents))[:k]:
        agent = world.agents[int(aid)]
        x = featurize(observe(world, agent.pos, cfg.sense_radius, cfg.noise_std, rng))
        a = int(rng.integers(5))
        if a != STAY:
            nb = neighbor(agent.pos, DIRECTIONS[a], world.spec)
            if nb is not None and world.occ.is_free(nb):
                world.occ.move(agent.id, nb)
                agent.pos = nb
                world.field.deposit(nb, world.on_labeled(nb))
        r = step_reward(world, agent.pos, cfg.reward_table)
        x2 = featurize(observe(world, agent.pos, cfg.sense_radius, cfg.noise_std, rng))
        batches.append([Transition(x, a, r, x2)])
    world.field.decay_tick()
    return batches


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ticks", type=int, default=200)
    ap.add_argument("--lr", type=float, default=0.05)
    ap.add_argument("--gamma", type=float, default=0.9)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = SealConfig(seed=args.seed)
    spec, mask = reference_pattern()
    rng = np.random.default_rng(args.seed)
    world = make_world(spec, mask, 119, rng, cfg.pheromone)
    k = active_count(119, cfg.active_fraction)

    held_out = [t for b in collect(world, cfg, rng, k) for t in b]
    params = np.zeros(param_dim())
    print(f"held-out TD loss before: {td_loss(params, held_out, args.gamma):.4f}")
    for _ in range(args.ticks):
        params = federated_round(params, collect(world, cfg, rng, k), args.gamma, args.lr)
    print(f"held-out TD loss after:  {td_loss(params, held_out, args.gamma):.4f}")

    for lab in (False, True):
        view = LocalView(lab, (0, 0, 0, 0), 0)
        q = q_values(params, featurize(view))
        where = "on shape " if lab else "off shape"
        print(f"{where}: greedy action {ACTION_NAMES[int(np.argmax(q))]}, Q = {np.round(q, 3).tolist()}")


if __name__ == "__main__":
    main()
