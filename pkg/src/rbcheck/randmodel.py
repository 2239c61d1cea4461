"""Seeded random models for property tests and benchmarks."""

from __future__ import annotations

import random
from fractions import Fraction

from .mdp import Distribution, Mdp, RewardStructure, Transition
from .modelio import ModelBundle

GOAL_LABEL = "goal"
REWARD_NAME = "r"
MAX_BRANCHES = 3


def _distribution(rng: random.Random, n: int) -> tuple[list[int], list[Fraction]]:
    k = rng.randint(1, min(MAX_BRANCHES, n))
    targets = rng.sample(range(n), k)
    weights = [rng.randint(1, 9) for _ in targets]
    total = sum(weights)
    return targets, [Fraction(w, total) for w in weights]


def generate_random(
    seed: int,
    states: int = 5,
    max_actions: int = 2,
    reward_density: float = 0.5,
) -> ModelBundle:
    """A random MDP over states ``s0..s{n-1}`` with initial state ``s0``.

    Every state gets ``1..max_actions`` actions with ``1..3`` distinct
    successors and rational probabilities; each branch carries reward 1 in
    structure ``r`` with probability ``reward_density``.  The label ``goal``
    holds a random nonempty set of states.
    """
    if states < 2:
        raise ValueError("need at least 2 states")
    if max_actions < 1:
        raise ValueError("need at least 1 action per state")
    if not 0.0 <= reward_density <= 1.0:
        raise ValueError("reward density must lie in [0, 1]")
    rng = random.Random(seed)
    transitions = []
    rewards = {}
    for s in range(states):
        row = []
        for a in range(rng.randint(1, max_actions)):
            action = f"a{a}"
            targets, probs = _distribution(rng, states)
            row.append(Transition(action, Distribution(tuple(zip(targets, map(float, probs))))))
            for t in targets:
                if rng.random() < reward_density:
                    rewards[(s, action, t)] = Fraction(1)
        transitions.append(row)
    goal = rng.sample(range(states), rng.randint(1, max(1, states // 3)))
    names = tuple(f"s{i}" for i in range(states))
    model = Mdp(names, 0, transitions, {GOAL_LABEL: frozenset(goal)})
    return ModelBundle(model, {REWARD_NAME: RewardStructure(REWARD_NAME, rewards)}, f"random-{seed}")
