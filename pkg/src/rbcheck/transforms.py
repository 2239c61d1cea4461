"""Model surgery used by the reward-bounded algorithms.

All functions are pure: they return fresh models and never touch their
inputs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import ModelError, ResourceLimitExceeded
from .mdp import TAU, BranchKey, Distribution, Mdp, RewardStructure, Transition
from .vi import DEFAULT_EPSILON, unbounded_vi

log = logging.getLogger(__name__)

REWARD_LIMIT = 2**31


@dataclass(frozen=True)
class TransformedMdp:
    """A model over ``S ⊎ S_new``; the copy of regular state ``s`` is ``s + num_regular``."""

    model: Mdp
    num_regular: int
    origin: dict[int, int]
    reward_one: frozenset[BranchKey]

    def copy_of(self, s: int) -> int:
        return s + self.num_regular

    def is_copy(self, s: int) -> bool:
        return s >= self.num_regular


def _check_goal(model: Mdp, goal: Iterable[int]) -> frozenset[int]:
    goal = frozenset(goal)
    bad = [g for g in goal if not 0 <= g < model.num_states]
    if bad:
        raise ModelError(f"goal contains invalid state indices {sorted(bad)}")
    return goal


def make_absorbing(
    model: Mdp, goal: Iterable[int], reward: RewardStructure
) -> tuple[Mdp, RewardStructure]:
    """Replace every goal state's transitions by a τ self-loop carrying reward 1."""
    goal = _check_goal(model, goal)
    transitions = [
        (Transition(TAU, Distribution.dirac(s)),) if s in goal else ts
        for s, ts in enumerate(model.transitions)
    ]
    values = {k: v for k, v in reward.values.items() if k[0] not in goal}
    values.update({(s, TAU, s): Fraction(1) for s in goal})
    return (
        Mdp(model.names, model.initial, transitions, model.labels),
        RewardStructure(reward.name, values),
    )


def normalize_rewards(
    model: Mdp, reward: RewardStructure, bound=None
) -> tuple[Mdp, RewardStructure, int | None]:
    """Rewrite ``reward`` so every branch carries 0 or 1.

    Rational rewards are first scaled by the LCM of their denominators (the
    bound is scaled too, then floored).  A branch with integer reward r > 1 is
    rerouted through a chain of r reward-1 steps using r-1 fresh states named
    ``<from>@<action>#k``.  Original state indices are preserved; fresh states
    are appended.  ``bound=None`` passes through unchanged.
    """
    if any(v < 0 for v in reward.values.values()):
        raise ModelError(f"reward structure {reward.name!r} has negative values")
    nonzero = reward.nonzero()
    lcm = 1
    for v in nonzero.values():
        lcm = math.lcm(lcm, v.denominator)
        if lcm > REWARD_LIMIT:
            raise ResourceLimitExceeded("reward denominator LCM exceeds 2^31")
    scaled = {k: int(v * lcm) for k, v in nonzero.items()}
    if any(v > REWARD_LIMIT for v in scaled.values()):
        raise ResourceLimitExceeded("scaled reward exceeds 2^31")

    nat_bound = None
    if bound is not None:
        b = Fraction(bound) * lcm
        if b < 0:
            raise ModelError("reward bound must be nonnegative")
        nat_bound = math.floor(b)
        if b != nat_bound:
            log.warning("bound %s scaled by %d is not integral; using %d", bound, lcm, nat_bound)

    if all(v == 1 for v in scaled.values()):
        return model, RewardStructure(reward.name, scaled), nat_bound

    names = list(model.names)
    transitions = [list(ts) for ts in model.transitions]
    values: dict[BranchKey, Fraction] = {}
    chain_count: dict[tuple[int, str], int] = {}
    for s, ts in enumerate(model.transitions):
        for idx, tr in enumerate(ts):
            new_branches = []
            for t, p in tr.distribution:
                r = scaled.get((s, tr.action, t), 0)
                if r <= 1:
                    new_branches.append((t, p))
                    if r == 1:
                        values[(s, tr.action, t)] = Fraction(1)
                    continue
                fresh = []
                for _ in range(r - 1):
                    k = chain_count.get((s, tr.action), 0)
                    chain_count[(s, tr.action)] = k + 1
                    fresh.append(len(names))
                    names.append(f"{model.names[s]}@{tr.action}#{k}")
                    transitions.append(None)
                new_branches.append((fresh[0], p))
                values[(s, tr.action, fresh[0])] = Fraction(1)
                hops = fresh[1:] + [t]
                for here, nxt in zip(fresh, hops):
                    transitions[here] = [Transition(TAU, Distribution.dirac(nxt))]
                    values[(here, TAU, nxt)] = Fraction(1)
            transitions[s][idx] = Transition(tr.action, Distribution(tuple(new_branches)))
    out = Mdp(tuple(names), model.initial, transitions, model.labels)
    return out, RewardStructure(reward.name, values), nat_bound


def _redirect(model: Mdp, reward: RewardStructure, up: bool) -> TransformedMdp:
    if not reward.is_zero_one():
        raise ModelError("redirection needs 0/1 rewards; normalize first")
    n = model.num_states
    transitions = []
    reward_one = set()
    for s, ts in enumerate(model.transitions):
        row = []
        for tr in ts:
            merged: dict[int, float] = {}
            for t, p in tr.distribution:
                if reward(s, tr.action, t) == 1:
                    target = n + (s if up else t)
                    reward_one.add((s, tr.action, target))
                else:
                    target = t
                merged[target] = merged.get(target, 0.0) + p
            row.append(Transition(tr.action, Distribution.from_mapping(merged)))
        transitions.append(row)
    for s in range(n):
        transitions.append([Transition(TAU, Distribution.dirac(n + s))])
    names = model.names + tuple(f"{name}_new" for name in model.names)
    out = Mdp(names, model.initial, transitions, model.labels)
    return TransformedMdp(out, n, {n + s: s for s in range(n)}, frozenset(reward_one))


def redirect_up(model: Mdp, reward: RewardStructure) -> TransformedMdp:
    """Send each reward-1 branch out of ``s`` to the absorbing copy ``s_new``."""
    return _redirect(model, reward, up=True)


def redirect_down(model: Mdp, reward: RewardStructure) -> TransformedMdp:
    """Send each reward-1 branch ``s -> t`` to the absorbing copy ``t_new``."""
    return _redirect(model, reward, up=False)


def initial_values(
    model: Mdp,
    goal: Iterable[int],
    reward: RewardStructure,
    opt: str = "max",
    epsilon: float = DEFAULT_EPSILON,
) -> np.ndarray:
    """Probabilities of reaching ``goal`` without collecting reward.

    Returned vector covers ``S ⊎ S_new`` (length ``2|S|``): regular entries
    hold the zero-reward reachability values, copies of goal states hold 1,
    all other copies 0.
    """
    goal = _check_goal(model, goal)
    absorbing, rew = make_absorbing(model, goal, reward)
    up = redirect_up(absorbing, rew)
    n = model.num_states
    V = np.zeros(2 * n)
    for g in goal:
        V[g] = V[n + g] = 1.0
    unbounded_vi(V, up.model, opt, epsilon)
    return V
