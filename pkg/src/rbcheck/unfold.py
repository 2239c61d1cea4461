"""Reference answers by unfolding the accumulated reward into the state space.

Only meant for testing and debugging: the unfolded model is ``n + 2`` times
larger than the input.  Rewards may be any nonnegative rationals here; the
counter just takes more distinct values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import accumulate
from typing import Iterable

import numpy as np

from .errors import ModelError, ResourceLimitExceeded
from .mdp import TAU, Distribution, Mdp, RewardStructure, Transition
from .vi import unbounded_vi

ORACLE_EPSILON = 1e-10
DEFAULT_MAX_STATES = 10**5


@dataclass(frozen=True)
class UnfoldedMdp:
    """Product of a model with a saturating reward counter.

    ``pairs[i]`` is ``(state, counter)`` for unfolded state ``i``; a counter of
    ``overflow`` means the bound has already been exceeded.
    """

    model: Mdp
    pairs: tuple[tuple[int, Fraction], ...]
    goal_prime: frozenset[int]
    overflow: Fraction


def unfold(
    model: Mdp,
    reward: RewardStructure,
    n,
    goal: Iterable[int] = (),
    max_states: int = DEFAULT_MAX_STATES,
) -> UnfoldedMdp:
    """Materialise the pairs ``(s, k)`` reachable from ``(s_init, 0)``.

    A branch with reward ``r`` moves the counter from ``k`` to
    ``min(k + r, n + 1)`` (any value above ``n`` is lumped into the overflow
    layer).  Goal pairs with ``k <= n`` and overflow pairs are made absorbing.
    """
    bound = Fraction(n)
    if bound < 0:
        raise ModelError("reward bound must be nonnegative")
    if any(v < 0 for v in reward.values.values()):
        raise ModelError(f"reward structure {reward.name!r} has negative values")
    overflow = bound + 1
    goal = frozenset(goal)
    index: dict[tuple[int, Fraction], int] = {}
    pairs: list[tuple[int, Fraction]] = []

    def visit(pair):
        if pair not in index:
            if len(pairs) >= max_states:
                raise ResourceLimitExceeded(f"unfolding exceeded {max_states} states")
            index[pair] = len(pairs)
            pairs.append(pair)
        return index[pair]

    visit((model.initial, Fraction(0)))
    transitions: list[list[Transition]] = []
    i = 0
    while i < len(pairs):
        s, k = pairs[i]
        i += 1
        if k == overflow or s in goal:
            transitions.append([Transition(TAU, Distribution.dirac(i - 1))])
            continue
        row = []
        for tr in model.transitions[s]:
            out: dict[int, float] = {}
            for t, p in tr.distribution:
                nk = k + reward(s, tr.action, t)
                j = visit((t, nk if nk <= bound else overflow))
                out[j] = out.get(j, 0.0) + p
            row.append(Transition(tr.action, Distribution.from_mapping(out)))
        transitions.append(row)

    names = tuple(f"{model.names[s]}|{k}" for s, k in pairs)
    goal_prime = frozenset(j for j, (s, k) in enumerate(pairs) if s in goal and k <= bound)
    unfolded = Mdp(names, 0, transitions, {"goal'": goal_prime})
    return UnfoldedMdp(unfolded, tuple(pairs), goal_prime, overflow)


def oracle_value(
    model: Mdp,
    goal: Iterable[int],
    reward: RewardStructure,
    bound,
    opt: str = "max",
    epsilon: float = ORACLE_EPSILON,
    max_states: int = DEFAULT_MAX_STATES,
) -> float:
    """Optimal probability of reaching ``goal`` with accumulated reward <= ``bound``."""
    u = unfold(model, reward, bound, goal, max_states)
    V = np.zeros(u.model.num_states)
    V[list(u.goal_prime)] = 1.0
    unbounded_vi(V, u.model, opt, epsilon)
    return float(V[0])


def oracle_bounded_prob(
    model: Mdp,
    goal: Iterable[int],
    reward: RewardStructure,
    n: int,
    opt: str = "max",
    epsilon: float = ORACLE_EPSILON,
    max_states: int = DEFAULT_MAX_STATES,
) -> list[float]:
    """Values for bounds ``0..n``, each from its own unfolding.

    Separate solves can disagree in the last digits; the running maximum keeps
    the sequence monotone without leaving the lower-bound side.
    """
    goal = frozenset(goal)
    return list(accumulate((oracle_value(model, goal, reward, i, opt, epsilon, max_states) for i in range(n + 1)), max))
