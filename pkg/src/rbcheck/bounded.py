"""Reward-bounded reachability without unfolding.

Three algorithms compute ``P_opt(reach goal with accumulated reward <= i)``
for every ``i`` up to the bound at once:

* ``modvi``: alternate "copy values into the post-reward copies" with an
  unbounded value iteration on the redirected model;
* ``senum``: per relevant state, enumerate the positional schedulers of the
  zero-reward sub-model, turn each into one transition whose distribution
  says where the next unit of reward is collected, then run step-bounded
  value iteration on the resulting small model;
* ``elim``: obtain the same kind of small model by MDP state elimination.

``bound="auto"`` keeps extending the bound until the largest relative error
of one bound step drops below ``epsilon``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .elimination import (
    DEFAULT_MAX_BRANCHES,
    chain_reach_probs,
    composite_label,
    eliminate_all,
    relevant_states,
)
from .errors import NonConvergence, ResourceLimitExceeded, UnsupportedQuery
from .mdp import Distribution, Mdp, RewardStructure, Transition
from .transforms import (
    TransformedMdp,
    initial_values,
    make_absorbing,
    normalize_rewards,
    redirect_down,
)
from .vi import DEFAULT_EPSILON, gauss_seidel, jacobi_step, pick

BOTTOM = -1
BOTTOM_NAME = "⊥"
MAX_BOUND_STEPS = 10**6
MAX_SCHEDULERS = 10**6
PROB_MODES = ("vi", "dtmc-elim")


@dataclass
class CdfResult:
    """Bounded reachability values for bounds ``0..len(values)-1``.

    ``converged`` is the bound from which the values no longer change by
    ``epsilon`` (relative), if that was detected.  ``bound_scale`` is the
    factor rational rewards were multiplied by: entry ``i`` is the value for
    original bound ``i / bound_scale``.
    """

    opt: str
    values: list[float]
    converged: int | None
    epsilon: float
    algorithm: str = ""
    bound_scale: int = 1
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    @property
    def final(self) -> float:
        return self.values[-1]


@dataclass(frozen=True)
class MergedModel:
    """Relevant states plus ⊥; one step here is one unit of reward."""

    model: Mdp
    bottom: int
    relevant: tuple[int, ...]
    provenance: tuple[tuple[str, ...], ...]

    def index_of(self, s: int) -> int:
        return self.relevant.index(s)


@dataclass
class _Problem:
    absorbing: Mdp
    reward: RewardStructure
    goal: frozenset[int]
    bound: int | None
    scale: int
    down: TransformedMdp


def _prepare(model: Mdp, goal: Iterable[int], reward: RewardStructure, bound) -> _Problem:
    auto = bound is None or bound == "auto"
    norm, rew, nat = normalize_rewards(model, reward, None if auto else bound)
    scale = math.lcm(*(v.denominator for v in reward.nonzero().values()))
    absorbing, rew = make_absorbing(norm, goal, rew)
    return _Problem(absorbing, rew, frozenset(goal), nat, scale, redirect_down(absorbing, rew))


class _ModviStepper:
    def __init__(self, problem: _Problem, opt: str, epsilon: float):
        self.p = problem
        self.opt = opt
        self.epsilon = epsilon
        self.V = initial_values(problem.absorbing, problem.goal, problem.reward, opt, epsilon).tolist()
        self.init = problem.absorbing.initial
        self.sweeps = 0

    @property
    def initial(self) -> float:
        return self.V[self.init]

    def step(self) -> tuple[float, float]:
        n = self.p.down.num_regular
        V = self.V
        V[n:] = V[:n]
        stats = gauss_seidel(V, self.p.down.model.sparse, self.opt, self.epsilon)
        self.sweeps += stats.iterations
        return V[self.init], stats.cumulative_max_error

    def stats(self) -> dict:
        return {"reduced": self.p.down.model.size(), "sweeps": self.sweeps}


class _MergedStepper:
    def __init__(self, merged: MergedModel, seed: np.ndarray, init: int, opt: str):
        self.merged = merged
        self.opt = opt
        self.V = [float(seed[r]) for r in merged.relevant] + [0.0]
        self.watch = merged.index_of(init)
        self.sparse = merged.model.sparse

    @property
    def initial(self) -> float:
        return self.V[self.watch]

    def step(self) -> tuple[float, float]:
        self.V, err = jacobi_step(self.V, self.sparse, self.opt)
        return self.V[self.watch], err


def _clamp(v: float, previous: float = 0.0) -> float:
    # elimination can round a probability-1 value to 1 + a few ulps; every
    # computed value is a lower bound and the exact CDF never decreases, so the
    # running maximum is still a lower bound and keeps the output monotone
    return min(1.0, max(previous, float(v)))


def _drive(stepper, bound: int | None, epsilon: float, max_bound_steps: int) -> tuple[list[float], int | None]:
    values = [_clamp(stepper.initial)]
    converged = None
    if bound is not None:
        for i in range(1, bound + 1):
            v, err = stepper.step()
            values.append(_clamp(v, values[-1]))
            if converged is None and err < epsilon:
                converged = i - 1
        return values, converged
    i = 0
    while True:
        i += 1
        if i > max_bound_steps:
            raise NonConvergence(
                f"bounded values still changing after {max_bound_steps} bound steps"
            )
        v, err = stepper.step()
        if err < epsilon:
            # this step changed nothing beyond epsilon: the previous bound is the limit
            return values, i - 1
        values.append(_clamp(v, values[-1]))


def _check_args(opt: str, epsilon: float) -> None:
    pick(opt)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")


def modvi(
    model: Mdp,
    goal: Iterable[int],
    reward: RewardStructure,
    bound,
    opt: str = "max",
    epsilon: float = DEFAULT_EPSILON,
    max_bound_steps: int = MAX_BOUND_STEPS,
) -> CdfResult:
    """Modified value iteration on the redirected model (no reduction)."""
    _check_args(opt, epsilon)
    problem = _prepare(model, goal, reward, bound)
    t0 = time.perf_counter()
    stepper = _ModviStepper(problem, opt, epsilon)
    values, converged = _drive(stepper, problem.bound, epsilon, max_bound_steps)
    stats = stepper.stats() | {"iter_seconds": time.perf_counter() - t0}
    return CdfResult(opt, values, converged, epsilon, "modvi", problem.scale, stats)


# -- scheduler enumeration ---------------------------------------------------


def enumerate_schedulers(
    down: TransformedMdp, start: int, max_schedulers: int = MAX_SCHEDULERS
) -> Iterator[dict[int, int]]:
    """Positional choices (state -> transition index) for the zero-reward part
    reachable from ``start``.

    Only states that are actually reachable under the choices made so far get
    an action, so schedulers differing only on unreachable states are not
    produced twice.
    """
    sparse = down.model.sparse
    n = down.num_regular
    assign: dict[int, int] = {}
    count = 0

    def rec(frontier: tuple[int, ...], seen: frozenset[int]):
        nonlocal count
        if not frontier:
            count += 1
            if count > max_schedulers:
                raise ResourceLimitExceeded(
                    f"more than {max_schedulers} schedulers from state {down.model.names[start]!r}"
                )
            yield dict(assign)
            return
        x, rest = frontier[0], frontier[1:]
        for k, branches in enumerate(sparse[x]):
            assign[x] = k
            new = []
            for t, _ in branches:
                if t < n and t not in seen and t not in new:
                    new.append(t)
            yield from rec(rest + tuple(new), seen.union(new))
        del assign[x]

    yield from rec((start,), frozenset((start,)))


def _probs_vi(succ: dict[int, dict[int, float]], start: int, n: int, epsilon: float) -> dict[int, float]:
    nodes = list(succ)
    copies = sorted({t for row in succ.values() for t in row if t >= n})
    local = {s: i for i, s in enumerate(nodes + copies)}
    sparse = [[[(local[t], p) for t, p in succ[s].items()]] for s in nodes]
    sparse += [[[(local[c], 1.0)]] for c in copies]
    out = {}
    for c in copies:
        V = [0.0] * len(local)
        V[local[c]] = 1.0
        gauss_seidel(V, sparse, "max", epsilon)
        if V[local[start]] > 0:
            out[c] = V[local[start]]
    return out


def _probs(succ: dict[int, dict[int, float]], start: int, n: int, mode: str, epsilon: float) -> dict[int, float]:
    if mode == "vi":
        hits = _probs_vi(succ, start, n, epsilon)
    elif mode == "dtmc-elim":
        targets = {t for row in succ.values() for t in row if t >= n}
        hits = chain_reach_probs(succ, start, targets)
    else:
        raise UnsupportedQuery(f"unknown probability mode {mode!r}")
    mu = {c - n: p for c, p in hits.items()}
    mu[BOTTOM] = max(0.0, 1.0 - sum(mu.values()))
    return mu


def compute_probs(
    chain: TransformedMdp,
    start: int | None = None,
    mode: str = "vi",
    epsilon: float = DEFAULT_EPSILON,
) -> dict[int, float]:
    """Where the next unit of reward is collected, for a deterministic model.

    Returns ``{s: P(reach s_new)}`` over regular states ``s`` plus the stuck
    mass under key ``BOTTOM``.
    """
    model = chain.model
    start = model.initial if start is None else start
    n = chain.num_regular
    succ: dict[int, dict[int, float]] = {}
    stack = [start]
    while stack:
        s = stack.pop()
        if s in succ:
            continue
        if len(model.transitions[s]) != 1:
            raise UnsupportedQuery(f"state {model.names[s]!r} is not deterministic")
        succ[s] = dict(model.transitions[s][0].distribution.branches)
        stack.extend(t for t in succ[s] if t < n and t not in succ)
    return _probs(succ, start, n, mode, epsilon)


def _distribution(mu: dict[int, float], index: dict[int, int], bottom: int) -> Distribution:
    out: dict[int, float] = {}
    for s, p in mu.items():
        if p <= 0.0:
            continue
        k = bottom if s == BOTTOM else index[s]
        out[k] = out.get(k, 0.0) + p
    if not out:
        out[bottom] = 1.0
    return Distribution.from_mapping(out)


def _merged(
    names: tuple[str, ...],
    relevant: list[int],
    per_state: dict[int, list[tuple[str, dict[int, float]]]],
    provenance: dict[int, list[str]],
) -> MergedModel:
    index = {s: i for i, s in enumerate(relevant)}
    bottom = len(relevant)
    transitions = []
    for s in relevant:
        row = []
        used: dict[str, int] = {}
        for label, mu in per_state[s]:
            k = used.get(label, 0)
            used[label] = k + 1
            row.append(Transition(label if k == 0 else f"{label}#{k}", _distribution(mu, index, bottom)))
        transitions.append(row)
    transitions.append([Transition("τ", Distribution.dirac(bottom))])
    model = Mdp(tuple(names[s] for s in relevant) + (BOTTOM_NAME,), 0, transitions)
    prov = tuple(tuple(provenance[s]) for s in relevant) + (("τ",),)
    return MergedModel(model, bottom, tuple(relevant), prov)


def _relevant_sorted(down: TransformedMdp) -> list[int]:
    rel = relevant_states(down)
    init = down.model.initial
    return [init] + sorted(rel - {init})


def build_senum_model(
    down: TransformedMdp,
    mode: str = "vi",
    epsilon: float = DEFAULT_EPSILON,
    max_schedulers: int = MAX_SCHEDULERS,
) -> tuple[MergedModel, int]:
    """Merged model from scheduler enumeration; also returns the scheduler count."""
    if mode not in PROB_MODES:
        raise UnsupportedQuery(f"unknown probability mode {mode!r}")
    sparse = down.model.sparse
    actions = [down.model.actions(s) for s in range(down.model.num_states)]
    names = down.model.names
    relevant = _relevant_sorted(down)
    per_state: dict[int, list[tuple[str, dict[int, float]]]] = {}
    provenance: dict[int, list[str]] = {}
    total = 0
    for r in relevant:
        seen = set()
        per_state[r] = []
        provenance[r] = []
        for assign in enumerate_schedulers(down, r, max_schedulers):
            total += 1
            succ = {s: dict(sparse[s][k]) for s, k in assign.items()}
            mu = _probs(succ, r, down.num_regular, mode, epsilon)
            key = tuple(sorted((s, round(p, 12)) for s, p in mu.items() if p > 0))
            if key in seen:
                continue
            seen.add(key)
            per_state[r].append((f"σ{len(per_state[r])}", mu))
            provenance[r].append(",".join(f"{names[s]}:{actions[s][k]}" for s, k in sorted(assign.items())))
    return _merged(names, relevant, per_state, provenance), total


def build_elim_model(
    down: TransformedMdp, max_branches: int = DEFAULT_MAX_BRANCHES
) -> tuple[MergedModel, tuple[int, int, int]]:
    """Merged model from MDP state elimination; also returns the size of the
    eliminated model (relevant states, their transitions, their branches)."""
    relevant = _relevant_sorted(down)
    ws = eliminate_all(down, relevant, max_branches=max_branches)
    n = down.num_regular
    per_state = {}
    provenance = {}
    n_tr = n_br = 0
    for r in relevant:
        per_state[r] = []
        provenance[r] = []
        for ch in ws.transitions_of(r):
            n_tr += 1
            n_br += len(ch.branches)
            mu: dict[int, float] = {}
            for t, p in ch.branches.items():
                k = t - n if t >= n else BOTTOM
                mu[k] = mu.get(k, 0.0) + p
            mu[BOTTOM] = mu.get(BOTTOM, 0.0) + ch.deficit
            label = composite_label(ch.label)
            per_state[r].append((label, mu))
            provenance[r].append(label)
    return _merged(down.model.names, relevant, per_state, provenance), (len(relevant), n_tr, n_br)


def senum(
    model: Mdp,
    goal: Iterable[int],
    reward: RewardStructure,
    bound,
    opt: str = "max",
    epsilon: float = DEFAULT_EPSILON,
    prob_mode: str = "vi",
    max_schedulers: int = MAX_SCHEDULERS,
    max_bound_steps: int = MAX_BOUND_STEPS,
) -> CdfResult:
    """Scheduler enumeration followed by step-bounded value iteration."""
    _check_args(opt, epsilon)
    problem = _prepare(model, goal, reward, bound)
    t0 = time.perf_counter()
    merged, count = build_senum_model(problem.down, prob_mode, epsilon, max_schedulers)
    t1 = time.perf_counter()
    seed = initial_values(problem.absorbing, problem.goal, problem.reward, opt, epsilon)
    stepper = _MergedStepper(merged, seed, problem.absorbing.initial, opt)
    values, converged = _drive(stepper, problem.bound, epsilon, max_bound_steps)
    stats = {
        "schedulers": count,
        "reduced": merged.model.size(),
        "enum_seconds": t1 - t0,
        "iter_seconds": time.perf_counter() - t1,
    }
    name = "senum-vi" if prob_mode == "vi" else "senum-elim"
    return CdfResult(opt, values, converged, epsilon, name, problem.scale, stats)


def elim(
    model: Mdp,
    goal: Iterable[int],
    reward: RewardStructure,
    bound,
    opt: str = "max",
    epsilon: float = DEFAULT_EPSILON,
    max_branches: int = DEFAULT_MAX_BRANCHES,
    max_bound_steps: int = MAX_BOUND_STEPS,
) -> CdfResult:
    """MDP state elimination and merging followed by step-bounded value iteration."""
    _check_args(opt, epsilon)
    problem = _prepare(model, goal, reward, bound)
    t0 = time.perf_counter()
    merged, eliminated = build_elim_model(problem.down, max_branches)
    t1 = time.perf_counter()
    seed = initial_values(problem.absorbing, problem.goal, problem.reward, opt, epsilon)
    stepper = _MergedStepper(merged, seed, problem.absorbing.initial, opt)
    values, converged = _drive(stepper, problem.bound, epsilon, max_bound_steps)
    stats = {
        "eliminated": eliminated,
        "reduced": merged.model.size(),
        "elim_seconds": t1 - t0,
        "iter_seconds": time.perf_counter() - t1,
    }
    return CdfResult(opt, values, converged, epsilon, "elim", problem.scale, stats)


ALGORITHMS = {
    "modvi": modvi,
    "senum-vi": lambda *a, **k: senum(*a, prob_mode="vi", **k),
    "senum-elim": lambda *a, **k: senum(*a, prob_mode="dtmc-elim", **k),
    "elim": elim,
}


def run_bounded(
    algorithm: str,
    model: Mdp,
    goal: Iterable[int],
    reward: RewardStructure,
    bound,
    opt: str = "max",
    epsilon: float = DEFAULT_EPSILON,
    **options,
) -> CdfResult:
    try:
        fn = ALGORITHMS[algorithm]
    except KeyError:
        raise UnsupportedQuery(f"unknown algorithm {algorithm!r}") from None
    return fn(model, goal, reward, bound, opt=opt, epsilon=epsilon, **options)


def run_to_convergence(
    algorithm: str,
    model: Mdp,
    goal: Iterable[int],
    reward: RewardStructure,
    opt: str = "max",
    epsilon: float = DEFAULT_EPSILON,
    max_bound_steps: int = MAX_BOUND_STEPS,
    **options,
) -> CdfResult:
    """Extend the bound until one bound step changes no value by ``epsilon``."""
    return run_bounded(
        algorithm, model, goal, reward, "auto", opt, epsilon,
        max_bound_steps=max_bound_steps, **options,
    )
