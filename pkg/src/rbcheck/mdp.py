"""Explicit-state Markov decision processes.

States are dense indices ``0..n-1`` in declaration order; display names are
kept alongside.  Every object here is immutable once built, so a parsed
model can be shared between queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping

from .errors import InvalidScheduler

PROB_TOLERANCE = 1e-9
TAU = "τ"

BranchKey = tuple[int, str, int]


@dataclass(frozen=True)
class Distribution:
    """Finite-support distribution as ordered ``(target, probability)`` pairs."""

    branches: tuple[tuple[int, float], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "branches", tuple((int(t), float(p)) for t, p in self.branches)
        )

    @classmethod
    def dirac(cls, target: int) -> Distribution:
        return cls(((target, 1.0),))

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, float]) -> Distribution:
        return cls(tuple(mapping.items()))

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(self.branches)

    def __len__(self) -> int:
        return len(self.branches)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(t for t, _ in self.branches)

    def prob(self, target: int) -> float:
        for t, p in self.branches:
            if t == target:
                return p
        return 0.0

    def total(self) -> float:
        return math.fsum(p for _, p in self.branches)

    def is_dirac(self) -> bool:
        return len(self.branches) == 1


@dataclass(frozen=True)
class Transition:
    action: str
    distribution: Distribution


@dataclass(frozen=True)
class Mdp:
    names: tuple[str, ...]
    initial: int
    transitions: tuple[tuple[Transition, ...], ...]
    labels: Mapping[str, frozenset[int]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(
            self, "transitions", tuple(tuple(ts) for ts in self.transitions)
        )
        object.__setattr__(
            self, "labels", {k: frozenset(v) for k, v in dict(self.labels).items()}
        )

    @property
    def num_states(self) -> int:
        return len(self.names)

    @cached_property
    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def state(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise KeyError(f"unknown state {name!r}") from None

    def actions(self, s: int) -> tuple[str, ...]:
        return tuple(tr.action for tr in self.transitions[s])

    def transition(self, s: int, action: str) -> Transition:
        for tr in self.transitions[s]:
            if tr.action == action:
                return tr
        raise KeyError(f"state {self.names[s]!r} has no action {action!r}")

    def is_deterministic(self, s: int | None = None) -> bool:
        if s is None:
            return all(len(ts) == 1 for ts in self.transitions)
        return len(self.transitions[s]) == 1

    def with_initial(self, s: int) -> Mdp:
        return Mdp(self.names, s, self.transitions, self.labels)

    def branches(self) -> Iterator[tuple[int, str, int, float]]:
        for s, ts in enumerate(self.transitions):
            for tr in ts:
                for t, p in tr.distribution:
                    yield s, tr.action, t, p

    def has_branch(self, s: int, action: str, target: int) -> bool:
        if not 0 <= s < self.num_states:
            return False
        for tr in self.transitions[s]:
            if tr.action == action:
                return target in tr.distribution.support
        return False

    def size(self) -> tuple[int, int, int]:
        """(states, transitions, branches)."""
        n_tr = sum(len(ts) for ts in self.transitions)
        n_br = sum(len(tr.distribution) for ts in self.transitions for tr in ts)
        return self.num_states, n_tr, n_br

    @cached_property
    def sparse(self) -> list[list[list[tuple[int, float]]]]:
        # Plain nested lists are the fastest thing to walk from a Python loop.
        return [
            [list(tr.distribution.branches) for tr in ts] for ts in self.transitions
        ]


@dataclass(frozen=True)
class RewardStructure:
    """Branch rewards keyed by ``(state, action, target)``; missing keys are 0."""

    name: str
    values: Mapping[BranchKey, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self,
            "values",
            {(int(s), str(a), int(t)): Fraction(v) for (s, a, t), v in dict(self.values).items()},
        )

    def __call__(self, s: int, action: str, target: int) -> Fraction:
        return self.values.get((s, action, target), Fraction(0))

    def nonzero(self) -> dict[BranchKey, Fraction]:
        return {k: v for k, v in self.values.items() if v != 0}

    def is_zero_one(self) -> bool:
        return all(v in (0, 1) for v in self.values.values())


@dataclass(frozen=True)
class SimpleScheduler:
    """Positional deterministic scheduler: state index -> action label."""

    choice: Mapping[int, str]

    def __post_init__(self):
        object.__setattr__(self, "choice", dict(self.choice))

    def __getitem__(self, s: int) -> str:
        return self.choice[s]


@dataclass(frozen=True)
class Violation:
    location: str
    message: str

    def __str__(self):
        return f"{self.message} at {self.location}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


def _name(model: Mdp, s: int) -> str:
    if 0 <= s < model.num_states:
        return model.names[s]
    return f"#{s}"


def validate(model: Mdp, rewards: Iterable[RewardStructure] = ()) -> ValidationReport:
    """Check the structural invariants of ``model`` and its reward structures.

    Violations are collected, never raised, so callers can report all of them
    at once.
    """
    out: list[Violation] = []
    n = model.num_states
    if n == 0:
        out.append(Violation("model", "model has no states"))
    if not 0 <= model.initial < n:
        out.append(Violation("model", f"initial state index {model.initial} out of range"))
    if len(model.transitions) != n:
        out.append(
            Violation("model", f"{len(model.transitions)} transition lists for {n} states")
        )
    if len(set(model.names)) != len(model.names):
        out.append(Violation("model", "duplicate state names"))

    for s, ts in enumerate(model.transitions):
        where_s = _name(model, s)
        if not ts:
            out.append(Violation(f"({where_s})", "state has no transitions"))
        seen: set[str] = set()
        for tr in ts:
            where = f"({where_s},{tr.action})"
            if tr.action in seen:
                out.append(Violation(where, "duplicate action label"))
            seen.add(tr.action)
            targets = [t for t, _ in tr.distribution]
            if not targets:
                out.append(Violation(where, "empty distribution"))
                continue
            if len(set(targets)) != len(targets):
                out.append(Violation(where, "duplicate branch target"))
            for t, p in tr.distribution:
                if not 0 <= t < n:
                    out.append(Violation(where, f"branch target {t} out of range"))
                if not (math.isfinite(p) and 0.0 < p <= 1.0):
                    out.append(Violation(where, f"branch probability {p} not in (0,1]"))
            total = tr.distribution.total()
            if abs(total - 1.0) > PROB_TOLERANCE:
                out.append(Violation(where, f"distribution sum ≠ 1 ({total!r})"))

    for label, states in model.labels.items():
        for s in states:
            if not 0 <= s < n:
                out.append(Violation(f"label {label!r}", f"state index {s} out of range"))

    for rew in rewards:
        for (s, a, t), v in rew.values.items():
            where = f"{rew.name}:({_name(model, s)},{a},{_name(model, t)})"
            if v < 0:
                out.append(Violation(where, "negative reward"))
            if v != 0 and not model.has_branch(s, a, t):
                out.append(Violation(where, "reward on missing branch"))
    return ValidationReport(tuple(out))


def restrict(model: Mdp, scheduler: SimpleScheduler) -> Mdp:
    """The Markov chain induced by ``scheduler`` (one transition per state)."""
    picked = []
    for s, ts in enumerate(model.transitions):
        if s not in scheduler.choice:
            raise InvalidScheduler(f"scheduler undefined at state {model.names[s]!r}")
        a = scheduler.choice[s]
        chosen = [tr for tr in ts if tr.action == a]
        if not chosen:
            raise InvalidScheduler(
                f"action {a!r} is not enabled in state {model.names[s]!r}"
            )
        picked.append((chosen[0],))
    return Mdp(model.names, model.initial, picked, model.labels)


def reachable(model: Mdp, start: Iterable[int]) -> set[int]:
    seen = set(start)
    stack = list(seen)
    sparse = model.sparse
    while stack:
        s = stack.pop()
        for br in sparse[s]:
            for t, _ in br:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
    return seen
