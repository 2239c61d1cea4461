"""State elimination for Markov chains and for MDPs.

The MDP variant keeps every option a positional scheduler has: eliminating
``t`` turns each predecessor transition ``(s, a)`` into one composite
transition ``(s, a·b)`` per action ``b`` of ``t``, and the self-loop of
``t`` under ``b`` is folded back into that same composite.  Each composite
remembers which action it fixed at every state it passed through; a
combination that would need two different actions at one state is not
positional and is never created.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ModelError, ResourceLimitExceeded
from .mdp import Distribution, Mdp, Transition
from .transforms import TransformedMdp

SINK_TOLERANCE = 1e-12
DEFAULT_MAX_BRANCHES = 10**7
LABEL_SEP = "·"


def eliminate_chain_state(
    succ: dict[int, dict[int, float]],
    pred: dict[int, set[int]],
    t: int,
) -> None:
    """Remove ``t`` from all incoming positions of a chain given as dicts.

    ``succ[x]`` maps successors to probabilities, ``pred[y]`` is the set of
    states with a branch into ``y``.  Raises ``ValueError`` when ``t`` loops
    on itself with probability 1.
    """
    out = succ[t]
    loop = out.get(t, 0.0)
    if loop >= 1.0 - SINK_TOLERANCE:
        raise ValueError(f"state {t} is a probability-1 sink and cannot be eliminated")
    scale = 1.0 / (1.0 - loop)
    exits = [(u, p * scale) for u, p in out.items() if u != t]
    for s in list(pred[t]):
        if s == t:
            continue
        row = succ[s]
        p_a = row.pop(t)
        for u, q in exits:
            if u not in row:
                pred[u].add(s)
            row[u] = row.get(u, 0.0) + p_a * q
    pred[t] = {t} if t in out else set()


def _chain_dicts(chain: Mdp) -> tuple[dict, dict]:
    succ = {s: dict(ts[0].distribution.branches) for s, ts in enumerate(chain.transitions)}
    pred: dict[int, set[int]] = {s: set() for s in succ}
    for s, row in succ.items():
        for t in row:
            pred[t].add(s)
    return succ, pred


def _require_chain(chain: Mdp) -> None:
    if not chain.is_deterministic():
        raise ModelError("DTMC elimination needs a deterministic model")


def eliminate_dtmc_state(chain: Mdp, t: int) -> Mdp:
    """Bypass state ``t``: every branch into it is spread over ``t``'s exits.

    ``t`` keeps its own outgoing transition but no branch targets it any more.
    """
    _require_chain(chain)
    if t == chain.initial:
        raise ValueError("the initial state cannot be eliminated")
    succ, pred = _chain_dicts(chain)
    eliminate_chain_state(succ, pred, t)
    transitions = [
        (Transition(ts[0].action, Distribution.from_mapping(succ[s])),)
        for s, ts in enumerate(chain.transitions)
    ]
    return Mdp(chain.names, chain.initial, transitions, chain.labels)


def chain_reach_probs(
    succ: dict[int, dict[int, float]],
    start: int,
    targets: Iterable[int],
) -> dict[int, float]:
    """Probability of hitting each target first, from ``start``, by elimination.

    Targets are treated as absorbing.  States that cannot reach any target
    are cut off first (their mass is simply lost) so every state that gets
    eliminated has a self-loop strictly below 1.
    """
    targets = set(targets)
    if start in targets:
        return {start: 1.0}
    # backwards reachability to the targets
    back: dict[int, set[int]] = {}
    for s, row in succ.items():
        if s in targets:
            continue
        for t in row:
            back.setdefault(t, set()).add(s)
    alive = set(targets)
    stack = list(targets)
    while stack:
        y = stack.pop()
        for x in back.get(y, ()):
            if x not in alive:
                alive.add(x)
                stack.append(x)
    if start not in alive:
        return {}
    work = {
        s: {t: p for t, p in row.items() if t in alive}
        for s, row in succ.items()
        if s in alive and s not in targets
    }
    pred: dict[int, set[int]] = {s: set() for s in alive}
    for s, row in work.items():
        for t in row:
            pred[t].add(s)
    for t in list(work):
        if t != start:
            eliminate_chain_state(work, pred, t)
            for u in work.pop(t):
                pred[u].discard(t)
    row = work[start]
    loop = row.get(start, 0.0)
    if loop >= 1.0 - SINK_TOLERANCE:
        return {}
    return {t: p / (1.0 - loop) for t, p in row.items() if t != start and p > 0.0}


def dtmc_reach_probabilities(chain: Mdp, targets: Iterable[int], start: int | None = None) -> dict[int, float]:
    """Per-target first-hitting probabilities of a Markov chain via elimination."""
    _require_chain(chain)
    succ, _ = _chain_dicts(chain)
    return chain_reach_probs(succ, chain.initial if start is None else start, targets)


@dataclass
class Choice:
    """One transition of a model under reduction."""

    source: int
    label: tuple[str, ...]
    branches: dict[int, float]
    fixed: dict[int, str]

    @property
    def deficit(self) -> float:
        return max(0.0, 1.0 - sum(self.branches.values()))


@dataclass
class EliminationWorkspace:
    """Mutable reduction state for one elimination run."""

    transformed: TransformedMdp
    relevant: frozenset[int]
    choices: dict[int, Choice] = field(default_factory=dict)
    outgoing: dict[int, list[int]] = field(default_factory=dict)
    incoming: dict[int, set[int]] = field(default_factory=dict)
    eliminated: list[int] = field(default_factory=list)
    max_branches: int = DEFAULT_MAX_BRANCHES
    branch_count: int = 0
    _ids: itertools.count = field(default_factory=itertools.count)

    @classmethod
    def from_transformed(
        cls,
        transformed: TransformedMdp,
        relevant: Iterable[int] | None = None,
        max_branches: int = DEFAULT_MAX_BRANCHES,
    ) -> EliminationWorkspace:
        if relevant is None:
            relevant = relevant_states(transformed)
        ws = cls(transformed, frozenset(relevant), max_branches=max_branches)
        model = transformed.model
        for s in range(transformed.num_regular):
            ws.outgoing[s] = []
            ws.incoming.setdefault(s, set())
            for tr in model.transitions[s]:
                ws._add(Choice(s, (tr.action,), dict(tr.distribution.branches), {s: tr.action}))
        return ws

    def _add(self, ch: Choice) -> None:
        cid = next(self._ids)
        self.choices[cid] = ch
        self.outgoing[ch.source].append(cid)
        for t in ch.branches:
            self.incoming.setdefault(t, set()).add(cid)
        self.branch_count += len(ch.branches)
        if self.branch_count > self.max_branches:
            raise ResourceLimitExceeded(
                f"state elimination exceeded {self.max_branches} branches "
                f"({len(self.choices)} transitions, {self.branch_count} branches)"
            )

    def _remove(self, cid: int) -> Choice:
        ch = self.choices.pop(cid)
        self.outgoing[ch.source].remove(cid)
        for t in ch.branches:
            self.incoming[t].discard(cid)
        self.branch_count -= len(ch.branches)
        return ch

    def predecessors(self, t: int) -> list[int]:
        return [cid for cid in self.incoming.get(t, ()) if self.choices[cid].source != t]

    def cost(self, t: int) -> int:
        return len(self.predecessors(t)) * max(1, len(self.outgoing[t]))

    def transitions_of(self, s: int) -> list[Choice]:
        return [self.choices[cid] for cid in self.outgoing.get(s, ())]

    def check_consistency(self) -> None:
        """Recompute the incoming index from scratch and compare (debug aid)."""
        fresh: dict[int, set[int]] = {}
        for cid, ch in self.choices.items():
            assert cid in self.outgoing[ch.source]
            for t in ch.branches:
                fresh.setdefault(t, set()).add(cid)
        for t in set(fresh) | set(self.incoming):
            assert fresh.get(t, set()) == self.incoming.get(t, set()), t
        for t in self.eliminated:
            assert not self.incoming.get(t), f"eliminated state {t} still has incoming branches"


def _compatible(a: dict[int, str], b: dict[int, str]) -> bool:
    if len(a) > len(b):
        a, b = b, a
    return all(b.get(s, act) == act for s, act in a.items())


def eliminate_mdp_state(ws: EliminationWorkspace, t: int) -> None:
    """Remove regular state ``t`` from every incoming position in ``ws``.

    If ``t`` is relevant its own transitions stay, with their self-loops
    folded in; otherwise they are dropped.  An action of ``t`` that loops on
    ``t`` with probability 1 contributes nothing: the mass that would enter
    it stays missing and is read as being stuck.
    """
    if t in ws.eliminated:
        raise ValueError(f"state {t} already eliminated")
    if ws.transformed.is_copy(t):
        raise ValueError(f"state {t} is an absorbing copy, not a regular state")
    folded: list[Choice] = []
    for cid in list(ws.outgoing[t]):
        ch = ws._remove(cid)
        loop = ch.branches.get(t, 0.0)
        if loop >= 1.0 - SINK_TOLERANCE:
            exits = {}
        else:
            scale = 1.0 / (1.0 - loop)
            exits = {u: p * scale for u, p in ch.branches.items() if u != t}
        folded.append(Choice(t, ch.label, exits, ch.fixed))

    for cid in ws.predecessors(t):
        ch = ws._remove(cid)
        p_a = ch.branches[t]
        base = {u: p for u, p in ch.branches.items() if u != t}
        for b in folded:
            if not _compatible(ch.fixed, b.fixed):
                continue
            branches = dict(base)
            for u, q in b.branches.items():
                branches[u] = branches.get(u, 0.0) + p_a * q
            ws._add(Choice(ch.source, ch.label + b.label, branches, {**ch.fixed, **b.fixed}))

    if t in ws.relevant:
        for b in folded:
            ws._add(b)
    ws.eliminated.append(t)


def relevant_states(transformed: TransformedMdp) -> frozenset[int]:
    """The initial state plus every regular state whose copy is hit by a reward-1 branch."""
    out = {transformed.model.initial}
    for _, _, copy in transformed.reward_one:
        out.add(transformed.origin[copy])
    return frozenset(out)


def eliminate_all(
    transformed: TransformedMdp,
    relevant: Iterable[int] | None = None,
    order: Iterable[int] | None = None,
    max_branches: int = DEFAULT_MAX_BRANCHES,
    debug: bool = False,
) -> EliminationWorkspace:
    """Eliminate every regular state; relevant ones keep their outgoing transitions.

    Without an explicit ``order`` states go greedily by the smallest
    (number of incoming transitions) × (number of own transitions).
    """
    ws = EliminationWorkspace.from_transformed(transformed, relevant, max_branches)
    if order is not None:
        for t in order:
            eliminate_mdp_state(ws, t)
            if debug:
                ws.check_consistency()
        missing = set(range(transformed.num_regular)) - set(ws.eliminated)
        if missing:
            raise ValueError(f"order leaves states {sorted(missing)} uneliminated")
        return ws

    heap = [(ws.cost(s), s) for s in range(transformed.num_regular)]
    heapq.heapify(heap)
    done: set[int] = set()
    while heap:
        score, t = heapq.heappop(heap)
        if t in done:
            continue
        current = ws.cost(t)
        if current != score:
            heapq.heappush(heap, (current, t))
            continue
        eliminate_mdp_state(ws, t)
        done.add(t)
        if debug:
            ws.check_consistency()
    return ws


def composite_label(label: tuple[str, ...]) -> str:
    return LABEL_SEP.join(label)
