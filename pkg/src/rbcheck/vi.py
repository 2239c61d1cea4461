"""Unbounded and step-bounded value iteration for reachability probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NonConvergence, NumericalError
from .mdp import Mdp

DEFAULT_EPSILON = 1e-6
MAX_SWEEPS = 10**7
RANGE_SLACK = 1e-12

Sparse = list[list[list[tuple[int, float]]]]


@dataclass
class SweepStats:
    iterations: int = 0
    last_error: float = 0.0
    cumulative_max_error: float = 0.0


@dataclass
class StepTrace:
    """Values at the watched states after each of the ``n`` steps."""

    values: np.ndarray
    errors: list[float] = field(default_factory=list)

    @property
    def max_error(self) -> float:
        return max(self.errors, default=0.0)


def pick(opt: str):
    if opt == "max":
        return max
    if opt == "min":
        return min
    raise ValueError(f"opt must be 'max' or 'min', not {opt!r}")


def _check_range(V: list[float]) -> None:
    lo, hi = min(V), max(V)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise NumericalError("value iteration produced a non-finite value")
    if lo < -RANGE_SLACK or hi > 1.0 + RANGE_SLACK:
        raise NumericalError(
            f"value iteration left [0,1] (min {lo!r}, max {hi!r}); "
            "probabilities probably do not sum to 1"
        )


def gauss_seidel(
    V: list[float],
    sparse: Sparse,
    opt: str,
    epsilon: float,
    max_sweeps: int = MAX_SWEEPS,
) -> SweepStats:
    """In-place unbounded iteration on a plain list; shared by the public kernel
    and by the per-scheduler probability computation."""
    choose = pick(opt)
    stats = SweepStats()
    while True:
        error = 0.0
        for s, trans in enumerate(sparse):
            if len(trans) == 1:
                v_new = sum([p * V[t] for t, p in trans[0]])
            else:
                v_new = choose([sum([p * V[t] for t, p in br]) for br in trans])
            if v_new > 0:
                e = abs(v_new - V[s]) / v_new
                if e > error:
                    error = e
            V[s] = v_new
        stats.iterations += 1
        stats.last_error = error
        if error > stats.cumulative_max_error:
            stats.cumulative_max_error = error
        _check_range(V)
        if error < epsilon:
            return stats
        if stats.iterations >= max_sweeps:
            raise NonConvergence(
                f"value iteration did not reach relative error {epsilon:g} "
                f"within {max_sweeps} sweeps (last error {error:g})"
            )


def unbounded_vi(
    values: np.ndarray,
    model: Mdp,
    opt: str = "max",
    epsilon: float = DEFAULT_EPSILON,
    max_sweeps: int = MAX_SWEEPS,
) -> SweepStats:
    """Iterate ``values`` in place until a sweep's max relative error < epsilon.

    Sweeps visit states in ascending index order and read values already
    updated earlier in the same sweep.  States whose new value is 0 do not
    contribute to the error.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if len(values) != model.num_states:
        raise ValueError(
            f"value vector has {len(values)} entries for {model.num_states} states"
        )
    V = [float(x) for x in values]
    stats = gauss_seidel(V, model.sparse, opt, epsilon, max_sweeps)
    values[:] = V
    return stats


def jacobi_step(V: list[float], sparse: Sparse, opt: str) -> tuple[list[float], float]:
    """One synchronous sweep; returns the new vector and its max relative error."""
    choose = pick(opt)
    out = [0.0] * len(V)
    error = 0.0
    for s, trans in enumerate(sparse):
        if len(trans) == 1:
            v_new = sum([p * V[t] for t, p in trans[0]])
        else:
            v_new = choose([sum([p * V[t] for t, p in br]) for br in trans])
        if v_new > 0:
            e = abs(v_new - V[s]) / v_new
            if e > error:
                error = e
        out[s] = v_new
    _check_range(out)
    return out, error


def step_bounded_vi(
    values: np.ndarray,
    model: Mdp,
    n: int,
    opt: str = "max",
    watch: Sequence[int] = (),
) -> StepTrace:
    """Exactly ``n`` synchronous sweeps, each reading the previous sweep's copy."""
    if n < 0:
        raise ValueError("step bound must be nonnegative")
    if len(values) != model.num_states:
        raise ValueError(
            f"value vector has {len(values)} entries for {model.num_states} states"
        )
    watch = list(watch)
    V = [float(x) for x in values]
    rows = np.empty((n, len(watch)))
    errors = []
    sparse = model.sparse
    for i in range(n):
        V, err = jacobi_step(V, sparse, opt)
        errors.append(err)
        rows[i] = [V[s] for s in watch]
    values[:] = V
    return StepTrace(rows, errors)
