"""Property tests over seeded random models."""

from collections import Counter

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from rbcheck.bounded import ALGORITHMS, run_bounded
from rbcheck.mdp import Distribution, Mdp, SimpleScheduler, Transition, restrict
from rbcheck.modelio import cdf_to_csv, parse_model, read_csv, serialize_model
from rbcheck.randmodel import generate_random
from rbcheck.transforms import make_absorbing, normalize_rewards, redirect_down, redirect_up
from rbcheck.unfold import oracle_bounded_prob, oracle_value
from rbcheck.vi import step_bounded_vi, unbounded_vi

from reference import reach_linear, stepwise_cdf, with_rational_rewards

# tighter than the default so the 1e-5 comparisons are not dominated by the stopping rule
EPS = 1e-7

seeds = st.integers(0, 10**6)
sizes = st.integers(2, 6)
actions = st.integers(1, 3)
densities = st.sampled_from([0.2, 0.5, 1.0])
fast = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def bundle_of(seed, n, k, density):
    b = generate_random(seed, n, k, density)
    return b, b.model, b.goal("goal"), b.reward("r")


@fast
@given(seeds, sizes, actions, densities, st.sampled_from(["max", "min"]))
def test_algorithms_match_oracle_and_each_other(seed, n, k, density, opt):
    _, m, goal, rew = bundle_of(seed, n, k, density)
    oracle = oracle_bounded_prob(m, goal, rew, 6, opt)
    for algorithm in ALGORITHMS:
        values = run_bounded(algorithm, m, goal, rew, 6, opt, EPS).values
        assert values == pytest.approx(oracle, abs=1e-5), algorithm
        assert all(0.0 <= v <= 1.0 for v in values)
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))


@fast
@given(seeds, sizes, actions, densities, st.sampled_from(["max", "min"]))
def test_stepwise_recursion(seed, n, k, density, opt):
    _, m, goal, rew = bundle_of(seed, n, k, density)
    expected = stepwise_cdf(m, goal, rew, 5, opt)
    got = run_bounded("elim", m, goal, rew, 5, opt, 1e-9).values
    assert got == pytest.approx(expected, abs=1e-6)


@fast
@given(seeds, sizes, actions)
def test_density_zero_gives_constant_unbounded(seed, n, k):
    _, m, goal, rew = bundle_of(seed, n, k, 0.0)
    values = run_bounded("modvi", m, goal, rew, 4, "max", 1e-9).values
    V = np.zeros(n)
    V[list(goal)] = 1.0
    absorbing, _ = make_absorbing(m, goal, rew)
    unbounded_vi(V, absorbing, "max", 1e-9)
    assert values == pytest.approx([V[m.initial]] * 5, abs=1e-6)


@fast
@given(seeds, sizes, actions, st.sampled_from(["max", "min"]))
def test_density_one_is_step_bounded(seed, n, k, opt):
    _, m, goal, rew = bundle_of(seed, n, k, 1.0)
    values = run_bounded("senum-elim", m, goal, rew, 5, opt).values
    absorbing, _ = make_absorbing(m, goal, rew)
    V = np.zeros(n)
    V[list(goal)] = 1.0
    trace = step_bounded_vi(V, absorbing, 5, opt, watch=[m.initial])
    expected = [float(m.initial in goal)] + list(trace.values[:, 0])
    assert values == pytest.approx(expected, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(2, 5), st.integers(1, 2), st.sampled_from(["max", "min"]))
def test_normalization_preserves_values(seed, n, k, opt):
    _, m, goal, rew = bundle_of(seed, n, k, 0.5)
    rational = with_rational_rewards(rew, seed)
    out, r01, nat = normalize_rewards(m, rational, 2)
    scale = nat // 2
    before = [oracle_value(m, goal, rational, i / scale, opt) for i in (0, scale, nat)]
    after = [oracle_value(out, goal, r01, i, opt) for i in (0, scale, nat)]
    assert after == pytest.approx(before, abs=1e-6)


@fast
@given(seeds, sizes, actions, densities)
def test_redirect_keeps_probabilities(seed, n, k, density):
    _, m, goal, rew = bundle_of(seed, n, k, density)
    absorbing, r = make_absorbing(m, goal, rew)
    down = redirect_down(absorbing, r)
    up = redirect_up(absorbing, r)
    for s in range(n):
        for orig, new_down, new_up in zip(absorbing.transitions[s], down.model.transitions[s], up.model.transitions[s]):
            probs = Counter(p for _, p in orig.distribution)
            assert Counter(p for _, p in new_down.distribution) == probs
            # ↑ merges reward-1 branches of one transition into a single copy target
            assert new_up.distribution.total() == pytest.approx(orig.distribution.total(), abs=1e-15)
    # after either redirection no reward-1 branch points at a regular state
    assert all(t >= n for _, _, t in down.reward_one | up.reward_one)


@fast
@given(seeds, sizes, actions, densities)
def test_serialization_round_trip(seed, n, k, density):
    b = generate_random(seed, n, k, density)
    assert parse_model(serialize_model(b)) == b


@given(st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=30))
def test_csv_round_trip(values):
    assert read_csv(cdf_to_csv(values)) == pytest.approx(values, abs=1e-11)


@fast
@given(seeds, sizes, actions, st.data())
def test_restrict_is_deterministic(seed, n, k, data):
    _, m, _, _ = bundle_of(seed, n, k, 0.5)
    choice = {s: data.draw(st.sampled_from(m.actions(s))) for s in range(n)}
    chain = restrict(m, SimpleScheduler(choice))
    assert chain.is_deterministic()
    assert [chain.actions(s)[0] for s in range(n)] == [choice[s] for s in range(n)]


@fast
@given(seeds, sizes, actions, st.sampled_from(["max", "min"]))
def test_unbounded_sweeps_nondecreasing(seed, n, k, opt):
    _, m, goal, rew = bundle_of(seed, n, k, 0.5)
    m, _ = make_absorbing(m, goal, rew)
    V = np.zeros(n)
    V[list(goal)] = 1.0
    for _ in range(30):
        before = V.copy()
        unbounded_vi(V, m, opt, epsilon=float("inf"))  # exactly one sweep
        assert (V >= before - 1e-15).all()


@fast
@given(seeds, sizes, actions, st.integers(0, 6))
def test_step_bounded_composes(seed, n, k, steps):
    _, m, goal, _ = bundle_of(seed, n, k, 0.5)
    V = np.zeros(n)
    V[list(goal)] = 1.0
    W = V.copy()
    step_bounded_vi(V, m, steps, "max")
    for _ in range(steps):
        step_bounded_vi(W, m, 1, "max")
    assert list(V) == list(W)


@fast
@given(seeds, sizes)
def test_deterministic_max_equals_min(seed, n):
    _, m, goal, rew = bundle_of(seed, n, 1, 0.5)
    a = run_bounded("elim", m, goal, rew, 4, "max").values
    b = run_bounded("elim", m, goal, rew, 4, "min").values
    assert a == b


@fast
@given(st.integers(0, 10**6), st.integers(2, 9))
def test_acyclic_exact_within_state_count(seed, n):
    # edges only go to higher indices, goal is the last state
    rng = np.random.default_rng(seed)
    transitions = []
    for s in range(n - 1):
        k = int(rng.integers(1, min(3, n - 1 - s) + 1))
        targets = rng.choice(np.arange(s + 1, n), size=k, replace=False)
        w = rng.integers(1, 10, size=k)
        transitions.append([Transition("a", Distribution(tuple(zip(targets.tolist(), (w / w.sum()).tolist()))))])
    transitions.append([Transition("a", Distribution.dirac(n - 1))])
    m = Mdp(tuple(f"q{i}" for i in range(n)), 0, transitions)
    P = np.zeros((n, n))
    for s, _, t, p in m.branches():
        P[s, t] += p
    P[n - 1] = 0
    exact = reach_linear(P, {n - 1})
    V = np.zeros(n)
    V[n - 1] = 1.0
    for _ in range(n):
        unbounded_vi(V, m, "max", epsilon=float("inf"))
    assert V == pytest.approx(exact, abs=1e-12)
