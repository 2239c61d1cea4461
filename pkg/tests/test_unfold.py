from fractions import Fraction

import pytest

from rbcheck.errors import ModelError, ResourceLimitExceeded
from rbcheck.mdp import RewardStructure
from rbcheck.randmodel import generate_random
from rbcheck.unfold import oracle_bounded_prob, unfold


class TestUnfold:
    def test_worked_example_bound_one(self, me_model, me_goal, me_reward):
        u = unfold(me_model, me_reward, 1, me_goal)
        assert len(u.pairs) <= 5 * 3
        v = me_model.state("v")
        assert {u.pairs[i] for i in u.goal_prime} == {(v, 0), (v, 1)}

    def test_bound_zero_has_two_layers(self, me_model, me_goal, me_reward):
        u = unfold(me_model, me_reward, 0, me_goal)
        assert {k for _, k in u.pairs} == {0, 1}
        for s, a, t, _ in me_model.branches():
            if me_reward(s, a, t) == 1 and (s, 0) in u.pairs:
                src = u.pairs.index((s, 0))
                (tr,) = [x for x in u.model.transitions[src] if x.action == a]
                assert u.pairs[tr.distribution.support[0]] == (t, u.overflow)

    def test_no_rewards_single_layer(self, me_model):
        u = unfold(me_model, RewardStructure("r"), 3)
        assert [k for _, k in u.pairs] == [0] * 5
        assert sorted(s for s, _ in u.pairs) == list(range(5))

    def test_size_bound(self):
        bundle = generate_random(3, 7, 3, 0.5)
        u = unfold(bundle.model, bundle.reward("r"), 4, bundle.goal("goal"))
        assert len(u.pairs) <= (4 + 2) * 7

    def test_state_cap(self, me_model, me_reward):
        with pytest.raises(ResourceLimitExceeded):
            unfold(me_model, me_reward, 10, max_states=6)

    def test_negative_bound(self, me_model, me_reward):
        with pytest.raises(ModelError):
            unfold(me_model, me_reward, -1)


class TestOracle:
    def test_worked_example(self, me_model, me_goal, me_reward):
        assert oracle_bounded_prob(me_model, me_goal, me_reward, 2, "max") == pytest.approx([0.25, 0.4, 0.52], abs=1e-9)
        assert oracle_bounded_prob(me_model, me_goal, me_reward, 2, "min") == [0.0, 0.0, 0.0]

    def test_unreachable_goal(self, me_model, me_reward):
        w = me_model.state("w")
        assert oracle_bounded_prob(me_model.with_initial(w), {me_model.state("v")}, me_reward, 3) == [0.0] * 4

    def test_rational_rewards_direct(self, me_model, me_goal):
        # reward 1/2 on the t-loop: twice as many loops fit under each bound
        half = RewardStructure("r", {(1, "d", 1): Fraction(1, 2)})
        one = RewardStructure("r", {(1, "d", 1): Fraction(1)})
        a = oracle_bounded_prob(me_model, me_goal, half, 2)
        b = oracle_bounded_prob(me_model, me_goal, one, 4)
        assert a == pytest.approx(b[::2], abs=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_consistent_across_bounds(self, seed):
        bundle = generate_random(seed, 5, 2, 0.5)
        args = (bundle.model, bundle.goal("goal"), bundle.reward("r"))
        short = oracle_bounded_prob(*args, 3)
        longer = oracle_bounded_prob(*args, 4)
        assert longer[:4] == pytest.approx(short, abs=1e-9)
        assert all(x <= y + 1e-12 for x, y in zip(longer, longer[1:]))
