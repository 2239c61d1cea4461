import json

import pytest

from rbcheck.errors import ModelError, ModelSyntaxError
from rbcheck.modelio import cdf_to_csv, parse_model, read_csv, serialize_model
from rbcheck.randmodel import generate_random

from conftest import DATA


def _doc(**changes):
    doc = json.loads((DATA / "me.json").read_text())
    doc.update(changes)
    return doc


class TestParse:
    def test_worked_example(self, me):
        assert me.model.names == ("s", "t", "u", "v", "w")
        assert list(me.rewards) == ["r"]
        assert me.goal("goal") == {me.model.state("v")}
        assert me.reward("r").nonzero() == {(0, "b", 0): 1, (1, "d", 1): 1}

    def test_thirds_sum_within_tolerance(self):
        doc = {
            "states": ["x", "y", "z"],
            "initial": "x",
            "transitions": [
                {"from": "x", "action": "a", "branches": [{"to": t, "prob": "1/3"} for t in "xyz"]},
                {"from": "y", "action": "a", "branches": [{"to": "y", "prob": 1}]},
                {"from": "z", "action": "a", "branches": [{"to": "z", "prob": 1.0}]},
            ],
        }
        bundle = parse_model(json.dumps(doc))
        assert bundle.model.transitions[0][0].distribution.total() == pytest.approx(1.0, abs=1e-12)

    def test_unknown_source_state(self):
        doc = _doc()
        doc["transitions"].append({"from": "ghost", "action": "a", "branches": [{"to": "s", "prob": 1}]})
        with pytest.raises(ModelError, match="ghost"):
            parse_model(json.dumps(doc))

    def test_unknown_reward_structure(self):
        doc = _doc()
        doc["transitions"][0]["branches"][0]["rewards"] = {"cost": 1}
        with pytest.raises(ModelError, match="cost"):
            parse_model(json.dumps(doc))

    def test_validation_violations_attached(self):
        doc = _doc()
        doc["transitions"][1]["branches"][1]["prob"] = 0.6
        with pytest.raises(ModelError) as info:
            parse_model(json.dumps(doc))
        assert info.value.violations
        assert "(s,b)" in str(info.value)

    def test_syntax_error_position(self):
        text = '{\n  "states": ["s",]\n}'
        with pytest.raises(ModelSyntaxError) as info:
            parse_model(text)
        assert (info.value.line, info.value.column) == (2, 18)

    def test_bad_number(self):
        doc = _doc()
        doc["transitions"][0]["branches"][0]["prob"] = "one"
        with pytest.raises(ModelError, match="'one'"):
            parse_model(json.dumps(doc))

    def test_decimal_reward_is_exact(self):
        doc = _doc()
        doc["transitions"][1]["branches"][0]["rewards"] = {"r": 0.1}
        bundle = parse_model(json.dumps(doc))
        assert bundle.reward("r")(0, "b", 0).denominator == 10

    def test_unknown_label_and_reward_lookup(self, me):
        with pytest.raises(ModelError):
            me.goal("nope")
        with pytest.raises(ModelError):
            me.reward("nope")


class TestRoundTrip:
    def test_worked_example(self, me):
        again = parse_model(serialize_model(me))
        assert again == me

    def test_random_golden_file(self):
        # written once by `rbcheck random --seed 1 --states 5` and committed
        golden = (DATA / "random_seed1_5.json").read_text()
        assert serialize_model(generate_random(1, 5)) == golden
        assert parse_model(golden) == generate_random(1, 5)

    @pytest.mark.parametrize("seed", range(10))
    def test_random_models(self, seed):
        bundle = generate_random(seed, 6, 3, 0.5)
        assert parse_model(serialize_model(bundle)) == bundle


class TestCsv:
    def test_format(self):
        assert cdf_to_csv([0.25, 0.4, 0.52]) == "bound,value\n0,0.25\n1,0.4\n2,0.52\n"

    def test_twelve_digits(self):
        text = cdf_to_csv([1 / 3])
        assert text.splitlines()[1] == "0,0.333333333333"
        assert abs(read_csv(text)[0] - 1 / 3) < 1e-11

    def test_bad_header(self):
        with pytest.raises(ModelError):
            read_csv("i,v\n0,1\n")
