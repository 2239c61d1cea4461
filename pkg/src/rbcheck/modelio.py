"""Reading and writing model documents and CDF tables.

A model document is a JSON object::

    {"name": "...", "states": ["s", ...], "initial": "s",
     "labels": {"goal": ["v"]}, "rewards": ["r"],
     "transitions": [{"from": "s", "action": "b",
                      "branches": [{"to": "s", "prob": "1/2", "rewards": {"r": 1}}]}]}

Probabilities and rewards are numbers or ``"p/q"`` strings.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import ModelError, ModelSyntaxError
from .mdp import Distribution, Mdp, RewardStructure, Transition, validate

CSV_DIGITS = 12


@dataclass(frozen=True)
class ModelBundle:
    """A parsed model together with its named reward structures."""

    model: Mdp
    rewards: Mapping[str, RewardStructure] = field(default_factory=dict)
    name: str = "model"

    def goal(self, label: str) -> frozenset[int]:
        try:
            return self.model.labels[label]
        except KeyError:
            raise ModelError(f"unknown label {label!r}") from None

    def reward(self, name: str) -> RewardStructure:
        try:
            return self.rewards[name]
        except KeyError:
            raise ModelError(f"unknown reward structure {name!r}") from None


def _number(value: Any, where: str) -> Fraction:
    if isinstance(value, bool):
        raise ModelError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # 0.1 should mean 1/10, not the nearest binary fraction
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            pass
    raise ModelError(f"{where}: expected a number or 'p/q' string, got {value!r}")


def _require(doc: Mapping, key: str, kind: type, where: str):
    if key not in doc:
        raise ModelError(f"{where}: missing key {key!r}")
    value = doc[key]
    if not isinstance(value, kind):
        raise ModelError(f"{where}: {key!r} must be a {kind.__name__}")
    return value


def model_from_dict(doc: Mapping[str, Any]) -> ModelBundle:
    """Build and validate a model from an already decoded document."""
    if not isinstance(doc, Mapping):
        raise ModelError("model document must be a JSON object")
    names = _require(doc, "states", list, "model")
    if not all(isinstance(x, str) for x in names):
        raise ModelError("model: state names must be strings")
    index = {name: i for i, name in enumerate(names)}

    def state(name, where):
        try:
            return index[name]
        except (KeyError, TypeError):
            raise ModelError(f"{where}: unknown state {name!r}") from None

    initial = state(_require(doc, "initial", str, "model"), "initial")
    labels = {
        label: {state(x, f"label {label!r}") for x in members}
        for label, members in dict(doc.get("labels", {})).items()
    }
    reward_names = list(doc.get("rewards", []))
    reward_values: dict[str, dict] = {r: {} for r in reward_names}

    transitions: list[list[Transition]] = [[] for _ in names]
    for k, rec in enumerate(_require(doc, "transitions", list, "model")):
        where = f"transition #{k}"
        if not isinstance(rec, Mapping):
            raise ModelError(f"{where}: must be an object")
        s = state(rec.get("from"), where)
        action = _require(rec, "action", str, where)
        where = f"transition ({names[s]},{action})"
        branches = []
        for br in _require(rec, "branches", list, where):
            t = state(br.get("to"), where)
            p = _number(br.get("prob"), f"{where} -> {names[t]}")
            branches.append((t, float(p)))
            for rname, value in dict(br.get("rewards", {})).items():
                if rname not in reward_values:
                    raise ModelError(f"{where}: unknown reward structure {rname!r}")
                reward_values[rname][(s, action, t)] = _number(value, f"{where} reward {rname!r}")
        transitions[s].append(Transition(action, Distribution(tuple(branches))))

    model = Mdp(tuple(names), initial, transitions, labels)
    rewards = {r: RewardStructure(r, reward_values[r]) for r in reward_names}
    report = validate(model, rewards.values())
    if not report.ok:
        raise ModelError(f"invalid model:\n{report}", report.violations)
    return ModelBundle(model, rewards, str(doc.get("name", "model")))


def parse_model(text: str) -> ModelBundle:
    """Parse a model document; JSON syntax errors carry line and column."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    return model_from_dict(doc)


def load_model(path: str | Path) -> ModelBundle:
    return parse_model(Path(path).read_text(encoding="utf-8"))


def _format_prob(p: float):
    # Short fractions read better than 0.3333333333333333 and parse back to the same float.
    f = Fraction(p).limit_denominator(10**4)
    if f.denominator > 1 and float(f) == p and Fraction(p) != f:
        return f"{f.numerator}/{f.denominator}"
    return int(p) if p == int(p) else p


def _format_reward(v: Fraction):
    return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def model_to_dict(bundle: ModelBundle) -> dict[str, Any]:
    model = bundle.model
    names = model.names
    transitions = []
    for s, ts in enumerate(model.transitions):
        for tr in ts:
            branches = []
            for t, p in tr.distribution:
                br: dict[str, Any] = {"to": names[t], "prob": _format_prob(p)}
                rew = {
                    r: _format_reward(rs(s, tr.action, t))
                    for r, rs in bundle.rewards.items()
                    if rs(s, tr.action, t) != 0
                }
                if rew:
                    br["rewards"] = rew
                branches.append(br)
            transitions.append({"from": names[s], "action": tr.action, "branches": branches})
    return {
        "name": bundle.name,
        "states": list(names),
        "initial": names[model.initial],
        "labels": {k: [names[s] for s in sorted(v)] for k, v in sorted(model.labels.items())},
        "rewards": list(bundle.rewards),
        "transitions": transitions,
    }


def serialize_model(bundle: ModelBundle) -> str:
    return json.dumps(model_to_dict(bundle), indent=2, ensure_ascii=False) + "\n"


def format_value(x: float) -> str:
    return f"{x:.{CSV_DIGITS}g}"


def write_csv(values: Iterable[float], out: io.TextIOBase) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["bound", "value"])
    for i, v in enumerate(values):
        writer.writerow([i, format_value(v)])


def cdf_to_csv(values: Iterable[float]) -> str:
    buf = io.StringIO()
    write_csv(values, buf)
    return buf.getvalue()


def read_csv(text: str) -> list[float]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["bound", "value"]:
        raise ModelError("CSV must start with the header 'bound,value'")
    out = []
    for i, row in enumerate(rows[1:]):
        if int(row[0]) != i:
            raise ModelError(f"CSV row {i + 1}: expected bound {i}, got {row[0]}")
        out.append(float(row[1]))
    return out
