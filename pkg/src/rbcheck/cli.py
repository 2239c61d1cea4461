"""Command line entry point: ``rbcheck query`` and ``rbcheck random``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from itertools import accumulate
from typing import TextIO

from . import bounded
from .bounded import CdfResult
from .errors import ModelError, RbcheckError, UnsupportedQuery
from .modelio import ModelBundle, load_model, serialize_model, write_csv
from .randmodel import generate_random
from .transforms import normalize_rewards
from .unfold import oracle_value
from .vi import DEFAULT_EPSILON

ALGORITHM_NAMES = (*bounded.ALGORITHMS, "unfold")


@dataclass(frozen=True)
class Query:
    goal_label: str
    reward_name: str
    bound: Fraction | str
    algorithm: str = "elim"
    opt: str = "max"
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.opt not in ("max", "min"):
            raise UnsupportedQuery(f"opt must be max or min, not {self.opt!r}")
        if self.algorithm not in ALGORITHM_NAMES:
            raise UnsupportedQuery(f"unknown algorithm {self.algorithm!r}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ModelError("epsilon must be a positive number")
        if self.bound != "auto" and Fraction(self.bound) < 0:
            raise ModelError("bound must be nonnegative")

    @property
    def auto(self) -> bool:
        return self.bound == "auto"


def parse_bound(text: str) -> Fraction | str:
    if text == "auto":
        return text
    try:
        b = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bound must be a number or 'auto', not {text!r}")
    if b < 0:
        raise argparse.ArgumentTypeError("bound must be nonnegative")
    return b


def _run_unfold(bundle: ModelBundle, q: Query) -> CdfResult:
    if q.auto:
        raise UnsupportedQuery("the unfolding oracle needs an explicit bound")
    model = bundle.model
    goal = bundle.goal(q.goal_label)
    reward = bundle.reward(q.reward_name)
    # report the same bound grid as the other algorithms: steps of 1/scale
    _, _, nat = normalize_rewards(model, reward, q.bound)
    scale = math.lcm(*(v.denominator for v in reward.nonzero().values()))
    values = list(accumulate((oracle_value(model, goal, reward, Fraction(i, scale), q.opt) for i in range(nat + 1)), max))
    return CdfResult(q.opt, values, None, q.epsilon, "unfold", scale)


def run_query(bundle: ModelBundle, q: Query) -> CdfResult:
    """Evaluate ``q`` on ``bundle``; entry ``i`` of the result is for bound ``i / bound_scale``."""
    if q.algorithm == "unfold":
        return _run_unfold(bundle, q)
    return bounded.run_bounded(
        q.algorithm,
        bundle.model,
        bundle.goal(q.goal_label),
        bundle.reward(q.reward_name),
        q.bound,
        q.opt,
        q.epsilon,
    )


def _print_stats(bundle: ModelBundle, result: CdfResult, out: TextIO) -> None:
    rows = [("model", bundle.model.size())]
    if "eliminated" in result.stats:
        rows.append(("eliminated", result.stats["eliminated"]))
    if "reduced" in result.stats:
        rows.append(("reduced", result.stats["reduced"]))
    print(f"{'':<12}{'states':>10}{'trans':>10}{'branches':>10}", file=out)
    for name, (n_s, n_t, n_b) in rows:
        print(f"{name:<12}{n_s:>10}{n_t:>10}{n_b:>10}", file=out)
    for key in ("schedulers", "sweeps"):
        if key in result.stats:
            print(f"{key}: {result.stats[key]}", file=out)
    for key in ("enum_seconds", "elim_seconds", "iter_seconds"):
        if key in result.stats:
            print(f"{key}: {result.stats[key]:.3f}", file=out)
    if result.bound_scale != 1:
        print(f"bound scale: {result.bound_scale} (row i is bound i/{result.bound_scale})", file=out)


def _cmd_query(args: argparse.Namespace) -> int:
    bundle = load_model(args.model)
    q = Query(args.goal, args.reward, args.bound, args.algorithm, args.opt, args.epsilon)
    result = run_query(bundle, q)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(result.values, fh)
    else:
        write_csv(result.values, sys.stdout)
    log = sys.stderr if not args.out else sys.stdout
    print(f"final value: {result.final:.12g}", file=log)
    if q.auto:
        print(f"converged at bound: {result.converged}", file=log)
    if args.stats:
        _print_stats(bundle, result, log)
    return 0


def _cmd_random(args: argparse.Namespace) -> int:
    bundle = generate_random(args.seed, args.states, args.max_actions, args.reward_density)
    text = serialize_model(bundle)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rbcheck",
        description="Reward-bounded reachability on MDPs for all bounds at once.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("query", help="compute the CDF of a reward-bounded reachability query")
    q.add_argument("--model", required=True, help="model document (JSON)")
    q.add_argument("--goal", required=True, help="label of the goal states")
    q.add_argument("--reward", required=True, help="name of the bound reward structure")
    q.add_argument("--opt", choices=("max", "min"), default="max")
    q.add_argument("--bound", type=parse_bound, required=True, help="N or 'auto'")
    q.add_argument("--algorithm", choices=ALGORITHM_NAMES, default="elim")
    q.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    q.add_argument("--out", help="write the CSV here instead of stdout")
    q.add_argument("--stats", action="store_true", help="print model sizes before and after reduction")
    q.set_defaults(func=_cmd_query)

    r = sub.add_parser("random", help="write a seeded random model document")
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--states", type=int, default=5)
    r.add_argument("--max-actions", type=int, default=2)
    r.add_argument("--reward-density", type=float, default=0.5)
    r.add_argument("--out")
    r.set_defaults(func=_cmd_random)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except RbcheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
