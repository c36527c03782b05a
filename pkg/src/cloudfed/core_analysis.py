"""Core emptiness of the transferable-utility game, decided exactly.

The decision runs on the weight polytope: maximize the weighted sum of
coalition values over nonnegative weights that add to one across every
player's coalitions. That optimum never falls below the grand
coalition's value; it exceeds it exactly when no division of the grand
value can satisfy every sub-coalition, and the maximizing weights are
then a certificate anyone can recheck by hand. When the optimum equals
the grand value, the LP's row prices are a concrete division satisfying
every coalition constraint, which we verify before returning it.

All arithmetic is over exact rationals: the published counterexample
turns on a margin of two units in the third decimal, far too tight to
trust floating point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .coalitional import CharacteristicTable, coalition_key
from .simplex import solve_lp_exact

CORE_PLAYER_CAP = 10


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    # floats go through repr, preserving the shortest decimal that
    # round-trips, i.e. what the user actually wrote or printed
    return Fraction(repr(float(value)))


@dataclass(frozen=True)
class CoreProblem:
    players: tuple
    values: dict  # coalition tuple -> Fraction, complete over nonempty subsets

    @staticmethod
    def from_values(players, values) -> "CoreProblem":
        players = tuple(sorted(players))
        table = {coalition_key(k): _to_fraction(v) for k, v in values.items()}
        for r in range(1, len(players) + 1):
            for S in itertools.combinations(players, r):
                if S not in table:
                    raise ValueError(f"missing value for coalition {S}")
        return CoreProblem(players=players, values=table)

    @staticmethod
    def from_table(table: CharacteristicTable, players=None) -> "CoreProblem":
        players = tuple(sorted(players or table.scenario.provider_ids()))
        values = {}
        for r in range(1, len(players) + 1):
            for S in itertools.combinations(players, r):
                values[S] = table.value(S)
        return CoreProblem.from_values(players, values)


@dataclass(frozen=True)
class CoreResult:
    status: str  # "non_empty" | "empty"
    imputation: Optional[dict] = None  # player -> Fraction
    certificate: Optional[dict] = None  # coalition -> Fraction weight
    certificate_value: Optional[Fraction] = None  # weighted sum of values
    grand_value: Optional[Fraction] = None


class UnbalancedWeightsError(ValueError):
    def __init__(self, player, total):
        super().__init__(f"weights of player {player} sum to {total}, not 1")
        self.player = player


def check_core(problem: CoreProblem) -> CoreResult:
    """Decide core emptiness, returning either a verified imputation or
    a verified balanced certificate."""
    players = problem.players
    n = len(players)
    if n > CORE_PLAYER_CAP:
        raise ValueError(f"{n} players exceed the exact-LP cap {CORE_PLAYER_CAP}")
    coalitions = [S for r in range(1, n + 1)
                  for S in itertools.combinations(players, r)]
    grand = tuple(players)
    v = problem.values

    c = [-v[S] for S in coalitions]  # maximize => minimize negation
    A_eq = [[Fraction(1) if p in S else Fraction(0) for S in coalitions]
            for p in players]
    b_eq = [Fraction(1)] * n
    res = solve_lp_exact(c, A_eq=A_eq, b_eq=b_eq)
    if res.status != "optimal":
        raise RuntimeError(f"weight LP came back {res.status}")
    best = -res.objective
    if best < v[grand]:
        raise RuntimeError("weight optimum below the grand value; LP bug")

    if best > v[grand]:
        alpha = {S: x for S, x in zip(coalitions, res.x) if x != 0}
        _assert_balanced(players, alpha)
        assert sum(w * v[S] for S, w in alpha.items()) == best
        return CoreResult(status="empty", certificate=alpha,
                          certificate_value=best, grand_value=v[grand])

    imputation = {p: -d for p, d in zip(players, res.duals)}
    total = sum(imputation.values())
    assert total == v[grand], f"division total {total} != grand {v[grand]}"
    for S in coalitions:
        got = sum(imputation[p] for p in S)
        assert got >= v[S], f"division violates {S}: {got} < {v[S]}"
    return CoreResult(status="non_empty", imputation=imputation,
                      grand_value=v[grand])


def _assert_balanced(players, alpha):
    for p in players:
        total = sum(w for S, w in alpha.items() if p in S)
        if total != 1:
            raise UnbalancedWeightsError(p, total)


@dataclass(frozen=True)
class WeightComparison:
    lhs: Fraction  # weighted sum of coalition values
    rhs: Fraction  # grand coalition value
    violated: bool

    def describe(self) -> str:
        verdict = "violated" if self.violated else "satisfied"
        return (f"weighted coalition values {float(self.lhs):.3f} vs grand "
                f"value {float(self.rhs):.3f}: balance condition {verdict}")


def bondareva_violation(problem: CoreProblem, alpha) -> WeightComparison:
    """Check one balanced weight family against the nonemptiness bound.

    The weights must sum to exactly one over each player's coalitions;
    anything else is rejected naming the offending player. A weighted
    value sum strictly above the grand value certifies an empty core.
    """
    weights = {coalition_key(S): _to_fraction(w) for S, w in alpha.items()}
    _assert_balanced(problem.players, weights)
    lhs = sum(w * problem.values[S] for S, w in weights.items())
    rhs = problem.values[tuple(problem.players)]
    return WeightComparison(lhs=lhs, rhs=rhs, violated=lhs > rhs)
