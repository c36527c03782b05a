"""Characteristic function and fair payoff division.

A coalition's worth is its members' total VM revenue minus the minimum
joint hourly energy cost obtained from the placement solver. Payoffs
inside a coalition are divided by marginal-contribution weighting
restricted to the coalition's own subsets, so the division never looks
outside the coalition it splits.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field

from .placement import (
    build_problem, solve_symmetric, solve_naive, PlacementInfeasibleError,
)

SHAPLEY_CAP = 12  # enumeration is exponential; 2^12 subproblems at most


class InfeasibleCoalitionError(Exception):
    """The joint workload cannot be hosted on the joint fleet."""


class CoalitionSizeError(ValueError):
    pass


def coalition_key(members) -> tuple:
    """Canonical coalition identity: sorted tuple without duplicates."""
    return tuple(sorted(set(members)))


@dataclass(frozen=True)
class PayoffVector:
    coalition: tuple
    payoffs: dict  # provider id -> currency/hour

    @property
    def total(self):
        return sum(self.payoffs.values())


@dataclass
class CharacteristicTable:
    """Memoized coalition values for one scenario.

    Safe for concurrent readers; insertions are serialized. Distinct
    coalitions may be evaluated in parallel since they share only the
    immutable scenario.
    """

    scenario: object
    solver: str = "symmetric"
    time_limit: float = None
    _memo: dict = field(default_factory=dict)
    _reports: dict = field(default_factory=dict)
    _lock: object = field(default_factory=threading.Lock)

    def revenue(self, members) -> float:
        total = 0.0
        for pid in coalition_key(members):
            for vm in self.scenario.provider(pid).vms:
                total += self.scenario.vm_class(vm.class_id).revenue_rate
        return total

    def value(self, members) -> float:
        key = coalition_key(members)
        if not key:
            return 0.0
        if key in self._memo:
            cached = self._memo[key]
            if isinstance(cached, InfeasibleCoalitionError):
                raise cached
            return cached
        try:
            problem = build_problem(self.scenario, key)
            solve = solve_naive if self.solver == "naive" else solve_symmetric
            report = solve(problem, self.time_limit)
        except PlacementInfeasibleError as exc:
            err = InfeasibleCoalitionError(f"coalition {key}: {exc}")
            with self._lock:
                self._memo[key] = err
            raise err from exc
        result = self.revenue(key) - report.objective
        with self._lock:
            self._memo[key] = result
            self._reports[key] = report
        return result

    def report(self, members):
        key = coalition_key(members)
        self.value(key)
        return self._reports[key]

    def clear(self):
        with self._lock:
            self._memo.clear()
            self._reports.clear()

    def known(self):
        return {k: v for k, v in self._memo.items()
                if not isinstance(v, InfeasibleCoalitionError)}


def coalition_value(table: CharacteristicTable, members) -> float:
    return table.value(members)


def marginal_contribution(table: CharacteristicTable, members, player) -> float:
    """Change in worth when the player joins the given coalition."""
    base = coalition_key(members)
    if player in base:
        raise ValueError(f"player {player} already in {base}")
    return table.value(base + (player,)) - table.value(base)


def shapley_payoffs(table: CharacteristicTable, members) -> PayoffVector:
    """Exact marginal-contribution division inside one coalition.

    Enumerates every subset of the coalition, weighting each player's
    marginal contribution by |T|! (s-|T|-1)! / s!.
    """
    key = coalition_key(members)
    if not key:
        raise ValueError("coalition must be nonempty")
    s = len(key)
    if s > SHAPLEY_CAP:
        raise CoalitionSizeError(
            f"coalition of {s} exceeds the exact-enumeration cap {SHAPLEY_CAP}")
    fact = math.factorial
    payoffs = {}
    for player in key:
        rest = [p for p in key if p != player]
        total = 0.0
        for r in range(len(rest) + 1):
            weight = fact(r) * fact(s - r - 1) / fact(s)
            for subset in itertools.combinations(rest, r):
                total += weight * (table.value(subset + (player,))
                                   - table.value(subset))
        payoffs[player] = total
    return PayoffVector(coalition=key, payoffs=payoffs)
