"""Hedonic coalition formation over provider payoffs.

Providers order coalitions by the payoff they personally receive in
them; coalitions a provider has abandoned before are off the table for
it. A formation run activates providers one at a time, each performing
the best strictly improving move available (to another block of the
current partition or to solitude), until a full sweep finds nobody who
wants to move. Stability checks evaluate pure payoff preferences with
no history, since stability is a property of the partition, not of the
path that led there.
"""

from __future__ import annotations

import functools
import random
from dataclasses import dataclass
from typing import Optional

from .coalitional import (
    CharacteristicTable, shapley_payoffs, coalition_key,
    InfeasibleCoalitionError, CoalitionSizeError,
)

PARTITION_ENUM_CAP = 13


class ConvergenceFailure(RuntimeError):
    """The activation budget ran out before a quiescent sweep; with a
    correct value oracle this is unreachable."""


@functools.total_ordering
@dataclass(frozen=True)
class Preference:
    """Either a concrete hourly payoff or an off-limits marker that
    compares below every payoff."""

    forbidden: bool
    payoff: float = 0.0

    @staticmethod
    def of(payoff: float) -> "Preference":
        return Preference(forbidden=False, payoff=payoff)

    @staticmethod
    def off_limits() -> "Preference":
        return Preference(forbidden=True)

    def __lt__(self, other):
        if self.forbidden:
            return not other.forbidden
        if other.forbidden:
            return False
        return self.payoff < other.payoff

    def __eq__(self, other):
        if not isinstance(other, Preference):
            return NotImplemented
        if self.forbidden or other.forbidden:
            return self.forbidden == other.forbidden
        return self.payoff == other.payoff


@dataclass(frozen=True)
class Partition:
    blocks: tuple  # sorted tuple of sorted member tuples

    @staticmethod
    def of(blocks) -> "Partition":
        canon = tuple(sorted(coalition_key(b) for b in blocks if len(tuple(b))))
        seen = [m for b in canon for m in b]
        if len(set(seen)) != len(seen):
            raise ValueError(f"blocks overlap: {canon}")
        return Partition(blocks=canon)

    @staticmethod
    def singletons(members) -> "Partition":
        return Partition.of([(m,) for m in members])

    def members(self):
        return tuple(sorted(m for b in self.blocks for m in b))

    def block_of(self, member) -> tuple:
        for b in self.blocks:
            if member in b:
                return b
        raise KeyError(f"{member} not in partition")

    def __str__(self):
        return format_partition(self)


class HistorySet:
    """Per-provider record of coalitions joined and later abandoned."""

    def __init__(self):
        self._visited = {}

    def record(self, provider, members):
        key = coalition_key(members)
        if provider not in key:
            raise ValueError(f"snapshot {key} does not contain {provider}")
        self._visited.setdefault(provider, set()).add(key)

    def seen(self, provider, members) -> bool:
        return coalition_key(members) in self._visited.get(provider, ())

    def snapshot(self, provider):
        return frozenset(self._visited.get(provider, ()))


@dataclass(frozen=True)
class RoundRobin:
    """Cycle through providers in ascending id order."""

    def order(self, members, rng):
        return list(members)


@dataclass(frozen=True)
class RandomOrder:
    """Shuffle the activation order anew for every sweep."""

    seed: int = 0

    def order(self, members, rng):
        order = list(members)
        rng.shuffle(order)
        return order


@dataclass(frozen=True)
class FixedOrder:
    """Cycle through an explicit provider order."""

    sequence: tuple

    def order(self, members, rng):
        if sorted(self.sequence) != sorted(members):
            raise ValueError("fixed order must list every provider exactly once")
        return list(self.sequence)


@dataclass(frozen=True)
class FormationStep:
    provider: int
    source: tuple  # members of the block it left
    target: tuple  # members of the block it joined (after the move)
    partition: Partition  # state after the move


@dataclass(frozen=True)
class FormationTrace:
    steps: tuple
    final: Partition
    activations: int


def preference(provider, members, history: Optional[HistorySet],
               table: CharacteristicTable) -> Preference:
    """Provider's ranking of one coalition containing it."""
    key = coalition_key(members)
    if provider not in key:
        raise ValueError(f"provider {provider} not in {key}")
    if history is not None and history.seen(provider, key):
        return Preference.off_limits()
    try:
        payoffs = shapley_payoffs(table, key)
    except (InfeasibleCoalitionError, CoalitionSizeError):
        return Preference.off_limits()
    return Preference.of(payoffs.payoffs[provider])


def find_shift(provider, partition: Partition, history: Optional[HistorySet],
               table: CharacteristicTable) -> Optional[tuple]:
    """Best strictly preferred destination, if any.

    Returns the existing block to join, () for going solo, or None when
    no candidate strictly beats the current coalition. Ties between
    equally good destinations go to the lexicographically smallest
    resulting member set.
    """
    current = partition.block_of(provider)
    current_pref = preference(provider, current, history, table)
    best = None  # (Preference, resulting members, block)
    candidates = [b for b in partition.blocks if provider not in b]
    if len(current) > 1:
        candidates.append(())
    for block in candidates:
        resulting = coalition_key(block + (provider,))
        pref = preference(provider, resulting, history, table)
        if not (pref > current_pref):
            continue
        if best is None or pref > best[0] or (pref == best[0]
                                              and resulting < best[1]):
            best = (pref, resulting, block)
    return None if best is None else best[2]


def apply_shift(partition: Partition, provider, target,
                history: Optional[HistorySet] = None) -> Partition:
    """Move one provider into a target block (or () for solitude),
    recording the abandoned coalition in its history."""
    target = coalition_key(target)
    if provider in target:
        raise ValueError(f"target {target} already contains {provider}")
    source = partition.block_of(provider)
    if target and target not in partition.blocks:
        raise ValueError(f"{target} is not a block of the partition")
    if history is not None:
        history.record(provider, source)
    new_blocks = [b for b in partition.blocks if b != source and b != target]
    shrunk = tuple(m for m in source if m != provider)
    if shrunk:
        new_blocks.append(shrunk)
    new_blocks.append(coalition_key(target + (provider,)))
    return Partition.of(new_blocks)


def run_formation(table: CharacteristicTable, initial: Optional[Partition] = None,
                  policy=RoundRobin(), max_rounds: Optional[int] = None
                  ) -> FormationTrace:
    """Iterate selfish shifts until nobody can improve.

    ``max_rounds`` caps the number of activations; the default budget is
    generous enough that hitting it indicates a broken value oracle
    rather than honest non-convergence.
    """
    members = table.scenario.provider_ids()
    partition = initial if initial is not None else Partition.singletons(members)
    if partition.members() != tuple(sorted(members)):
        raise ValueError("initial partition must cover every provider exactly once")
    if max_rounds is None:
        max_rounds = max(200, 10 * bell_number(len(members)) * len(members))
    rng = random.Random(policy.seed if isinstance(policy, RandomOrder) else 0)

    history = HistorySet()
    steps = []
    activations = 0
    quiet = set()
    while len(quiet) < len(members):
        for provider in policy.order(members, rng):
            if len(quiet) == len(members):
                break
            activations += 1
            if activations > max_rounds:
                raise ConvergenceFailure(
                    f"no quiescent sweep within {max_rounds} activations")
            target = find_shift(provider, partition, history, table)
            if target is None:
                quiet.add(provider)
                continue
            source = partition.block_of(provider)
            partition = apply_shift(partition, provider, target, history)
            steps.append(FormationStep(
                provider=provider, source=source,
                target=partition.block_of(provider), partition=partition))
            quiet = set()
    return FormationTrace(steps=tuple(steps), final=partition,
                          activations=activations)


def is_nash_stable(partition: Partition, table: CharacteristicTable):
    """True when no provider strictly gains by a unilateral move.

    Returns (verdict, witness); the witness names a profitable
    (provider, destination block) pair when the verdict is False.
    """
    for provider in partition.members():
        current = preference(provider, partition.block_of(provider), None, table)
        candidates = [b for b in partition.blocks if provider not in b]
        if len(partition.block_of(provider)) > 1:
            candidates.append(())
        for block in candidates:
            if preference(provider, block + (provider,), None, table) > current:
                return False, (provider, block)
    return True, None


def is_individually_stable(partition: Partition, table: CharacteristicTable):
    """True when every move that helps the mover hurts someone in the
    receiving block."""
    for provider in partition.members():
        current = preference(provider, partition.block_of(provider), None, table)
        candidates = [b for b in partition.blocks if provider not in b]
        if len(partition.block_of(provider)) > 1:
            candidates.append(())
        for block in candidates:
            joined = coalition_key(block + (provider,))
            if not (preference(provider, joined, None, table) > current):
                continue
            welcome = True
            for j in block:
                before = preference(j, block, None, table)
                after = preference(j, joined, None, table)
                if after < before:
                    welcome = False
                    break
            if welcome:
                return False, (provider, block)
    return True, None


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def enumerate_partitions(members):
    """Yield every partition of the member set exactly once, in
    restricted-growth-string order. An integer n means the set {1..n}."""
    if isinstance(members, int):
        members = range(1, members + 1)
    members = tuple(sorted(set(members)))
    n = len(members)
    if n > PARTITION_ENUM_CAP:
        raise ValueError(f"{n} providers exceed the enumeration cap "
                         f"{PARTITION_ENUM_CAP}")
    if n == 0:
        return
    rgs = [0] * n
    maxes = [0] * n

    while True:
        blocks = {}
        for idx, label in enumerate(rgs):
            blocks.setdefault(label, []).append(members[idx])
        yield Partition.of(blocks.values())
        # next restricted growth string
        i = n - 1
        while i > 0 and rgs[i] == maxes[i - 1] + 1:
            i -= 1
        if i == 0:
            return
        rgs[i] += 1
        maxes[i] = max(maxes[i - 1], rgs[i])
        for j in range(i + 1, n):
            rgs[j] = 0
            maxes[j] = maxes[i]


def format_partition(partition: Partition) -> str:
    return "".join("{" + ",".join(str(m) for m in b) + "}"
                   for b in partition.blocks)


def parse_partition_spec(spec: str) -> Partition:
    """Parse the {1,3}{2,4} block syntax."""
    spec = spec.strip().replace(" ", "")
    if not spec:
        raise ValueError("empty partition spec")
    blocks = []
    if not (spec.startswith("{") and spec.endswith("}")):
        raise ValueError(f"bad partition spec {spec!r}")
    for chunk in spec[1:-1].split("}{"):
        if not chunk:
            raise ValueError(f"empty block in {spec!r}")
        blocks.append(tuple(int(x) for x in chunk.split(",")))
    return Partition.of(blocks)
