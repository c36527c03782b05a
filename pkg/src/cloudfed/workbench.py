"""Randomized experiments, batch harness и reproduction suites.

Scenario generation follows the published experimental setup: four
providers with fixed fleets, per-class VM counts drawn uniformly on an
integer range, host power states drawn by coin flip, and power-cycle
and transfer times drawn from truncated normals. Randomness comes from
a PCG64 generator seeded with (seed, run_index), so every scenario is a
pure function of those two integers.
"""

from __future__ import annotations

import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import fixtures
from .domain import Host, Vm, Provider, Scenario, MigrationParams
from .placement import build_problem, solve_symmetric, allocation_by_owner
from .coalitional import CharacteristicTable, shapley_payoffs
from .hedonic import (
    RoundRobin, FixedOrder, run_formation, is_nash_stable,
    enumerate_partitions, format_partition,
)
from .core_analysis import CoreProblem, check_core, bondareva_violation


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    # per provider: hosts of class 1, 2, 3
    host_inventories: tuple = ((40, 0, 0), (0, 40, 0), (0, 0, 40), (15, 15, 10))
    vm_count_range: tuple = (0, 20)  # inclusive, per provider per class
    power_state_prob: float = 0.5
    switch_time_mean_s: float = 300e-6
    switch_time_sd_s: float = 50e-6
    migration_time_means_s: tuple = (277.0, 554.0, 1108.0)
    migration_time_sds_s: tuple = (182.0, 364.0, 728.0)
    data_rate_mbit_s: float = 100.0
    transfer_cost_per_gb: float = 0.001
    energy_price: float = fixtures.ENERGY_PRICE
    planning_period_hours: float = 12.0


def _truncated_normal(rng, mean, sd):
    for _ in range(100):
        x = rng.normal(mean, sd)
        if x >= 0.0:
            return float(x)
    return 0.0


def generate_scenario(config: GeneratorConfig, run_index: int) -> Scenario:
    """Deterministic function of (config.seed, run_index)."""
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((config.seed, run_index))))

    base_hc = fixtures.standard_host_classes()
    host_classes = []
    for hc in base_hc:
        t_on = _truncated_normal(rng, config.switch_time_mean_s, config.switch_time_sd_s)
        t_off = _truncated_normal(rng, config.switch_time_mean_s, config.switch_time_sd_s)
        host_classes.append(replace(
            hc,
            switch_energy_on=hc.c_max * t_on / 3600.0,
            switch_energy_off=hc.c_max * t_off / 3600.0))

    vm_classes = fixtures.standard_vm_classes()
    migration_times = {}
    for vc, mean, sd in zip(vm_classes, config.migration_time_means_s,
                            config.migration_time_sds_s):
        migration_times[vc.id] = _truncated_normal(rng, mean, sd)
    migration = MigrationParams(
        transfer_cost_per_gb=config.transfer_cost_per_gb,
        data_rate_mbit_s=config.data_rate_mbit_s,
        migration_time_s=migration_times,
        same_cp_cost=0.0)

    lo, hi = config.vm_count_range
    counts = {}
    for pid in range(1, len(config.host_inventories) + 1):
        for class_id in (1, 2, 3):
            counts[(pid, class_id)] = int(rng.integers(lo, hi + 1))

    next_host = 1
    next_vm = 1
    providers = []
    for pid, inventory in enumerate(config.host_inventories, start=1):
        hosts = []
        for class_id, count in zip((1, 2, 3), inventory):
            for _ in range(count):
                on = bool(rng.random() < config.power_state_prob)
                hosts.append(Host(id=next_host, class_id=class_id, owner=pid,
                                  initially_on=on))
                next_host += 1
        vms = []
        own_ids = [h.id for h in hosts]
        k = 0
        for class_id in (1, 2, 3):
            for _ in range(counts[(pid, class_id)]):
                current = own_ids[k % len(own_ids)] if own_ids else None
                vms.append(Vm(id=next_vm, class_id=class_id, owner=pid,
                              current_host=current))
                next_vm += 1
                k += 1
        providers.append(Provider(id=pid, energy_price=config.energy_price,
                                  hosts=tuple(hosts), vms=tuple(vms)))

    return Scenario(host_classes=tuple(host_classes), vm_classes=vm_classes,
                    providers=tuple(providers), shares=fixtures.standard_shares(),
                    migration=migration,
                    planning_period_hours=config.planning_period_hours)


# --------------------------------------------------------------------------
# Single-run evaluation and the batch harness
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RunRecord:
    run_index: int
    seed: int
    n_shifts: int
    partition: str  # block spec syntax
    energy_nofed_kw: float
    energy_fed_kw: float
    profit_nofed: float
    profit_fed: float
    payoffs: tuple  # federated payoff per provider, id order
    standalone: tuple  # solo value per provider, id order
    wall_time: float = 0.0

    def csv_row(self):
        cells = [str(self.run_index), str(self.seed), str(self.n_shifts),
                 self.partition, repr(self.energy_nofed_kw),
                 repr(self.energy_fed_kw), repr(self.profit_nofed),
                 repr(self.profit_fed)]
        cells += [repr(x) for x in self.payoffs]
        return ",".join(cells)

    @staticmethod
    def csv_header(n_providers):
        cols = ["run_index", "seed", "n_shifts", "partition",
                "energy_nofed_kw", "energy_fed_kw", "profit_nofed", "profit_fed"]
        cols += [f"payoff_{i}" for i in range(1, n_providers + 1)]
        return ",".join(cols)

    @staticmethod
    def from_csv_row(line):
        cells = line.strip().split(",")
        # the partition field itself contains commas inside braces; stitch
        # it back together by position: 3 leading ints, then blocks up to
        # the first float field
        head, rest = cells[:3], cells[3:]
        depth_parts = []
        while rest and (rest[0].startswith("{") or depth_parts and
                        not depth_parts[-1].endswith("}")):
            depth_parts.append(rest.pop(0))
        partition = ",".join(depth_parts)
        nums = [float(x) for x in rest]
        payoffs = tuple(nums[4:])
        return RunRecord(run_index=int(head[0]), seed=int(head[1]),
                         n_shifts=int(head[2]), partition=partition,
                         energy_nofed_kw=nums[0], energy_fed_kw=nums[1],
                         profit_nofed=nums[2], profit_fed=nums[3],
                         payoffs=payoffs,
                         standalone=())


def evaluate_run(scenario: Scenario, policy=RoundRobin(), run_index=0, seed=0,
                 solver="symmetric") -> RunRecord:
    """Formation from solitude plus the no-federation baseline."""
    started = time.perf_counter()
    table = CharacteristicTable(scenario, solver=solver)
    pids = scenario.provider_ids()

    standalone = {}
    energy_nofed = 0.0
    for pid in pids:
        standalone[pid] = table.value((pid,))
        energy_nofed += table.report((pid,)).allocation.power_watts

    trace = run_formation(table, policy=policy)
    payoffs = {}
    energy_fed = 0.0
    for block in trace.final.blocks:
        pv = shapley_payoffs(table, block)
        payoffs.update(pv.payoffs)
        energy_fed += table.report(block).allocation.power_watts

    return RunRecord(
        run_index=run_index, seed=seed, n_shifts=len(trace.steps),
        partition=format_partition(trace.final),
        energy_nofed_kw=energy_nofed / 1000.0,
        energy_fed_kw=energy_fed / 1000.0,
        profit_nofed=sum(standalone.values()),
        profit_fed=sum(payoffs.values()),
        payoffs=tuple(payoffs[p] for p in pids),
        standalone=tuple(standalone[p] for p in pids),
        wall_time=time.perf_counter() - started)


@dataclass(frozen=True)
class BatchSummary:
    run_count: int
    failures: tuple
    energy_reduction_pct: dict  # min, max, mean
    profit_increase_pct: dict
    per_provider_profit_increase_pct: dict


def _pct_gain(before, after):
    if before == 0:
        return 0.0
    return (before - after) / abs(before) * 100.0


def _run_one(args):
    config, idx = args
    scenario = generate_scenario(config, idx)
    return evaluate_run(scenario, run_index=idx, seed=config.seed)


def run_batch(config: GeneratorConfig, runs: int, workers: int = 1,
              out=None):
    """Evaluate ``runs`` generated scenarios; returns (summary, records).

    Records arrive in run-index order; when ``out`` is given, one CSV
    row per record is written there (plus a header), byte-identical for
    identical (seed, runs).
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    jobs = [(config, idx) for idx in range(runs)]
    records = []
    failures = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for idx, outcome in enumerate(pool.map(_run_one_safe, jobs)):
                if isinstance(outcome, RunRecord):
                    records.append(outcome)
                else:
                    failures.append((idx, outcome))
    else:
        for job in jobs:
            outcome = _run_one_safe(job)
            if isinstance(outcome, RunRecord):
                records.append(outcome)
            else:
                failures.append((job[1], outcome))

    n_providers = len(config.host_inventories)
    if out is not None:
        buf = io.StringIO()
        buf.write(RunRecord.csv_header(n_providers) + "\n")
        for rec in records:
            buf.write(rec.csv_row() + "\n")
        if hasattr(out, "write"):
            out.write(buf.getvalue())
        else:
            with open(out, "w") as fh:
                fh.write(buf.getvalue())

    energy = [_pct_gain(r.energy_nofed_kw, r.energy_fed_kw) for r in records]
    profit = [-_pct_gain(r.profit_nofed, r.profit_fed) for r in records]
    per_provider = {}
    for pid in range(1, n_providers + 1):
        gains = [-_pct_gain(r.standalone[pid - 1], r.payoffs[pid - 1])
                 for r in records if r.standalone]
        per_provider[pid] = sum(gains) / len(gains) if gains else 0.0

    def stats(xs):
        if not xs:
            return {"min": 0.0, "max": 0.0, "mean": 0.0}
        return {"min": min(xs), "max": max(xs), "mean": sum(xs) / len(xs)}

    summary = BatchSummary(run_count=len(records), failures=tuple(failures),
                           energy_reduction_pct=stats(energy),
                           profit_increase_pct=stats(profit),
                           per_provider_profit_increase_pct=per_provider)
    return summary, records


def _run_one_safe(args):
    try:
        return _run_one(args)
    except Exception as exc:  # failures are data, the batch continues
        return f"{type(exc).__name__}: {exc}"


# --------------------------------------------------------------------------
# Reproduction suites
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    expected: object
    actual: object
    tol: float
    ok: bool


@dataclass
class ReproduceReport:
    target: str
    checks: list = field(default_factory=list)

    def add(self, name, expected, actual, tol=0.0):
        if tol == 0.0:
            ok = expected == actual
        else:
            ok = abs(actual - expected) <= tol + 1e-12
        self.checks.append(Check(name, expected, actual, tol, ok))

    @property
    def passed(self):
        return all(c.ok for c in self.checks)

    def lines(self):
        out = []
        for c in self.checks:
            mark = "ok  " if c.ok else "FAIL"
            out.append(f"{mark} {c.name}: expected {c.expected} got {c.actual}"
                       + (f" (tol {c.tol})" if c.tol else ""))
        out.append(f"{'PASS' if self.passed else 'FAIL'} {self.target}: "
                   f"{sum(c.ok for c in self.checks)}/{len(self.checks)} checks")
        return out


# powered hosts, kW, cost/h per provider, then fleet totals
TABLE_SCENARIO1_NOFED = {1: (10, 2.37, 0.95), 2: (10, 3.68, 1.47), 3: (4, 3.84, 1.54)}
TABLE_SCENARIO1_GRAND = (30, 7.12, 2.85)

TABLE_SCENARIO2_NOFED_COST = {1: 4.19, 2: 5.61, 3: 5.61}
TABLE_SCENARIO2_GRAND = {"total": 13.65, "split": {1: 7.89, 2: 3.97, 3: 1.79}}
TABLE_SCENARIO2_PAIR12 = {"total": 8.08, "cp2_hosts": 0}

TABLE_SCENARIO2_VALUES = {(1,): 6.21, (2,): 4.15, (3,): 4.15, (1, 2): 12.08,
                          (1, 3): 12.08, (2, 3): 8.49, (1, 2, 3): 16.27}
TABLE_SCENARIO2_PAYOFFS = {(1,): (6.21,), (2,): (4.15,), (3,): (4.15,),
                           (1, 2): (7.07, 5.01), (1, 3): (7.07, 5.01),
                           (2, 3): (4.25, 4.25), (1, 2, 3): (7.31, 4.48, 4.48)}

TABLE_CASESTUDY_VALUES = {
    (1,): 4.28, (2,): 3.45, (3,): 3.84, (4,): 0.38,
    (1, 2): 8.22, (1, 3): 9.59, (1, 4): 4.69, (2, 3): 7.82, (2, 4): 4.33,
    (3, 4): 5.43, (1, 2, 3): 13.27, (1, 2, 4): 8.69, (1, 3, 4): 10.01,
    (2, 3, 4): 8.88, (1, 2, 3, 4): 14.01,
}
CASESTUDY_STABLE_SPECS = ("{1,2,3,4}", "{1,3}{2,4}")

TABLE_COUNTEREXAMPLE_VALUES = {(1,): 0.345, (2,): 0.095, (3,): 0.095,
                               (1, 2): 0.513, (1, 3): 0.513, (2, 3): 0.225,
                               (1, 2, 3): 0.623}


def reproduce_scenario1() -> ReproduceReport:
    rep = ReproduceReport("scenario1")
    s = fixtures.scenario1()
    for pid, (hosts, kw, cost) in TABLE_SCENARIO1_NOFED.items():
        prob = build_problem(s, [pid])
        sol = solve_symmetric(prob)
        own = allocation_by_owner(prob, sol.allocation)[pid]
        rep.add(f"no_fed.cp{pid}.hosts_on", hosts, own["hosts_on"])
        rep.add(f"no_fed.cp{pid}.kw", kw, own["power_w"] / 1000.0, tol=0.01)
        rep.add(f"no_fed.cp{pid}.cost", cost, own["cost_rate"], tol=0.01)
    prob = build_problem(s, [1, 2, 3])
    sol = solve_symmetric(prob)
    hosts, kw, cost = TABLE_SCENARIO1_GRAND
    rep.add("grand.hosts_on", hosts, len(sol.allocation.powered_on))
    rep.add("grand.kw", kw, sol.allocation.power_watts / 1000.0, tol=0.01)
    rep.add("grand.cost", cost, sol.objective, tol=0.01)
    return rep


def reproduce_scenario2() -> ReproduceReport:
    rep = ReproduceReport("scenario2")
    s = fixtures.scenario2()
    table = CharacteristicTable(s)
    for pid, cost in TABLE_SCENARIO2_NOFED_COST.items():
        rep.add(f"no_fed.cp{pid}.cost", cost, table.report((pid,)).objective,
                tol=0.01)
    grand = table.report((1, 2, 3))
    rep.add("grand.cost", TABLE_SCENARIO2_GRAND["total"], grand.objective, tol=0.01)
    own = allocation_by_owner(build_problem(s, (1, 2, 3)), grand.allocation)
    for pid, cost in TABLE_SCENARIO2_GRAND["split"].items():
        rep.add(f"grand.cp{pid}.cost", cost, own[pid]["cost_rate"], tol=0.01)
    pair = table.report((1, 2))
    rep.add("pair12.cost", TABLE_SCENARIO2_PAIR12["total"], pair.objective, tol=0.01)
    own12 = allocation_by_owner(build_problem(s, (1, 2)), pair.allocation)
    rep.add("pair12.cp2.hosts_on", TABLE_SCENARIO2_PAIR12["cp2_hosts"],
            own12[2]["hosts_on"])
    for S, v in TABLE_SCENARIO2_VALUES.items():
        rep.add(f"value.{S}", v, table.value(S), tol=0.01)
    for S, phis in TABLE_SCENARIO2_PAYOFFS.items():
        pv = shapley_payoffs(table, S)
        for pid, phi in zip(S, phis):
            rep.add(f"payoff.{S}.cp{pid}", phi, pv.payoffs[pid], tol=0.01)
    core = check_core(CoreProblem.from_table(table))
    rep.add("core.status", "empty", core.status)
    return rep


def reproduce_casestudy() -> ReproduceReport:
    rep = ReproduceReport("casestudy")
    s = fixtures.case_study()
    table = CharacteristicTable(s)
    for S, v in TABLE_CASESTUDY_VALUES.items():
        rep.add(f"value.{S}", v, table.value(S), tol=0.01)

    stable = [p for p in enumerate_partitions((1, 2, 3, 4))
              if is_nash_stable(p, table)[0]]
    specs = sorted(format_partition(p) for p in stable)
    rep.add("stable.count", 2, len(stable))
    for spec in CASESTUDY_STABLE_SPECS:
        rep.add(f"stable.contains.{spec}", True, spec in specs)

    trace = run_formation(table, policy=FixedOrder((3, 1, 2, 4)))
    rep.add("formation.first_mover", 3,
            trace.steps[0].provider if trace.steps else None)
    rep.add("formation.final_in_stable_pair", True,
            format_partition(trace.final) in CASESTUDY_STABLE_SPECS)

    base = sum(table.value((i,)) for i in (1, 2, 3, 4))
    grand_gain = (table.value((1, 2, 3, 4)) / base - 1.0) * 100.0
    split_gain = ((table.value((1, 3)) + table.value((2, 4))) / base - 1.0) * 100.0
    rep.add("improvement.grand_pct", 17.0, grand_gain, tol=1.0)
    rep.add("improvement.split_pct", 10.0, split_gain, tol=1.0)
    return rep


def reproduce_appendix() -> ReproduceReport:
    rep = ReproduceReport("appendix")
    s = fixtures.bondareva_example()
    table = CharacteristicTable(s)
    for S, v in TABLE_COUNTEREXAMPLE_VALUES.items():
        rep.add(f"value.{S}", v, table.value(S), tol=0.001)
    core = check_core(CoreProblem.from_table(table))
    rep.add("core.status", "empty", core.status)

    published = CoreProblem.from_values(
        (1, 2, 3), {k: f"{v}" for k, v in TABLE_COUNTEREXAMPLE_VALUES.items()})
    cmp = bondareva_violation(published, {(1, 2): "0.5", (1, 3): "0.5",
                                          (2, 3): "0.5"})
    rep.add("bondareva.violated", True, cmp.violated)
    rep.add("bondareva.lhs_display", "0.625", f"{float(cmp.lhs):.3f}")
    rep.add("bondareva.rhs_display", "0.623", f"{float(cmp.rhs):.3f}")
    return rep


REPRODUCE_TARGETS = {
    "scenario1": reproduce_scenario1,
    "scenario2": reproduce_scenario2,
    "casestudy": reproduce_casestudy,
    "appendix": reproduce_appendix,
}


def reproduce(target: str) -> ReproduceReport:
    if target not in REPRODUCE_TARGETS:
        raise KeyError(f"unknown reproduction target {target!r}; "
                       f"choose from {sorted(REPRODUCE_TARGETS)}")
    return REPRODUCE_TARGETS[target]()
