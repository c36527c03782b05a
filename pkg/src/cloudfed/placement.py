"""Exact energy-cost-minimizing VM placement for a coalition of providers.

The hourly cost of an allocation has four parts, all in currency/hour:
idle and dynamic power of the powered hosts priced at the owner's
electricity rate, one-shot switch energies of hosts whose power state
changes (amortized over the planning period), and migration charges for
VMs placed outside the provider currently hosting them.

Two solvers are provided. ``solve_naive`` enumerates host assignments
directly with lower-bound pruning and acts as the reference oracle for
tiny instances. ``solve_symmetric`` exploits interchangeability: hosts
collapse into (class, owner, initial power state) groups, VMs into
(class, current provider) groups, per-host packings into count
patterns, and a small integer program over pattern multiplicities is
solved by best-first branch and bound on an LP relaxation. Both return
allocations that satisfy every structural constraint exactly, and
``objective_value`` recomputes any allocation's cost independently of
either solver.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import Scenario, Host, Vm
from .simplex import solve_lp

CPU_TOL = 1e-9  # capacity slack absorbing binary-decimal dust
GAP_TOL = 1e-9  # absolute optimality gap


class PlacementError(Exception):
    pass


class PlacementInfeasibleError(PlacementError):
    pass


class ConstraintViolation(PlacementError):
    def __init__(self, constraint, detail):
        super().__init__(f"{constraint}: {detail}")
        self.constraint = constraint


@dataclass(frozen=True)
class PlacementProblem:
    """Joint workload and host pool of a coalition, with all cost
    coefficients resolved to concrete numbers."""

    scenario: Scenario
    coalition: tuple
    hosts: tuple
    vms: tuple
    cpu: dict = field(default_factory=dict)  # (vm_class, host_class) -> share
    ram: dict = field(default_factory=dict)
    price: dict = field(default_factory=dict)  # owner -> currency/Wh
    vm_source: dict = field(default_factory=dict)  # vm id -> provider or None

    def host_class_of(self, host):
        return self.scenario.host_class(host.class_id)

    def a(self, vm: Vm, host: Host) -> float:
        return self.cpu[(vm.class_id, host.class_id)]

    def m(self, vm: Vm, host: Host) -> float:
        return self.ram[(vm.class_id, host.class_id)]

    def g(self, vm: Vm, host: Host) -> float:
        """Hourly migration charge for running this VM on this host."""
        src = self.vm_source[vm.id]
        if src is None:
            return 0.0
        if src == host.owner:
            return self.scenario.migration.same_cp_cost
        return self.scenario.migration.inter_provider_rate(vm.class_id)

    def fits(self, vm: Vm, host: Host) -> bool:
        return (self.a(vm, host) <= 1.0 + CPU_TOL
                and self.m(vm, host) <= 1.0 + CPU_TOL)

    def feasible_hosts(self, vm: Vm):
        return [h for h in self.hosts if self.fits(vm, h)]

    def infeasible_vms(self):
        return [v for v in self.vms if not self.feasible_hosts(v)]

    def host_rates(self, host: Host):
        """(idle, dyn per share unit, switch-on, switch-off), currency/hour."""
        hc = self.host_class_of(host)
        e = self.price[host.owner]
        period = self.scenario.planning_period_hours
        idle = hc.c_min * e
        dyn = (hc.c_max - hc.c_min) * e
        on_rate = (0.0 if host.initially_on else hc.switch_energy_on * e / period)
        off_rate = (hc.switch_energy_off * e / period if host.initially_on else 0.0)
        return idle, dyn, on_rate, off_rate


@dataclass(frozen=True)
class Allocation:
    assignment: dict  # vm id -> host id
    host_utilization: dict  # host id -> CPU fraction, 0 for unpowered
    powered_on: frozenset
    energy_cost_rate: float
    breakdown: dict  # idle_power, dynamic_power, switch_cost, migration_cost
    power_watts: float  # electrical draw of the powered hosts


@dataclass(frozen=True)
class SolveReport:
    allocation: Allocation
    proof_of_optimality: str  # "optimal" | "heuristic" | "time_limited"
    nodes_explored: int
    wall_time: float
    lower_bound: float = float("nan")

    @property
    def objective(self):
        return self.allocation.energy_cost_rate


def build_problem(scenario: Scenario, coalition) -> PlacementProblem:
    members = tuple(sorted(set(coalition)))
    if not members:
        raise ValueError("coalition must be nonempty")
    known = set(scenario.provider_ids())
    for m in members:
        if m not in known:
            raise KeyError(f"unknown provider {m}")

    hosts = tuple(h for pid in members for h in scenario.provider(pid).hosts)
    vms = tuple(v for pid in members for v in scenario.provider(pid).vms)

    host_owner = {h.id: h.owner for h in scenario.all_hosts()}
    source = {}
    for v in vms:
        source[v.id] = host_owner[v.current_host] if v.current_host is not None else None

    cpu, ram = {}, {}
    for v in vms:
        for h in hosts:
            key = (v.class_id, h.class_id)
            if key not in cpu:
                cpu[key] = scenario.cpu_share_of(*key)
                ram[key] = scenario.ram_share_of(*key)
    price = {pid: scenario.provider(pid).energy_price for pid in members}

    return PlacementProblem(scenario=scenario, coalition=members, hosts=hosts,
                            vms=vms, cpu=cpu, ram=ram, price=price,
                            vm_source=source)


# --------------------------------------------------------------------------
# Cost evaluation and the structural audit
# --------------------------------------------------------------------------

def _cost_terms(problem, assignment, powered):
    idle = dyn = switch = migration = watts = 0.0
    loads = {h.id: 0.0 for h in problem.hosts}
    by_host = {h.id: h for h in problem.hosts}
    for vm in problem.vms:
        host = by_host[assignment[vm.id]]
        loads[host.id] += problem.a(vm, host)
        migration += problem.g(vm, host)
    for h in problem.hosts:
        idle_r, dyn_r, on_r, off_r = problem.host_rates(h)
        if h.id in powered:
            idle += idle_r
            dyn += dyn_r * loads[h.id]
            switch += on_r
            hc = problem.host_class_of(h)
            watts += hc.c_min + loads[h.id] * (hc.c_max - hc.c_min)
        else:
            switch += off_r
    total = idle + dyn + switch + migration
    return total, loads, {"idle_power": idle, "dynamic_power": dyn,
                          "switch_cost": switch, "migration_cost": migration}, watts


def make_allocation(problem, assignment, powered=None) -> Allocation:
    """Build a full Allocation record from a raw VM-to-host mapping.

    Hosts not in ``powered`` must carry no VMs; by default exactly the
    used hosts are powered.
    """
    if powered is None:
        powered = frozenset(assignment.values())
    else:
        powered = frozenset(powered)
    total, loads, breakdown, watts = _cost_terms(problem, assignment, powered)
    util = {h.id: (loads[h.id] if h.id in powered else 0.0) for h in problem.hosts}
    return Allocation(assignment=dict(assignment), host_utilization=util,
                      powered_on=powered, energy_cost_rate=total,
                      breakdown=breakdown, power_watts=watts)


def objective_value(problem: PlacementProblem, allocation: Allocation) -> float:
    """Recompute the hourly cost after checking every structural rule.

    Raises ConstraintViolation naming the broken rule; this audit is
    independent of both solvers.
    """
    by_host = {h.id: h for h in problem.hosts}
    vm_ids = {v.id for v in problem.vms}
    if set(allocation.assignment.keys()) != vm_ids:
        missing = vm_ids - set(allocation.assignment.keys())
        extra = set(allocation.assignment.keys()) - vm_ids
        raise ConstraintViolation("vm-assignment",
                                  f"missing={sorted(missing)} extra={sorted(extra)}")
    for vm in problem.vms:
        hid = allocation.assignment[vm.id]
        if hid not in by_host:
            raise ConstraintViolation("vm-assignment",
                                      f"VM {vm.id} on foreign host {hid}")
        if hid not in allocation.powered_on:
            raise ConstraintViolation("powered-host",
                                      f"VM {vm.id} on unpowered host {hid}")
    loads = {h.id: 0.0 for h in problem.hosts}
    rams = {h.id: 0.0 for h in problem.hosts}
    for vm in problem.vms:
        host = by_host[allocation.assignment[vm.id]]
        loads[host.id] += problem.a(vm, host)
        rams[host.id] += problem.m(vm, host)
    for h in problem.hosts:
        if h.id in allocation.powered_on:
            if loads[h.id] > 1.0 + CPU_TOL:
                raise ConstraintViolation("cpu-capacity",
                                          f"host {h.id} at {loads[h.id]:.12g}")
            if rams[h.id] > 1.0 + CPU_TOL:
                raise ConstraintViolation("ram-capacity",
                                          f"host {h.id} at {rams[h.id]:.12g}")
        elif loads[h.id] > 0 or rams[h.id] > 0:
            raise ConstraintViolation("powered-host",
                                      f"unpowered host {h.id} carries load")
        stated = allocation.host_utilization.get(h.id, 0.0)
        want = loads[h.id] if h.id in allocation.powered_on else 0.0
        if abs(stated - want) > 1e-9:
            raise ConstraintViolation("utilization-consistency",
                                      f"host {h.id}: stated {stated}, actual {want}")
    total, _, _, _ = _cost_terms(problem, allocation.assignment, allocation.powered_on)
    return total


# --------------------------------------------------------------------------
# First-fit-decreasing heuristic
# --------------------------------------------------------------------------

def heuristic_ffd(problem: PlacementProblem) -> Allocation:
    """First fit decreasing by CPU share onto hosts ordered by an
    energy-efficiency proxy (full-load watts priced, per benchmark unit)."""
    if not problem.vms:
        return make_allocation(problem, {}, powered=())

    def proxy(host):
        hc = problem.host_class_of(host)
        return (hc.c_max * problem.price[host.owner] / hc.cpu_capacity, host.id)

    hosts = sorted(problem.hosts, key=proxy)

    def demand(vm):
        shares = [problem.a(vm, h) for h in hosts if problem.fits(vm, h)]
        if not shares:
            raise PlacementInfeasibleError(f"VM {vm.id} fits no host in coalition")
        return max(shares)

    vms = sorted(problem.vms, key=lambda v: (-demand(v), v.id))
    cpu_left = {h.id: 1.0 + CPU_TOL for h in hosts}
    ram_left = {h.id: 1.0 + CPU_TOL for h in hosts}
    assignment = {}
    for vm in vms:
        for host in hosts:
            if not problem.fits(vm, host):
                continue
            if problem.a(vm, host) <= cpu_left[host.id] and \
                    problem.m(vm, host) <= ram_left[host.id]:
                cpu_left[host.id] -= problem.a(vm, host)
                ram_left[host.id] -= problem.m(vm, host)
                assignment[vm.id] = host.id
                break
        else:
            raise PlacementInfeasibleError(
                f"first fit could not place VM {vm.id}")
    return make_allocation(problem, assignment)


# --------------------------------------------------------------------------
# Reference oracle: direct enumeration with pruning
# --------------------------------------------------------------------------

def solve_naive(problem: PlacementProblem, time_limit: Optional[float] = None
                ) -> SolveReport:
    """Enumerate every assignment of VMs to feasible hosts, pruning
    branches whose partial cost already exceeds the incumbent. Exact,
    and exponential; meant for instances of at most a dozen VMs."""
    started = time.perf_counter()
    bad = problem.infeasible_vms()
    if bad:
        raise PlacementInfeasibleError(
            f"VM {bad[0].id} fits no host in the coalition")
    vms = sorted(problem.vms, key=lambda v: v.id)
    hosts = sorted(problem.hosts, key=lambda h: h.id)
    feas = {v.id: [h for h in hosts if problem.fits(v, h)] for v in vms}
    rates = {h.id: problem.host_rates(h) for h in hosts}

    best_cost = [float("inf")]
    best_assignment = [None]
    nodes = [0]
    frontier = [float("inf")]
    deadline = started + time_limit if time_limit else None
    timed_out = [False]

    cpu_used = {h.id: 0.0 for h in hosts}
    ram_used = {h.id: 0.0 for h in hosts}
    assignment = {}
    # partial = powered structural cost + migration so far; admissible
    # because completing an assignment only adds nonnegative terms.

    def leaf_extra():
        return sum(rates[h.id][3] for h in hosts if cpu_used[h.id] == 0.0)

    def dfs(k, partial):
        nodes[0] += 1
        if deadline and nodes[0] % 256 == 0 and time.perf_counter() > deadline:
            timed_out[0] = True
        if timed_out[0]:
            frontier[0] = min(frontier[0], partial)
            return
        if k == len(vms):
            cost = partial + leaf_extra()
            if cost < best_cost[0]:
                best_cost[0] = cost
                best_assignment[0] = dict(assignment)
            return
        vm = vms[k]
        for host in feas[vm.id]:
            a, m = problem.a(vm, host), problem.m(vm, host)
            if cpu_used[host.id] + a > 1.0 + CPU_TOL:
                continue
            if ram_used[host.id] + m > 1.0 + CPU_TOL:
                continue
            idle_r, dyn_r, on_r, _ = rates[host.id]
            delta = dyn_r * a + problem.g(vm, host)
            if cpu_used[host.id] == 0.0:
                delta += idle_r + on_r
            if partial + delta >= best_cost[0]:
                continue
            cpu_used[host.id] += a
            ram_used[host.id] += m
            assignment[vm.id] = host.id
            dfs(k + 1, partial + delta)
            cpu_used[host.id] -= a
            if cpu_used[host.id] < 1e-12:
                cpu_used[host.id] = 0.0
            ram_used[host.id] -= m
            if ram_used[host.id] < 1e-12:
                ram_used[host.id] = 0.0
            del assignment[vm.id]

    dfs(0, 0.0)
    wall = time.perf_counter() - started
    if best_assignment[0] is None:
        if timed_out[0]:
            raise PlacementError("time limit hit before any feasible assignment")
        raise PlacementInfeasibleError("no feasible assignment exists")
    allocation = make_allocation(problem, best_assignment[0])
    status = "time_limited" if timed_out[0] else "optimal"
    bound = min(frontier[0], allocation.energy_cost_rate) if timed_out[0] \
        else allocation.energy_cost_rate
    return SolveReport(allocation=allocation, proof_of_optimality=status,
                       nodes_explored=nodes[0], wall_time=wall, lower_bound=bound)


# --------------------------------------------------------------------------
# Production solver: group/pattern branch and bound
# --------------------------------------------------------------------------

def _vm_groups(problem):
    groups = {}
    for v in sorted(problem.vms, key=lambda v: v.id):
        key = (v.class_id, problem.vm_source[v.id])
        groups.setdefault(key, []).append(v)
    order = sorted(groups, key=lambda k: (k[0], k[1] is not None, k[1] or 0))
    return {k: groups[k] for k in order}


def _host_groups(problem):
    groups = {}
    for h in sorted(problem.hosts, key=lambda h: h.id):
        key = (h.class_id, h.owner, h.initially_on)
        groups.setdefault(key, []).append(h)
    order = sorted(groups, key=lambda k: (k[0], k[1], not k[2]))
    return {k: groups[k] for k in order}


def _patterns_for_class(problem, host_class_id, class_counts):
    """All nonzero per-class count vectors that fit one host of the class."""
    classes = sorted(class_counts)
    shares_a = {q: problem.cpu[(q, host_class_id)] for q in classes}
    shares_m = {q: problem.ram[(q, host_class_id)] for q in classes}
    patterns = []

    def rec(idx, counts, cpu, ram):
        if idx == len(classes):
            if any(counts):
                patterns.append(tuple(counts))
            return
        q = classes[idx]
        limit = class_counts[q]
        a, m = shares_a[q], shares_m[q]
        c = 0
        while True:
            if cpu + c * a > 1.0 + CPU_TOL or ram + c * m > 1.0 + CPU_TOL or c > limit:
                break
            counts.append(c)
            rec(idx + 1, counts, cpu + c * a, ram + c * m)
            counts.pop()
            c += 1

    rec(0, [], 0.0, 0.0)
    patterns.sort()
    return patterns


class _Master:
    """Pattern-multiplicity integer program for one placement problem.

    Host groups that are exact cost clones of each other (same class,
    same initial power state, same electricity price, and no migration
    column singling their owner out) are pooled into one group, which
    removes the tie degeneracy that otherwise makes the relaxation
    wander between interchangeable owners.
    """

    def __init__(self, problem):
        self.problem = problem
        self.vm_groups = _vm_groups(problem)
        self.classes = sorted({q for (q, _s) in self.vm_groups})
        self.class_counts = {q: sum(len(ids) for (qq, s), ids in self.vm_groups.items()
                                    if qq == q)
                             for q in self.classes}
        mig = problem.scenario.migration
        self.inter = {q: mig.inter_provider_rate(q) for q in self.classes}
        self.same = mig.same_cp_cost

        raw = _host_groups(problem)
        pooled = {}
        for (g, owner, on), hosts in raw.items():
            key = (g, on, problem.price[owner], self._pool_tag(owner))
            pooled.setdefault(key, []).extend(hosts)
        order = sorted(pooled, key=lambda k: (k[0], not k[1], k[2],
                                              k[3] is not None, k[3] or 0))
        self.groups = {}
        for key in order:
            self.groups[key] = sorted(pooled[key], key=lambda h: (h.owner, h.id))

        self.patterns = {}  # host class id -> list of tuples
        for (g, _on, _e, _tag) in self.groups:
            if g not in self.patterns:
                self.patterns[g] = _patterns_for_class(problem, g, self.class_counts)

        self.x_cols = []  # (group key, pattern)
        self.x_cost = []
        for key, hosts in self.groups.items():
            g = key[0]
            idle, dyn, on_r, off_r = problem.host_rates(hosts[0])
            for p in self.patterns[g]:
                load = sum(c * problem.cpu[(q, g)]
                           for c, q in zip(p, self.classes))
                cost = idle + dyn * load + on_r - off_r
                self.x_cols.append((key, p))
                self.x_cost.append(cost)

        # matched same-provider placements, one variable per
        # (class, provider) pair that can actually save migration money
        self.m_cols = []
        self.m_gain = []
        owners = {h.owner for h in problem.hosts}
        for (q, s), ids in self.vm_groups.items():
            if s is None or s not in owners:
                continue
            gain = self.inter[q] - self.same
            if gain > 0:
                self.m_cols.append((q, s))
                self.m_gain.append(gain)

        self.base_migration = sum(
            len(ids) * self.inter[q]
            for (q, s), ids in self.vm_groups.items() if s is not None)
        self.const = self.base_migration + sum(
            problem.host_rates(h)[3] for h in problem.hosts)

        self._build_matrices()

    def _pool_tag(self, owner):
        """Owners whose hosts attract a migration discount of their own
        cannot be merged with anyone else."""
        for (q, s), ids in self.vm_groups.items():
            if s == owner and ids and self.inter[q] - self.same > 0:
                return owner
        return None

    def _build_matrices(self):
        nx, nm = len(self.x_cols), len(self.m_cols)
        n = nx + nm
        self.c = np.array(self.x_cost + [-g for g in self.m_gain])

        self.group_cols = {}  # group key -> column indices
        for j, (key, _p) in enumerate(self.x_cols):
            self.group_cols.setdefault(key, []).append(j)

        A_ub, b_ub = [], []
        for key, hosts in self.groups.items():
            row = np.zeros(n)
            row[self.group_cols[key]] = 1.0
            A_ub.append(row)
            b_ub.append(float(len(hosts)))
        for j, (q, s) in enumerate(self.m_cols):
            cap = np.zeros(n)
            cap[nx + j] = 1.0
            A_ub.append(cap)
            b_ub.append(float(len(self.vm_groups[(q, s)])))
            link = np.zeros(n)
            link[nx + j] = 1.0
            qi = self.classes.index(q)
            for jj, ((g, _on, _e, tag), p) in enumerate(self.x_cols):
                if tag == s and p[qi]:
                    link[jj] = -float(p[qi])
            A_ub.append(link)
            b_ub.append(0.0)

        A_eq, b_eq = [], []
        for qi, q in enumerate(self.classes):
            row = np.zeros(n)
            for j, (_k, p) in enumerate(self.x_cols):
                if p[qi]:
                    row[j] = float(p[qi])
            A_eq.append(row)
            b_eq.append(float(self.class_counts[q]))

        self.A_ub = np.array(A_ub) if A_ub else None
        self.b_ub = np.array(b_ub) if b_ub else None
        self.A_eq = np.array(A_eq)
        self.b_eq = np.array(b_eq)
        self.nx = nx
        self._build_branch_axes()

    def _build_branch_axes(self):
        """Aggregates to branch on, one weight vector per axis.

        Coarse axes move the relaxation bound in real cost quanta: host
        counts and per-VM-class slot totals over a whole host class,
        then over (host class, price, owner-tag) families whose members
        differ only by power-cycle epsilons, then per group. Branching
        fine quantities before coarse ones walks enormous near-flat
        cost plateaus one epsilon at a time; this ordering avoids that.
        """
        nx = self.nx
        n_classes = len(self.classes)
        host_count = {key: np.zeros(nx) for key in self.groups}
        slot_count = {(key, qi): np.zeros(nx) for key in self.groups
                      for qi in range(n_classes)}
        for j, (key, p) in enumerate(self.x_cols):
            host_count[key][j] = 1.0
            for qi, c in enumerate(p):
                if c:
                    slot_count[(key, qi)][j] = float(c)

        def merged(level_of):
            hosts, slots = {}, {}
            for key in self.groups:
                label = level_of(key)
                hosts[label] = hosts.get(label, 0) + host_count[key]
                for qi in range(n_classes):
                    slots[(label, qi)] = (slots.get((label, qi), 0)
                                          + slot_count[(key, qi)])
            return hosts, slots

        cls_hosts, cls_slots = merged(lambda k: k[0])
        fam_hosts, fam_slots = merged(lambda k: (k[0], k[2], k[3]))

        self._axes = []  # flattened (kind, which, weights), coarse first
        for table, kind in ((cls_hosts, "cls_hosts"), (cls_slots, "cls_slots"),
                            (fam_hosts, "fam_hosts"), (fam_slots, "fam_slots"),
                            (host_count, "grp_hosts"), (slot_count, "grp_slots")):
            for which in sorted(table, key=repr):
                self._axes.append((kind, which, table[which]))
        self._axis_weights = {(kind, which): w
                              for kind, which, w in self._axes}
        self._kind_order = ["cls_hosts", "cls_slots", "fam_hosts",
                            "fam_slots", "grp_hosts", "grp_slots"]

    def _axis_row(self, kind, which):
        row = np.zeros(self.c.size)
        if kind == "var":
            row[which] = 1.0
        else:
            row[:self.nx] = self._axis_weights[(kind, which)]
        return row

    def solve_relaxation(self, bounds):
        """LP over the master columns; ``bounds`` maps branching axes to
        (lo, hi) pairs enforced as extra rows."""
        extra_rows, extra_rhs = [], []
        for (kind, which), (lo, hi) in bounds.items():
            row = self._axis_row(kind, which)
            if hi is not None:
                extra_rows.append(row)
                extra_rhs.append(float(hi))
            if lo:
                extra_rows.append(-row)
                extra_rhs.append(-float(lo))
        A_ub = self.A_ub
        b_ub = self.b_ub
        if extra_rows:
            A_ub = np.vstack([A_ub] + extra_rows) if A_ub is not None \
                else np.vstack(extra_rows)
            b_ub = np.concatenate([b_ub, extra_rhs]) if b_ub is not None \
                else np.array(extra_rhs)
        return solve_lp(self.c, A_ub=A_ub, b_ub=b_ub,
                        A_eq=self.A_eq, b_eq=self.b_eq)

    def try_integral_candidate(self, x):
        """Rebuild an integral pattern selection from an LP point whose
        per-group host counts and per-class slot totals are integral.

        The LP's optimal face is full of cost-equal fractional pattern
        mixes; decomposing the aggregate totals directly turns any such
        point into an equally cheap integral solution without touring
        the face by branch and bound. Returns None when the totals are
        fractional or no exact cover exists (the caller then branches).
        """
        x_int = [0] * self.nx
        for key in self.groups:
            cols = self.group_cols[key]
            n_g = sum(x[j] for j in cols)
            if abs(n_g - round(n_g)) > 1e-6:
                return None
            totals = []
            for qi in range(len(self.classes)):
                t = sum(x[j] * self.x_cols[j][1][qi] for j in cols)
                if abs(t - round(t)) > 1e-6:
                    return None
                totals.append(int(round(t)))
            cover = self._decompose(key[0], int(round(n_g)), tuple(totals))
            if cover is None:
                return None
            col_of = {self.x_cols[j][1]: j for j in cols}
            for p in cover:
                x_int[col_of[p]] += 1
        return x_int

    def _decompose(self, host_class_id, n_hosts, totals):
        """Exact cover of per-class slot totals by at most n_hosts
        feasible patterns; None when no cover is found in budget."""
        patterns = sorted(self.patterns[host_class_id],
                          key=lambda p: (-sum(p), p))
        maxcount = [max((p[qi] for p in patterns), default=0)
                    for qi in range(len(self.classes))]
        failed = set()
        budget = [20000]

        def rec(state, left):
            if not any(state):
                return []
            if left == 0 or budget[0] <= 0:
                return None
            if (state, left) in failed:
                return None
            budget[0] -= 1
            for qi, s in enumerate(state):
                if maxcount[qi] == 0 and s:
                    return None
                if maxcount[qi] and -(-s // maxcount[qi]) > left:
                    failed.add((state, left))
                    return None
            for p in patterns:
                if all(c <= s for c, s in zip(p, state)):
                    rest = rec(tuple(s - c for s, c in zip(state, p)), left - 1)
                    if rest is not None:
                        return [p] + rest
            failed.add((state, left))
            return None

        return rec(tuple(totals), n_hosts)

    def branching_target(self, x):
        """Most-fractional aggregate at the coarsest fractional level,
        falling back to the pattern count nearest half-integral."""
        current = None
        best = None
        best_dist = 0.5
        for kind, which, weights in self._axes:
            if best is not None and kind != current:
                return best
            total = float(weights @ x)
            f = abs(total - round(total))
            if f > 1e-6:
                d = abs(f - 0.5)
                if best is None or d < best_dist - 1e-12:
                    best = ((kind, which), total)
                    best_dist = d
                    current = kind
        if best is not None:
            return best
        for j in range(self.nx):
            f = abs(x[j] - round(x[j]))
            if f > 1e-6:
                d = abs(f - 0.5)
                if best is None or d < best_dist - 1e-12:
                    best = (("var", j), float(x[j]))
                    best_dist = d
        return best if best is not None else (None, None)

    # -- expansion of an integral pattern solution ------------------------

    def expand(self, x_int) -> Allocation:
        problem = self.problem
        host_patterns = {}  # host id -> pattern
        for key, hosts in self.groups.items():
            stock = []
            for j in self.group_cols[key]:
                if x_int[j]:
                    stock.extend([self.x_cols[j][1]] * x_int[j])
            # lightest patterns land on the lowest-id owners
            stock.sort(key=lambda p: (sum(p), p))
            for host, p in zip(hosts, stock):
                host_patterns[host.id] = p

        # per-class slot list in deterministic host order
        hosts_in_order = [h for key in self.groups
                          for h in self.groups[key] if h.id in host_patterns]
        slots = {q: [] for q in self.classes}
        for h in hosts_in_order:
            p = host_patterns[h.id]
            for qi, q in enumerate(self.classes):
                slots[q].extend([h] * p[qi])

        assignment = {}
        for q in self.classes:
            remaining = list(slots[q])
            leftover_vms = []
            # same-provider matches first (never more expensive than a
            # cross-provider move; validated upstream)
            for (qq, s), vms in self.vm_groups.items():
                if qq != q:
                    continue
                if s is None:
                    leftover_vms.extend(vms)
                    continue
                own = [h for h in remaining if h.owner == s]
                take = min(len(own), len(vms))
                for vm, host in zip(vms[:take], own[:take]):
                    assignment[vm.id] = host.id
                    remaining.remove(host)
                leftover_vms.extend(vms[take:])
            leftover_vms.sort(key=lambda v: v.id)
            for vm, host in zip(leftover_vms, remaining):
                assignment[vm.id] = host.id
            if len(leftover_vms) > len(remaining):
                raise PlacementError("slot bookkeeping mismatch")

        powered = frozenset(host_patterns.keys())
        return make_allocation(problem, assignment, powered=powered)


def solve_symmetric(problem: PlacementProblem, time_limit: Optional[float] = None
                    ) -> SolveReport:
    """Group-and-pattern branch and bound; exact on completion."""
    started = time.perf_counter()
    bad = problem.infeasible_vms()
    if bad:
        raise PlacementInfeasibleError(
            f"VM {bad[0].id} fits no host in the coalition")
    if not problem.vms:
        alloc = make_allocation(problem, {}, powered=())
        return SolveReport(allocation=alloc, proof_of_optimality="optimal",
                           nodes_explored=0, wall_time=0.0,
                           lower_bound=alloc.energy_cost_rate)

    master = _Master(problem)
    deadline = started + time_limit if time_limit else None

    incumbent_cost = float("inf")
    incumbent_alloc = None
    try:
        ffd = heuristic_ffd(problem)
        incumbent_cost = ffd.energy_cost_rate
        incumbent_alloc = ffd
    except PlacementInfeasibleError:
        pass

    counter = 0
    heap = [(-float("inf"), counter, {})]
    nodes = 0
    timed_out = False
    best_open = -float("inf")

    while heap:
        bound, _, bounds = heapq.heappop(heap)
        best_open = bound
        if bound >= incumbent_cost - GAP_TOL:
            best_open = bound
            heap = []
            break
        if deadline and time.perf_counter() > deadline:
            timed_out = True
            break
        nodes += 1
        res = master.solve_relaxation(bounds)
        if res.status == "infeasible":
            continue
        if res.status != "optimal":
            raise PlacementError(f"relaxation came back {res.status}")
        lp_obj = res.objective + master.const
        if lp_obj >= incumbent_cost - GAP_TOL:
            continue
        x = res.x[:master.nx]
        target, value = master.branching_target(x)
        if target is None:
            x_int = [int(round(v)) for v in x]
            alloc = master.expand(x_int)
            cost = objective_value(problem, alloc)
            if cost > lp_obj + 1e-7:
                # an integral relaxation optimum must attain its own
                # bound; a mismatch means a tolerance tie was misread
                raise PlacementError(
                    f"integral relaxation point missed its bound: "
                    f"{cost} vs {lp_obj}")
            if cost < incumbent_cost - GAP_TOL:
                incumbent_cost = cost
                incumbent_alloc = alloc
            continue
        candidate = master.try_integral_candidate(x)
        if candidate is not None:
            alloc = master.expand(candidate)
            cost = objective_value(problem, alloc)
            if cost < incumbent_cost - GAP_TOL:
                incumbent_cost = cost
                incumbent_alloc = alloc
            if lp_obj >= incumbent_cost - GAP_TOL:
                continue
        lo, hi = bounds.get(target, (0, None))
        down = dict(bounds)
        down[target] = (lo, int(np.floor(value)))
        up = dict(bounds)
        up[target] = (int(np.ceil(value)), hi)
        for child in (down, up):
            counter += 1
            heapq.heappush(heap, (lp_obj, counter, child))

    wall = time.perf_counter() - started
    if incumbent_alloc is None:
        if timed_out:
            raise PlacementError("time limit hit before any feasible solution")
        raise PlacementInfeasibleError("no feasible allocation exists")
    if timed_out:
        open_bounds = [b for b, _, _ in heap] + [best_open]
        lower = min(b for b in open_bounds if b > -float("inf")) \
            if any(b > -float("inf") for b in open_bounds) else float("-inf")
        return SolveReport(allocation=incumbent_alloc,
                           proof_of_optimality="time_limited",
                           nodes_explored=nodes, wall_time=wall,
                           lower_bound=min(lower, incumbent_cost))
    return SolveReport(allocation=incumbent_alloc, proof_of_optimality="optimal",
                       nodes_explored=nodes, wall_time=wall,
                       lower_bound=incumbent_cost)


def allocation_by_owner(problem: PlacementProblem, allocation: Allocation) -> dict:
    """Per-provider powered-host count, power draw and host cost rate."""
    out = {pid: {"hosts_on": 0, "power_w": 0.0, "cost_rate": 0.0}
           for pid in problem.coalition}
    for h in problem.hosts:
        entry = out[h.owner]
        idle_r, dyn_r, on_r, off_r = problem.host_rates(h)
        if h.id in allocation.powered_on:
            hc = problem.host_class_of(h)
            load = allocation.host_utilization[h.id]
            entry["hosts_on"] += 1
            entry["power_w"] += hc.c_min + load * (hc.c_max - hc.c_min)
            entry["cost_rate"] += idle_r + dyn_r * load + on_r
        else:
            entry["cost_rate"] += off_r
    return out
