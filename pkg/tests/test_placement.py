import random

import pytest

from conftest import random_scenario
from cloudfed import fixtures
from cloudfed.domain import Host, Vm, Provider, Scenario
from cloudfed.placement import (
    build_problem, objective_value, solve_naive, solve_symmetric,
    heuristic_ffd, make_allocation, allocation_by_owner, Allocation,
    PlacementInfeasibleError, ConstraintViolation,
)


def single_host_scenario():
    """One class-2 host holding one class-2 VM, price 0.0004/Wh."""
    hc = fixtures.standard_host_classes()[1]
    vc = fixtures.standard_vm_classes()[1]
    p = Provider(id=1, energy_price=0.0004,
                 hosts=(Host(id=1, class_id=2, owner=1),),
                 vms=(Vm(id=1, class_id=2, owner=1),))
    return Scenario(host_classes=(hc,), vm_classes=(vc,), providers=(p,),
                    shares=fixtures.standard_shares())


class TestBuildProblem:
    def test_single_member(self, scenario1):
        prob = build_problem(scenario1, [1])
        assert len(prob.hosts) == 30
        assert len(prob.vms) == 10
        assert all(v.class_id == 3 for v in prob.vms)

    def test_union_of_members(self, scenario2):
        prob = build_problem(scenario2, [1, 2, 3])
        assert len(prob.hosts) == 124
        assert len(prob.vms) == 187

    def test_empty_workload_member(self):
        hc = fixtures.standard_host_classes()[0]
        p1 = Provider(id=1, energy_price=0.0004,
                      hosts=(Host(id=1, class_id=1, owner=1),))
        s = Scenario(host_classes=(hc,),
                     vm_classes=fixtures.standard_vm_classes(),
                     providers=(p1,), shares=fixtures.standard_shares())
        prob = build_problem(s, [1])
        assert prob.vms == ()

    def test_empty_coalition_rejected(self, scenario1):
        with pytest.raises(ValueError):
            build_problem(scenario1, [])

    def test_migration_rate_zero_inside_provider(self, case_study):
        prob = build_problem(case_study, [1, 2])
        own = next(v for v in prob.vms
                   if v.owner == 2 and v.current_host is not None)
        host_home = next(h for h in prob.hosts if h.owner == 2)
        host_away = next(h for h in prob.hosts if h.owner == 1)
        assert prob.g(own, host_home) == 0.0
        assert prob.g(own, host_away) > 0.0


class TestObjectiveValue:
    def test_hand_computed_single_host(self):
        s = single_host_scenario()
        prob = build_problem(s, [1])
        alloc = make_allocation(prob, {1: 1})
        # (143 + 0.3 * 375.4) * 0.0004
        assert objective_value(prob, alloc) == pytest.approx(0.102248, abs=1e-9)

    def test_empty_everything_costs_nothing(self):
        hc = fixtures.standard_host_classes()[0]
        p = Provider(id=1, energy_price=0.0004,
                     hosts=(Host(id=1, class_id=1, owner=1, initially_on=False),))
        s = Scenario(host_classes=(hc,),
                     vm_classes=fixtures.standard_vm_classes(),
                     providers=(p,), shares=fixtures.standard_shares())
        prob = build_problem(s, [1])
        alloc = make_allocation(prob, {}, powered=())
        assert objective_value(prob, alloc) == 0.0

    def test_matches_published_fleet_cost(self, scenario1):
        prob = build_problem(scenario1, [1])
        report = solve_symmetric(prob)
        audited = objective_value(prob, report.allocation)
        assert audited == pytest.approx(0.95, abs=0.01)
        assert audited == pytest.approx(report.objective, rel=1e-9)

    def test_rejects_vm_on_unpowered_host(self):
        s = single_host_scenario()
        prob = build_problem(s, [1])
        bad = Allocation(assignment={1: 1}, host_utilization={1: 0.0},
                         powered_on=frozenset(), energy_cost_rate=0.0,
                         breakdown={}, power_watts=0.0)
        with pytest.raises(ConstraintViolation) as err:
            objective_value(prob, bad)
        assert err.value.constraint == "powered-host"

    def test_rejects_missing_assignment(self):
        s = single_host_scenario()
        prob = build_problem(s, [1])
        bad = Allocation(assignment={}, host_utilization={1: 0.0},
                         powered_on=frozenset(), energy_cost_rate=0.0,
                         breakdown={}, power_watts=0.0)
        with pytest.raises(ConstraintViolation) as err:
            objective_value(prob, bad)
        assert err.value.constraint == "vm-assignment"

    def test_rejects_cpu_overflow(self):
        hc = fixtures.standard_host_classes()[0]
        vc = fixtures.standard_vm_classes()[2]
        p = Provider(id=1, energy_price=0.0004,
                     hosts=(Host(id=1, class_id=1, owner=1),),
                     vms=(Vm(id=1, class_id=3, owner=1),
                          Vm(id=2, class_id=3, owner=1)))
        s = Scenario(host_classes=(hc,), vm_classes=(vc,), providers=(p,),
                     shares=fixtures.standard_shares())
        prob = build_problem(s, [1])
        alloc = Allocation(assignment={1: 1, 2: 1},
                           host_utilization={1: 1.6},
                           powered_on=frozenset({1}), energy_cost_rate=0.0,
                           breakdown={}, power_watts=0.0)
        with pytest.raises(ConstraintViolation) as err:
            objective_value(prob, alloc)
        assert err.value.constraint == "cpu-capacity"

    def test_rejects_utilization_mismatch(self):
        s = single_host_scenario()
        prob = build_problem(s, [1])
        alloc = Allocation(assignment={1: 1}, host_utilization={1: 0.9},
                           powered_on=frozenset({1}), energy_cost_rate=0.0,
                           breakdown={}, power_watts=0.0)
        with pytest.raises(ConstraintViolation) as err:
            objective_value(prob, alloc)
        assert err.value.constraint == "utilization-consistency"


class TestNaiveSolver:
    def test_two_hosts_four_vms_enumeration(self, tiny_core_game):
        # 4 mid-size VMs on the owner's 2 mid-size hosts: all 16
        # assignments enumerated, best splits them 3 + 1
        prob = build_problem(tiny_core_game, [1])
        report = solve_naive(prob)
        assert report.proof_of_optimality == "optimal"
        assert report.objective == pytest.approx(0.294592, abs=1e-9)

    def test_single_vm_single_host(self):
        s = single_host_scenario()
        report = solve_naive(build_problem(s, [1]))
        assert report.allocation.assignment == {1: 1}
        assert report.objective == pytest.approx(0.102248, abs=1e-9)

    def test_consolidation_beats_spreading(self):
        hc = fixtures.standard_host_classes()[0]
        p = Provider(id=1, energy_price=0.0004,
                     hosts=(Host(id=1, class_id=1, owner=1),
                            Host(id=2, class_id=1, owner=1)),
                     vms=(Vm(id=1, class_id=1, owner=1),
                          Vm(id=2, class_id=1, owner=1)))
        s = Scenario(host_classes=(hc,),
                     vm_classes=fixtures.standard_vm_classes(),
                     providers=(p,), shares=fixtures.standard_shares())
        report = solve_naive(build_problem(s, [1]))
        assert len(report.allocation.powered_on) == 1

    def test_infeasible_reported(self):
        hc = fixtures.standard_host_classes()[0]
        p = Provider(id=1, energy_price=0.0004,
                     hosts=(Host(id=1, class_id=1, owner=1),),
                     vms=(Vm(id=1, class_id=3, owner=1),
                          Vm(id=2, class_id=3, owner=1)))
        s = Scenario(host_classes=(hc,),
                     vm_classes=fixtures.standard_vm_classes(),
                     providers=(p,), shares=fixtures.standard_shares())
        with pytest.raises(PlacementInfeasibleError):
            solve_naive(build_problem(s, [1]))


class TestSymmetricSolver:
    def test_scenario1_grand_coalition(self, scenario1):
        report = solve_symmetric(build_problem(scenario1, [1, 2, 3]))
        alloc = report.allocation
        assert report.proof_of_optimality == "optimal"
        assert len(alloc.powered_on) == 30
        assert alloc.power_watts / 1000 == pytest.approx(7.12, abs=0.01)
        assert report.objective == pytest.approx(2.85, abs=0.01)
        hosts = {h.id: h for h in build_problem(scenario1, [1, 2, 3]).hosts}
        assert all(hosts[h].owner == 1 for h in alloc.powered_on)

    def test_scenario2_pair(self, scenario2):
        prob = build_problem(scenario2, [1, 2])
        report = solve_symmetric(prob)
        assert report.objective == pytest.approx(8.08, abs=0.01)
        own = allocation_by_owner(prob, report.allocation)
        assert own[2]["hosts_on"] == 0
        assert len(report.allocation.assignment) == 126

    def test_empty_workload(self):
        hc = fixtures.standard_host_classes()[0]
        p = Provider(id=1, energy_price=0.0004,
                     hosts=(Host(id=1, class_id=1, owner=1, initially_on=False),))
        s = Scenario(host_classes=(hc,),
                     vm_classes=fixtures.standard_vm_classes(),
                     providers=(p,), shares=fixtures.standard_shares())
        report = solve_symmetric(build_problem(s, [1]))
        assert report.objective == 0.0
        assert report.allocation.powered_on == frozenset()

    def test_matches_oracle_on_random_instances(self):
        rng = random.Random(11)
        for trial in range(40):
            s = random_scenario(rng, n_providers=rng.randint(1, 3),
                                max_hosts_per=2, max_vms_per=3)
            coalition = tuple(range(1, len(s.providers) + 1))
            prob = build_problem(s, coalition)
            if len(prob.vms) > 8 or len(prob.hosts) > 5 or prob.infeasible_vms():
                continue
            try:
                fast = solve_symmetric(prob)
            except PlacementInfeasibleError:
                with pytest.raises(PlacementInfeasibleError):
                    solve_naive(prob)
                continue
            slow = solve_naive(prob)
            assert fast.objective == pytest.approx(slow.objective, abs=1e-9), \
                f"trial {trial}"

    def test_adding_powered_off_hosts_never_hurts(self):
        rng = random.Random(13)
        for _ in range(15):
            s = random_scenario(rng, n_providers=2, max_hosts_per=2,
                                max_vms_per=2)
            prob = build_problem(s, (1, 2))
            if prob.infeasible_vms():
                continue
            base = solve_symmetric(prob).objective
            p_last = s.providers[-1]
            extra = Host(id=999, class_id=1, owner=p_last.id, initially_on=False)
            from dataclasses import replace
            grown = replace(
                s, providers=s.providers[:-1]
                + (replace(p_last, hosts=p_last.hosts + (extra,)),))
            bigger = solve_symmetric(build_problem(grown, (1, 2))).objective
            assert bigger <= base + 1e-9

    def test_powered_count_equals_bin_packing_minimum(self):
        # identical hosts, everything on, no migration: the optimum
        # powers exactly the brute-force minimal host count
        rng = random.Random(17)
        for _ in range(10):
            n_vms = rng.randint(2, 6)
            vms = tuple(Vm(id=i + 1, class_id=rng.randint(1, 3), owner=1)
                        for i in range(n_vms))
            p = Provider(id=1, energy_price=0.0004,
                         hosts=tuple(Host(id=i + 1, class_id=2, owner=1)
                                     for i in range(n_vms)),
                         vms=vms)
            s = Scenario(host_classes=fixtures.standard_host_classes(),
                         vm_classes=fixtures.standard_vm_classes(),
                         providers=(p,), shares=fixtures.standard_shares())
            prob = build_problem(s, [1])
            report = solve_symmetric(prob)
            assert len(report.allocation.powered_on) == _min_bins(prob)

    def test_audit_agrees_with_reported_objective(self, scenario2):
        for coalition in ([1], [2, 3], [1, 2, 3]):
            prob = build_problem(scenario2, coalition)
            report = solve_symmetric(prob)
            audited = objective_value(prob, report.allocation)
            assert audited == pytest.approx(report.objective, rel=1e-9)


def _min_bins(prob):
    """Smallest k such that every VM packs into the first k hosts,
    decided by plain exhaustive assignment."""
    vms = prob.vms
    hosts = prob.hosts

    def packs_into(k):
        def rec(idx, cpu, ram):
            if idx == len(vms):
                return True
            vm = vms[idx]
            for h in range(k):
                a, m = prob.a(vm, hosts[h]), prob.m(vm, hosts[h])
                if cpu[h] + a <= 1 + 1e-9 and ram[h] + m <= 1 + 1e-9:
                    cpu[h] += a
                    ram[h] += m
                    if rec(idx + 1, cpu, ram):
                        return True
                    cpu[h] -= a
                    ram[h] -= m
            return False
        return rec(0, [0.0] * k, [0.0] * k)

    for k in range(1, len(hosts) + 1):
        if packs_into(k):
            return k
    return None


class TestFfd:
    def test_scenario1_single_provider(self, scenario1):
        prob = build_problem(scenario1, [1])
        alloc = heuristic_ffd(prob)
        # one large VM per small host: exactly ten powered
        assert len(alloc.powered_on) == 10
        objective_value(prob, alloc)  # structurally sound

    def test_empty_workload(self):
        hc = fixtures.standard_host_classes()[0]
        p = Provider(id=1, energy_price=0.0004,
                     hosts=(Host(id=1, class_id=1, owner=1, initially_on=False),))
        s = Scenario(host_classes=(hc,),
                     vm_classes=fixtures.standard_vm_classes(),
                     providers=(p,), shares=fixtures.standard_shares())
        alloc = heuristic_ffd(build_problem(s, [1]))
        assert alloc.assignment == {}
        assert alloc.energy_cost_rate == 0.0

    def test_never_beats_the_optimum(self, scenario2):
        prob = build_problem(scenario2, [1, 2, 3])
        ffd = heuristic_ffd(prob)
        assert ffd.energy_cost_rate >= 13.65 - 0.01

    def test_reports_unplaceable_vm(self):
        hc = fixtures.standard_host_classes()[0]
        p = Provider(id=1, energy_price=0.0004,
                     hosts=(Host(id=1, class_id=1, owner=1),),
                     vms=(Vm(id=1, class_id=3, owner=1),
                          Vm(id=2, class_id=3, owner=1)))
        s = Scenario(host_classes=(hc,),
                     vm_classes=fixtures.standard_vm_classes(),
                     providers=(p,), shares=fixtures.standard_shares())
        with pytest.raises(PlacementInfeasibleError):
            heuristic_ffd(build_problem(s, [1]))


def test_structural_constraints_on_random_solves():
    rng = random.Random(23)
    for _ in range(20):
        s = random_scenario(rng, max_hosts_per=3, max_vms_per=3)
        coalition = tuple(range(1, len(s.providers) + 1))
        prob = build_problem(s, coalition)
        if prob.infeasible_vms():
            continue
        try:
            report = solve_symmetric(prob)
        except PlacementInfeasibleError:
            continue
        audited = objective_value(prob, report.allocation)
        assert audited == pytest.approx(report.objective, rel=1e-9)
        loads = {}
        for vm in prob.vms:
            hid = report.allocation.assignment[vm.id]
            host = next(h for h in prob.hosts if h.id == hid)
            loads[hid] = loads.get(hid, 0.0) + prob.a(vm, host)
        for hid, load in loads.items():
            assert load <= 1 + 1e-9
            assert hid in report.allocation.powered_on


def test_repeated_solves_are_identical(scenario2):
    prob = build_problem(scenario2, [1, 2, 3])
    first = solve_symmetric(prob)
    second = solve_symmetric(prob)
    assert first.allocation == second.allocation


def test_owner_decomposition_sums_to_host_costs(case_study):
    prob = build_problem(case_study, [1, 2, 3, 4])
    report = solve_symmetric(prob)
    own = allocation_by_owner(prob, report.allocation)
    host_side = sum(entry["cost_rate"] for entry in own.values())
    alloc = report.allocation
    assert host_side == pytest.approx(
        alloc.energy_cost_rate - alloc.breakdown["migration_cost"], rel=1e-9)
    assert sum(e["power_w"] for e in own.values()) == pytest.approx(
        alloc.power_watts, rel=1e-9)


def test_time_limit_reports_incumbent_and_bound(scenario2):
    prob = build_problem(scenario2, [1, 2, 3])
    report = solve_symmetric(prob, time_limit=1e-9)
    assert report.proof_of_optimality == "time_limited"
    assert report.lower_bound <= report.objective
    objective_value(prob, report.allocation)  # still structurally sound

    naive_prob = build_problem(fixtures.bondareva_example(), [1, 2, 3])
    report = solve_naive(naive_prob, time_limit=1e-9)
    assert report.proof_of_optimality in ("optimal", "time_limited")
    assert report.lower_bound <= report.objective + 1e-12
