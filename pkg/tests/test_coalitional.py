import random

import pytest

from conftest import random_scenario
from cloudfed import fixtures
from cloudfed.domain import Host, Vm, Provider, Scenario
from cloudfed.coalitional import (
    CharacteristicTable, coalition_key, coalition_value, shapley_payoffs,
    marginal_contribution, InfeasibleCoalitionError, CoalitionSizeError,
)

SCENARIO2_VALUES = {(1,): 6.21, (2,): 4.15, (3,): 4.15, (1, 2): 12.08,
                    (1, 3): 12.08, (2, 3): 8.49, (1, 2, 3): 16.27}

COUNTEREXAMPLE_VALUES = {(1,): 0.345, (2,): 0.095, (3,): 0.095,
                         (1, 2): 0.513, (1, 3): 0.513, (2, 3): 0.225,
                         (1, 2, 3): 0.623}


@pytest.fixture(scope="module")
def table2(scenario2):
    return CharacteristicTable(scenario2)


@pytest.fixture(scope="module")
def table_tiny(tiny_core_game):
    return CharacteristicTable(tiny_core_game)


def test_coalition_key_canonicalizes():
    assert coalition_key([3, 1, 1, 2]) == (1, 2, 3)


class TestCoalitionValue:
    def test_published_mid_fleet_values(self, table2):
        for S, expected in SCENARIO2_VALUES.items():
            assert table2.value(S) == pytest.approx(expected, abs=0.01)

    def test_published_tiny_game_values(self, table_tiny):
        for S, expected in COUNTEREXAMPLE_VALUES.items():
            assert table_tiny.value(S) == pytest.approx(expected, abs=0.001)

    def test_value_is_revenue_minus_energy(self, table2):
        report = table2.report((1,))
        assert table2.value((1,)) == pytest.approx(
            table2.revenue((1,)) - report.objective, abs=1e-12)

    def test_empty_coalition_is_zero(self, table2):
        assert table2.value(()) == 0.0

    def test_memo_transparency(self, table2):
        before = {S: table2.value(S) for S in SCENARIO2_VALUES}
        table2.clear()
        for S, v in before.items():
            assert table2.value(S) == pytest.approx(v, abs=1e-9)

    def test_not_superadditive(self, table2):
        # a pair plus the leftover singleton can beat the grand coalition
        assert (table2.value((1, 2)) + table2.value((3,))
                < table2.value((1, 2, 3)))
        assert (table2.value((1, 2)) + table2.value((3,))
                == pytest.approx(16.23, abs=0.01))

    def test_infeasible_coalition_raises(self):
        hc = fixtures.standard_host_classes()[0]
        p = Provider(id=1, energy_price=0.0004,
                     hosts=(Host(id=1, class_id=1, owner=1),),
                     vms=(Vm(id=1, class_id=3, owner=1),
                          Vm(id=2, class_id=3, owner=1)))
        s = Scenario(host_classes=(hc,),
                     vm_classes=fixtures.standard_vm_classes(),
                     providers=(p,), shares=fixtures.standard_shares())
        table = CharacteristicTable(s)
        with pytest.raises(InfeasibleCoalitionError):
            coalition_value(table, (1,))
        # memoized failure stays a failure
        with pytest.raises(InfeasibleCoalitionError):
            table.value((1,))


class TestMarginalContribution:
    def test_published_difference(self, table2):
        got = marginal_contribution(table2, (1,), 2)
        assert got == pytest.approx(12.08 - 6.21, abs=0.02)

    def test_joining_nobody(self, table2):
        assert marginal_contribution(table2, (), 1) == pytest.approx(
            table2.value((1,)))

    def test_tiny_game_difference(self, table_tiny):
        got = marginal_contribution(table_tiny, (2,), 1)
        assert got == pytest.approx(0.513 - 0.095, abs=0.002)

    def test_member_rejected(self, table2):
        with pytest.raises(ValueError):
            marginal_contribution(table2, (1, 2), 2)


class TestShapleyPayoffs:
    def test_published_pair_split(self, table2):
        pv = shapley_payoffs(table2, (1, 2))
        assert pv.payoffs[1] == pytest.approx(7.07, abs=0.01)
        assert pv.payoffs[2] == pytest.approx(5.01, abs=0.01)

    def test_published_grand_split(self, table2):
        pv = shapley_payoffs(table2, (1, 2, 3))
        assert pv.payoffs[1] == pytest.approx(7.31, abs=0.01)
        assert pv.payoffs[2] == pytest.approx(4.48, abs=0.01)
        assert pv.payoffs[3] == pytest.approx(4.48, abs=0.01)

    def test_singleton(self, table2):
        pv = shapley_payoffs(table2, (2,))
        assert pv.payoffs == {2: pytest.approx(table2.value((2,)))}

    def test_efficiency_everywhere(self, table2, table_tiny):
        for table in (table2, table_tiny):
            for S in SCENARIO2_VALUES:
                pv = shapley_payoffs(table, S)
                assert pv.total == pytest.approx(table.value(S), abs=1e-9)

    def test_symmetry_of_interchangeable_providers(self):
        # two providers with identical fleets, workloads and prices;
        # all hosts on so nothing distinguishes them at any scale
        rng = random.Random(3)
        for _ in range(5):
            base = random_scenario(rng, n_providers=2, all_on=True,
                                   equal_prices=True, with_migration=False)
            p1 = base.providers[0]
            mirrored_hosts = tuple(
                Host(id=h.id + 100, class_id=h.class_id, owner=2,
                     initially_on=h.initially_on) for h in p1.hosts)
            mirrored_vms = tuple(
                Vm(id=v.id + 100, class_id=v.class_id, owner=2)
                for v in p1.vms)
            p2 = Provider(id=2, energy_price=p1.energy_price,
                          hosts=mirrored_hosts, vms=mirrored_vms)
            from dataclasses import replace
            s = replace(base, providers=(p1, p2))
            table = CharacteristicTable(s)
            pv = shapley_payoffs(table, (1, 2))
            assert pv.payoffs[1] == pytest.approx(pv.payoffs[2], abs=1e-9)

    def test_dummy_provider_gets_nothing(self):
        hc = fixtures.standard_host_classes()[0]
        p1 = Provider(id=1, energy_price=0.0004,
                      hosts=(Host(id=1, class_id=1, owner=1),),
                      vms=(Vm(id=1, class_id=1, owner=1),))
        p2 = Provider(id=2, energy_price=0.0004)  # no hosts, no VMs
        s = Scenario(host_classes=(hc,),
                     vm_classes=fixtures.standard_vm_classes(),
                     providers=(p1, p2), shares=fixtures.standard_shares())
        table = CharacteristicTable(s)
        pv = shapley_payoffs(table, (1, 2))
        assert pv.payoffs[2] == pytest.approx(0.0, abs=1e-12)

    def test_size_cap(self, table2):
        with pytest.raises(CoalitionSizeError):
            shapley_payoffs(table2, tuple(range(1, 14)))
