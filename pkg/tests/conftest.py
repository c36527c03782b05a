import random

import pytest

from cloudfed import fixtures
from cloudfed.domain import Host, Vm, Provider, Scenario, MigrationParams


@pytest.fixture(scope="session")
def scenario1():
    return fixtures.scenario1()


@pytest.fixture(scope="session")
def scenario2():
    return fixtures.scenario2()


@pytest.fixture(scope="session")
def case_study():
    return fixtures.case_study()


@pytest.fixture(scope="session")
def tiny_core_game():
    return fixtures.bondareva_example()


def random_scenario(rng: random.Random, n_providers=None, max_hosts_per=3,
                    max_vms_per=3, with_migration=True, all_on=False,
                    equal_prices=False):
    """Small random scenario over the standard class catalog.

    Prices, inventories, workloads, power states and current hosts are
    randomized; every provider keeps at least one host so solo
    operation stays feasible.
    """
    n = n_providers or rng.randint(2, 4)
    providers = []
    next_host, next_vm = 1, 1
    base_price = fixtures.ENERGY_PRICE
    for pid in range(1, n + 1):
        price = base_price if equal_prices else base_price * rng.uniform(0.5, 2.0)
        hosts = []
        for _ in range(rng.randint(1, max_hosts_per)):
            hosts.append(Host(
                id=next_host, class_id=rng.randint(1, 3), owner=pid,
                initially_on=True if all_on else rng.random() < 0.5))
            next_host += 1
        vms = []
        own = [h.id for h in hosts]
        for _ in range(rng.randint(0, max_vms_per)):
            current = rng.choice(own) if (with_migration and rng.random() < 0.7) \
                else None
            vms.append(Vm(id=next_vm, class_id=rng.randint(1, 3), owner=pid,
                          current_host=current))
            next_vm += 1
        providers.append(Provider(id=pid, energy_price=price,
                                  hosts=tuple(hosts), vms=tuple(vms)))
    migration = MigrationParams(
        transfer_cost_per_gb=0.001 if with_migration else 0.0,
        data_rate_mbit_s=100.0,
        migration_time_s={1: rng.uniform(0, 600), 2: rng.uniform(0, 1200),
                          3: rng.uniform(0, 2400)},
        same_cp_cost=0.0)
    return Scenario(host_classes=fixtures.standard_host_classes(),
                    vm_classes=fixtures.standard_vm_classes(),
                    providers=tuple(providers),
                    shares=fixtures.standard_shares(),
                    migration=migration)
