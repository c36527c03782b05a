"""Built-in benchmark scenarios used by the reproduction suite.

All four use the same three-class catalog of hosts and VMs with an
explicitly pinned share table (the published shares are not consistent
with any single capacity vector, so they are data, not derived) and an
electricity price of 0.0004 currency per watt-hour.
"""

from __future__ import annotations

from .domain import (
    HostClass, VmClass, ShareMatrix, Host, Vm, Provider, MigrationParams,
    Scenario,
)

ENERGY_PRICE = 0.0004  # currency per Wh (0.4 per kWh)
SWITCH_TIME_H = 300e-6 / 3600.0  # nominal power-cycle time in hours

_HOST_SPECS = [
    # id, capacity (benchmark units), ram GB, c_min W, c_max W
    (1, 5000.0, 16.0, 86.7, 274.9),
    (2, 6667.0, 32.0, 143.0, 518.4),
    (3, 10000.0, 64.0, 490.1, 1117.8),
]

_VM_SPECS = [
    # id, capacity, ram GB, revenue/h
    (1, 1000.0, 1.0, 0.08),
    (2, 2000.0, 2.0, 0.16),
    (3, 4000.0, 4.0, 0.32),
]

# (cpu, ram) share of one VM of class q on one host of class g
_SHARES = {
    (1, 1): (0.20, 0.0625), (2, 1): (0.4, 0.125), (3, 1): (0.8, 0.25),
    (1, 2): (0.15, 0.03125), (2, 2): (0.3, 0.0625), (3, 2): (0.6, 0.125),
    (1, 3): (0.10, 0.015625), (2, 3): (0.2, 0.03125), (3, 3): (0.3, 0.0625),
}

MIGRATION_TIME_MEANS_S = {1: 277.0, 2: 554.0, 3: 1108.0}
MIGRATION_TIME_SDS_S = {1: 182.0, 2: 364.0, 3: 728.0}


def standard_host_classes():
    return tuple(
        HostClass(id=i, cpu_capacity=cap, ram_gb=ram, c_min=cmin, c_max=cmax,
                  switch_energy_on=cmax * SWITCH_TIME_H,
                  switch_energy_off=cmax * SWITCH_TIME_H)
        for i, cap, ram, cmin, cmax in _HOST_SPECS
    )


def standard_vm_classes():
    return tuple(VmClass(id=i, cpu_capacity=cap, ram_gb=ram, revenue_rate=rev)
                 for i, cap, ram, rev in _VM_SPECS)


def standard_shares():
    return ShareMatrix(cpu={k: v[0] for k, v in _SHARES.items()},
                       ram={k: v[1] for k, v in _SHARES.items()})


def standard_migration():
    return MigrationParams(transfer_cost_per_gb=0.001, data_rate_mbit_s=100.0,
                           migration_time_s=dict(MIGRATION_TIME_MEANS_S),
                           same_cp_cost=0.0)


class _Builder:
    def __init__(self):
        self.next_host = 1
        self.next_vm = 1
        self.providers = []

    def provider(self, pid, host_plan, vm_plan, energy_price=ENERGY_PRICE,
                 place_vms_on_own=False):
        """host_plan: list of (class_id, count, on_count or None=all on);
        vm_plan: list of (class_id, count)."""
        hosts = []
        for class_id, count, on_count in host_plan:
            on = count if on_count is None else on_count
            for k in range(count):
                hosts.append(Host(id=self.next_host, class_id=class_id,
                                  owner=pid, initially_on=k < on))
                self.next_host += 1
        vms = []
        own_ids = [h.id for h in hosts]
        k = 0
        for class_id, count in vm_plan:
            for _ in range(count):
                current = own_ids[k % len(own_ids)] if (place_vms_on_own and own_ids) \
                    else None
                vms.append(Vm(id=self.next_vm, class_id=class_id, owner=pid,
                              current_host=current))
                self.next_vm += 1
                k += 1
        self.providers.append(Provider(id=pid, energy_price=energy_price,
                                       hosts=tuple(hosts), vms=tuple(vms)))

    def scenario(self, migration=None):
        return Scenario(host_classes=standard_host_classes(),
                        vm_classes=standard_vm_classes(),
                        providers=tuple(self.providers),
                        shares=standard_shares(),
                        migration=migration or standard_migration(),
                        planning_period_hours=12.0)


def scenario1() -> Scenario:
    """Three single-class fleets, identical workloads of large VMs."""
    b = _Builder()
    b.provider(1, [(1, 30, None)], [(3, 10)])
    b.provider(2, [(2, 30, None)], [(3, 10)])
    b.provider(3, [(3, 30, None)], [(3, 10)])
    return b.scenario()


def scenario2() -> Scenario:
    """Medium-VM workloads on one mid-class and two large-class fleets.

    The initial power states (9 of 41 hosts on for provider 2, 4 of 41
    for provider 3) pin down which of the many cost-equal optimal
    allocations of the pooled problem is reported, via the vanishingly
    small power-cycle energies; every published cost is unaffected at
    the displayed precision.
    """
    b = _Builder()
    b.provider(1, [(2, 42, None)], [(2, 65)])
    b.provider(2, [(3, 41, 9)], [(2, 61)])
    b.provider(3, [(3, 41, 4)], [(2, 61)])
    return b.scenario()


def case_study() -> Scenario:
    """Four providers with mixed fleets; VMs start on their owners'
    hosts, so cross-provider placements carry migration charges at the
    nominal per-class transfer times."""
    b = _Builder()
    b.provider(1, [(1, 40, None)], [(2, 12), (3, 13)], place_vms_on_own=True)
    b.provider(2, [(2, 40, None)], [(1, 18), (2, 5), (3, 11)], place_vms_on_own=True)
    b.provider(3, [(3, 40, None)], [(1, 17), (2, 18), (3, 11)], place_vms_on_own=True)
    b.provider(4, [(1, 15, None), (2, 15, None), (3, 10, None)],
               [(1, 3), (2, 2)], place_vms_on_own=True)
    return b.scenario()


def bondareva_example() -> Scenario:
    """Tiny three-provider game whose core is provably empty."""
    b = _Builder()
    b.provider(1, [(2, 2, None)], [(2, 4)])
    b.provider(2, [(1, 1, None)], [(2, 1)])
    b.provider(3, [(1, 1, None)], [(2, 1)])
    return b.scenario()
