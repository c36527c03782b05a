"""Domain model for multi-provider data-center fleets.

Hosts and VMs come in homogeneity classes. A provider owns a set of
hosts, a workload of VMs and pays a fixed electricity price per
watt-hour. A scenario bundles the class catalogs, the per-class
resource-share matrix, the providers and the migration pricing.

Units are fixed throughout the package: power in watts, switch energies
in watt-hours, electricity prices in currency per watt-hour, revenues
and cost rates in currency per hour. All types are immutable after
construction and every operation here is a pure function.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional


class InfeasibleShareError(ValueError):
    """A VM class cannot fit on a host class (resource share above 1)."""


@dataclass(frozen=True)
class HostClass:
    id: int
    cpu_capacity: float  # benchmark units delivered by the physical CPU
    ram_gb: float
    c_min: float  # idle power draw, watts
    c_max: float  # full-load power draw, watts
    switch_energy_on: float = 0.0  # energy of one power-on, watt-hours
    switch_energy_off: float = 0.0  # energy of one power-off, watt-hours


@dataclass(frozen=True)
class VmClass:
    id: int
    cpu_capacity: float  # benchmark units used by the virtual CPU
    ram_gb: float
    revenue_rate: float  # currency per hour while the VM runs


@dataclass(frozen=True)
class ShareMatrix:
    """Explicit per-(VM class, host class) CPU and RAM fractions.

    Entries override the capacity-derived ratios; published share
    tables are not always consistent with any single capacity vector,
    so explicit values take precedence when present.
    """

    cpu: dict  # (vm_class_id, host_class_id) -> fraction
    ram: dict

    def cpu_share(self, vm_class_id, host_class_id):
        return self.cpu.get((vm_class_id, host_class_id))

    def ram_share(self, vm_class_id, host_class_id):
        return self.ram.get((vm_class_id, host_class_id))


@dataclass(frozen=True)
class Host:
    id: int
    class_id: int
    owner: int  # provider id
    initially_on: bool = True


@dataclass(frozen=True)
class Vm:
    id: int
    class_id: int
    owner: int  # provider id
    current_host: Optional[int] = None


@dataclass(frozen=True)
class Provider:
    id: int
    energy_price: float  # currency per watt-hour
    hosts: tuple = ()
    vms: tuple = ()


@dataclass(frozen=True)
class MigrationParams:
    transfer_cost_per_gb: float = 0.0  # currency per GB moved
    data_rate_mbit_s: float = 100.0
    migration_time_s: dict = field(default_factory=dict)  # vm class id -> seconds
    same_cp_cost: float = 0.0  # currency/hour for moves inside one provider

    def data_size_gb(self, vm_class_id):
        t = self.migration_time_s.get(vm_class_id, 0.0)
        return self.data_rate_mbit_s * t / 8000.0

    def inter_provider_rate(self, vm_class_id):
        """Hourly charge for moving one VM of a class across providers."""
        return self.transfer_cost_per_gb * self.data_size_gb(vm_class_id)


@dataclass(frozen=True)
class Scenario:
    host_classes: tuple
    vm_classes: tuple
    providers: tuple
    shares: Optional[ShareMatrix] = None
    migration: MigrationParams = field(default_factory=MigrationParams)
    planning_period_hours: float = 12.0

    def host_class(self, class_id) -> HostClass:
        for hc in self.host_classes:
            if hc.id == class_id:
                return hc
        raise KeyError(f"unknown host class {class_id}")

    def vm_class(self, class_id) -> VmClass:
        for vc in self.vm_classes:
            if vc.id == class_id:
                return vc
        raise KeyError(f"unknown VM class {class_id}")

    def provider(self, provider_id) -> Provider:
        for p in self.providers:
            if p.id == provider_id:
                return p
        raise KeyError(f"unknown provider {provider_id}")

    def provider_ids(self):
        return tuple(p.id for p in self.providers)

    def all_hosts(self):
        return tuple(h for p in self.providers for h in p.hosts)

    def all_vms(self):
        return tuple(v for p in self.providers for v in p.vms)

    def host(self, host_id) -> Host:
        for h in self.all_hosts():
            if h.id == host_id:
                return h
        raise KeyError(f"unknown host {host_id}")

    def cpu_share_of(self, vm_class_id, host_class_id):
        if self.shares is not None:
            explicit = self.shares.cpu_share(vm_class_id, host_class_id)
            if explicit is not None:
                return explicit
        return cpu_share(self.vm_class(vm_class_id), self.host_class(host_class_id))

    def ram_share_of(self, vm_class_id, host_class_id):
        if self.shares is not None:
            explicit = self.shares.ram_share(vm_class_id, host_class_id)
            if explicit is not None:
                return explicit
        return ram_share(self.vm_class(vm_class_id), self.host_class(host_class_id))


def power_draw(host_class: HostClass, utilization: float) -> float:
    """Power draw in watts of a host running at a CPU utilization in [0, 1].

    Linear between the idle draw at 0 and the full-load draw at 1.
    """
    if not (0.0 <= utilization <= 1.0):
        raise ValueError(f"utilization {utilization} outside [0, 1]")
    return host_class.c_min + utilization * (host_class.c_max - host_class.c_min)


def cpu_share(vm_class: VmClass, host_class: HostClass) -> float:
    """CPU fraction one VM of a class consumes on a host of a class."""
    if host_class.cpu_capacity <= 0:
        raise ValueError(f"host class {host_class.id} has nonpositive CPU capacity")
    share = vm_class.cpu_capacity / host_class.cpu_capacity
    if share > 1.0:
        raise InfeasibleShareError(
            f"VM class {vm_class.id} needs CPU share {share:.4g} > 1 "
            f"on host class {host_class.id}"
        )
    return share


def ram_share(vm_class: VmClass, host_class: HostClass) -> float:
    """RAM fraction one VM of a class consumes on a host of a class."""
    if host_class.ram_gb <= 0:
        raise ValueError(f"host class {host_class.id} has nonpositive RAM size")
    share = vm_class.ram_gb / host_class.ram_gb
    if share > 1.0:
        raise InfeasibleShareError(
            f"VM class {vm_class.id} needs RAM share {share:.4g} > 1 "
            f"on host class {host_class.id}"
        )
    return share


def validate_scenario(scenario: Scenario) -> list:
    """Return a list of human-readable problems; empty means usable.

    Everything downstream (placement, coalition values, formation) is
    entitled to assume a scenario with an empty report.
    """
    issues = []

    hc_ids = [hc.id for hc in scenario.host_classes]
    vc_ids = [vc.id for vc in scenario.vm_classes]
    if len(set(hc_ids)) != len(hc_ids):
        issues.append("duplicate host class ids")
    if len(set(vc_ids)) != len(vc_ids):
        issues.append("duplicate VM class ids")

    for hc in scenario.host_classes:
        if hc.cpu_capacity <= 0:
            issues.append(f"host class {hc.id}: cpu_capacity must be > 0")
        if hc.ram_gb <= 0:
            issues.append(f"host class {hc.id}: ram_gb must be > 0")
        if not (0 < hc.c_min < hc.c_max):
            issues.append(f"host class {hc.id}: requires 0 < c_min < c_max")
        if hc.switch_energy_on < 0 or hc.switch_energy_off < 0:
            issues.append(f"host class {hc.id}: switch energies must be >= 0")
    for vc in scenario.vm_classes:
        if vc.cpu_capacity <= 0:
            issues.append(f"VM class {vc.id}: cpu_capacity must be > 0")
        if vc.ram_gb <= 0:
            issues.append(f"VM class {vc.id}: ram_gb must be > 0")
        if vc.revenue_rate < 0:
            issues.append(f"VM class {vc.id}: revenue_rate must be >= 0")

    if scenario.shares is not None:
        for name, table in (("cpu", scenario.shares.cpu), ("ram", scenario.shares.ram)):
            for (q, g), value in table.items():
                if q not in vc_ids or g not in hc_ids:
                    issues.append(f"share entry ({q},{g}) references unknown class")
                if not (0.0 <= value <= 1.0):
                    issues.append(f"{name} share ({q},{g}) = {value} outside [0, 1]")

    # A VM class that fits no host class can never be placed anywhere.
    for vc in scenario.vm_classes:
        fits_somewhere = False
        for hc in scenario.host_classes:
            try:
                if (scenario.cpu_share_of(vc.id, hc.id) <= 1.0
                        and scenario.ram_share_of(vc.id, hc.id) <= 1.0):
                    fits_somewhere = True
            except (InfeasibleShareError, ValueError, KeyError):
                continue
        if scenario.host_classes and not fits_somewhere:
            issues.append(f"VM class {vc.id} is infeasible on every host class")

    pids = [p.id for p in scenario.providers]
    if sorted(pids) != list(range(1, len(pids) + 1)):
        issues.append(f"provider ids {sorted(pids)} must be 1..n with no gaps")

    host_ids = [h.id for p in scenario.providers for h in p.hosts]
    vm_ids = [v.id for p in scenario.providers for v in p.vms]
    if len(set(host_ids)) != len(host_ids):
        issues.append("duplicate host ids")
    if len(set(vm_ids)) != len(vm_ids):
        issues.append("duplicate VM ids")

    for p in scenario.providers:
        if p.energy_price < 0:
            issues.append(f"provider {p.id}: energy_price must be >= 0")
        for h in p.hosts:
            if h.owner != p.id:
                issues.append(f"host {h.id}: owner {h.owner} != provider {p.id}")
            if h.class_id not in hc_ids:
                issues.append(f"host {h.id}: unknown host class {h.class_id}")
        for v in p.vms:
            if v.owner != p.id:
                issues.append(f"VM {v.id}: owner {v.owner} != provider {p.id}")
            if v.class_id not in vc_ids:
                issues.append(f"VM {v.id}: unknown VM class {v.class_id}")
            if v.current_host is not None and v.current_host not in host_ids:
                issues.append(f"VM {v.id}: current host {v.current_host} does not exist")

    mig = scenario.migration
    if mig.transfer_cost_per_gb < 0 or mig.data_rate_mbit_s < 0 or mig.same_cp_cost < 0:
        issues.append("migration parameters must be nonnegative")
    for q, t in mig.migration_time_s.items():
        if t < 0:
            issues.append(f"migration time for VM class {q} must be >= 0")
    # The pattern solver relies on intra-provider moves never costing
    # more than cross-provider ones.
    for vc in scenario.vm_classes:
        if mig.same_cp_cost > mig.inter_provider_rate(vc.id):
            issues.append(
                f"same-provider migration cost exceeds the cross-provider rate "
                f"for VM class {vc.id}; unsupported"
            )

    if scenario.planning_period_hours <= 0:
        issues.append("planning_period_hours must be > 0")

    return issues


# --------------------------------------------------------------------------
# Scenario files
#
# JSON document with top-level keys: host_classes, vm_classes, shares
# (optional), providers, migration, planning_period_hours. Host and VM
# entries under a provider carry a class and either a count (expanded to
# individuals with sequential ids, hosts and VMs numbered separately
# across the whole file in declaration order) or explicit attributes.
# --------------------------------------------------------------------------

def scenario_from_dict(doc: dict) -> Scenario:
    host_classes = tuple(
        HostClass(
            id=int(e["id"]),
            cpu_capacity=float(e["cpu_capacity"]),
            ram_gb=float(e["ram_gb"]),
            c_min=float(e["c_min"]),
            c_max=float(e["c_max"]),
            switch_energy_on=float(e.get("switch_energy_on", 0.0)),
            switch_energy_off=float(e.get("switch_energy_off", 0.0)),
        )
        for e in doc["host_classes"]
    )
    vm_classes = tuple(
        VmClass(
            id=int(e["id"]),
            cpu_capacity=float(e["cpu_capacity"]),
            ram_gb=float(e["ram_gb"]),
            revenue_rate=float(e["revenue_rate"]),
        )
        for e in doc["vm_classes"]
    )

    shares = None
    if "shares" in doc and doc["shares"] is not None:
        cpu, ram = {}, {}
        for entry in doc["shares"]:
            key = (int(entry["vm_class"]), int(entry["host_class"]))
            if "cpu" in entry:
                cpu[key] = float(entry["cpu"])
            if "ram" in entry:
                ram[key] = float(entry["ram"])
        shares = ShareMatrix(cpu=cpu, ram=ram)

    next_host = 1
    next_vm = 1
    providers = []
    for pe in doc["providers"]:
        pid = int(pe["id"])
        hosts = []
        for he in pe.get("hosts", ()):
            class_id = int(he["class"])
            if "states" in he:
                states = [bool(s) for s in he["states"]]
            else:
                states = [bool(he.get("initially_on", True))] * int(he.get("count", 1))
            for on in states:
                hosts.append(Host(id=next_host, class_id=class_id, owner=pid,
                                  initially_on=on))
                next_host += 1
        vms = []
        for ve in pe.get("vms", ()):
            class_id = int(ve["class"])
            count = int(ve.get("count", 1))
            current = ve.get("current_host")
            current = int(current) if current is not None else None
            for _ in range(count):
                vms.append(Vm(id=next_vm, class_id=class_id, owner=pid,
                              current_host=current))
                next_vm += 1
        providers.append(Provider(id=pid, energy_price=float(pe["energy_price"]),
                                  hosts=tuple(hosts), vms=tuple(vms)))

    migration = MigrationParams()
    if "migration" in doc and doc["migration"] is not None:
        me = doc["migration"]
        migration = MigrationParams(
            transfer_cost_per_gb=float(me.get("transfer_cost_per_gb", 0.0)),
            data_rate_mbit_s=float(me.get("data_rate_mbit_s", 100.0)),
            migration_time_s={int(k): float(v)
                              for k, v in me.get("migration_time_s", {}).items()},
            same_cp_cost=float(me.get("same_cp_cost", 0.0)),
        )

    return Scenario(
        host_classes=host_classes,
        vm_classes=vm_classes,
        providers=tuple(providers),
        shares=shares,
        migration=migration,
        planning_period_hours=float(doc.get("planning_period_hours", 12.0)),
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    doc = {
        "host_classes": [
            {"id": hc.id, "cpu_capacity": hc.cpu_capacity, "ram_gb": hc.ram_gb,
             "c_min": hc.c_min, "c_max": hc.c_max,
             "switch_energy_on": hc.switch_energy_on,
             "switch_energy_off": hc.switch_energy_off}
            for hc in scenario.host_classes
        ],
        "vm_classes": [
            {"id": vc.id, "cpu_capacity": vc.cpu_capacity, "ram_gb": vc.ram_gb,
             "revenue_rate": vc.revenue_rate}
            for vc in scenario.vm_classes
        ],
        "providers": [],
        "migration": {
            "transfer_cost_per_gb": scenario.migration.transfer_cost_per_gb,
            "data_rate_mbit_s": scenario.migration.data_rate_mbit_s,
            "migration_time_s": {str(k): v for k, v
                                 in sorted(scenario.migration.migration_time_s.items())},
            "same_cp_cost": scenario.migration.same_cp_cost,
        },
        "planning_period_hours": scenario.planning_period_hours,
    }
    if scenario.shares is not None:
        entries = {}
        for (q, g), v in scenario.shares.cpu.items():
            entries.setdefault((q, g), {})["cpu"] = v
        for (q, g), v in scenario.shares.ram.items():
            entries.setdefault((q, g), {})["ram"] = v
        doc["shares"] = [
            {"vm_class": q, "host_class": g, **vals}
            for (q, g), vals in sorted(entries.items())
        ]
    for p in scenario.providers:
        pe = {"id": p.id, "energy_price": p.energy_price, "hosts": [], "vms": []}
        for h in p.hosts:
            pe["hosts"].append({"class": h.class_id, "count": 1,
                                "initially_on": h.initially_on})
        for v in p.vms:
            pe["vms"].append({"class": v.class_id, "count": 1,
                              "current_host": v.current_host})
        doc["providers"].append(pe)
    return doc


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def save_scenario(scenario: Scenario, path):
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2, sort_keys=True)
        fh.write("\n")
