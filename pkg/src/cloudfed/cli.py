"""Command-line front end.

Subcommands: solve, value, form, stable, core, batch, reproduce.
Exit codes: 0 success, 1 golden mismatch, 2 input error, 3 solver limit.
"""

from __future__ import annotations

import argparse
import json
import sys

from .domain import load_scenario, validate_scenario
from .placement import (
    build_problem, solve_naive, solve_symmetric, allocation_by_owner,
    PlacementInfeasibleError,
)
from .coalitional import (
    CharacteristicTable, shapley_payoffs, InfeasibleCoalitionError,
)
from .hedonic import (
    RoundRobin, RandomOrder, FixedOrder, run_formation,
    is_nash_stable, is_individually_stable, enumerate_partitions,
    format_partition, parse_partition_spec,
)
from .core_analysis import CoreProblem, check_core
from .workbench import GeneratorConfig, run_batch, reproduce, REPRODUCE_TARGETS

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INPUT = 2
EXIT_SOLVER_LIMIT = 3


class InputError(Exception):
    pass


def _scenario(path):
    try:
        scenario = load_scenario(path)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot load scenario {path}: {exc}")
    issues = validate_scenario(scenario)
    if issues:
        raise InputError("invalid scenario:\n  " + "\n  ".join(issues))
    return scenario


def _coalition(arg):
    try:
        return tuple(sorted({int(x) for x in arg.split(",") if x}))
    except ValueError:
        raise InputError(f"bad coalition spec {arg!r}; expected e.g. 1,2,3")


def cmd_solve(args):
    scenario = _scenario(args.scenario)
    coalition = _coalition(args.coalition)
    try:
        problem = build_problem(scenario, coalition)
        solver = solve_naive if args.solver == "naive" else solve_symmetric
        report = solver(problem, args.time_limit)
    except (PlacementInfeasibleError, KeyError, ValueError) as exc:
        raise InputError(str(exc))
    alloc = report.allocation
    if args.json:
        hosts = {h.id: h for h in problem.hosts}
        doc = {
            "coalition": list(coalition),
            "status": report.proof_of_optimality,
            "objective": alloc.energy_cost_rate,
            "lower_bound": report.lower_bound,
            "power_watts": alloc.power_watts,
            "breakdown": alloc.breakdown,
            "nodes_explored": report.nodes_explored,
            "wall_time": report.wall_time,
            "hosts": [
                {"id": h.id, "owner": h.owner, "class": h.class_id,
                 "powered": h.id in alloc.powered_on,
                 "utilization": alloc.host_utilization.get(h.id, 0.0),
                 "vms": sorted(v for v, hid in alloc.assignment.items()
                               if hid == h.id)}
                for h in hosts.values()
            ],
        }
        print(json.dumps(doc, indent=2))
    else:
        print(f"coalition {','.join(map(str, coalition))}: "
              f"{alloc.energy_cost_rate:.6f} per hour "
              f"({report.proof_of_optimality}, {alloc.power_watts / 1000:.2f} kW, "
              f"{len(alloc.powered_on)} hosts on)")
        for name, value in alloc.breakdown.items():
            print(f"  {name}: {value:.6f}")
        for pid, own in allocation_by_owner(problem, alloc).items():
            print(f"  provider {pid}: {own['hosts_on']} hosts on, "
                  f"{own['power_w'] / 1000:.2f} kW, {own['cost_rate']:.4f}/h")
        for h in problem.hosts:
            if h.id in alloc.powered_on:
                vms = sorted(v for v, hid in alloc.assignment.items() if hid == h.id)
                print(f"  host {h.id} (class {h.class_id}, provider {h.owner}): "
                      f"util {alloc.host_utilization[h.id]:.3f} vms {vms}")
    return EXIT_SOLVER_LIMIT if report.proof_of_optimality == "time_limited" \
        else EXIT_OK


def cmd_value(args):
    scenario = _scenario(args.scenario)
    table = CharacteristicTable(scenario, time_limit=args.time_limit)
    if args.all:
        coalitions = []
        pids = scenario.provider_ids()
        import itertools
        for r in range(1, len(pids) + 1):
            coalitions.extend(itertools.combinations(pids, r))
    elif args.coalition:
        coalitions = [_coalition(args.coalition)]
    else:
        raise InputError("need --coalition or --all")
    rows = []
    for S in coalitions:
        try:
            v = table.value(S)
            pv = shapley_payoffs(table, S)
            rows.append((S, v, [pv.payoffs[p] for p in S]))
        except InfeasibleCoalitionError:
            rows.append((S, None, None))
    for S, v, phis in rows:
        label = "{" + ",".join(map(str, S)) + "}"
        if v is None:
            print(f"{label}\tinfeasible")
        else:
            print(f"{label}\t{v:.4f}\t{{{', '.join(f'{x:.4f}' for x in phis)}}}")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("coalition,value,payoffs\n")
            for S, v, phis in rows:
                spec = "{" + ",".join(map(str, S)) + "}"
                if v is None:
                    fh.write(f"{spec},infeasible,\n")
                else:
                    fh.write(f"{spec},{v!r},{'|'.join(repr(x) for x in phis)}\n")
    return EXIT_OK


def _policy(args, scenario):
    if args.order == "round-robin":
        return RoundRobin()
    if args.order == "random":
        return RandomOrder(seed=args.seed)
    try:
        sequence = tuple(int(x) for x in args.order.split(","))
    except ValueError:
        raise InputError(f"bad --order {args.order!r}")
    return FixedOrder(sequence)


def cmd_form(args):
    scenario = _scenario(args.scenario)
    table = CharacteristicTable(scenario)
    initial = None
    if args.initial and args.initial != "singletons":
        initial = parse_partition_spec(args.initial)
    trace = run_formation(table, initial=initial,
                          policy=_policy(args, scenario))
    for step in trace.steps:
        print(f"provider {step.provider}: "
              f"{{{','.join(map(str, step.source))}}} -> "
              f"{{{','.join(map(str, step.target))}}}  "
              f"now {format_partition(step.partition)}")
    stable, witness = is_nash_stable(trace.final, table)
    print(f"final {format_partition(trace.final)} after {len(trace.steps)} shifts, "
          f"{trace.activations} activations; stable={stable}")
    if args.trace:
        doc = {
            "final": format_partition(trace.final),
            "activations": trace.activations,
            "steps": [
                {"provider": s.provider, "from": list(s.source),
                 "to": list(s.target),
                 "partition": format_partition(s.partition)}
                for s in trace.steps
            ],
        }
        with open(args.trace, "w") as fh:
            json.dump(doc, fh, indent=2)
    return EXIT_OK


def cmd_stable(args):
    scenario = _scenario(args.scenario)
    table = CharacteristicTable(scenario)
    if args.enumerate:
        pids = scenario.provider_ids()
        for part in enumerate_partitions(pids):
            values = []
            payoffs = []
            feasible = True
            for block in part.blocks:
                try:
                    values.append(table.value(block))
                    pv = shapley_payoffs(table, block)
                    payoffs.append([pv.payoffs[p] for p in block])
                except InfeasibleCoalitionError:
                    feasible = False
            if not feasible:
                print(f"{format_partition(part)}\tinfeasible")
                continue
            nash, _ = is_nash_stable(part, table)
            indiv, _ = is_individually_stable(part, table)
            vals = " ".join(f"{v:.4f}" for v in values)
            phis = " ".join("{" + ",".join(f"{x:.2f}" for x in blk) + "}"
                            for blk in payoffs)
            flags = ("nash " if nash else "") + ("indiv" if indiv else "")
            print(f"{format_partition(part)}\t[{vals}]\ttotal {sum(values):.4f}"
                  f"\t{phis}\t{flags}")
        return EXIT_OK
    if not args.partition:
        raise InputError("need --partition or --enumerate")
    part = parse_partition_spec(args.partition)
    if part.members() != tuple(sorted(scenario.provider_ids())):
        raise InputError("partition must cover every provider exactly once")
    nash, witness = is_nash_stable(part, table)
    indiv, iwitness = is_individually_stable(part, table)
    print(f"{format_partition(part)}: nash_stable={nash} "
          f"individually_stable={indiv}")
    if witness:
        print(f"  deviation: provider {witness[0]} -> "
              f"{{{','.join(map(str, witness[1])) or 'solo'}}}")
    return EXIT_OK


def cmd_core(args):
    if args.values:
        try:
            with open(args.values) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read values file: {exc}")
        values = {tuple(int(x) for x in k.split(",")): v
                  for k, v in doc["values"].items()}
        players = sorted({p for S in values for p in S})
        problem = CoreProblem.from_values(players, values)
    elif args.scenario:
        scenario = _scenario(args.scenario)
        table = CharacteristicTable(scenario)
        problem = CoreProblem.from_table(table)
    else:
        raise InputError("need --scenario or --values")
    result = check_core(problem)
    if result.status == "non_empty":
        print("core: non-empty")
        for p, x in sorted(result.imputation.items()):
            print(f"  provider {p}: {float(x):.6f}")
    else:
        print("core: empty")
        print(f"  balanced weights reach {float(result.certificate_value):.6f} "
              f"> grand value {float(result.grand_value):.6f}")
        for S, w in sorted(result.certificate.items()):
            print(f"  weight {w} on {{{','.join(map(str, S))}}}")
    return EXIT_OK


def cmd_batch(args):
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config: {exc}")
        fields = {k: v for k, v in doc.items()}
        if "host_inventories" in fields:
            fields["host_inventories"] = tuple(
                tuple(row) for row in fields["host_inventories"])
        for name in ("vm_count_range", "migration_time_means_s",
                     "migration_time_sds_s"):
            if name in fields:
                fields[name] = tuple(fields[name])
        try:
            config = GeneratorConfig(**fields)
        except TypeError as exc:
            raise InputError(f"bad generator config: {exc}")
    else:
        config = GeneratorConfig()
    if args.seed is not None:
        from dataclasses import replace
        config = replace(config, seed=args.seed)
    summary, _records = run_batch(config, runs=args.runs,
                                  workers=args.workers, out=args.out)
    print(f"runs completed: {summary.run_count}, failures: {len(summary.failures)}")
    for idx, err in summary.failures:
        print(f"  run {idx} failed: {err}")
    e = summary.energy_reduction_pct
    p = summary.profit_increase_pct
    print(f"energy reduction %: min {e['min']:.1f} mean {e['mean']:.1f} "
          f"max {e['max']:.1f}")
    print(f"profit increase %: min {p['min']:.1f} mean {p['mean']:.1f} "
          f"max {p['max']:.1f}")
    for pid, gain in summary.per_provider_profit_increase_pct.items():
        print(f"  provider {pid}: mean profit increase {gain:.1f}%")
    return EXIT_OK


def cmd_reproduce(args):
    try:
        report = reproduce(args.target)
    except KeyError as exc:
        raise InputError(str(exc))
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_MISMATCH


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cloudfed",
        description="Energy-aware federation formation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimal placement for one coalition")
    p.add_argument("--scenario", required=True)
    p.add_argument("--coalition", required=True, help="e.g. 1,2,3")
    p.add_argument("--solver", choices=("naive", "symmetric"),
                   default="symmetric")
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("value", help="coalition values and payoff division")
    p.add_argument("--scenario", required=True)
    p.add_argument("--coalition")
    p.add_argument("--all", action="store_true")
    p.add_argument("--csv", help="also write a CSV table here")
    p.add_argument("--time-limit", type=float, default=None)
    p.set_defaults(func=cmd_value)

    p = sub.add_parser("form", help="run coalition formation")
    p.add_argument("--scenario", required=True)
    p.add_argument("--order", default="round-robin",
                   help="round-robin | random | comma-separated provider cycle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--initial", default="singletons",
                   help="singletons or a partition spec like {1,3}{2,4}")
    p.add_argument("--trace", help="write the shift sequence as JSON here")
    p.set_defaults(func=cmd_form)

    p = sub.add_parser("stable", help="stability checks")
    p.add_argument("--scenario", required=True)
    p.add_argument("--partition", help="partition spec like {1,3}{2,4}")
    p.add_argument("--enumerate", action="store_true",
                   help="tabulate every partition with values and flags")
    p.set_defaults(func=cmd_stable)

    p = sub.add_parser("core", help="decide core emptiness")
    p.add_argument("--scenario")
    p.add_argument("--values", help="JSON characteristic function file")
    p.set_defaults(func=cmd_core)

    p = sub.add_parser("batch", help="randomized experiment batch")
    p.add_argument("--config", help="JSON generator configuration")
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("reproduce", help="golden-value reproduction suites")
    p.add_argument("target", choices=sorted(REPRODUCE_TARGETS))
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError) as exc:
        # bad partition specs, unknown providers and the like surface
        # here from the library layers
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
