import io
from dataclasses import replace

import pytest

from cloudfed import fixtures
from cloudfed.domain import validate_scenario
from cloudfed.workbench import (
    GeneratorConfig, generate_scenario, evaluate_run, run_batch, RunRecord,
    reproduce,
)

# single-host inventories: cheap to build, only good for sampling checks
FAST_CONFIG = GeneratorConfig(seed=42, host_inventories=((1, 0, 0),) * 4)
# small fleets that still fit their own worst-case workloads
SMALL_RUN_CONFIG = GeneratorConfig(seed=42, host_inventories=((2, 2, 2),) * 4,
                                   vm_count_range=(0, 3))


class TestGenerator:
    def test_deterministic_in_seed_and_index(self):
        cfg = GeneratorConfig(seed=3)
        assert generate_scenario(cfg, 5) == generate_scenario(cfg, 5)
        assert generate_scenario(cfg, 5) != generate_scenario(cfg, 6)
        assert generate_scenario(cfg, 5) != generate_scenario(
            GeneratorConfig(seed=4), 5)

    def test_generated_scenarios_validate(self):
        cfg = GeneratorConfig(seed=1)
        for idx in range(5):
            assert validate_scenario(generate_scenario(cfg, idx)) == []

    def test_vm_counts_match_the_uniform_range(self):
        # law of large numbers on the integer range [0, 20]; tiny host
        # inventories keep the draw order identical and the build cheap
        total = 0
        draws = 0
        for idx in range(2500):
            s = generate_scenario(FAST_CONFIG, idx)
            for p in s.providers:
                total += sum(1 for v in p.vms if v.class_id == 1)
                draws += 1
        mean = total / draws
        assert mean == pytest.approx(10.0, abs=0.3)

    def test_power_states_roughly_balanced(self):
        cfg = GeneratorConfig(seed=2)
        s = generate_scenario(cfg, 0)
        states = [h.initially_on for h in s.all_hosts()]
        on_fraction = sum(states) / len(states)
        assert 0.35 < on_fraction < 0.65

    def test_vms_start_on_their_owners_hosts(self):
        s = generate_scenario(GeneratorConfig(seed=5), 1)
        host_owner = {h.id: h.owner for h in s.all_hosts()}
        for p in s.providers:
            for v in p.vms:
                assert host_owner[v.current_host] == p.id

    def test_switch_energies_resampled_per_run(self):
        cfg = GeneratorConfig(seed=6)
        a = generate_scenario(cfg, 0).host_classes[0].switch_energy_on
        b = generate_scenario(cfg, 1).host_classes[0].switch_energy_on
        assert a != b
        assert a >= 0 and b >= 0


class TestEvaluateRun:
    def test_single_class_fleets_merge_fully(self, scenario1):
        rec = evaluate_run(scenario1)
        assert rec.partition == "{1,2,3}"
        assert rec.energy_fed_kw == pytest.approx(7.12, abs=0.01)
        assert rec.energy_nofed_kw == pytest.approx(9.89, abs=0.01)
        reduction = 1 - rec.energy_fed_kw / rec.energy_nofed_kw
        assert reduction == pytest.approx(0.28, abs=0.005)

    def test_empty_workloads(self):
        providers = tuple(
            replace(p, vms=()) for p in fixtures.scenario1().providers)
        s = replace(fixtures.scenario1(), providers=providers)
        rec = evaluate_run(s)
        assert rec.partition == "{1}{2}{3}"
        # powering down the idle fleets costs only the one-shot switch
        # energies, amortized: nanocurrency noise around zero
        assert rec.profit_nofed == pytest.approx(0.0, abs=1e-6)
        assert rec.profit_fed == pytest.approx(0.0, abs=1e-6)
        assert rec.energy_fed_kw == 0.0
        assert rec.n_shifts == 0

    def test_payoffs_never_fall_below_standalone(self):
        cfg = GeneratorConfig(seed=11)
        rec = evaluate_run(generate_scenario(cfg, 0))
        for payoff, solo in zip(rec.payoffs, rec.standalone):
            assert payoff >= solo - 1e-9

    def test_baseline_equals_singleton_values(self, scenario2):
        from cloudfed.coalitional import CharacteristicTable
        rec = evaluate_run(scenario2)
        table = CharacteristicTable(scenario2)
        assert rec.profit_nofed == pytest.approx(
            sum(table.value((i,)) for i in (1, 2, 3)), abs=1e-9)


class TestBatch:
    def test_single_run_summary_degenerate(self):
        summary, records = run_batch(SMALL_RUN_CONFIG, runs=1)
        assert summary.run_count == 1
        e = summary.energy_reduction_pct
        assert e["min"] == e["max"] == e["mean"]

    def test_csv_round_trip_and_determinism(self):
        buf1, buf2 = io.StringIO(), io.StringIO()
        run_batch(SMALL_RUN_CONFIG, runs=3, out=buf1)
        run_batch(SMALL_RUN_CONFIG, runs=3, out=buf2)
        assert buf1.getvalue() == buf2.getvalue()
        lines = buf1.getvalue().splitlines()
        assert lines[0].startswith("run_index,seed,n_shifts,partition,")
        for line in lines[1:]:
            parsed = RunRecord.from_csv_row(line)
            prefix = line.split(",")
            rebuilt = parsed.csv_row()
            assert rebuilt == line

    def test_worker_pool_matches_serial(self):
        buf1, buf2 = io.StringIO(), io.StringIO()
        run_batch(SMALL_RUN_CONFIG, runs=4, workers=1, out=buf1)
        run_batch(SMALL_RUN_CONFIG, runs=4, workers=2, out=buf2)
        assert buf1.getvalue() == buf2.getvalue()

    def test_runs_must_be_positive(self):
        with pytest.raises(ValueError):
            run_batch(SMALL_RUN_CONFIG, runs=0)


class TestReproduce:
    def test_single_class_fleet_tables(self):
        assert reproduce("scenario1").passed

    def test_mid_fleet_tables_and_core(self):
        assert reproduce("scenario2").passed

    def test_counterexample_tables(self):
        assert reproduce("appendix").passed

    def test_mixed_fleet_known_deviations(self):
        # the published mixed-fleet study is only partly recoverable:
        # our exact optima strictly beat several printed coalition
        # values, which also flips one razor-thin stability verdict;
        # the reproduction report records those misses honestly
        report = reproduce("casestudy")
        assert not report.passed
        by_name = {c.name: c for c in report.checks}
        for S in ("(1,)", "(2,)", "(3,)", "(4,)", "(1, 2)", "(1, 4)"):
            assert by_name[f"value.{S}"].ok
        assert by_name["formation.first_mover"].ok
        assert by_name["formation.final_in_stable_pair"].ok
        assert by_name["improvement.grand_pct"].ok
        assert not by_name["value.(1, 2, 3, 4)"].ok
        assert not by_name["stable.count"].ok

    def test_unknown_target(self):
        with pytest.raises(KeyError):
            reproduce("nonesuch")


def test_mixed_fleet_run_merges_everyone(case_study):
    rec = evaluate_run(case_study)
    assert rec.partition == "{1,2,3,4}"
    # frozen from the exact optima of this fixture; the published study
    # reported 14.01 over the same baseline, see the reproduction report
    assert rec.profit_fed == pytest.approx(13.908, abs=0.001)
    assert rec.profit_nofed == pytest.approx(11.950, abs=0.001)
    for payoff, solo in zip(rec.payoffs, rec.standalone):
        assert payoff >= solo - 1e-9
