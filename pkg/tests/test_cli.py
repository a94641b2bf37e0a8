import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from mci3p3.cli import main

FIXTURE_LOG = Path(__file__).resolve().parents[1] / "src/mci3p3/fixtures/figure3.jsonl"


@pytest.fixture()
def runner():
    return CliRunner()


class TestSimulateCommand:
    def test_small_run_writes_tables(self, runner, tmp_path):
        out = tmp_path / "oc"
        r = runner.invoke(
            main,
            ["simulate", "--scenario", "sc1", "--variant", "two-stage",
             "--reps", "8", "--seed", "3", "--out", str(out), "--workers", "1"],
        )
        assert r.exit_code == 0, r.output
        assert (out / "summary.csv").exists()
        assert (out / "selection.csv").exists()
        assert (out / "allocation.csv").exists()
        rows = dict(
            line.split(",", 1)
            for line in (out / "summary.csv").read_text().strip().splitlines()[1:]
        )
        assert rows["scenario"] == "sc1"
        assert rows["reps"] == "8"

    def test_outputs_byte_identical_across_runs_and_workers(self, runner, tmp_path):
        outs = []
        for k, workers in enumerate(("1", "2", "1")):
            out = tmp_path / f"oc{k}"
            r = runner.invoke(
                main,
                ["simulate", "--scenario", "sc2", "--variant", "two-stage",
                 "--reps", "10", "--seed", "11", "--out", str(out), "--workers", workers],
            )
            assert r.exit_code == 0
            outs.append(
                tuple((out / f).read_bytes() for f in ("summary.csv", "selection.csv", "allocation.csv"))
            )
        assert outs[0] == outs[1] == outs[2]

    def test_zero_reps_usage_error(self, runner, tmp_path):
        r = runner.invoke(
            main,
            ["simulate", "--scenario", "sc1", "--reps", "0", "--out", str(tmp_path / "x")],
        )
        assert r.exit_code != 0

    def test_unknown_scenario_fails(self, runner, tmp_path):
        r = runner.invoke(
            main,
            ["simulate", "--scenario", "sc99", "--reps", "1", "--out", str(tmp_path / "x")],
        )
        assert r.exit_code != 0


class TestReplayCommand:
    def test_fixture_replays_clean(self, runner):
        r = runner.invoke(main, ["replay", "--log", str(FIXTURE_LOG)])
        assert r.exit_code == 0, r.output
        assert "mtdc=[2, 3]" in r.output

    def test_tampered_log_diverges(self, runner, tmp_path):
        lines = FIXTURE_LOG.read_text().strip().splitlines()
        tampered = []
        for line in lines:
            event = json.loads(line)
            if event["event"] == "outcomes_observed" and event["seq"] == 2:
                event["outcomes"][1]["y"] = 0  # flip (2,4)'s DLTs
            tampered.append(json.dumps(event, sort_keys=True))
        bad = tmp_path / "tampered.jsonl"
        bad.write_text("\n".join(tampered) + "\n")
        r = runner.invoke(main, ["replay", "--log", str(bad)])
        assert r.exit_code == 1

    def test_empty_log_usage_error(self, runner, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        r = runner.invoke(main, ["replay", "--log", str(empty)])
        assert r.exit_code == 2


class TestDecideCommand:
    def test_post_cohort4_state_recommends_2_3(self, runner, tmp_path):
        # Build the walkthrough state after cohorts 1-4 and ask for the next DC.
        from mci3p3.core import DoseGrid, EquivalenceInterval, dc
        from mci3p3.trial import TrialConfig, TrialEngine

        engine = TrialEngine(
            TrialConfig(
                grid=DoseGrid.from_levels(4, 5),
                ei=EquivalenceInterval(0.3, 0.05, 0.05),
                max_total_n=51,
                stage1_enabled=False,
                starting_dcs=(dc(3, 1), dc(1, 4)),
                seed=1,
            )
        )
        engine.observe([(dc(1, 4), 3, 0), (dc(3, 1), 3, 0)])
        engine.observe([(dc(1, 5), 3, 0), (dc(2, 4), 3, 2)])
        state = tmp_path / "state.json"
        state.write_text(json.dumps(engine.snapshot()))
        r = runner.invoke(main, ["decide", "--state", str(state)])
        assert r.exit_code == 0, r.output
        body = json.loads(r.output)
        assert body["recommendation"] == [{"dc": [2, 3], "size": 3}]
        assert body["stage"] == "II"

    def test_event_log_accepted_as_state(self, runner):
        r = runner.invoke(main, ["decide", "--state", str(FIXTURE_LOG)])
        assert r.exit_code == 0
        body = json.loads(r.output)
        assert body["stage"] == "completed"
        assert body["recommendation"] is None

    def test_stopped_state_prints_reason(self, runner, tmp_path):
        from mci3p3.core import DoseGrid, EquivalenceInterval, dc
        from mci3p3.trial import TrialConfig, TrialEngine

        engine = TrialEngine(
            TrialConfig(
                grid=DoseGrid.from_levels(4, 5),
                ei=EquivalenceInterval(0.3, 0.05, 0.05),
                stage1_enabled=False,
                starting_dcs=(dc(1, 1),),
                seed=0,
            )
        )
        engine.observe([(dc(1, 1), 3, 3)])
        state = tmp_path / "stopped.json"
        state.write_text(json.dumps(engine.snapshot()))
        r = runner.invoke(main, ["decide", "--state", str(state)])
        assert r.exit_code == 0
        body = json.loads(r.output)
        assert body["stop_reason"] == "SR1"
        assert body["recommendation"] is None

    def test_invalid_state_file_errors(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"not": "a state"}')
        r = runner.invoke(main, ["decide", "--state", str(bad)])
        assert r.exit_code == 2
