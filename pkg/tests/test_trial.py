import numpy as np
import pytest

from mci3p3.core import DoseGrid, EquivalenceInterval, dc
from mci3p3.models import SamplerConfig
from mci3p3.trial import (
    COMPLETED,
    STAGE_I,
    STAGE_II,
    STAGE_III,
    STOPPED,
    OutcomeMismatch,
    StateError,
    TrialConfig,
    TrialEngine,
    engine_from_snapshot,
)

GRID = DoseGrid.from_levels(4, 5)
EI = EquivalenceInterval(0.3, 0.05, 0.05)


def cfg(**kw):
    base = dict(grid=GRID, ei=EI, seed=3)
    base.update(kw)
    return TrialConfig(**base)


def walkthrough_config():
    return cfg(
        max_total_n=51,
        stage1_enabled=False,
        starting_dcs=(dc(3, 1), dc(1, 4)),
        seed=1,
    )


WALKTHROUGH_STEPS = [
    ([(1, 4), (3, 1)], {(1, 4): 0, (3, 1): 0}),
    ([(1, 5), (2, 4)], {(1, 5): 0, (2, 4): 2}),
    ([(2, 3)], {(2, 3): 2}),
    ([(2, 2)], {(2, 2): 0}),
    ([(2, 3), (3, 2)], {(2, 3): 1, (3, 2): 0}),
    ([(4, 2)], {(4, 2): 1}),
    ([(4, 2)], {(4, 2): 1}),
    ([(4, 2)], {(4, 2): 0}),
    ([(2, 3), (4, 2)], {(2, 3): 0, (4, 2): 3}),
    ([(2, 3), (4, 1)], {(2, 3): 1, (4, 1): 1}),
    ([(2, 3), (4, 1)], {(2, 3): 1, (4, 1): 1}),
]


def run_walkthrough(engine=None):
    engine = engine or TrialEngine(walkthrough_config())
    for expected, ys in WALKTHROUGH_STEPS:
        pending = engine.next_assignment()
        assert [tuple(d) for d, _ in pending] == expected
        engine.observe([(d, n, ys[tuple(d)]) for d, n in pending])
    return engine


class TestWalkthrough:
    def test_full_trace_and_mtdc(self):
        engine = run_walkthrough()
        res = engine.result()
        assert res.mtdc == dc(2, 3)
        assert res.enrolled == 51
        assert not res.stopped_early
        assert res.data.at(dc(2, 3)) == (15, 5)

    def test_admissible_fallback_event_at_cohort_11(self):
        engine = run_walkthrough()
        adm = [e for e in engine.events if e["event"] == "admissible_used"]
        assert adm == [
            {
                "event": "admissible_used",
                "seq": 8,
                "admissible": [[1, 5], [2, 3], [4, 2]],
            }
        ]

    def test_tie_rng_never_consulted(self, monkeypatch):
        # Every walkthrough selection resolves through the dosage bump, so a
        # poisoned tie-breaker must never run.
        import mci3p3.stage2 as s2

        original = s2.select_next

        def strict(candidates, data, grid, ei, eps, rng, max_count=2):
            class Boom:
                def choice(self, *a, **k):
                    raise AssertionError("tie rng consulted")

            return original(candidates, data, grid, ei, eps, Boom(), max_count)

        monkeypatch.setattr("mci3p3.trial.s2.select_next", strict)
        run_walkthrough()


class TestStage1Flow:
    def test_fresh_trial_assigns_both_margins(self):
        engine = TrialEngine(cfg())
        assert engine.next_assignment() == [(dc(0, 1), 3), (dc(1, 0), 3)]
        assert engine.stage == STAGE_I

    def test_ladders_feed_starting_dcs(self):
        engine = TrialEngine(cfg())
        # Drug A: E,E,E then S at level 4 -> peak 3. Drug B: E x4, S at 5 -> peak 4.
        forced = {
            (1, 0): 0, (2, 0): 0, (3, 0): 0, (4, 0): 1,
            (0, 1): 0, (0, 2): 0, (0, 3): 0, (0, 4): 0, (0, 5): 1,
        }
        while engine.stage == STAGE_I:
            pending = engine.next_assignment()
            engine.observe([(d, n, forced[tuple(d)]) for d, n in pending])
        assert engine.stage == STAGE_II
        assert engine.next_assignment() == [(dc(1, 4), 3), (dc(3, 1), 3)]
        trans = [e for e in engine.events if e["event"] == "stage_transition"]
        assert trans[0]["starting"] == [[1, 4], [3, 1]]

    def test_immediate_stay_starts_at_lowest_combo(self):
        engine = TrialEngine(cfg())
        pending = engine.next_assignment()
        engine.observe([(d, n, 1) for d, n in pending])  # S on both ladders
        assert engine.stage == STAGE_II
        assert engine.next_assignment() == [(dc(1, 1), 3)]

    def test_one_ladder_finishing_first_continues_alone(self):
        engine = TrialEngine(cfg())
        engine.observe([(dc(0, 1), 3, 1), (dc(1, 0), 3, 0)])  # B stops, A climbs
        assert engine.next_assignment() == [(dc(2, 0), 3)]


class TestSafetyStops:
    def test_full_dlt_at_lowest_combo_stops_with_no_mtdc(self):
        engine = TrialEngine(
            cfg(stage1_enabled=False, starting_dcs=(dc(1, 1),), seed=5)
        )
        engine.observe([(dc(1, 1), 3, 3)])
        assert engine.stage == STOPPED
        res = engine.result()
        assert res.stopped_early and res.mtdc is None and res.stop_reason == "SR1"

    def test_full_dlt_on_first_ladder_dose_stops(self):
        engine = TrialEngine(cfg())
        engine.observe([(dc(0, 1), 3, 0), (dc(1, 0), 3, 3)])
        assert engine.stage == STOPPED
        assert engine.result().stop_reason == "SR1"

    def test_eliminated_dcs_never_reassigned(self):
        engine = TrialEngine(
            cfg(stage1_enabled=False, starting_dcs=(dc(2, 2),), max_total_n=96, seed=5)
        )
        engine.observe([(dc(2, 2), 3, 3)])  # DU at (2,2): it and above leave
        eliminated = {dc(*e) for ev in engine.events if ev["event"] == "sr1_eliminated" for e in ev["dcs"]}
        assert dc(2, 2) in eliminated
        while not engine.terminal:
            pending = engine.next_assignment()
            for d, _ in pending:
                assert d not in eliminated
            engine.observe([(d, n, 0) for d, n in pending])


class TestBudget:
    def test_enrollment_never_exceeds_cap(self):
        rng = np.random.default_rng(0)
        engine = TrialEngine(cfg(max_total_n=24, seed=11))
        while not engine.terminal:
            pending = engine.next_assignment()
            engine.observe([(d, n, int(rng.binomial(n, 0.1))) for d, n in pending])
        assert engine.enrolled <= 24
        assert engine.stage == COMPLETED

    def test_last_slot_enrolls_single_top_utility_cohort(self):
        # Budget 9 with two starting DCs: two cohorts, then only one fits.
        engine = TrialEngine(
            cfg(
                stage1_enabled=False,
                starting_dcs=(dc(3, 1), dc(1, 4)),
                max_total_n=9,
                seed=1,
            )
        )
        engine.observe([(dc(1, 4), 3, 0), (dc(3, 1), 3, 0)])
        pending = engine.next_assignment()
        assert len(pending) == 1
        engine.observe([(pending[0][0], 3, 0)])
        assert engine.stage == COMPLETED and engine.enrolled == 9

    def test_stage_order_is_monotone(self):
        rng = np.random.default_rng(4)
        engine = TrialEngine(cfg(seed=21, max_total_n=48))
        order = {STAGE_I: 0, STAGE_II: 1, STAGE_III: 2, STOPPED: 3, COMPLETED: 3}
        seen = [order[engine.stage]]
        while not engine.terminal:
            pending = engine.next_assignment()
            engine.observe([(d, n, int(rng.binomial(n, 0.15))) for d, n in pending])
            seen.append(order[engine.stage])
        assert seen == sorted(seen)


class TestThreeStage:
    def test_two_stage_never_reaches_stage_iii(self):
        rng = np.random.default_rng(7)
        engine = TrialEngine(cfg(seed=13, max_total_n=48))
        while not engine.terminal:
            pending = engine.next_assignment()
            engine.observe([(d, n, int(rng.binomial(n, 0.3))) for d, n in pending])
        assert all(e.get("to") != STAGE_III for e in engine.events if e["event"] == "stage_transition")

    def test_monitor_crossing_enters_stage_iii(self):
        # A hair-trigger monitor threshold flips to the model-based stage on
        # the first combination step.
        engine = TrialEngine(
            cfg(
                design_variant="three-stage",
                monitor_eta=0.001,
                stage1_enabled=False,
                starting_dcs=(dc(1, 1),),
                sampler=SamplerConfig(iters=600, burnin=300, thin=2),
                max_total_n=18,
                seed=2,
            )
        )
        engine.observe([(dc(1, 1), 3, 1)])
        assert engine.stage == STAGE_III
        pending = engine.next_assignment()
        assert len(pending) == 1
        rng = np.random.default_rng(1)
        while not engine.terminal:
            pending = engine.next_assignment()
            engine.observe([(d, n, int(rng.binomial(n, 0.3))) for d, n in pending])
        assert engine.enrolled <= 18


class TestValidation:
    def test_mismatched_outcomes_rejected(self):
        engine = TrialEngine(cfg())
        with pytest.raises(OutcomeMismatch):
            engine.observe([(dc(1, 0), 3, 0)])  # missing (0,1)
        with pytest.raises(OutcomeMismatch):
            engine.observe([(dc(1, 0), 2, 0), (dc(0, 1), 3, 0)])  # wrong size

    def test_observe_after_terminal_rejected(self):
        engine = TrialEngine(
            cfg(stage1_enabled=False, starting_dcs=(dc(1, 1),), max_total_n=3)
        )
        engine.observe([(dc(1, 1), 3, 0)])
        assert engine.terminal
        with pytest.raises(StateError):
            engine.observe([(dc(1, 1), 3, 0)])

    def test_config_invariants(self):
        with pytest.raises(ValueError):
            cfg(stage1_enabled=False)  # no starting DCs
        with pytest.raises(ValueError):
            cfg(max_total_n=2)
        with pytest.raises(ValueError):
            cfg(stage1_enabled=False, starting_dcs=(dc(0, 1),))


class TestReplayAndSnapshots:
    def test_event_log_replays_to_identical_stream(self):
        from mci3p3 import events as ev

        engine = run_walkthrough()
        replayed = ev.replay(engine.events)
        assert ev.first_divergence(engine.events, replayed.events) is None

    def test_snapshot_round_trip_preserves_recommendation(self):
        engine = TrialEngine(walkthrough_config())
        for expected, ys in WALKTHROUGH_STEPS[:4]:
            pending = engine.next_assignment()
            engine.observe([(d, n, ys[tuple(d)]) for d, n in pending])
        snap = engine.snapshot()
        clone = engine_from_snapshot(snap)
        assert clone.describe_pending() == engine.describe_pending()
        assert clone.snapshot() == snap

    def test_seeded_trace_is_deterministic(self):
        e1 = run_walkthrough()
        e2 = run_walkthrough()
        assert e1.events == e2.events


class TestMultipleMtdc:
    def test_all_in_window_combos_selected(self):
        from dataclasses import replace

        engine = TrialEngine(replace(walkthrough_config(), multiple_mtdc=True))
        for expected, ys in WALKTHROUGH_STEPS:
            pending = engine.next_assignment()
            engine.observe([(d, n, ys[tuple(d)]) for d, n in pending])
        res = engine.result()
        assert isinstance(res.mtdc, list)
        assert dc(2, 3) in res.mtdc
        for d in res.mtdc:
            assert EI.contains(res.estimates[d.i - 1, d.j - 1])
