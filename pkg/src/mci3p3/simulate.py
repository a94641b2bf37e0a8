"""Monte-Carlo harness: replicated trials and operating characteristics.

Replications are embarrassingly parallel.  Each replication's seed derives
from ``(base_seed, replication_index)`` alone, and aggregation folds results
in replication order, so outputs are bitwise independent of the worker
count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import DoseCombo
from .scenarios import Scenario
from .trial import TrialEngine, TrialConfig, TrialResult

#: Substream tag for binomial outcome generation within one trial.
_STREAM_OUTCOMES = 1


def trial_seed(base_seed: int, rep: int) -> int:
    """Documented splitting rule: one independent seed per replication."""
    ss = np.random.SeedSequence(entropy=(int(base_seed), int(rep)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class TrialOutcome:
    """The slice of a TrialResult the OC aggregation needs."""

    selected: tuple[DoseCombo, ...]  # empty when nothing selected
    stopped_early: bool
    n_matrix: np.ndarray
    enrolled: int


def _outcome_of(result: TrialResult) -> TrialOutcome:
    if result.mtdc is None:
        selected: tuple[DoseCombo, ...] = ()
    elif isinstance(result.mtdc, list):
        selected = tuple(result.mtdc)
    else:
        selected = (result.mtdc,)
    return TrialOutcome(
        selected=selected,
        stopped_early=result.stopped_early,
        n_matrix=result.data.n.copy(),
        enrolled=result.enrolled,
    )


def simulate_trial(scenario: Scenario, config: TrialConfig, seed: int) -> TrialResult:
    """One full trial with binomial outcomes drawn from the scenario truths."""
    if (
        scenario.grid.dosage_a != config.grid.dosage_a
        or scenario.grid.dosage_b != config.grid.dosage_b
    ):
        raise ValueError("scenario grid does not match config grid")
    engine = TrialEngine(replace(config, seed=int(seed)))
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=(int(seed), _STREAM_OUTCOMES)))
    )
    while True:
        pending = engine.next_assignment()
        if pending is None:
            break
        outcomes = [
            (d, size, int(rng.binomial(size, scenario.tox_at(d))))
            for d, size in pending
        ]
        engine.observe(outcomes)
    return engine.result()


def _run_rep(args) -> TrialOutcome:
    scenario, config, base_seed, rep = args
    return _outcome_of(simulate_trial(scenario, config, trial_seed(base_seed, rep)))


@dataclass
class OCSummary:
    scenario: str
    reps: int
    pcs: float
    pos: float
    pus: float
    no_selection_rate: float
    pca: float
    poa: float
    pua: float
    stage1_alloc_frac: float
    early_stop_rate: float
    mean_n: float
    selection_freq: np.ndarray  # combo block, fraction of trials selecting each DC
    allocation_frac: np.ndarray  # full lattice, mean fraction of patients per DC

    def summary_rows(self) -> list[tuple[str, float]]:
        return [
            ("pcs", self.pcs),
            ("pos", self.pos),
            ("pus", self.pus),
            ("no_selection_rate", self.no_selection_rate),
            ("pca", self.pca),
            ("poa", self.poa),
            ("pua", self.pua),
            ("stage1_alloc_frac", self.stage1_alloc_frac),
            ("early_stop_rate", self.early_stop_rate),
            ("mean_n", self.mean_n),
        ]


def compute_ocs(results: list[TrialOutcome], scenario: Scenario) -> OCSummary:
    """Selection and allocation metrics against the scenario truths.

    A DC counts correct when its true toxicity lies inside the interval,
    over when above its upper bound, under when below its lower bound.
    Trials selecting multiple DCs count correct when at least one selected
    DC is inside and none is above.  Allocation metrics cover combination
    patients; ladder-stage (single-agent) patients are reported separately.
    """
    ei = scenario.ei
    grid = scenario.grid
    reps = len(results)
    if reps == 0:
        raise ValueError("no results to summarize")
    n_corr = n_over = n_under = n_none = 0
    for r in results:
        if not r.selected:
            n_none += 1
            continue
        tox = [scenario.tox_at(d) for d in r.selected]
        if any(t > ei.upper_f for t in tox):
            n_over += 1
        elif any(ei.contains(t) for t in tox):
            n_corr += 1
        else:
            n_under += 1

    sel = np.zeros((grid.n_a, grid.n_b))
    for r in results:
        for d in r.selected:
            sel[d.i - 1, d.j - 1] += 1.0
    sel /= reps

    alloc_corr = alloc_over = alloc_under = 0
    combo_patients = 0
    margin_patients = 0
    total_patients = 0
    alloc = np.zeros((grid.n_a + 1, grid.n_b + 1))
    for r in results:
        total = r.n_matrix.sum()
        total_patients += total
        if total > 0:
            alloc += r.n_matrix / total
        for d in grid.all_dcs():
            n = int(r.n_matrix[d.i, d.j])
            if n == 0:
                continue
            if not d.is_combo():
                margin_patients += n
                continue
            combo_patients += n
            t = scenario.tox_at(d)
            if ei.contains(t):
                alloc_corr += n
            elif t > ei.upper_f:
                alloc_over += n
            else:
                alloc_under += n
    alloc /= reps

    def frac(num, den):
        return num / den if den else 0.0

    return OCSummary(
        scenario=scenario.name,
        reps=reps,
        pcs=n_corr / reps,
        pos=n_over / reps,
        pus=n_under / reps,
        no_selection_rate=n_none / reps,
        pca=frac(alloc_corr, combo_patients),
        poa=frac(alloc_over, combo_patients),
        pua=frac(alloc_under, combo_patients),
        stage1_alloc_frac=frac(margin_patients, total_patients),
        early_stop_rate=sum(r.stopped_early for r in results) / reps,
        mean_n=sum(r.enrolled for r in results) / reps,
        selection_freq=sel,
        allocation_frac=alloc,
    )


def default_workers() -> int:
    env = os.environ.get("MCI3P3_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def run_replications(
    scenario: Scenario,
    config: TrialConfig,
    reps: int,
    base_seed: int,
    workers: int | None = None,
) -> OCSummary:
    """``reps`` independent trials, aggregated in replication order."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    workers = workers or default_workers()
    jobs = [(scenario, config, base_seed, rep) for rep in range(reps)]
    if workers == 1 or reps == 1:
        outcomes = [_run_rep(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_rep, jobs, chunksize=max(1, reps // (4 * workers))))
    return compute_ocs(outcomes, scenario)
