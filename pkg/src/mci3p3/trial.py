"""Trial orchestration: stages, budget, cohort assignment, event logging.

A :class:`TrialEngine` is the only thing that mutates trial state.  Every
observable step appends structured events, and the event log plus the config
reconstructs the engine exactly (see :mod:`mci3p3.events`), which is what
the replay tool and the conduct service both rely on.

Randomness is consumed through substreams derived from ``(seed, stream,
step)``, so recomputing any step — live, from a snapshot, or from a replay —
draws identical values no matter what happened before.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import stage2 as s2
from .betabin import utility
from .core import DoseCombo, DoseGrid, EquivalenceInterval, TrialData
from .isotonic import fit_combo_surface, select_mtdc, select_mtdc_multiple
from .models import (
    CHANGEPOINT,
    PLAIN,
    PriorSpec,
    SamplerConfig,
    fit,
    monitor_trigger,
    stage3_select,
)
from .safety import sr1_scan, sr1_stop_check
from .stage1 import AGENT_A, AGENT_B, AgentTrack, stage1_step, starting_dcs

STAGE_I = "I"
STAGE_II = "II"
STAGE_III = "III"
STOPPED = "stopped"
COMPLETED = "completed"

TWO_STAGE = "two-stage"
THREE_STAGE = "three-stage"

# Substream tags for deterministic rng derivation.
_STREAM_TIES = 2
_STREAM_SAMPLER = 3
_STREAM_MTDC = 4


class StateError(RuntimeError):
    """Operation incompatible with the current trial state."""


class OutcomeMismatch(StateError):
    """Submitted outcomes do not match the pending assignment."""


@dataclass(frozen=True)
class TrialConfig:
    grid: DoseGrid
    ei: EquivalenceInterval
    cohort_size: int = 3
    max_total_n: int = 96
    design_variant: str = TWO_STAGE
    monitor_eta: float = 0.4
    sr1_eta: float = 0.95
    eps: float = 1e-6
    prior: PriorSpec = field(default_factory=PriorSpec)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    seed: int = 0
    stage1_enabled: bool = True
    starting_dcs: tuple[DoseCombo, ...] | None = None
    multiple_mtdc: bool = False

    def __post_init__(self):
        if self.cohort_size < 1:
            raise ValueError("cohort_size must be at least 1")
        if self.max_total_n < self.cohort_size:
            raise ValueError("max_total_n must cover at least one cohort")
        if self.design_variant not in (TWO_STAGE, THREE_STAGE):
            raise ValueError(f"unknown design variant {self.design_variant!r}")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if not self.stage1_enabled and not self.starting_dcs:
            raise ValueError("starting_dcs required when stage I is disabled")
        if self.starting_dcs is not None:
            if not 1 <= len(self.starting_dcs) <= 2:
                raise ValueError("one or two starting DCs required")
            for d in self.starting_dcs:
                if not (d.is_combo() and self.grid.contains(d)):
                    raise ValueError(f"starting DC {tuple(d)} must be a combo DC on the grid")
        if not (0 < self.monitor_eta <= 1) or not (0 < self.sr1_eta < 1):
            raise ValueError("eta thresholds out of range")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


@dataclass
class TrialResult:
    mtdc: Union[DoseCombo, list[DoseCombo], None]
    stopped_early: bool
    stop_reason: Optional[str]
    data: TrialData
    enrolled: int
    estimates: Optional[np.ndarray]
    events: list[dict]


def _dc(d: DoseCombo) -> list[int]:
    return [int(d[0]), int(d[1])]


def _dcs(ds) -> list[list[int]]:
    return [_dc(d) for d in sorted(ds)]


class TrialEngine:
    """Drives one trial from first cohort to MTDC selection."""

    def __init__(self, config: TrialConfig, _defer_init: bool = False):
        self.config = config
        self.data = TrialData.empty(config.grid)
        self.eliminated: set[DoseCombo] = set()
        self.events: list[dict] = []
        self.seq = 0
        self.currents: list[DoseCombo] = []
        self.need_combo_start = False
        self.pending: list[tuple[DoseCombo, int]] | None = None
        self.stop_reason: Optional[str] = None
        self.tracks: dict[str, AgentTrack] = {}
        #: JSON-safe trace of the selection that produced the pending
        #: assignment (candidate build/prune/selection for stage II, the
        #: admissible set for stage III, ladder levels for stage I).
        self.last_trace: Optional[dict] = None
        self._result: Optional[TrialResult] = None
        if _defer_init:
            return
        self._emit("trial_created", config=config_to_dict(config))
        if config.stage1_enabled:
            self.stage = STAGE_I
            self.tracks = {
                AGENT_A: AgentTrack(AGENT_A),
                AGENT_B: AgentTrack(AGENT_B),
            }
            self._emit("stage_started", stage=STAGE_I)
        else:
            self.stage = STAGE_II
            self.currents = sorted(config.starting_dcs)
            self.need_combo_start = True
            self._emit("stage_started", stage=STAGE_II)
        self._advance()

    # -- rng substreams ---------------------------------------------------

    def _rng(self, stream: int, step: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=(self.config.seed, stream, step))
        return np.random.Generator(np.random.PCG64(ss))

    # -- event plumbing ----------------------------------------------------

    def _emit(self, event: str, **payload) -> None:
        self.events.append({"event": event, **payload})

    # -- public surface ----------------------------------------------------

    @property
    def terminal(self) -> bool:
        return self.stage in (STOPPED, COMPLETED)

    @property
    def enrolled(self) -> int:
        return self.data.total_n()

    @property
    def remaining(self) -> int:
        return self.config.max_total_n - self.enrolled

    def next_assignment(self) -> list[tuple[DoseCombo, int]] | None:
        return None if self.terminal else self.pending

    def observe(self, outcomes: Sequence[tuple]) -> None:
        """Record cohort outcomes for the pending assignment and advance."""
        if self.terminal or self.pending is None:
            raise StateError("trial is not expecting outcomes")
        norm = sorted(
            (DoseCombo(int(d[0]), int(d[1])), int(n), int(y)) for d, n, y in outcomes
        )
        expected = sorted(self.pending)
        if [(d, n) for d, n, _ in norm] != expected:
            raise OutcomeMismatch(
                f"outcomes {[(tuple(d), n) for d, n, _ in norm]} do not match "
                f"pending assignment {[(tuple(d), n) for d, n in expected]}"
            )
        for d, n, y in norm:
            if not 0 <= y <= n:
                raise OutcomeMismatch(f"DLT count {y} out of range for cohort of {n}")
        self._emit(
            "outcomes_observed",
            seq=self.seq,
            outcomes=[{"dc": _dc(d), "n": n, "y": y} for d, n, y in norm],
        )
        for d, n, y in norm:
            self.data.add(d, n, y)
        self.pending = None
        was_stage1 = self.stage == STAGE_I
        was_stage2 = self.stage == STAGE_II

        if was_stage1:
            self._advance_tracks(norm)
        if self._apply_safety():
            self._finalize_terminal()
            return
        if was_stage1 and all(t.finished for t in self.tracks.values()):
            self._enter_stage2()
        elif was_stage2 and self.config.design_variant == THREE_STAGE:
            self._run_monitor()
        self._advance()
        if self.terminal:
            self._finalize_terminal()

    def result(self) -> TrialResult:
        if self._result is None:
            raise StateError("trial still in progress")
        return self._result

    # -- stage I -----------------------------------------------------------

    def _advance_tracks(self, outcomes) -> None:
        by_dc = {d: (n, y) for d, n, y in outcomes}
        for agent in (AGENT_A, AGENT_B):
            track = self.tracks[agent]
            if track.finished or track.dc() not in by_dc:
                continue
            n, y = by_dc[track.dc()]
            new, decision = stage1_step(track, n, y, self.config.ei, self.config.grid)
            self._emit(
                "decision_computed",
                seq=self.seq,
                dc=_dc(track.dc()),
                n=n,
                y=y,
                decision=decision,
            )
            self.tracks[agent] = new

    def _enter_stage2(self) -> None:
        i0 = self.tracks[AGENT_A].peak_level
        j0 = self.tracks[AGENT_B].peak_level
        starts = [d for d in starting_dcs(i0, j0) if d not in self.eliminated]
        if not starts:
            # Elimination reaching a fresh starting DC implies a level-1
            # margin was unacceptable, which already stopped the trial.
            starts = [DoseCombo(1, 1)]
        self.stage = STAGE_II
        self.currents = sorted(starts)
        self.need_combo_start = True
        self._emit(
            "stage_transition",
            seq=self.seq,
            frm=STAGE_I,
            to=STAGE_II,
            starting=_dcs(starts),
        )

    # -- safety ------------------------------------------------------------

    def _apply_safety(self) -> bool:
        """Run both safety rules; returns True when the trial stops."""
        scan = sr1_scan(
            self.data, self.config.grid, self.config.ei.p_t_f, self.config.sr1_eta
        )
        for trigger in sorted(scan):
            new = scan[trigger] - self.eliminated
            if new:
                self._emit(
                    "sr1_eliminated", seq=self.seq, cause=_dc(trigger), dcs=_dcs(new)
                )
                self.eliminated.update(new)
        if sr1_stop_check(self.eliminated):
            self._stop("SR1", "lowest dose eliminated")
            return True
        if not s2.admissible_set(
            self.data, self.config.grid, self.config.ei, self.eliminated
        ):
            self._stop("SR2", "admissible set is empty")
            return True
        return False

    def _stop(self, reason: str, detail: str) -> None:
        self.stage = STOPPED
        self.stop_reason = reason
        self.pending = None
        self._emit("trial_stopped", seq=self.seq, reason=reason, detail=detail)

    # -- monitoring / stage III ---------------------------------------------

    def _run_monitor(self) -> None:
        post = fit(
            CHANGEPOINT,
            self.data,
            self.config.grid,
            self.config.prior,
            self.config.sampler,
            self._rng(_STREAM_SAMPLER, self.seq),
        )
        triggered = monitor_trigger(
            post, self.config.grid, self.config.ei, self.config.monitor_eta
        )
        self._emit("monitor_evaluated", seq=self.seq, triggered=bool(triggered))
        if triggered:
            self.stage = STAGE_III
            self._emit(
                "stage_transition",
                seq=self.seq,
                frm=STAGE_II,
                to=STAGE_III,
                reason="monitor",
            )

    # -- assignment computation ---------------------------------------------

    def _advance(self) -> None:
        """Compute the next assignment, completing or stopping if impossible."""
        if self.terminal:
            return
        affordable = self.remaining // self.config.cohort_size
        if affordable <= 0:
            self._complete()
            return
        if self.stage == STAGE_I:
            actives = [
                self.tracks[a] for a in (AGENT_A, AGENT_B) if not self.tracks[a].finished
            ]
            chosen = [t.dc() for t in actives[:affordable]]
            self.last_trace = {"stage": STAGE_I, "selected": _dcs(chosen)}
        elif self.stage == STAGE_II and self.need_combo_start:
            if len(self.currents) > affordable:
                rng = self._rng(_STREAM_TIES, self.seq + 1)
                chosen = s2.select_next(
                    frozenset(self.currents),
                    self.data,
                    self.config.grid,
                    self.config.ei,
                    self.config.eps,
                    rng,
                    max_count=affordable,
                )
            else:
                chosen = list(self.currents)
            self.currents = chosen
            self.need_combo_start = False
            self.last_trace = {"stage": STAGE_II, "selected": _dcs(chosen), "starting": True}
        elif self.stage == STAGE_II:
            chosen = self._stage2_choose(min(2, affordable))
            if chosen is None:
                return
            self.currents = chosen
        else:
            chosen = self._stage3_choose()
            if chosen is None:
                return
            self.currents = chosen
        self.seq += 1
        self.pending = [(d, self.config.cohort_size) for d in sorted(chosen)]
        self._emit(
            "cohort_assigned",
            seq=self.seq,
            stage=self.stage,
            assignments=[
                {"dc": _dc(d), "size": n} for d, n in self.pending
            ],
        )

    def _stage2_choose(self, max_count: int) -> list[DoseCombo] | None:
        cfg = self.config
        decs = s2.tried_decisions(self.data, cfg.grid, cfg.ei)
        decisions = []
        for cur in sorted(self.currents):
            n, y = self.data.at(cur)
            self._emit(
                "decision_computed",
                seq=self.seq,
                dc=_dc(cur),
                n=n,
                y=y,
                decision=decs[cur],
            )
            decisions.append({"dc": _dc(cur), "n": n, "y": y, "decision": decs[cur]})
        built = s2.build_candidates(self.currents, self.data, cfg.grid, cfg.ei)
        self._emit("omega_built", seq=self.seq, candidates=_dcs(built.members))
        pruned = s2.prune(built, self.data, cfg.grid, cfg.ei)
        for d, rule, cause in pruned.removed:
            self._emit(
                "omega_pruned", seq=self.seq, dc=_dc(d), rule=rule, cause=_dc(cause)
            )
        final = s2.finalize(
            pruned.kept, self.currents, self.data, cfg.grid, cfg.ei, self.eliminated
        )
        for d in final.rule_5a_removed:
            self._emit("rule_5a_removed", seq=self.seq, dc=_dc(d))
        if final.admissible_used is not None:
            self._emit(
                "admissible_used",
                seq=self.seq,
                admissible=_dcs(final.admissible_used),
            )
        trace = {
            "stage": STAGE_II,
            "seq": self.seq,
            "decisions": decisions,
            "built": _dcs(built.members),
            "pruned": [
                {"dc": _dc(d), "rule": r, "cause": _dc(c)} for d, r, c in pruned.removed
            ],
            "rule_5a_removed": _dcs(final.rule_5a_removed),
            "admissible_used": None
            if final.admissible_used is None
            else _dcs(final.admissible_used),
            "final_candidates": _dcs(final.members),
        }
        if not final.members:
            self.last_trace = trace
            self._stop("SR2", "admissible set is empty")
            return None
        rng = self._rng(_STREAM_TIES, self.seq + 1)
        selected = s2.select_next(
            final.members, self.data, cfg.grid, cfg.ei, cfg.eps, rng, max_count
        )
        self._emit("dcs_selected", seq=self.seq, stage=STAGE_II, selected=_dcs(selected))
        trace["utilities"] = [
            {
                "dc": _dc(d),
                "utility": round(
                    utility(*self.data.at(d), cfg.grid.dose_sum(d), cfg.ei, cfg.eps), 12
                ),
            }
            for d in sorted(final.members)
        ]
        trace["selected"] = _dcs(selected)
        self.last_trace = trace
        return selected

    def _stage3_choose(self) -> list[DoseCombo] | None:
        cfg = self.config
        adm = s2.admissible_set(self.data, cfg.grid, cfg.ei, self.eliminated)
        if not adm:
            self._stop("SR2", "admissible set is empty")
            return None
        post = fit(
            PLAIN,
            self.data,
            cfg.grid,
            cfg.prior,
            cfg.sampler,
            self._rng(_STREAM_SAMPLER, self.seq + 1),
        )
        choice = stage3_select(
            post, adm, cfg.grid, cfg.ei, self._rng(_STREAM_TIES, self.seq + 1)
        )
        self._emit("dcs_selected", seq=self.seq, stage=STAGE_III, selected=_dcs([choice]))
        probs = post.ei_probabilities(cfg.grid, cfg.ei)
        self.last_trace = {
            "stage": STAGE_III,
            "seq": self.seq,
            "admissible_used": _dcs(adm),
            "final_candidates": _dcs(adm),
            "utilities": [
                {"dc": _dc(d), "utility": round(float(probs[d.i - 1, d.j - 1]), 12)}
                for d in sorted(adm)
            ],
            "selected": _dcs([choice]),
        }
        return [choice]

    def _complete(self) -> None:
        self.stage = COMPLETED
        self.pending = None
        self._emit("trial_completed", seq=self.seq, enrolled=self.enrolled)

    # -- terminal report ----------------------------------------------------

    def _selection_report(self):
        """Isotonic fit and MTDC pick from the current data; no mutation."""
        cfg = self.config
        surf = fit_combo_surface(self.data, cfg.grid)
        if cfg.multiple_mtdc:
            mtdc = select_mtdc_multiple(
                self.data, surf, cfg.grid, cfg.ei, frozenset(self.eliminated)
            )
        else:
            mtdc = select_mtdc(
                self.data,
                surf,
                cfg.grid,
                cfg.ei.p_t_f,
                frozenset(self.eliminated),
                self._rng(_STREAM_MTDC, 0),
            )
        return mtdc, surf.estimates

    def provisional_report(self):
        """Force-finalize view of a live trial; the trial keeps running."""
        return self._selection_report()

    def _finalize_terminal(self) -> None:
        stopped = self.stage == STOPPED
        estimates = None
        mtdc: Union[DoseCombo, list[DoseCombo], None] = None
        if not stopped:
            mtdc, estimates = self._selection_report()
        if isinstance(mtdc, list):
            mtdc_json = _dcs(mtdc)
        elif mtdc is None:
            mtdc_json = None
        else:
            mtdc_json = _dc(mtdc)
        self._emit(
            "mtdc_selected",
            mtdc=mtdc_json,
            estimates=None
            if estimates is None
            else [[round(float(v), 10) for v in row] for row in estimates],
        )
        self._result = TrialResult(
            mtdc=mtdc,
            stopped_early=stopped,
            stop_reason=self.stop_reason,
            data=self.data,
            enrolled=self.enrolled,
            estimates=estimates,
            events=self.events,
        )

    # -- snapshots -----------------------------------------------------------

    def describe_pending(self) -> dict:
        """The recommendation plus the selection trace that produced it.

        Pure with respect to trial state, so the CLI decision tool and the
        conduct service (which share this method) can never disagree.
        """
        cfg = self.config
        out: dict = {
            "stage": self.stage,
            "stop_reason": self.stop_reason,
            "recommendation": None
            if self.pending is None
            else [{"dc": _dc(d), "size": n} for d, n in self.pending],
            "eliminated": _dcs(self.eliminated),
            "enrolled": self.enrolled,
            "last_step": self.last_trace,
        }
        if self.stage in (STAGE_II, STAGE_III):
            adm = s2.admissible_set(self.data, cfg.grid, cfg.ei, self.eliminated)
            out["admissible"] = _dcs(adm)
        return out

    def snapshot(self) -> dict:
        """Full JSON-safe state; :func:`engine_from_snapshot` inverts it."""
        return {
            "config": config_to_dict(self.config),
            "stage": self.stage,
            "seq": self.seq,
            "enrolled": self.enrolled,
            "n": self.data.n.tolist(),
            "y": self.data.y.tolist(),
            "currents": _dcs(self.currents),
            "need_combo_start": self.need_combo_start,
            "eliminated": _dcs(self.eliminated),
            "stop_reason": self.stop_reason,
            "pending": None
            if self.pending is None
            else [{"dc": _dc(d), "size": n} for d, n in self.pending],
            "last_trace": self.last_trace,
            "tracks": {
                a: {
                    "current_level": t.current_level,
                    "finished": t.finished,
                    "first_non_e_level": t.first_non_e_level,
                }
                for a, t in self.tracks.items()
            },
        }


def engine_from_snapshot(snap: dict) -> TrialEngine:
    config = config_from_dict(snap["config"])
    eng = TrialEngine(config, _defer_init=True)
    eng.stage = snap["stage"]
    eng.seq = int(snap["seq"])
    eng.data = TrialData(
        np.array(snap["n"], dtype=np.int64), np.array(snap["y"], dtype=np.int64)
    )
    eng.data.validate()
    eng.currents = [DoseCombo(i, j) for i, j in snap["currents"]]
    eng.need_combo_start = bool(snap["need_combo_start"])
    eng.eliminated = {DoseCombo(i, j) for i, j in snap["eliminated"]}
    eng.stop_reason = snap["stop_reason"]
    eng.pending = (
        None
        if snap["pending"] is None
        else [(DoseCombo(*a["dc"]), int(a["size"])) for a in snap["pending"]]
    )
    eng.last_trace = snap.get("last_trace")
    eng.tracks = {
        a: AgentTrack(
            agent=a,
            current_level=int(t["current_level"]),
            finished=bool(t["finished"]),
            first_non_e_level=t["first_non_e_level"],
        )
        for a, t in snap["tracks"].items()
    }
    return eng


# -- config (de)serialization ------------------------------------------------


def config_to_dict(cfg: TrialConfig) -> dict:
    return {
        "dosage_a": list(cfg.grid.dosage_a),
        "dosage_b": list(cfg.grid.dosage_b),
        "p_t": float(cfg.ei.p_t),
        "eps1": float(cfg.ei.eps1),
        "eps2": float(cfg.ei.eps2),
        "cohort_size": cfg.cohort_size,
        "max_total_n": cfg.max_total_n,
        "design_variant": cfg.design_variant,
        "monitor_eta": cfg.monitor_eta,
        "sr1_eta": cfg.sr1_eta,
        "eps": cfg.eps,
        "prior": {
            "intercept_mean": cfg.prior.intercept_mean,
            "intercept_var": cfg.prior.intercept_var,
            "slope_location": cfg.prior.slope_location,
            "slope_var": cfg.prior.slope_var,
            "outer_mean": cfg.prior.outer_mean,
            "outer_var": cfg.prior.outer_var,
        },
        "sampler": {
            "iters": cfg.sampler.iters,
            "burnin": cfg.sampler.burnin,
            "thin": cfg.sampler.thin,
            "init_step": cfg.sampler.init_step,
        },
        "seed": cfg.seed,
        "stage1_enabled": cfg.stage1_enabled,
        "starting_dcs": None
        if cfg.starting_dcs is None
        else _dcs(cfg.starting_dcs),
        "multiple_mtdc": cfg.multiple_mtdc,
    }


def config_from_dict(doc: dict) -> TrialConfig:
    from .scenarios import parse_config  # deferred: scenarios imports this module

    return parse_config(doc)
