"""Combination-stage candidate machinery: build, prune, finalize, select.

Each step looks at the current DCs (at most two), turns their interval
decisions into a candidate set, prunes candidates dominated by what the data
already rules too low or too risky, and picks up to two survivors by
posterior utility.

Candidates and the domination bookkeeping live on the combination block
(both levels >= 1): proposals that leave the lattice or land on a
single-agent margin are dropped, and margin decisions do not fence the
combination space.  The ladder stage already reacts to margin outcomes (a
non-escalation ends the ladder) and the exceedance safety rule handles
genuinely unacceptable margin doses, so letting a single margin D exclude
every combination would contradict the mandated (1,1) fallback start.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .betabin import utility
from .core import (
    Decision,
    DoseCombo,
    DoseGrid,
    EquivalenceInterval,
    TrialData,
    is_higher,
    is_lower,
)
from .i3p3 import decide


def tried_decisions(
    data: TrialData, grid: DoseGrid, ei: EquivalenceInterval
) -> dict[DoseCombo, str]:
    """Interval decision at every tried DC, from cumulative counts."""
    return {d: decide(*data.at(d), ei) for d in data.tried_dcs(grid)}


def sigma_sets(
    data: TrialData, grid: DoseGrid, ei: EquivalenceInterval
) -> tuple[frozenset[DoseCombo], frozenset[DoseCombo]]:
    """(too-low, too-risky) exclusion sets over the combination block.

    A combo DC is too low when strictly below some tried combo whose
    decision is E, and too risky when strictly above some tried combo whose
    decision is D.
    """
    decs = tried_decisions(data, grid, ei)
    sig_e: set[DoseCombo] = set()
    sig_d: set[DoseCombo] = set()
    for d, s in decs.items():
        if not d.is_combo():
            continue
        if s == Decision.ESCALATE:
            sig_e.update(c for c in grid.combo_dcs() if is_lower(c, d))
        elif s == Decision.DEESCALATE:
            sig_d.update(c for c in grid.combo_dcs() if is_higher(c, d))
    return frozenset(sig_e), frozenset(sig_d)


def admissible_set(
    data: TrialData,
    grid: DoseGrid,
    ei: EquivalenceInterval,
    eliminated: frozenset[DoseCombo] | set[DoseCombo] = frozenset(),
) -> frozenset[DoseCombo]:
    """Combo DCs not excluded by domination or safety elimination.

    This single function backs both the fallback candidate rule and the
    empty-set safety stop, so the two can never drift apart.
    """
    sig_e, sig_d = sigma_sets(data, grid, ei)
    return frozenset(
        d
        for d in grid.combo_dcs()
        if d not in sig_e and d not in sig_d and d not in eliminated
    )


@dataclass(frozen=True)
class CandidateSet:
    members: frozenset[DoseCombo]
    sigma_e: frozenset[DoseCombo] = frozenset()
    sigma_d: frozenset[DoseCombo] = frozenset()


def build_candidates(
    currents: list[DoseCombo],
    data: TrialData,
    grid: DoseGrid,
    ei: EquivalenceInterval,
) -> CandidateSet:
    """Candidate DCs proposed by the current DCs' decisions (pre-pruning)."""
    if not 1 <= len(currents) <= 2:
        raise ValueError("need one or two current DCs")
    decs = tried_decisions(data, grid, ei)
    omega: set[DoseCombo] = set()

    def keep(i: int, j: int) -> None:
        d = DoseCombo(i, j)
        if d.is_combo() and grid.contains(d):
            omega.add(d)

    for cur in currents:
        if not data.tried(cur):
            raise ValueError(f"current DC {tuple(cur)} has no data")
        s = decs[cur]
        i, j = cur
        if s == Decision.ESCALATE:
            keep(i + 1, j)
            keep(i, j + 1)
        elif s == Decision.STAY:
            keep(i, j)
            keep(i + 1, j - 1)
            keep(i - 1, j + 1)
            # Diagonal extensions: jump past a tried, non-D diagonal
            # neighbor into untried territory, one step only.
            for di, dj in ((1, -1), (-1, 1)):
                mid = DoseCombo(i + di, j + dj)
                ext = DoseCombo(i + 2 * di, j + 2 * dj)
                if (
                    grid.contains(mid)
                    and data.tried(mid)
                    and not (grid.contains(ext) and data.tried(ext))
                    and decs[mid] in (Decision.ESCALATE, Decision.STAY)
                ):
                    keep(*ext)
        else:
            keep(i - 1, j)
            keep(i, j - 1)
    return CandidateSet(members=frozenset(omega))


@dataclass(frozen=True)
class PruneResult:
    kept: CandidateSet
    #: (candidate, rule, dominating tried DC), in candidate order.
    removed: tuple[tuple[DoseCombo, str, DoseCombo], ...]


def prune(
    cands: CandidateSet,
    data: TrialData,
    grid: DoseGrid,
    ei: EquivalenceInterval,
) -> PruneResult:
    """Drop candidates the tried data already rules too low or too risky."""
    sig_e, sig_d = sigma_sets(data, grid, ei)
    decs = tried_decisions(data, grid, ei)
    e_dcs = sorted(d for d, s in decs.items() if d.is_combo() and s == Decision.ESCALATE)
    d_dcs = sorted(d for d, s in decs.items() if d.is_combo() and s == Decision.DEESCALATE)
    kept: set[DoseCombo] = set()
    removed: list[tuple[DoseCombo, str, DoseCombo]] = []
    for c in sorted(cands.members):
        if c in sig_e:
            cause = next(d for d in e_dcs if is_lower(c, d))
            removed.append((c, "4.a", cause))
        elif c in sig_d:
            cause = next(d for d in d_dcs if is_higher(c, d))
            removed.append((c, "4.b", cause))
        else:
            kept.add(c)
    return PruneResult(
        kept=CandidateSet(members=frozenset(kept), sigma_e=sig_e, sigma_d=sig_d),
        removed=tuple(removed),
    )


@dataclass(frozen=True)
class FinalizeResult:
    members: frozenset[DoseCombo]
    rule_5a_removed: tuple[DoseCombo, ...] = ()
    #: Set when the candidate set emptied and the admissible fallback was used.
    admissible_used: frozenset[DoseCombo] | None = None


def finalize(
    cands: CandidateSet,
    currents: list[DoseCombo],
    data: TrialData,
    grid: DoseGrid,
    ei: EquivalenceInterval,
    eliminated: frozenset[DoseCombo] | set[DoseCombo] = frozenset(),
) -> FinalizeResult:
    """Apply the current-DC filter, falling back to the admissible set.

    A current DC that reappears as its own candidate stays only if its
    decision is S.  If nothing remains, the full admissible set takes over
    (without re-applying the current-DC filter: a current DC can legally be
    re-selected from the admissible set).
    """
    members = set(cands.members) - set(eliminated)
    removed_5a: list[DoseCombo] = []
    decs = tried_decisions(data, grid, ei)
    for cur in sorted(currents):
        if cur in members and decs[cur] != Decision.STAY:
            members.discard(cur)
            removed_5a.append(cur)
    if members:
        return FinalizeResult(
            members=frozenset(members), rule_5a_removed=tuple(removed_5a)
        )
    adm = admissible_set(data, grid, ei, eliminated)
    return FinalizeResult(
        members=adm, rule_5a_removed=tuple(removed_5a), admissible_used=adm
    )


def select_next(
    candidates: frozenset[DoseCombo] | set[DoseCombo],
    data: TrialData,
    grid: DoseGrid,
    ei: EquivalenceInterval,
    eps: float,
    rng: np.random.Generator,
    max_count: int = 2,
) -> list[DoseCombo]:
    """Up to ``max_count`` candidates with the highest utilities.

    Exact utility ties that straddle the cutoff are resolved by a seeded
    uniform draw; fully resolved rankings never consult the rng.  The
    returned list is ordered by dose level for stable downstream use.
    """
    if not candidates:
        raise ValueError("empty candidate set: safety stop should fire upstream")
    utils: dict[DoseCombo, float] = {}
    for d in sorted(candidates):
        n, y = data.at(d)
        utils[d] = utility(n, y, grid.dose_sum(d), ei, eps)
    ranked = sorted(utils, key=lambda d: (-utils[d], d))
    take = min(max_count, len(ranked))
    cut = utils[ranked[take - 1]]
    sure = [d for d in ranked[:take] if utils[d] > cut]
    tied = sorted(d for d in utils if utils[d] == cut)
    need = take - len(sure)
    if len(tied) > need:
        pick = rng.choice(len(tied), size=need, replace=False)
        chosen = sure + [tied[k] for k in sorted(pick)]
    else:
        chosen = sure + tied
    return sorted(chosen)
