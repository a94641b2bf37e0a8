"""Continuous safety rules: posterior-exceedance elimination and the empty-set stop.

A DC with at least three patients whose posterior probability of exceeding
the target crosses the (near-one) threshold is dose-unacceptable: it and
everything above it leave the trial for good.  Losing the lowest dose stops
the trial; so does an empty admissible set.
"""

from __future__ import annotations

from .betabin import DECISION_PRIOR, BetaPrior, exceed_prob
from .core import DoseCombo, DoseGrid, EquivalenceInterval, TrialData, is_higher
from .stage2 import admissible_set

#: Minimum patients before the exceedance rule may eliminate a DC.
SR1_MIN_N = 3


def sr1_scan(
    data: TrialData,
    grid: DoseGrid,
    p_t: float,
    eta: float = 0.95,
    prior: BetaPrior = DECISION_PRIOR,
) -> dict[DoseCombo, frozenset[DoseCombo]]:
    """Scan every tried DC; map each trigger to its upward-closed elimination set."""
    out: dict[DoseCombo, frozenset[DoseCombo]] = {}
    for d in data.tried_dcs(grid):
        n, y = data.at(d)
        if n >= SR1_MIN_N and exceed_prob(n, y, p_t, prior) > eta:
            closure = {d} | {c for c in grid.all_dcs() if is_higher(c, d)}
            out[d] = frozenset(closure)
    return out


def sr1_stop_check(eliminated: frozenset[DoseCombo] | set[DoseCombo]) -> bool:
    """Stop when the lowest dose of either ladder or the lowest combo is gone."""
    lowest = {DoseCombo(1, 0), DoseCombo(0, 1), DoseCombo(1, 1)}
    return bool(lowest & set(eliminated))


def sr2_check(
    data: TrialData,
    grid: DoseGrid,
    ei: EquivalenceInterval,
    eliminated: frozenset[DoseCombo] | set[DoseCombo] = frozenset(),
) -> bool:
    """True (stop) when no combo DC remains admissible."""
    return not admissible_set(data, grid, ei, eliminated)
