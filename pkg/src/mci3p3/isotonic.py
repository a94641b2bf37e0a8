"""Bivariate isotonic regression and final MTDC selection.

The final toxicity surface over combination DCs must be non-decreasing in
both dose indices.  We project the per-DC posterior means onto that cone in
weighted least squares using Dykstra's alternating-projection scheme: the
cone is the intersection of "every row monotone" and "every column
monotone", each of which is projected exactly by weighted
pool-adjacent-violators, and Dykstra's correction increments make the
alternation converge to the projection onto the intersection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .betabin import SELECTION_PRIOR, BetaPrior
from .core import DoseCombo, DoseGrid, EquivalenceInterval, TrialData


def pava(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted pool-adjacent-violators on one line (non-decreasing fit).

    Weights must be strictly positive; zero-weight coordinates are handled
    by the 2-D wrapper.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    # Blocks kept as (weighted sum, weight, count) and merged while the
    # running means decrease.
    sums: list[float] = []
    wts: list[float] = []
    cnts: list[int] = []
    for yi, wi in zip(y, w):
        s, ww, c = yi * wi, wi, 1
        while sums and sums[-1] / wts[-1] > s / ww:
            s += sums.pop()
            ww += wts.pop()
            c += cnts.pop()
        sums.append(s)
        wts.append(ww)
        cnts.append(c)
    out = np.empty_like(y)
    pos = 0
    for s, ww, c in zip(sums, wts, cnts):
        out[pos : pos + c] = s / ww
        pos += c
    return out


@dataclass(frozen=True)
class IsotonicFit:
    """Monotone estimates over the combo block; ``estimates[i-1, j-1]`` is DC (i, j)."""

    estimates: np.ndarray
    weights: np.ndarray

    def at(self, d: DoseCombo) -> float:
        return float(self.estimates[d.i - 1, d.j - 1])


def isotonic_2d(
    means: np.ndarray,
    weights: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> IsotonicFit:
    """Weighted L2 projection of a matrix onto the doubly-monotone cone."""
    m = np.asarray(means, dtype=float)
    w = np.asarray(weights, dtype=float)
    if m.shape != w.shape:
        raise ValueError("means and weights must be conformable")
    if (w < 0).any():
        raise ValueError("weights must be nonnegative")
    if not (w > 0).any():
        raise ValueError("all weights are zero: nothing to project")
    # A zero-weight cell is a free coordinate: any monotone completion is a
    # valid projection.  A vanishing weight picks one deterministically
    # without disturbing the objective.
    w = np.where(w == 0.0, 1e-12, w)

    x = m.copy()
    inc_rows = np.zeros_like(x)
    inc_cols = np.zeros_like(x)
    prev_obj = np.inf
    for _ in range(max_iter):
        z = x + inc_rows
        x = np.vstack([pava(z[r], w[r]) for r in range(z.shape[0])])
        inc_rows = z - x
        z = x + inc_cols
        x = np.column_stack([pava(z[:, c], w[:, c]) for c in range(z.shape[1])])
        inc_cols = z - x
        obj = float((w * (x - m) ** 2).sum())
        if abs(prev_obj - obj) < tol:
            break
        prev_obj = obj
    # Snap residual violations from the finite iteration count; magnitudes
    # here are below tol and the output invariant is exact monotonicity.
    x = np.vstack([np.maximum.accumulate(r) for r in x])
    x = np.column_stack([np.maximum.accumulate(x[:, c]) for c in range(x.shape[1])])
    return IsotonicFit(estimates=x, weights=w)


def posterior_means(
    data: TrialData, grid: DoseGrid, prior: BetaPrior = SELECTION_PRIOR
) -> np.ndarray:
    """Per-combo posterior mean DLT rates, ``(a0 + y) / (a0 + b0 + n)``."""
    n = data.n[1:, 1:].astype(float)
    y = data.y[1:, 1:].astype(float)
    return (prior.a0 + y) / (prior.a0 + prior.b0 + n)


def fit_combo_surface(
    data: TrialData, grid: DoseGrid, prior: BetaPrior = SELECTION_PRIOR
) -> IsotonicFit:
    """Isotonic fit of the combo-block posterior means, weighted by n plus prior mass."""
    means = posterior_means(data, grid, prior)
    weights = data.n[1:, 1:].astype(float) + (prior.a0 + prior.b0)
    return isotonic_2d(means, weights)


def select_mtdc(
    data: TrialData,
    fit: IsotonicFit,
    grid: DoseGrid,
    p_t: float,
    eliminated: frozenset[DoseCombo] | set[DoseCombo] = frozenset(),
    rng: np.random.Generator | None = None,
) -> DoseCombo | None:
    """The tried, non-eliminated combo DC whose fitted rate is closest to target.

    Ties go to the DC with more patients, then the higher total dosage, then
    a seeded uniform pick.  Returns None when nothing is eligible.
    """
    eligible = [
        d for d in grid.combo_dcs() if data.tried(d) and d not in eliminated
    ]
    if not eligible:
        return None
    dist = {d: abs(fit.at(d) - p_t) for d in eligible}
    best = min(dist.values())
    tied = [d for d in eligible if dist[d] == best]
    if len(tied) == 1:
        return tied[0]
    most_n = max(data.at(d)[0] for d in tied)
    tied = [d for d in tied if data.at(d)[0] == most_n]
    if len(tied) > 1:
        top_dose = max(grid.dose_sum(d) for d in tied)
        tied = [d for d in tied if grid.dose_sum(d) == top_dose]
    if len(tied) == 1:
        return tied[0]
    tied.sort()
    if rng is None:
        return tied[0]
    return tied[int(rng.integers(len(tied)))]


def select_mtdc_multiple(
    data: TrialData,
    fit: IsotonicFit,
    grid: DoseGrid,
    ei: EquivalenceInterval,
    eliminated: frozenset[DoseCombo] | set[DoseCombo] = frozenset(),
) -> list[DoseCombo]:
    """All eligible combo DCs whose fitted rate falls inside the interval."""
    return [
        d
        for d in grid.combo_dcs()
        if data.tried(d) and d not in eliminated and ei.contains(fit.at(d))
    ]
