"""Parallel single-agent escalation that seeds the combination stage.

Each agent climbs its own ladder with the interval decision table: escalate
while the decision is E, and stop the first time it is not.  The level where
that first happens (or one past the top if every dose escalated) determines
the starting DCs for combination finding.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .core import Decision, DoseCombo, DoseGrid, EquivalenceInterval
from .i3p3 import decide

AGENT_A = "A"
AGENT_B = "B"


@dataclass(frozen=True)
class AgentTrack:
    """One agent's ladder position; immutable, advanced by :func:`stage1_step`."""

    agent: str
    current_level: int = 1
    finished: bool = False
    first_non_e_level: int | None = None

    def dc(self) -> DoseCombo:
        if self.agent == AGENT_A:
            return DoseCombo(self.current_level, 0)
        return DoseCombo(0, self.current_level)

    def ladder_top(self, grid: DoseGrid) -> int:
        return grid.n_a if self.agent == AGENT_A else grid.n_b

    @property
    def peak_level(self) -> int:
        """The paper-facing index: one below the first non-escalation level."""
        if self.first_non_e_level is None:
            raise ValueError("track not finished")
        return self.first_non_e_level - 1


def stage1_step(
    track: AgentTrack,
    n: int,
    y: int,
    ei: EquivalenceInterval,
    grid: DoseGrid,
) -> tuple[AgentTrack, str]:
    """Advance one track given the cohort outcome at its current level.

    Returns the new track and the decision that produced it.  E moves up
    (finishing past the top with an all-E ladder); S or D finishes at the
    current level.
    """
    if track.finished:
        raise ValueError(f"agent {track.agent} already finished stage I")
    decision = decide(n, y, ei)
    if decision == Decision.ESCALATE:
        top = track.ladder_top(grid)
        if track.current_level >= top:
            new = replace(track, finished=True, first_non_e_level=top + 1)
        else:
            new = replace(track, current_level=track.current_level + 1)
    else:
        new = replace(track, finished=True, first_non_e_level=track.current_level)
    return new, decision


def starting_dcs(i0: int, j0: int) -> list[DoseCombo]:
    """Starting DCs for combination finding from the two ladder peaks.

    ``{(i0, 1), (1, j0)}`` when both peaks are at least 1 (deduplicated),
    otherwise the single safe start ``(1, 1)``.
    """
    if i0 >= 1 and j0 >= 1:
        out = {DoseCombo(i0, 1), DoseCombo(1, j0)}
        return sorted(out)
    return [DoseCombo(1, 1)]
