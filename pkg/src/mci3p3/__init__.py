"""Dual-agent dose-finding: staged escalation engine, simulator, and conduct service."""

from .betabin import BetaPrior, exceed_prob, interval_prob, utility
from .core import (
    Decision,
    DoseCombo,
    DoseGrid,
    EquivalenceInterval,
    TrialData,
    dc,
    is_higher,
    is_lower,
)
from .i3p3 import decide
from .trial import TrialConfig, TrialEngine, TrialResult

__version__ = "0.1.0"

__all__ = [
    "BetaPrior",
    "Decision",
    "DoseCombo",
    "DoseGrid",
    "EquivalenceInterval",
    "TrialConfig",
    "TrialData",
    "TrialEngine",
    "TrialResult",
    "dc",
    "decide",
    "exceed_prob",
    "interval_prob",
    "is_higher",
    "is_lower",
    "utility",
]
