"""The single-dose interval decision table.

Five rows, three outcomes:

    y/n below interval                        -> E
    y/n inside interval                       -> S
    y/n above interval, (y-1)/n below         -> S
    y/n above interval, (y-1)/n inside        -> D
    y/n above interval, (y-1)/n above         -> D

Ratios are compared as exact rationals so interval endpoints never misclassify
through float rounding (e.g. 1/4 against a 0.25 bound).
"""

from __future__ import annotations

from fractions import Fraction

from .core import Decision, EquivalenceInterval


def decide(n: int, y: int, ei: EquivalenceInterval) -> str:
    """Dosing decision for cumulative counts ``(n, y)`` at one dose."""
    if n < 1:
        raise ValueError("no data, no decision: need n >= 1")
    if not (0 <= y <= n):
        raise ValueError(f"need 0 <= y <= n, got n={n}, y={y}")
    r = Fraction(y, n)
    if r < ei.lower:
        return Decision.ESCALATE
    if r <= ei.upper:
        return Decision.STAY
    # Above the interval: the verdict depends on where removing one DLT lands.
    r1 = Fraction(y - 1, n)
    if r1 < ei.lower:
        return Decision.STAY
    return Decision.DEESCALATE
