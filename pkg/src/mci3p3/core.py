"""Core domain types for dual-agent dose-combination trials.

A trial explores a lattice of dose combinations (DCs).  ``(i, j)`` pairs
level ``i`` of drug A with level ``j`` of drug B; ``(i, 0)`` and ``(0, j)``
are the single-agent doses and ``(0, 0)`` is excluded.  Everything here is
an immutable value, safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, NamedTuple

import numpy as np


class DoseCombo(NamedTuple):
    """A lattice point ``(i, j)``; zero on exactly one axis means single-agent."""

    i: int
    j: int

    def is_combo(self) -> bool:
        return self.i >= 1 and self.j >= 1

    def is_single_agent(self) -> bool:
        return (self.i == 0) != (self.j == 0)


def dc(i: int, j: int) -> DoseCombo:
    return DoseCombo(int(i), int(j))


def is_higher(a: DoseCombo, b: DoseCombo) -> bool:
    """True when ``a`` strictly dominates ``b`` on the dose lattice.

    Holds when a exceeds b on both axes, or exceeds on one axis with the
    other equal.  Diagonal pairs (one axis up, the other down) are
    incomparable and return False.
    """
    return (
        (a.i > b.i and a.j > b.j)
        or (a.i > b.i and a.j == b.j)
        or (a.i == b.i and a.j > b.j)
    )


def is_lower(a: DoseCombo, b: DoseCombo) -> bool:
    """Mirror of :func:`is_higher` with the inequalities reversed."""
    return (
        (a.i < b.i and a.j < b.j)
        or (a.i < b.i and a.j == b.j)
        or (a.i == b.i and a.j < b.j)
    )


def _as_fraction(x) -> Fraction:
    # str() round-trips the decimal the user wrote (0.3 -> Fraction(3, 10)),
    # which keeps boundary ratio comparisons exact.
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


@dataclass(frozen=True)
class EquivalenceInterval:
    """Target window ``[p_t - eps1, p_t + eps2]`` for an acceptable DLT rate.

    Bounds are held as exact rationals so that boundary cases such as
    ``y/n == 0.25`` with ``n = 4`` classify as inside, never drifting across
    the edge through float rounding.
    """

    p_t: Fraction
    eps1: Fraction
    eps2: Fraction

    def __init__(self, p_t, eps1, eps2):
        object.__setattr__(self, "p_t", _as_fraction(p_t))
        object.__setattr__(self, "eps1", _as_fraction(eps1))
        object.__setattr__(self, "eps2", _as_fraction(eps2))
        if not (0 < self.lower <= self.p_t <= self.upper < 1):
            raise ValueError(
                f"interval [{self.lower}, {self.upper}] must satisfy "
                "0 < lower <= p_t <= upper < 1"
            )

    @property
    def lower(self) -> Fraction:
        return self.p_t - self.eps1

    @property
    def upper(self) -> Fraction:
        return self.p_t + self.eps2

    @property
    def lower_f(self) -> float:
        return float(self.lower)

    @property
    def upper_f(self) -> float:
        return float(self.upper)

    @property
    def p_t_f(self) -> float:
        return float(self.p_t)

    def contains(self, x: float) -> bool:
        return self.lower_f <= x <= self.upper_f


@dataclass(frozen=True)
class DoseGrid:
    """The ``(I+1) x (J+1)`` lattice with actual dosages per level.

    ``dosage_a[i-1]`` is the dosage of drug-A level ``i``; level 0 means the
    drug is absent (dosage 0).  Defaults to the level index as dosage.
    """

    dosage_a: tuple[float, ...]
    dosage_b: tuple[float, ...]

    def __init__(self, dosage_a, dosage_b):
        da = tuple(float(x) for x in dosage_a)
        db = tuple(float(x) for x in dosage_b)
        for name, d in (("dosage_a", da), ("dosage_b", db)):
            if len(d) < 1:
                raise ValueError(f"{name} needs at least one level")
            if any(x <= 0 for x in d) or any(b <= a for a, b in zip(d, d[1:])):
                raise ValueError(f"{name} must be positive and strictly increasing")
        object.__setattr__(self, "dosage_a", da)
        object.__setattr__(self, "dosage_b", db)

    @classmethod
    def from_levels(cls, n_a: int, n_b: int) -> "DoseGrid":
        return cls(range(1, n_a + 1), range(1, n_b + 1))

    @property
    def n_a(self) -> int:
        return len(self.dosage_a)

    @property
    def n_b(self) -> int:
        return len(self.dosage_b)

    def contains(self, d: DoseCombo) -> bool:
        if d == (0, 0):
            return False
        return 0 <= d.i <= self.n_a and 0 <= d.j <= self.n_b

    def all_dcs(self) -> Iterator[DoseCombo]:
        """The full index set: every lattice point except (0, 0), row-major."""
        for i in range(self.n_a + 1):
            for j in range(self.n_b + 1):
                if (i, j) != (0, 0):
                    yield DoseCombo(i, j)

    def combo_dcs(self) -> Iterator[DoseCombo]:
        for i in range(1, self.n_a + 1):
            for j in range(1, self.n_b + 1):
                yield DoseCombo(i, j)

    def dosage_of(self, d: DoseCombo) -> tuple[float, float]:
        x1 = self.dosage_a[d.i - 1] if d.i >= 1 else 0.0
        x2 = self.dosage_b[d.j - 1] if d.j >= 1 else 0.0
        return x1, x2

    def dose_sum(self, d: DoseCombo) -> float:
        x1, x2 = self.dosage_of(d)
        return x1 + x2


class Decision:
    """i3+3 dosing decisions. Dose-unacceptable (DU) is a safety flag, not a decision."""

    ESCALATE = "E"
    STAY = "S"
    DEESCALATE = "D"


@dataclass
class TrialData:
    """Per-DC enrollment and DLT counts; the sufficient statistics of a trial.

    Matrices are indexed ``[i, j]`` over the full lattice; ``(0, 0)`` stays
    zero.  Instances are mutated only by the trial orchestrator.
    """

    n: np.ndarray
    y: np.ndarray

    @classmethod
    def empty(cls, grid: DoseGrid) -> "TrialData":
        shape = (grid.n_a + 1, grid.n_b + 1)
        return cls(np.zeros(shape, dtype=np.int64), np.zeros(shape, dtype=np.int64))

    def add(self, d: DoseCombo, n: int, y: int) -> None:
        if not (0 <= y <= n):
            raise ValueError(f"need 0 <= y <= n, got n={n}, y={y}")
        if d == (0, 0):
            raise ValueError("(0,0) is not part of the lattice")
        self.n[d.i, d.j] += n
        self.y[d.i, d.j] += y

    def at(self, d: DoseCombo) -> tuple[int, int]:
        return int(self.n[d.i, d.j]), int(self.y[d.i, d.j])

    def tried(self, d: DoseCombo) -> bool:
        return self.n[d.i, d.j] > 0

    def tried_dcs(self, grid: DoseGrid) -> list[DoseCombo]:
        return [d for d in grid.all_dcs() if self.n[d.i, d.j] > 0]

    def total_n(self) -> int:
        return int(self.n.sum())

    def copy(self) -> "TrialData":
        return TrialData(self.n.copy(), self.y.copy())

    def validate(self) -> None:
        if (self.y < 0).any() or (self.n < 0).any() or (self.y > self.n).any():
            raise ValueError("counts must satisfy 0 <= y <= n elementwise")
        if self.n[0, 0] != 0 or self.y[0, 0] != 0:
            raise ValueError("(0,0) must carry no data")
