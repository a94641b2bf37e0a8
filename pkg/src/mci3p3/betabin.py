"""Beta-Binomial posterior probabilities and the dose-selection utility.

With a ``Beta(a0, b0)`` prior and ``y`` DLTs out of ``n`` patients, the DLT
probability has posterior ``Beta(a0 + y, b0 + n - y)``.  Interval and tail
masses are evaluated through the regularized incomplete beta function, which
is accurate to well below the 1e-10 the utility tie-breaking needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from scipy.special import betainc, betaincc

from .core import EquivalenceInterval


@dataclass(frozen=True)
class BetaPrior:
    a0: float
    b0: float

    def __post_init__(self):
        if self.a0 <= 0 or self.b0 <= 0:
            raise ValueError("prior parameters must be positive")


#: Prior for dosing decisions and utilities.
DECISION_PRIOR = BetaPrior(0.05, 0.05)
#: Prior for final posterior means entering the isotonic fit.
SELECTION_PRIOR = BetaPrior(0.005, 0.005)

#: Default tie-breaking fraction for the utility's dosage bump.
DEFAULT_EPS = 1e-6


def _check_counts(n: int, y: int) -> None:
    if n < 0 or y < 0 or y > n:
        raise ValueError(f"need 0 <= y <= n, got n={n}, y={y}")


def interval_prob(
    n: int, y: int, lo: float, hi: float, prior: BetaPrior = DECISION_PRIOR
) -> float:
    """Posterior probability that the DLT rate lies in ``[lo, hi]``."""
    _check_counts(n, y)
    if not (0.0 <= lo <= hi <= 1.0):
        raise ValueError(f"need 0 <= lo <= hi <= 1, got [{lo}, {hi}]")
    a, b = prior.a0 + y, prior.b0 + n - y
    return float(betainc(a, b, hi) - betainc(a, b, lo))


def exceed_prob(
    n: int, y: int, threshold: float, prior: BetaPrior = DECISION_PRIOR
) -> float:
    """Posterior probability that the DLT rate exceeds ``threshold``."""
    _check_counts(n, y)
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must be in (0,1), got {threshold}")
    a, b = prior.a0 + y, prior.b0 + n - y
    # betaincc is the complement evaluated directly; better tail accuracy
    # than 1 - betainc.
    return float(betaincc(a, b, threshold))


def utility(
    n: int,
    y: int,
    dose_sum: float,
    ei: EquivalenceInterval,
    eps: float = DEFAULT_EPS,
    prior: BetaPrior = DECISION_PRIOR,
) -> float:
    """Selection utility: EI mass plus a dosage-scaled tie-breaking bump.

    The bump ``delta = dose_sum * eps`` is added when the observed rate is at
    or below target (preferring the higher dosage among ties) and subtracted
    when above.  Untried DCs also get ``+delta``: among untried candidates
    with equal interval mass, the higher total dosage wins, which is the
    behavior that keeps escalation moving through fresh territory.
    """
    _check_counts(n, y)
    u = interval_prob(n, y, ei.lower_f, ei.upper_f, prior)
    delta = dose_sum * eps
    if n > 0 and Fraction(y, n) > ei.p_t:
        return u - delta
    return u + delta
