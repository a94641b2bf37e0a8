import mpmath as mp
import pytest

from mci3p3.core import DoseGrid, EquivalenceInterval


@pytest.fixture(scope="session")
def grid45() -> DoseGrid:
    return DoseGrid.from_levels(4, 5)


@pytest.fixture(scope="session")
def ei_default() -> EquivalenceInterval:
    return EquivalenceInterval(0.3, 0.05, 0.05)


def beta_interval_oracle(n: int, y: int, lo: float, hi: float, a0: float, b0: float) -> float:
    """Adaptive-quadrature oracle for the Beta posterior interval mass.

    Independent of the incomplete-beta continued-fraction route the
    implementation uses.  Interior intervals are integrated directly; a
    boundary at 0 uses the substitution u = p^a, which removes the
    p^(a-1) endpoint singularity exactly (the integrand becomes
    (1 - u^(1/a))^(b-1) / a, regular on [0, t^a] for t < 1).
    """
    with mp.workdps(40):
        a, b = mp.mpf(a0) + y, mp.mpf(b0) + (n - y)
        norm = mp.beta(a, b)
        lo, hi = mp.mpf(lo), mp.mpf(hi)

        def lower_mass(t):  # integral over [0, t], t < 1
            if t == 0:
                return mp.mpf(0)
            g = lambda u: (1 - u ** (1 / a)) ** (b - 1) / a
            return mp.quad(g, [0, t**a]) / norm

        if lo == 0 and hi == 1:
            return 1.0
        if lo == 0:
            return float(lower_mass(hi))
        if hi == 1:
            return float(1 - lower_mass(lo))
        f = lambda p: p ** (a - 1) * (1 - p) ** (b - 1)
        return float(mp.quad(f, [lo, hi]) / norm)


def beta_exceed_oracle(n: int, y: int, t: float, a0: float, b0: float) -> float:
    return beta_interval_oracle(n, y, t, 1.0, a0, b0)
