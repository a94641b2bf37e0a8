import numpy as np
import pytest

from mci3p3.betabin import SELECTION_PRIOR
from mci3p3.core import DoseGrid, EquivalenceInterval, TrialData, dc
from mci3p3.isotonic import (
    fit_combo_surface,
    isotonic_2d,
    pava,
    posterior_means,
    select_mtdc,
    select_mtdc_multiple,
)


def brute_force_projection(m: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Independent oracle: solve the constrained QP with cvxpy."""
    import cvxpy as cp

    x = cp.Variable(m.shape)
    obj = cp.Minimize(cp.sum(cp.multiply(w, cp.square(x - m))))
    cons = []
    for r in range(m.shape[0]):
        for c in range(m.shape[1]):
            if r + 1 < m.shape[0]:
                cons.append(x[r + 1, c] >= x[r, c])
            if c + 1 < m.shape[1]:
                cons.append(x[r, c + 1] >= x[r, c])
    cp.Problem(obj, cons).solve(solver=cp.CLARABEL)
    return np.asarray(x.value)


def is_monotone(x: np.ndarray) -> bool:
    return bool(
        (np.diff(x, axis=0) >= 0).all() and (np.diff(x, axis=1) >= 0).all()
    )


class TestPava:
    def test_matches_scipy_on_random_lines(self):
        from scipy.optimize import isotonic_regression as scipy_iso

        rng = np.random.default_rng(5)
        for _ in range(50):
            k = int(rng.integers(1, 12))
            y = rng.normal(size=k)
            w = rng.uniform(0.1, 3.0, size=k)
            want = scipy_iso(y, weights=w).x
            got = pava(y, w)
            assert np.allclose(got, want, atol=1e-8)

    def test_monotone_input_unchanged(self):
        y = np.array([0.1, 0.2, 0.2, 0.7])
        assert np.array_equal(pava(y, np.ones(4)), y)


class TestIsotonic2D:
    def test_monotone_input_is_fixed_point(self):
        m = np.array([[0.1, 0.2, 0.3], [0.2, 0.3, 0.4]])
        out = isotonic_2d(m, np.ones_like(m)).estimates
        assert np.allclose(out, m, atol=1e-12)

    def test_single_row_reduces_to_pava(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            y = rng.normal(size=6)
            w = rng.uniform(0.5, 2.0, size=6)
            got = isotonic_2d(y[None, :], w[None, :]).estimates[0]
            assert np.allclose(got, pava(y, w), atol=1e-8)

    def test_single_column_reduces_to_pava(self):
        rng = np.random.default_rng(12)
        y = rng.normal(size=5)
        got = isotonic_2d(y[:, None], np.ones((5, 1))).estimates[:, 0]
        assert np.allclose(got, pava(y, np.ones(5)), atol=1e-8)

    @pytest.mark.parametrize("shape", [(2, 2), (2, 3)])
    def test_matches_brute_force_qp(self, shape):
        rng = np.random.default_rng(7)
        for _ in range(50):
            m = rng.uniform(0.0, 1.0, size=shape)
            w = np.ones(shape)
            got = isotonic_2d(m, w).estimates
            want = brute_force_projection(m, w)
            assert np.abs(got - want).max() < 1e-4
            assert is_monotone(got)

    def test_output_exactly_monotone_on_random_instances(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            m = rng.uniform(0, 1, size=(4, 5))
            w = rng.uniform(0.01, 20.0, size=(4, 5))
            out = isotonic_2d(m, w).estimates
            assert is_monotone(out)

    def test_projection_beats_naive_clipping(self):
        # The projection's objective must not exceed that of a heuristic
        # monotone completion (here: running max along both axes).
        rng = np.random.default_rng(9)
        for _ in range(500):
            m = rng.uniform(0, 1, size=(3, 3))
            w = np.ones((3, 3))
            proj = isotonic_2d(m, w).estimates
            heur = np.maximum.accumulate(np.maximum.accumulate(m, axis=0), axis=1)
            obj = lambda x: ((x - m) ** 2 * w).sum()
            assert obj(proj) <= obj(heur) + 1e-10

    def test_zero_weight_matrix_rejected(self):
        with pytest.raises(ValueError):
            isotonic_2d(np.ones((2, 2)), np.zeros((2, 2)))


class TestPosteriorMeans:
    def test_paper_arithmetic(self, grid45):
        data = TrialData.empty(grid45)
        data.add(dc(2, 3), 15, 5)
        means = posterior_means(data, grid45)
        assert means[1, 2] == pytest.approx(5.005 / 15.01, abs=1e-12)

    def test_untried_sits_at_half(self, grid45):
        means = posterior_means(TrialData.empty(grid45), grid45)
        assert np.allclose(means, 0.5)

    def test_clean_triplet(self, grid45):
        data = TrialData.empty(grid45)
        data.add(dc(1, 1), 3, 0)
        means = posterior_means(data, grid45)
        assert means[0, 0] == pytest.approx(0.005 / 3.01, abs=1e-12)


def final_walkthrough_data(grid: DoseGrid) -> TrialData:
    data = TrialData.empty(grid)
    for (i, j), (n, y) in {
        (1, 4): (3, 0),
        (1, 5): (3, 0),
        (2, 2): (3, 0),
        (2, 3): (15, 5),
        (2, 4): (3, 2),
        (3, 1): (3, 0),
        (3, 2): (3, 0),
        (4, 1): (6, 2),
        (4, 2): (12, 5),
    }.items():
        data.add(dc(i, j), n, y)
    return data


class TestSelectMtdc:
    def test_walkthrough_terminal_selection(self, grid45):
        data = final_walkthrough_data(grid45)
        fit = fit_combo_surface(data, grid45)
        best = select_mtdc(data, fit, grid45, 0.3)
        assert best == dc(2, 3)

    def test_single_tried_dc_wins(self, grid45):
        data = TrialData.empty(grid45)
        data.add(dc(1, 2), 3, 1)
        fit = fit_combo_surface(data, grid45)
        assert select_mtdc(data, fit, grid45, 0.3) == dc(1, 2)

    def test_untried_never_selected(self, grid45):
        data = TrialData.empty(grid45)
        assert select_mtdc(data, fit_combo_surface(data, grid45), grid45, 0.3) is None

    def test_eliminated_excluded(self, grid45):
        data = TrialData.empty(grid45)
        data.add(dc(1, 1), 3, 1)
        data.add(dc(1, 2), 3, 1)
        fit = fit_combo_surface(data, grid45)
        best = select_mtdc(data, fit, grid45, 0.3, eliminated={dc(1, 2)})
        assert best == dc(1, 1)

    def test_closest_beats_larger_error(self, grid45):
        data = TrialData.empty(grid45)
        data.add(dc(1, 1), 25, 7)   # mean ~ 0.28
        data.add(dc(2, 2), 10, 4)   # mean ~ 0.40
        fit = fit_combo_surface(data, grid45)
        assert select_mtdc(data, fit, grid45, 0.3) == dc(1, 1)

    def test_argmin_invariant_under_monotone_transform(self, grid45):
        # Squaring all distances cannot change the argmin.
        data = final_walkthrough_data(grid45)
        fit = fit_combo_surface(data, grid45)
        eligible = [d for d in grid45.combo_dcs() if data.tried(d)]
        d1 = min(eligible, key=lambda d: abs(fit.at(d) - 0.3))
        d2 = min(eligible, key=lambda d: abs(fit.at(d) - 0.3) ** 2)
        assert d1 == d2 == select_mtdc(data, fit, grid45, 0.3)


class TestSelectMtdcMultiple:
    def test_interval_membership(self, grid45):
        ei = EquivalenceInterval(0.3, 0.05, 0.05)
        data = TrialData.empty(grid45)
        data.add(dc(1, 1), 50, 13)  # ~0.26
        data.add(dc(1, 2), 50, 15)  # ~0.30
        data.add(dc(2, 2), 40, 18)  # ~0.45
        fit = fit_combo_surface(data, grid45)
        got = select_mtdc_multiple(data, fit, grid45, ei)
        assert got == [dc(1, 1), dc(1, 2)]

    def test_no_values_in_interval(self, grid45):
        ei = EquivalenceInterval(0.3, 0.05, 0.05)
        data = TrialData.empty(grid45)
        data.add(dc(1, 1), 20, 1)
        fit = fit_combo_surface(data, grid45)
        assert select_mtdc_multiple(data, fit, grid45, ei) == []

    def test_walkthrough_contains_2_3(self, grid45):
        ei = EquivalenceInterval(0.3, 0.05, 0.05)
        data = final_walkthrough_data(grid45)
        fit = fit_combo_surface(data, grid45)
        assert dc(2, 3) in select_mtdc_multiple(data, fit, grid45, ei)
