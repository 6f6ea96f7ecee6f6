import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mnar import (
    Covariates,
    IllPosedWeightingError,
    PanelSeries,
    SimConfig,
    SingularFitError,
    build_weighted_panel,
    estimate_uniform_rate,
    fit_logistic_missing,
    simulate,
)
from mnar.missingness import MissingModel, mar_design


def test_identical_rows_give_intercept_mle(rng):
    mask = (rng.random((5, 8, 9)) < 0.3).astype(int)
    cov = Covariates(np.ones((8, 1)))
    mm = fit_logistic_missing(mask, cov)
    q = mask.mean()
    np.testing.assert_allclose(mm.probs, q, atol=1e-10)
    assert mm.alpha[0] == pytest.approx(np.log(q / (1 - q)), abs=1e-8)
    assert mm.converged


def test_mar_design_drops_constant_columns():
    cov = Covariates(np.column_stack([np.ones(4), np.arange(4.0), np.full(4, 2.0)]))
    np.testing.assert_array_equal(mar_design(cov), np.column_stack([np.ones(4), np.arange(4.0)]))


def test_logistic_recovers_alpha():
    sim = simulate(SimConfig(n1=200, n2=200, horizon=30, seed=21))
    mm = fit_logistic_missing(sim.panel.mask, sim.cov)
    assert np.all(np.abs(mm.alpha - np.r_[-1.3, np.full(5, 0.1)]) <= 0.05)


@pytest.mark.parametrize("value", [0, 1])
def test_degenerate_mask(value):
    with pytest.raises(SingularFitError):
        fit_logistic_missing(np.full((2, 3, 3), value), Covariates(np.ones((3, 1))))


def test_perfect_separation():
    x = np.column_stack([np.ones(6), np.arange(6.0)])
    mask = np.zeros((2, 6, 4), dtype=int)
    mask[:, 3:] = 1
    with pytest.raises(SingularFitError):
        fit_logistic_missing(mask, Covariates(x))


def test_uniform_rate():
    mask = np.indices((2, 4, 4)).sum(axis=0) % 2
    assert estimate_uniform_rate(mask).probs[0] == 0.5
    assert estimate_uniform_rate(np.ones((2, 3, 3))).probs[0] == 1.0
    sim = simulate(SimConfig(n1=100, n2=100, horizon=30, mechanism="UNI", seed=4))
    assert abs(estimate_uniform_rate(sim.panel.mask).probs[0] - 0.2) <= 0.01


class TestWeightedPanel:
    def test_full_observation_is_identity(self, rng):
        y = rng.standard_normal((4, 3, 2))
        wp = build_weighted_panel(PanelSeries(y, np.ones_like(y)), MissingModel.known(np.ones(3)))
        np.testing.assert_array_equal(wp.z, y)

    def test_single_entry(self):
        panel = PanelSeries(np.array([[[2.0, 5.0]]]), [[[1, 0]]])
        wp = build_weighted_panel(panel, MissingModel.known([0.5]))
        np.testing.assert_array_equal(wp.z, [[[4.0, 0.0]]])

    def test_floor(self):
        panel = PanelSeries(np.ones((2, 2, 2)), np.ones((2, 2, 2)))
        with pytest.raises(IllPosedWeightingError):
            build_weighted_panel(panel, MissingModel.known([0.5, 1e-4]))

    def test_monte_carlo_unbiased(self):
        r = np.random.default_rng(0)
        mask = (r.random((10_000, 1, 1)) < 0.25).astype(int)
        panel = PanelSeries(np.ones((10_000, 1, 1)), mask)
        wp = build_weighted_panel(panel, MissingModel.known([0.25]))
        assert abs(wp.z.mean() - 1.0) <= 0.03

    @settings(max_examples=40)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 6))
    def test_properties(self, seed, T):
        r = np.random.default_rng(seed)
        y = r.standard_normal((T, 4, 3)) * 3
        mask = (r.random(y.shape) < 0.6).astype(int)
        probs = r.uniform(0.05, 1.0, 4)
        wp = build_weighted_panel(PanelSeries(y, mask), MissingModel.known(probs))
        assert np.all(wp.z[mask == 0] == 0)
        np.testing.assert_allclose(wp.z[mask == 1], (y / probs[None, :, None])[mask == 1])
        assert np.abs(wp.z_centered.sum(axis=0)).max() < 1e-10
        assert np.abs(wp.z_lag_centered.mean(axis=0)).max() < 1e-10
        # Z (Y - Z) = Z^2 (p - 1) on observed entries
        lhs = (wp.z * (y - wp.z))[mask == 1]
        np.testing.assert_allclose(lhs, wp.ipw_excess[mask == 1], rtol=0, atol=1e-10 * max(1, np.abs(lhs).max()))
