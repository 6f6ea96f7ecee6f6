import numpy as np

from mnar import PanelSeries, Step2Config, build_weighted_panel, svt_avg, svt_sep, svt_sum
from mnar.baselines import StaticFit, pooled_objective
from mnar.missingness import MissingModel
from mnar.step2 import fit_beta, fit_intercept_b
from conftest import make_cov


def wp_of(y, mask=None, probs=None):
    mask = np.ones_like(y) if mask is None else mask
    probs = np.ones(y.shape[1]) if probs is None else probs
    return build_weighted_panel(PanelSeries(y, mask), MissingModel.known(probs))


def same(a: StaticFit, b: StaticFit, **kw):
    np.testing.assert_allclose(a.beta_hat, b.beta_hat, **kw)
    np.testing.assert_allclose(a.b_hat, b.b_hat, **kw)


def test_single_period_all_agree(rng):
    cov = make_cov(rng, 8)
    y = rng.standard_normal((1, 8, 5))
    cfg = Step2Config(1.0, 2.0, 0.8)
    wp = wp_of(y)
    sep = svt_sep(wp, cov, cfg)
    assert len(sep) == 1
    np.testing.assert_allclose(sep[0].beta_hat, fit_beta(y[0], cov, cfg))
    np.testing.assert_allclose(sep[0].b_hat, fit_intercept_b(y[0], cov, cfg)[0])
    same(svt_avg(wp, cov, cfg), sep[0])
    same(svt_sum(wp, cov, cfg), sep[0], atol=1e-12)


def test_static_data_gives_identical_fits(rng):
    cov = make_cov(rng, 8)
    y = np.repeat(rng.standard_normal((1, 8, 5)), 4, axis=0)
    sep = svt_sep(wp_of(y), cov, Step2Config())
    for f in sep[1:]:
        same(f, sep[0], rtol=0, atol=0)


def test_avg_beta_is_beta_of_mean(rng):
    cov = make_cov(rng, 8)
    y = rng.standard_normal((6, 8, 5))
    mask = (rng.random(y.shape) < 0.7).astype(int)
    wp = wp_of(y, mask, rng.uniform(0.5, 1, 8))
    cfg = Step2Config(0.5, 3.0, 1.0)
    np.testing.assert_allclose(svt_avg(wp, cov, cfg).beta_hat, fit_beta(wp.zbar, cov, cfg), atol=1e-12)


def test_sum_equals_avg_without_nuclear_part(rng):
    cov = make_cov(rng, 8)
    wp = wp_of(rng.standard_normal((6, 8, 5)))
    cfg = Step2Config(0.5, 3.0, 0.0)
    same(svt_sum(wp, cov, cfg), svt_avg(wp, cov, cfg), atol=1e-12)


def test_sum_minimizes_pooled_objective(rng):
    cov = make_cov(rng, 10)
    wp = wp_of(rng.standard_normal((7, 10, 6)) * 2)
    cfg = Step2Config(0.5, 4.0, 0.9)
    s = pooled_objective(wp, cov, svt_sum(wp, cov, cfg), cfg)
    a = pooled_objective(wp, cov, svt_avg(wp, cov, cfg), cfg)
    assert s <= a + 1e-10


def test_networks_are_ignored():
    # the baselines take no network argument, so edges cannot influence them
    import inspect

    for f in (svt_sep, svt_avg, svt_sum):
        assert not any("net" in name for name in inspect.signature(f).parameters)
