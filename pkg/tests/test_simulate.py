import numpy as np
import pytest

from mnar import ConfigError, SimConfig, StationarityError, simulate
from mnar.model import ModelParams, check_stationarity, conditional_mean
from mnar.simulate import gen_covariates, gen_parameters, gen_powerlaw_network, simulate_panel, true_probs
from oracles import truncated_powerlaw_ccdf


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [dict(powerlaw_exponent=1.0), dict(uni_prob=0.0), dict(uni_prob=1.5), dict(burn_in=-1),
         dict(lambda_val=0.6, gamma_val=0.5), dict(mechanism="MNAR")],
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            SimConfig(**kw)

    def test_dict_round_trip(self):
        cfg = SimConfig(n1=7, beta_range=(-1, 1))
        assert SimConfig.from_dict(cfg.to_dict()) == cfg


class TestPowerlaw:
    def test_two_nodes(self, rng):
        np.testing.assert_array_equal(gen_powerlaw_network(2, 2.5, rng), [[0, 1], [1, 0]])

    def test_too_small(self, rng):
        with pytest.raises(ConfigError):
            gen_powerlaw_network(1, 2.5, rng)

    def test_zero_diagonal_and_column_sums(self, rng):
        a = gen_powerlaw_network(60, 2.5, rng)
        assert np.all(np.diag(a) == 0)
        assert a.sum(axis=0).min() >= 1

    def test_in_degrees_are_the_draws(self):
        # replay the degree draw with the same stream
        from mnar.simulate import powerlaw_pmf

        a = gen_powerlaw_network(40, 2.5, np.random.default_rng(3))
        support, pmf = powerlaw_pmf(40, 2.5)
        degrees = np.random.default_rng(3).choice(support, size=40, p=pmf)
        np.testing.assert_array_equal(a.sum(axis=0), degrees)

    def test_ccdf_slope(self):
        a = gen_powerlaw_network(500, 2.5, np.random.default_rng(11))
        deg = a.sum(axis=0)
        h = np.arange(1, 31)
        emp = np.array([(deg >= k).mean() for k in h])
        keep = emp > 0
        slope = np.polyfit(np.log(h[keep]), np.log(emp[keep]), 1)[0]
        hs, exact = truncated_powerlaw_ccdf(500, 2.5)
        exact_slope = np.polyfit(np.log(hs[:30]), np.log(exact[:30]), 1)[0]
        assert abs(slope + 1.5) <= 0.3
        assert abs(exact_slope + 1.5) <= 0.3


class TestParameters:
    def test_identification_sparsity_rank(self, rng):
        cfg = SimConfig(n1=40, n2=30)
        cov = gen_covariates(40, 6, rng)
        p = gen_parameters(cfg, cov, rng)
        assert p.identification_gap(cov) < 1e-8
        assert abs(np.mean(p.beta == 0) - 0.95) <= 1 / p.beta.size
        assert np.linalg.matrix_rank(p.intercept_b) <= 10
        assert np.all(p.lam == 0.45) and np.all(p.gam == 0.45)

    def test_rank_too_large(self, rng):
        cfg = SimConfig(n1=8, n2=8, b_rank=8)
        with pytest.raises(ConfigError):
            gen_parameters(cfg, gen_covariates(8, 2, rng), rng)


class TestPanel:
    def test_noiseless_static(self):
        cfg = SimConfig(n1=6, n2=5, horizon=4, noise_sd=0.0, lambda_val=0.0, gamma_val=0.0, b_rank=2, seed=1)
        sim = simulate(cfg)
        static = sim.params.static_mean(sim.cov)
        for t in range(4):
            np.testing.assert_allclose(sim.truth[t], static, atol=1e-14)

    def test_mar_probability_at_zero_covariates(self):
        cfg = SimConfig(n1=4, p=3)
        from mnar.model import Covariates

        cov = Covariates(np.column_stack([np.ones(4), np.zeros((4, 2))]))
        # the constant columns drop out of the design, leaving the intercept only
        assert true_probs(cfg, cov)[0] == pytest.approx(1 / (1 + np.exp(1.3)))
        cov2 = Covariates(np.column_stack([np.ones(4), np.r_[0.0, 1, 2, 3]]))
        assert true_probs(cfg, cov2)[0] == pytest.approx(0.2142, abs=1e-4)

    def test_uniform_rate(self):
        sim = simulate(SimConfig(n1=100, n2=100, horizon=30, mechanism="UNI", seed=5))
        assert abs(sim.panel.observed_rate() - 0.2) <= 0.005

    def test_mar_row_frequencies(self):
        sim = simulate(SimConfig(n1=30, n2=100, horizon=30, seed=9))
        freq = sim.panel.mask.mean(axis=(0, 2))
        p = sim.probs
        bound = 3 * np.sqrt(p * (1 - p) / (100 * 30))
        # 3-sigma per row; allow the rare row beyond it
        assert np.mean(np.abs(freq - p) < bound) >= 0.95

    def test_seeded_determinism(self):
        cfg = SimConfig(n1=12, n2=9, horizon=6, b_rank=2, seed=42)
        a, b = simulate(cfg), simulate(cfg)
        assert a.panel.responses.tobytes() == b.panel.responses.tobytes()
        assert a.panel.mask.tobytes() == b.panel.mask.tobytes()
        assert a.nets.a1.tobytes() == b.nets.a1.tobytes()

    def test_noiseless_burn_in_reaches_fixed_point(self):
        cfg = SimConfig(n1=10, n2=10, horizon=1, noise_sd=0.0, b_rank=3, seed=2, burn_in=400)
        sim = simulate(cfg)
        nxt = conditional_mean(sim.truth[0], sim.params, sim.nets, sim.cov)
        assert np.abs(nxt - sim.truth[0]).max() < 1e-6

    def test_nonstationary_rejected(self, tiny_sim):
        cfg = tiny_sim.config
        p = tiny_sim.params
        bad = ModelParams(np.full(cfg.n1, 0.7), np.full(cfg.n2, 0.7), p.beta, p.intercept_b)
        assert not check_stationarity(bad).stationary
        with pytest.raises(StationarityError):
            simulate_panel(cfg, tiny_sim.nets, bad, tiny_sim.cov, np.random.default_rng(0))
