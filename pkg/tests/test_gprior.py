import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qslice.gprior import (
    GammaSampler,
    GPriorModel,
    LaplaceError,
    dlog_fc_gamma,
    dlog_fc_loggamma,
    gamma_target,
    gibbs_beta,
    gibbs_sigma2,
    laplace_gamma,
    load_mtcars,
    log_fc_gamma,
    mtcars_model,
    run_gprior,
    run_gprior_chains,
    sigma2_rate,
)
from qslice.pseudo import auc_from_samples
from qslice.streams import VariateStream

M = mtcars_model()


def state(seed):
    """A plausible (beta, sigma2) pair drawn around the least-squares fit."""
    rng = np.random.default_rng(seed)
    beta = M.beta_hat * rng.uniform(0.3, 1.0) + 0.05 * rng.standard_normal(M.p)
    return beta, float(rng.uniform(0.1, 0.5))


class ShapeRecorder(VariateStream):
    def __init__(self):
        super().__init__(0)
        self.shapes = []

    def gamma(self, shape):
        self.shapes.append(shape)
        return super().gamma(shape)


# -- data and model -----------------------------------------------------------


def test_mtcars_shape_and_scaling():
    X, y, names = load_mtcars()
    assert X.shape == (32, 10) and y.shape == (32,)
    assert len(names) == 10
    assert np.allclose(X.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(X.std(axis=0, ddof=1), 1.0)
    assert M.gamma_bound == 300.0


def test_model_rejects_singular_design():
    X = np.ones((5, 2))
    with pytest.raises(ValueError):
        GPriorModel(X, np.zeros(5))


# -- full conditional ---------------------------------------------------------


def test_log_fc_formula_oracle():
    beta = M.beta_hat
    sigma2 = M.quad(beta) / 20.0
    assert log_fc_gamma(M, beta, sigma2, 1.0) == pytest.approx(-1.5 * math.log(2) - 10, abs=1e-12)
    assert log_fc_gamma(M, beta, sigma2, 1.0) == pytest.approx(-11.0397, abs=1e-4)


def test_log_fc_truncated_above_bound():
    beta, s2 = state(0)
    assert log_fc_gamma(M, beta, s2, 3 * M.p ** 2 + 1) == -math.inf
    assert log_fc_gamma(M, beta, s2, -1.0) == -math.inf


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 250.0))
def test_sigma2_doubling_identity(seed, g):
    beta, s2 = state(seed)
    diff = log_fc_gamma(M, beta, 2 * s2, g) - log_fc_gamma(M, beta, s2, g)
    assert diff == pytest.approx(M.quad(beta) / (4 * s2 * g), rel=1e-9)


def test_log_scale_target_adds_jacobian():
    beta, s2 = state(1)
    t = gamma_target(M, beta, s2, log_scale=True)
    for g in (0.5, 3.0, 40.0):
        assert t.log_g(math.log(g)) == pytest.approx(log_fc_gamma(M, beta, s2, g) + math.log(g))
    assert t.log_g(math.log(301.0)) == -math.inf


@pytest.mark.parametrize("seed", range(10))
def test_derivatives_match_finite_differences(seed):
    beta, s2 = state(seed)
    f = lambda g: log_fc_gamma(M, beta, s2, g)  # noqa: E731
    g = float(np.random.default_rng(seed).uniform(1.0, 100.0))
    h = 1e-4 * g
    fd1 = (f(g + h) - f(g - h)) / (2 * h)
    fd2 = (f(g + h) - 2 * f(g) + f(g - h)) / (h * h)
    d1, d2 = dlog_fc_gamma(M, beta, s2, g)
    assert d1 == pytest.approx(fd1, rel=1e-5)
    assert d2 == pytest.approx(fd2, rel=1e-5)

    t = gamma_target(M, beta, s2, log_scale=True)
    u, hu = math.log(g), 1e-4
    fd1 = (t.log_g(u + hu) - t.log_g(u - hu)) / (2 * hu)
    fd2 = (t.log_g(u + hu) - 2 * t.log_g(u) + t.log_g(u - hu)) / (hu * hu)
    d1, d2 = dlog_fc_loggamma(M, beta, s2, u)
    assert d1 == pytest.approx(fd1, rel=1e-5, abs=1e-9)
    assert d2 == pytest.approx(fd2, rel=1e-5)


# -- Laplace ------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(10))
def test_laplace_mode_plug_back(seed):
    beta, s2 = state(seed)
    d = laplace_gamma(M, beta, s2)
    assert abs(dlog_fc_gamma(M, beta, s2, d.location)[0]) < 1e-8
    assert d.scale == pytest.approx((-dlog_fc_gamma(M, beta, s2, d.location)[1]) ** -0.5)
    assert d.support == (0.0, 300.0)
    dl = laplace_gamma(M, beta, s2, log_scale=True)
    assert abs(dlog_fc_loggamma(M, beta, s2, dl.location)[0]) < 1e-8


def test_laplace_wide_is_exactly_one_and_a_half():
    beta, s2 = state(3)
    base = laplace_gamma(M, beta, s2, 5.0)
    wide = laplace_gamma(M, beta, s2, 5.0, inflate=1.5)
    assert wide.scale == 1.5 * base.scale
    assert wide.location == base.location and wide.df == 5


def test_laplace_needs_positive_quadratic_form():
    with pytest.raises(LaplaceError):
        laplace_gamma(M, np.zeros(M.p), 0.3)


# -- conjugate updates --------------------------------------------------------


@pytest.mark.parametrize("g", [1.0, 9.0])
def test_beta_draws_mean(g):
    rng = VariateStream(4)
    draws = np.array([gibbs_beta(M, 0.3, g, rng) for _ in range(10_000)])
    target = g / (1 + g) * M.beta_hat
    se = draws.std(axis=0) / math.sqrt(draws.shape[0])
    assert np.all(np.abs(draws.mean(axis=0) - target) < 3.0 * se + 1e-12)


def test_beta_draws_limits():
    rng = VariateStream(5)
    # sigma2 tiny, so the draw sits at its mean
    assert np.allclose(gibbs_beta(M, 1e-20, 1e12, rng), M.beta_hat, atol=1e-9)
    assert np.allclose(gibbs_beta(M, 1e-20, 1.0, rng), 0.5 * M.beta_hat, atol=1e-9)


def test_sigma2_precision_mean():
    rng = VariateStream(6)
    beta, _ = state(2)
    g = 12.0
    prec = np.array([1.0 / gibbs_sigma2(M, beta, g, rng) for _ in range(10_000)])
    expect = (M.ig_shape + 0.5 * (M.n + M.p)) / sigma2_rate(M, beta, g)
    assert abs(prec.mean() - expect) < 3.0 * prec.std() / math.sqrt(prec.size)


def test_sigma2_shape_arithmetic():
    rec = ShapeRecorder()
    gibbs_sigma2(M, M.beta_hat, 5.0, rec)
    assert rec.shapes == [23.5]


def test_sigma2_rate_edge_case():
    X = np.random.default_rng(0).standard_normal((8, 2))
    m = GPriorModel(X, np.zeros(8))
    assert sigma2_rate(m, np.zeros(2), 4.0) == m.ig_scale


# -- Gibbs runs ---------------------------------------------------------------


def test_sampler_config_validation():
    with pytest.raises(ValueError):
        GammaSampler("hmc")
    with pytest.raises(ValueError):
        GammaSampler("qslice", "bogus")
    assert GammaSampler("qslice").pseudo == "laplace-wide"
    assert GammaSampler("rwm", "laplace").pseudo is None


@pytest.mark.parametrize("log_scale", [False, True])
def test_draws_respect_truncation(log_scale):
    run = run_gprior(mtcars_model(), GammaSampler("qslice", "laplace"), 3000, burnin=500,
                     seed=2, on_log_scale=log_scale)
    assert np.all((run.chain.draws > 0) & (run.chain.draws < 300.0))
    assert np.all(run.chain.evals_per_iter - run.chain.rejects_per_iter == 2)


def test_sample_based_pseudo_fits_timed_psi():
    run = run_gprior(mtcars_model(), GammaSampler("qslice", "auc-samples"), 5000, burnin=3000,
                     seed=3)
    assert run.fixed_pseudo is not None
    assert auc_from_samples(run.chain.draws, run.fixed_pseudo) >= 0.5


def test_race_trace_property():
    run = run_gprior(mtcars_model(), GammaSampler("stepout"), 500, burnin=500, seed=4,
                     tune_iters=300)
    assert len(run.race.rounds) == 5
    for rnd in run.race.rounds:
        k = rnd.values.index(rnd.best)
        assert all(rnd.esps[k] >= e for e in rnd.esps)
    assert run.tuning == run.race.best


def test_imh_always_two_evals():
    run = run_gprior(mtcars_model(), GammaSampler("imh", "laplace"), 1000, burnin=200, seed=5)
    assert np.all(run.chain.evals_per_iter == 2)


def test_chains_are_reproducible():
    s = GammaSampler("qslice", "laplace-wide")
    a = run_gprior(mtcars_model(), s, 500, burnin=200, seed=6)
    b = run_gprior(mtcars_model(), s, 500, burnin=200, seed=6)
    assert np.array_equal(a.chain.draws, b.chain.draws)


def test_cross_kernel_means_agree():
    def mean_se(kind, pseudo):
        runs = run_gprior_chains(mtcars_model(), GammaSampler(kind, pseudo), 10_000, 2000,
                                 n_chains=2, seed=7)
        d = np.concatenate([r.chain.draws for r in runs])
        e = sum(r.report.ess for r in runs)
        return d.mean(), d.std() / math.sqrt(e), runs[0].report.psrf_upper95

    m1, s1, r1 = mean_se("stepout", None)
    m2, s2, r2 = mean_se("qslice", "auc-samples")
    assert abs(m1 - m2) < 3.0 * math.hypot(s1, s2)
    assert r1 < 1.05 and r2 < 1.05
