import math

import numpy as np
import pytest

from qslice.diagnostics import ess, ks_test
from qslice.distributions import INF
from qslice.samplers import MQSlice, run_chain
from qslice.ssm import (
    TABLE_COLUMNS,
    SSMConfig,
    TruncDLM,
    backward_params,
    cascade_pseudo_from_ffbs,
    forward_filter,
    qslice_tvp_update,
    run_ssm_demo,
    simulate_dlm,
    ssm_target,
)
from qslice.ssm import _MultiIMH
from qslice.streams import VariateStream


def model(T=5, lb=0.0, evo_rate=0.05, obs_var=0.25, obs=None, init_mean=0.3, init_var=1.0):
    times = np.cumsum(np.linspace(0.6, 1.4, T)) - 0.6
    if obs is None:
        obs = np.linspace(0.4, -0.1, T)
    return TruncDLM(times, obs, obs_var, init_mean, init_var, evo_rate, lb)


def dense_posterior(m):
    """Mean and covariance of the untruncated posterior by direct linear algebra."""
    T = m.T
    q = m.evo_var
    P = np.zeros((T, T))
    P[0, 0] = 1.0 / m.init_var
    for t in range(1, T):
        w = 1.0 / q[t - 1]
        P[t, t] += w
        P[t - 1, t - 1] += w
        P[t, t - 1] -= w
        P[t - 1, t] -= w
    P += np.eye(T) / m.obs_var
    b = m.obs / m.obs_var
    b[0] += m.init_mean / m.init_var
    cov = np.linalg.inv(P)
    return cov @ b, cov


# -- model --------------------------------------------------------------------


def test_model_validation():
    with pytest.raises(ValueError):
        TruncDLM([0.0, 0.0], [1.0, 1.0], 1.0, 0.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        TruncDLM([0.0], [1.0], 1.0, 0.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        TruncDLM([0.0, 1.0], [1.0, 1.0], -1.0, 0.0, 1.0, 0.1)


def test_evolution_variance_scales_with_gap():
    m = TruncDLM([0.0, 0.5, 2.0], [0.0, 0.0, 0.0], 1.0, 0.0, 1.0, 0.2)
    assert m.evo_var.tolist() == pytest.approx([0.1, 0.3])


def test_simulated_data_reproducible():
    a, b = simulate_dlm(seed=3), simulate_dlm(seed=3)
    assert np.array_equal(a.obs, b.obs) and a.T == 20


# -- filtering ----------------------------------------------------------------


def test_first_update_is_precision_weighted():
    m = model()
    f = forward_filter(m)
    prec = 1 / m.init_var + 1 / m.obs_var
    expect = (m.init_mean / m.init_var + m.obs[0] / m.obs_var) / prec
    assert f.ff_mean[0] == pytest.approx(expect, abs=1e-14)
    assert f.ff_var[0] == pytest.approx(1 / prec, abs=1e-14)


def test_noiseless_filter_tracks_observations():
    m = model(obs_var=1e-12)
    assert np.allclose(forward_filter(m).ff_mean, m.obs, atol=1e-9)


def test_static_level_matches_batch_conjugate():
    m = model(T=6, evo_rate=1e-14)
    f = forward_filter(m)
    for t in range(m.T):
        prec = 1 / m.init_var + (t + 1) / m.obs_var
        expect = (m.init_mean / m.init_var + m.obs[: t + 1].sum() / m.obs_var) / prec
        assert f.ff_mean[t] == pytest.approx(expect, abs=1e-9)


def test_backward_limits():
    alpha_next = 2.0
    loose = model(evo_rate=1e8)
    f = forward_filter(loose)
    mu, sd = backward_params(loose, f, alpha_next, 1)
    assert mu == pytest.approx(f.ff_mean[1], abs=1e-6)
    assert sd == pytest.approx(f.ff_sd[1], rel=1e-6)

    gaps = []
    sds = []
    for rate in (1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-6):
        m = model(evo_rate=rate)
        mu, sd = backward_params(m, forward_filter(m), alpha_next, 1)
        gaps.append(abs(mu - alpha_next))
        sds.append(sd)
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert all(b < a for a, b in zip(sds, sds[1:]))
    assert gaps[-1] < 1e-3


def test_backward_index_errors():
    m = model()
    f = forward_filter(m)
    with pytest.raises(IndexError):
        backward_params(m, f, 0.0, m.T - 1)
    with pytest.raises(IndexError):
        backward_params(m, f, 0.0, -1)


def test_ffbs_draws_match_dense_posterior():
    m = model(lb=-INF)
    pseudo = cascade_pseudo_from_ffbs(m, forward_filter(m), "normal")
    rng = VariateStream(1)
    n = 10_000
    draws = np.array([pseudo.sample(rng) for _ in range(n)])
    mean, cov = dense_posterior(m)
    se_mean = np.sqrt(np.diag(cov) / n)
    assert np.all(np.abs(draws.mean(axis=0) - mean) < 3 * se_mean)
    emp = np.cov(draws, rowvar=False)
    se_cov = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov ** 2) / n)
    assert np.all(np.abs(emp - cov) < 3 * se_cov)


# -- cascade pseudo -----------------------------------------------------------


def test_cascade_psi_is_uniform_under_its_own_law():
    m = model()
    pseudo = cascade_pseudo_from_ffbs(m, forward_filter(m), "t5")
    rng = VariateStream(2)
    psi = np.array([pseudo.to_psi(pseudo.sample(rng)) for _ in range(10_000)])
    for t in range(m.T):
        assert ks_test(psi[:, t], lambda u: u)[1] > 0.001


def test_t5_cascade_has_heavier_tails():
    m = model()
    f = forward_filter(m)
    pn = cascade_pseudo_from_ffbs(m, f, "normal")
    pt = cascade_pseudo_from_ffbs(m, f, "t5")
    x = pn.from_psi(np.full(m.T, 0.5))[0]
    for t in range(m.T):
        assert pt.conditional(t, x).inv_cdf(0.999) > pn.conditional(t, x).inv_cdf(0.999)


def test_cascade_order_is_last_to_first():
    m = model()
    assert cascade_pseudo_from_ffbs(m, forward_filter(m)).order == tuple(range(m.T - 1, -1, -1))


def test_cascade_respects_lower_bound():
    m = model()
    pseudo = cascade_pseudo_from_ffbs(m, forward_filter(m))
    x = pseudo.from_psi(np.full(m.T, 1e-9))[0]
    assert np.all(x >= 0.0)


# -- target and update --------------------------------------------------------


def test_target_below_bound():
    m = model()
    t = ssm_target(m)
    assert t.log_g(np.array([0.1, -0.01, 0.2, 0.3, 0.1])) == -INF
    assert np.isfinite(t.log_g(np.full(5, 0.2)))


def test_untruncated_target_matches_dense_density_ratio():
    m = model(lb=-INF)
    t = ssm_target(m)
    mean, cov = dense_posterior(m)
    P = np.linalg.inv(cov)
    a, b = mean + 0.3, mean - 0.2
    quad = lambda x: -0.5 * (x - mean) @ P @ (x - mean)  # noqa: E731
    assert t.log_g(a) - t.log_g(b) == pytest.approx(quad(a) - quad(b), abs=1e-10)


def test_exact_pseudo_never_rejects():
    m = model(lb=-INF)
    rng = VariateStream(3)
    x = np.full(m.T, 0.2)
    for _ in range(500):
        rec = qslice_tvp_update(m, x, "normal", rng)
        assert rec.n_rejects == 0 and rec.n_target_evals == 2
        x = rec.state


def test_far_from_bound_is_nearly_exact():
    m = model(obs=np.linspace(8.0, 9.0, 5), init_mean=8.0)
    rng = VariateStream(4)
    x = np.full(5, 8.5)
    rejects = []
    for _ in range(500):
        rec = qslice_tvp_update(m, x, "normal", rng)
        rejects.append(rec.n_rejects)
        x = rec.state
    assert np.mean(rejects) < 0.05


def test_counter_law_and_truncation_on_constrained_data():
    m = model()
    pseudo = cascade_pseudo_from_ffbs(m, forward_filter(m), "normal")
    res = run_chain(MQSlice(ssm_target(m), pseudo), np.full(5, 0.2), 5000, seed=5)
    assert np.all(res.evals_per_iter - res.rejects_per_iter == 2)
    assert np.all(res.draws >= 0.0)
    assert res.psis.shape == (5000, 5)


def test_mqslice_and_imh_posterior_means_agree():
    m = model()
    pseudo = cascade_pseudo_from_ffbs(m, forward_filter(m), "normal")
    target = ssm_target(m)
    a = run_chain(MQSlice(target, pseudo), np.full(5, 0.2), 10_000, 500, seed=6).draws
    b = run_chain(_MultiIMH(target, pseudo), np.full(5, 0.2), 10_000, 500, seed=7).draws
    for t in range(5):
        sa = a[:, t].std() / math.sqrt(ess(a[:, t]))
        sb = b[:, t].std() / math.sqrt(ess(b[:, t]))
        assert abs(a[:, t].mean() - b[:, t].mean()) < 3 * math.hypot(sa, sb)


# -- demo ---------------------------------------------------------------------


def test_demo_table_shape_and_orderings():
    cfg = SSMConfig(T=8, n_iter=800, burnin=100, samplers=("mqslice:normal", "mslice:1.0"))
    chains, table = run_ssm_demo(cfg)
    assert [tuple(row) for row in table] == [TABLE_COLUMNS, TABLE_COLUMNS]
    assert set(chains) == {"mqslice:normal", "mslice:1.0"}
    assert all(len(runs) == 2 for runs in chains.values())
    mq, ms = table
    assert mq["sampler"] == "MQSlice" and mq["settings"] == "Gaussian"
    assert ms["evals"] > mq["evals"]


def test_demo_rejects_unknown_sampler():
    with pytest.raises(ValueError):
        run_ssm_demo(SSMConfig(T=4, n_iter=10, burnin=0, samplers=("hmc",)))


def test_demo_is_deterministic():
    cfg = SSMConfig(T=5, n_iter=200, burnin=20, samplers=("mqslice:t5",))
    a, _ = run_ssm_demo(cfg)
    b, _ = run_ssm_demo(cfg)
    assert np.array_equal(a["mqslice:t5"][1].draws, b["mqslice:t5"][1].draws)
