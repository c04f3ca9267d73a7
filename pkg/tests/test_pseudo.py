import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qslice.distributions import INF, UnnormTarget, cauchy, gamma, normal, std_target, student_t, uniform
from qslice.pseudo import (
    CurvatureError,
    InsufficientDataError,
    UnboundedRatioError,
    auc_from_samples,
    auc_quadrature,
    h_psi,
    laplace_pseudo,
    moment_match_pseudo,
    msw,
    msw_from_weights,
    optimize_pseudo,
    psi_diagnostics,
)

NORMAL = std_target("normal")
GAMMA = std_target("gamma2.5")
INVGAMMA = std_target("invgamma2")


def iid_imh_acceptance(target_draws, pseudo, target, rng):
    """MC estimate of E[min(1, h(x*)/h(x0))], x0 ~ target and x* ~ pseudo."""
    xs = pseudo.inv_cdf_array(rng.random(target_draws.size))
    lh0 = target.log_g_vec(target_draws) - pseudo.log_pdf_array(target_draws)
    lhs = target.log_g_vec(xs) - pseudo.log_pdf_array(xs)
    a = np.exp(np.minimum(0.0, lhs - lh0))
    return a.mean(), a.std() / math.sqrt(a.size)


# -- MSW ----------------------------------------------------------------------


def test_msw_exact_pseudo_is_one():
    assert msw(NORMAL, normal()) == pytest.approx(1.0, abs=1e-12)


def test_msw_matches_imh_acceptance():
    rng = np.random.default_rng(1)
    p = student_t(0, 2, 5)
    mc, se = iid_imh_acceptance(rng.standard_normal(400_000), p, NORMAL, rng)
    assert abs(msw(NORMAL, p) - mc) < 3.0 * se


def test_msw_off_center_pseudo_is_small():
    assert msw(NORMAL, student_t(5, 1, 5)) < 0.2


def test_msw_step_function_oracle():
    # h = (1, 2) on two halves: alpha = (1+1)/3 and (1+2)/3
    assert msw_from_weights(np.array([1.0, 2.0])) == pytest.approx(0.5 * (2 / 3 + 1.0))


def test_unbounded_ratio_is_reported():
    # density ~ |x - 0.5|^(-1/2); an odd midpoint grid has a node at 0.5
    pole = UnnormTarget(lambda x: -0.5 * np.log(abs(x - 0.5)), (0.0, 1.0), "pole")
    with np.errstate(divide="ignore"):
        with pytest.raises(UnboundedRatioError, match="psi=0.5"):
            h_psi(pole, uniform(0.0, 1.0), n_grid=1025)


# -- AUC ----------------------------------------------------------------------


def test_auc_exact_pseudo_is_one():
    assert auc_quadrature(GAMMA, gamma(2.5)) == pytest.approx(1.0, abs=1e-12)


def test_auc_prefers_tuned_scale_to_diffuse():
    assert auc_quadrature(NORMAL, student_t(0, 1, 20)) > auc_quadrature(NORMAL, student_t(0, 4, 20))


def test_auc_cauchy_matches_fine_reference():
    n = 1_000_000
    psi = (np.arange(n) + 0.5) / n
    x = np.tan(math.pi * (psi - 0.5))
    lh = -0.5 * x * x + np.log(math.pi * (1 + x * x))
    ref = float(np.exp(lh - lh.max()).mean())
    assert auc_quadrature(NORMAL, cauchy()) == pytest.approx(ref, abs=1e-4)


def test_auc_from_uniform_psi_is_one():
    p = student_t(0.5, 1.3, 5)
    psi = (np.arange(3000) + 0.5) / 3000
    assert auc_from_samples(p.inv_cdf_array(psi), p, bins=30) == 1.0


def test_auc_from_single_bin():
    p = normal()
    samples = np.full(500, 0.0)  # psi = 0.5, all in the middle bin
    assert auc_from_samples(samples, p, bins=30) == pytest.approx(1 / 30)


def test_auc_from_samples_close_to_quadrature():
    rng = np.random.default_rng(2)
    p = student_t(0, 1, 20)
    est = auc_from_samples(rng.standard_normal(100_000), p)
    assert est == pytest.approx(auc_quadrature(NORMAL, p), abs=0.05)


def test_auc_from_samples_converges():
    rng = np.random.default_rng(3)
    p = student_t(0, 2, 5)
    ref = auc_quadrature(NORMAL, p)
    small = np.mean([abs(auc_from_samples(rng.standard_normal(1000), p) - ref) for _ in range(20)])
    large = np.mean([abs(auc_from_samples(rng.standard_normal(100_000), p) - ref) for _ in range(20)])
    assert large < small


def test_auc_from_samples_needs_data():
    with pytest.raises(InsufficientDataError):
        auc_from_samples(np.zeros(10), normal())


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 5.0), st.sampled_from([1.0, 5.0, 20.0]))
def test_scores_in_unit_interval(loc, scale, df):
    p = student_t(loc, scale, df)
    a = auc_quadrature(NORMAL, p, 256)
    m = msw(NORMAL, p, 256)
    assert 0.0 <= a <= 1.0
    assert 0.0 <= m <= 1.0


# -- optimisation -------------------------------------------------------------


def test_optimize_normal_auc():
    fit = optimize_pseudo(NORMAL, "auc")
    d = fit.dist
    assert abs(d.location) < 0.05
    assert 0.9 <= d.scale <= 1.1
    assert d.df == 20
    assert fit.criterion == "AUC" and fit.method == "quadrature"


def test_optimize_gamma_auc_truncated():
    fit = optimize_pseudo(GAMMA, "auc")
    d = fit.dist
    assert 1.3 <= d.location <= 1.65
    assert 1.6 <= d.scale <= 2.0
    assert d.df == 5
    assert d.support == (0.0, INF)


def test_optimize_invgamma_msw_without_df20():
    fit = optimize_pseudo(INVGAMMA, "msw", dfs=(1.0, 5.0))
    d = fit.dist
    assert d.df == 1
    assert d.location == pytest.approx(0.41, abs=0.05)
    assert d.scale == pytest.approx(0.38, abs=0.05)


def test_optimize_beats_box_corners():
    fit = optimize_pseudo(NORMAL, "auc", dfs=(5.0,), starts=1)
    (llo, lhi), (slo, shi) = fit.meta["box"]
    for loc in (llo, lhi):
        for s in (slo, shi):
            assert fit.score >= auc_quadrature(NORMAL, student_t(loc, s, 5.0))


def test_optimize_from_samples():
    rng = np.random.default_rng(4)
    fit = optimize_pseudo(rng.standard_normal(2000), "auc", starts=1)
    assert fit.method == "samples"
    assert abs(fit.dist.location) < 0.2
    assert 0.6 < fit.dist.scale < 1.6


def test_optimize_rejects_bad_criterion():
    with pytest.raises(ValueError):
        optimize_pseudo(NORMAL, "kl")


def test_fit_json_fields():
    fit = optimize_pseudo(GAMMA, "auc", dfs=(5.0,), starts=1)
    js = fit.as_json()
    assert set(js) == {"family", "location", "scale", "df", "trunc", "criterion", "score",
                       "method", "meta"}
    assert js["trunc"] == [0.0, "inf"]


# -- Laplace and moment matching ----------------------------------------------


def test_laplace_normal():
    d = laplace_pseudo(NORMAL, 0.7, 1.0)
    assert abs(d.location) < 1e-6
    assert d.scale == pytest.approx(1.0, abs=1e-4)
    assert d.df == 1


def test_laplace_gamma_closed_form():
    # l''(x) = -(a-1)/x^2 = -1.5/2.25 at the mode 1.5
    d = laplace_pseudo(GAMMA, 0.2, 1.0)
    assert d.location == pytest.approx(1.5, abs=1e-6)
    assert d.scale == pytest.approx(1.5 / math.sqrt(1.5), abs=1e-4)
    assert d.support == (0.0, INF)


def test_laplace_boundary_mode():
    expo = UnnormTarget(lambda x: -x if x > 0 else -INF, (0.0, INF), "expo")
    with pytest.raises(CurvatureError):
        laplace_pseudo(expo, 1.0)


def test_moment_match_cauchy_quartiles():
    q = (np.arange(40_001) + 0.5) / 40_001
    d = moment_match_pseudo(cauchy().inv_cdf_array(q))
    assert d.location == pytest.approx(0.0, abs=1e-3)
    assert d.scale == pytest.approx(1.0, abs=1e-3)
    assert d.df == 1


def test_moment_match_normal_samples():
    d = moment_match_pseudo(np.random.default_rng(5).standard_normal(100_000))
    assert d.location == pytest.approx(0.0, abs=0.02)
    assert d.scale == pytest.approx(0.6745, abs=0.02)


def test_moment_match_truncates_to_support():
    d = moment_match_pseudo(np.random.default_rng(6).gamma(2.5, size=500), (0.0, INF))
    assert d.support == (0.0, INF)


def test_moment_match_degenerate():
    with pytest.raises(InsufficientDataError):
        moment_match_pseudo(np.ones(200))


# -- psi diagnostics ----------------------------------------------------------


def test_psi_uniform_is_flat():
    diag = psi_diagnostics(np.random.default_rng(7).random(100_000), 30)
    assert diag.shape == "flat"
    assert diag.histogram.sum() == 100_000
    assert 0.9 < diag.auc_estimate <= 1.0


def test_psi_diffuse_pseudo_is_narrow_peaked():
    x = np.random.default_rng(8).standard_normal(100_000)
    assert psi_diagnostics(student_t(0, 4, 20).cdf_array(x)).shape == "narrow-peaked"


def test_psi_narrow_pseudo_is_u_shaped():
    x = np.random.default_rng(9).standard_normal(100_000)
    assert psi_diagnostics(student_t(0, 0.3, 20).cdf_array(x)).shape == "U-shaped"


def test_psi_shifted_pseudo_is_off_center():
    x = np.random.default_rng(10).standard_normal(100_000)
    assert psi_diagnostics(student_t(1.0, 1.0, 20).cdf_array(x)).shape == "off-center"


def test_psi_out_of_range():
    with pytest.raises(ValueError):
        psi_diagnostics(np.concatenate([np.full(400, 0.5), [1.0]]))


def test_psi_needs_ten_per_bin():
    with pytest.raises(InsufficientDataError):
        psi_diagnostics(np.full(100, 0.5), bins=30)
