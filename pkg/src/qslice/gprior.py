"""Hyper-g regression: Gibbs sampler with a pluggable update for gamma.

Model (y and the columns of X centred and scaled)::

    y | beta, sigma2      ~ N(X beta, sigma2 I)
    beta | gamma, sigma2  ~ g-prior centred so that the conditional mean is
                            gamma/(1+gamma) * beta_hat
    sigma2                ~ InvGamma(2.5, scale 0.4)
    pi(gamma)             ~ (1 + gamma)^(-a/2) on 0 < gamma < 3 p^2

The full conditional of gamma is
``gamma^(-p/2) (1+gamma)^(-a/2) exp(-Q / (2 sigma2 gamma))`` with
``Q = beta' X'X beta``; its Laplace approximation has a closed form.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from .diagnostics import DiagnosticsReport, ess, esps, psrf
from .distributions import INF, ScalarDist, UnnormTarget, student_t
from .pseudo import optimize_pseudo
from .samplers import (
    ChainResult,
    gess_step,
    imh_step,
    latent_slice_step,
    qslice_step,
    rwm_step,
    stepout_slice_step,
)
from .streams import VariateStream, chain_stream
from .tuning import RaceResult, race

__all__ = [
    "GPriorModel",
    "GammaSampler",
    "GPriorRun",
    "LaplaceError",
    "load_mtcars",
    "mtcars_model",
    "log_fc_gamma",
    "gamma_target",
    "dlog_fc_gamma",
    "dlog_fc_loggamma",
    "gibbs_beta",
    "gibbs_sigma2",
    "laplace_gamma",
    "run_gprior",
    "run_gprior_chains",
    "KERNELS",
    "PSEUDOS",
]

KERNELS = ("qslice", "stepout", "latent", "gess", "imh", "rwm")
PSEUDOS = ("laplace", "laplace-wide", "auc-samples")


class LaplaceError(ValueError):
    """The Laplace approximation has no interior mode."""


@dataclass
class GPriorModel:
    X: np.ndarray
    y: np.ndarray
    a: float = 3.0
    ig_shape: float = 2.5
    ig_scale: float = 0.4
    gamma_bound: Optional[float] = None
    extra_cost: int = 0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("X must be n x p and y of length n")
        self.X, self.y = X, y
        self.n, self.p = X.shape
        if self.gamma_bound is None:
            self.gamma_bound = 3.0 * self.p ** 2
        self.XtX = X.T @ X
        try:
            np.linalg.cholesky(self.XtX)
        except np.linalg.LinAlgError:
            raise ValueError("X'X is singular") from None
        inv = np.linalg.inv(self.XtX)
        self.XtX_inv = 0.5 * (inv + inv.T)
        self.chol_inv = np.linalg.cholesky(self.XtX_inv)
        self.beta_hat = self.XtX_inv @ (X.T @ y)
        self._scratch = np.linspace(0.0, 1.0, self.p * self.p).reshape(self.p, self.p) / self.p

    def quad(self, beta) -> float:
        """Q = beta' X'X beta."""
        return float(beta @ self.XtX @ beta)

    def burn(self):
        """Superfluous p x p products standing in for an expensive likelihood."""
        s = self._scratch
        for _ in range(self.extra_cost):
            s @ s


def load_mtcars():
    """Return ``(X, y, names)`` for mpg against the other ten road-test columns.

    Both are centred and scaled to unit sample standard deviation.
    """
    text = resources.files("qslice").joinpath("data/mtcars.csv").read_text()
    rows = [line.split(",") for line in text.strip().splitlines()]
    header = rows[0][1:]
    data = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    data = (data - data.mean(axis=0)) / data.std(axis=0, ddof=1)
    return data[:, 1:], data[:, 0], header[1:]


def mtcars_model(a: float = 3.0, extra_cost: int = 0) -> GPriorModel:
    X, y, _ = load_mtcars()
    return GPriorModel(X, y, a=a, extra_cost=extra_cost)


def log_fc_gamma(m: GPriorModel, beta, sigma2: float, gamma: float) -> float:
    """Log full conditional of gamma up to a constant."""
    return _log_fc(m, m.quad(beta) / sigma2, gamma)


def _log_fc(m: GPriorModel, k: float, gamma: float) -> float:
    if m.extra_cost:
        m.burn()
    if not 0.0 < gamma < m.gamma_bound:
        return -INF
    return -0.5 * m.p * math.log(gamma) - 0.5 * m.a * math.log1p(gamma) - 0.5 * k / gamma


def gamma_target(m: GPriorModel, beta, sigma2: float, log_scale: bool = False) -> UnnormTarget:
    """Full conditional of gamma (or of log gamma, with the Jacobian) as a target."""
    k = m.quad(beta) / sigma2
    if not log_scale:
        return UnnormTarget(lambda g: _log_fc(m, k, g), (0.0, m.gamma_bound), "gamma|rest")
    ub = math.log(m.gamma_bound)

    def log_g(u):
        if not u < ub or u < -700.0:
            if m.extra_cost:
                m.burn()
            return -INF
        return _log_fc(m, k, math.exp(u)) + u

    return UnnormTarget(log_g, (-INF, ub), "log-gamma|rest")


def dlog_fc_gamma(m: GPriorModel, beta, sigma2: float, gamma: float):
    """Analytic first and second derivatives of the log full conditional."""
    k = m.quad(beta) / sigma2
    a, p = m.a, m.p
    d1 = 0.5 * k / gamma ** 2 - 0.5 * a / (1.0 + gamma) - 0.5 * p / gamma
    d2 = -k / gamma ** 3 + 0.5 * a / (1.0 + gamma) ** 2 + 0.5 * p / gamma ** 2
    return d1, d2


def dlog_fc_loggamma(m: GPriorModel, beta, sigma2: float, u: float):
    """Derivatives in u = log(gamma), Jacobian included."""
    k = m.quad(beta) / sigma2
    a, p = m.a, m.p
    g = math.exp(u)
    d1 = 0.5 * k / g - 0.5 * a * g / (1.0 + g) - 0.5 * (p - 2.0)
    d2 = -0.5 * k / g - 0.5 * a * g / (1.0 + g) ** 2
    return d1, d2


def laplace_gamma(m: GPriorModel, beta, sigma2: float, df: float = 5.0, inflate: float = 1.0,
                  log_scale: bool = False) -> ScalarDist:
    """Truncated Student-t at the closed-form mode with scale (-l'')^(-1/2).

    Setting l'(gamma) = 0 and clearing denominators gives a quadratic in
    gamma whose larger root is the mode; the same holds on the log scale.
    """
    k = m.quad(beta) / sigma2
    if not k > 0.0:
        raise LaplaceError("beta' X'X beta must be positive for an interior mode")
    a, p = m.a, m.p
    if not log_scale:
        A, B = a + p, k - p
        mode = (B + math.sqrt(B * B + 4.0 * A * k)) / (2.0 * A)
        d2 = -k / mode ** 3 + 0.5 * a / (1.0 + mode) ** 2 + 0.5 * p / mode ** 2
        trunc = (0.0, m.gamma_bound)
    else:
        A, B = a + p - 2.0, k - p + 2.0
        g = (B + math.sqrt(B * B + 4.0 * A * k)) / (2.0 * A)
        mode = math.log(g)
        d2 = -0.5 * k / g - 0.5 * a * g / (1.0 + g) ** 2
        trunc = (-INF, math.log(m.gamma_bound))
    if not d2 < 0.0:
        raise LaplaceError(f"non-negative curvature {d2} at the mode")
    return student_t(mode, inflate * (-d2) ** -0.5, df, trunc)


def gibbs_beta(m: GPriorModel, sigma2: float, gamma: float, rng) -> np.ndarray:
    """Draw beta | gamma, sigma2, y."""
    f = gamma / (1.0 + gamma)
    z = np.array([rng.normal() for _ in range(m.p)])
    return f * m.beta_hat + math.sqrt(f * sigma2) * (m.chol_inv @ z)


def sigma2_rate(m: GPriorModel, beta, gamma: float) -> float:
    r = m.y - m.X @ beta
    return m.ig_scale + 0.5 * float(r @ r) + 0.5 * m.quad(beta) / gamma


def gibbs_sigma2(m: GPriorModel, beta, gamma: float, rng) -> float:
    """Draw sigma2 | beta, gamma, y via its gamma-distributed precision."""
    shape = m.ig_shape + 0.5 * (m.n + m.p)
    return sigma2_rate(m, beta, gamma) / rng.gamma(shape)


# ---------------------------------------------------------------------------
# Gibbs driver
# ---------------------------------------------------------------------------


@dataclass
class GammaSampler:
    """Configuration of the gamma update.

    ``pseudo`` applies to qslice, imh and gess. ``tuning`` fixes c, w or r;
    when it is None for rwm/stepout/latent a five-round ESpS race picks it.
    """

    kind: str
    pseudo: Optional[str] = None
    tuning: Optional[float] = None
    df: float = 5.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError(f"unknown gamma sampler {self.kind!r}; choose from {', '.join(KERNELS)}")
        if self.kind in ("qslice", "imh", "gess"):
            if self.pseudo is None:
                self.pseudo = "laplace-wide"
            if self.pseudo not in PSEUDOS:
                raise ValueError(f"unknown pseudo strategy {self.pseudo!r}")
        else:
            self.pseudo = None

    @property
    def label(self) -> str:
        return self.kind if self.pseudo is None else f"{self.kind}:{self.pseudo}"


@dataclass
class GPriorRun:
    chain: ChainResult
    report: DiagnosticsReport
    sampler: GammaSampler
    log_scale: bool
    tuning: Optional[float] = None
    race: Optional[RaceResult] = None
    fixed_pseudo: Optional[ScalarDist] = None
    burnin_draws: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)


class _Gibbs:
    """Mutable Gibbs state with one method per gamma kernel."""

    def __init__(self, m: GPriorModel, log_scale: bool, rng):
        self.m, self.log_scale, self.rng = m, log_scale, rng
        self.beta = m.beta_hat.copy()
        r = m.y - m.X @ self.beta
        self.sigma2 = float(r @ r) / (m.n - m.p)
        self.gamma = float(m.n)
        self.latent_s = None

    @property
    def u(self) -> float:
        return math.log(self.gamma) if self.log_scale else self.gamma

    def _set(self, u):
        self.gamma = math.exp(u) if self.log_scale else u

    def conjugate(self):
        m, rng = self.m, self.rng
        self.beta = gibbs_beta(m, self.sigma2, self.gamma, rng)
        self.sigma2 = gibbs_sigma2(m, self.beta, self.gamma, rng)

    def step(self, kind, pseudo_rule, param):
        """One Gibbs sweep; returns the gamma StepRecord."""
        self.conjugate()
        t = gamma_target(self.m, self.beta, self.sigma2, self.log_scale)
        u0 = self.u
        rng = self.rng
        if kind == "stepout":
            rec = stepout_slice_step(t, param, None, u0, rng)
        elif kind == "rwm":
            rec = rwm_step(t, param, u0, rng)
        elif kind == "latent":
            if self.latent_s is None:
                self.latent_s = 2.0 / param
            rec, self.latent_s = latent_slice_step(t, param, self.latent_s, u0, rng)
        else:
            pseudo = pseudo_rule(self)
            if kind == "qslice":
                rec = qslice_step(t, pseudo, u0, rng)
            elif kind == "imh":
                rec = imh_step(t, pseudo, u0, rng)
            else:
                rec = gess_step(t, pseudo.untruncated(), u0, rng)
        self._set(rec.state)
        return rec


def _burn_width(log_scale: bool) -> float:
    return 1.0 if log_scale else 20.0


def run_gprior(m: GPriorModel, sampler: GammaSampler, n_iter: int, burnin: int = 10_000,
               seed=0, on_log_scale: bool = False, tune_iters: int = 1_000,
               tune_rounds: int = 5, pseudo_samples: int = 2_000) -> GPriorRun:
    """Burn in with step-out, tune, then time ``n_iter`` Gibbs sweeps.

    Recorded draws and diagnostics refer to gamma on its original scale.
    """
    rng = seed if isinstance(seed, VariateStream) else chain_stream(int(seed))
    st = _Gibbs(m, on_log_scale, rng)
    wb = _burn_width(on_log_scale)
    burn = np.empty(burnin)
    for i in range(burnin):
        st.step("stepout", None, wb)
        burn[i] = st.u

    kind = sampler.kind
    param = sampler.tuning
    race_out = None
    fixed = None
    pseudo_rule = None

    if kind in ("rwm", "stepout", "latent") and param is None:
        spread = float(np.std(burn[-pseudo_samples:])) if burnin >= 50 else (1.0 if on_log_scale else 10.0)
        spread = spread if spread > 0 else 1.0
        lo, hi = {
            "rwm": (0.2 * spread, 6.0 * spread),
            "stepout": (0.2 * spread, 6.0 * spread),
            "latent": (0.05 / spread, 2.0 / spread),
        }[kind]

        def segment(value):
            st.latent_s = None
            draws = np.empty(tune_iters)
            t0 = time.process_time()
            for j in range(tune_iters):
                st.step(kind, None, value)
                draws[j] = st.gamma
            return draws, time.process_time() - t0

        race_out = race(segment, lo, hi, rounds=tune_rounds)
        param = race_out.best
        st.latent_s = None
    elif kind in ("qslice", "imh", "gess"):
        rule = sampler.pseudo
        if rule == "auc-samples":
            if burnin < 100:
                raise ValueError("auc-samples needs at least 100 burn-in draws")
            trunc = (-INF, math.log(m.gamma_bound)) if on_log_scale else (0.0, m.gamma_bound)
            fit = optimize_pseudo(burn[-pseudo_samples:], "auc", trunc=trunc, starts=1)
            fixed = fit.dist
            pseudo_rule = lambda s: fixed  # noqa: E731
        else:
            infl = (1.2 if on_log_scale else 1.5) if rule == "laplace-wide" else 1.0
            df = sampler.df
            pseudo_rule = lambda s: laplace_gamma(  # noqa: E731
                s.m, s.beta, s.sigma2, df, infl, s.log_scale)

    gam = np.empty(n_iter)
    psis = np.empty(n_iter)
    evals = np.empty(n_iter, dtype=np.int64)
    rej = np.empty(n_iter, dtype=np.int64)
    moved = 0
    has_psi = kind == "qslice"
    t0 = time.process_time()
    for i in range(n_iter):
        rec = st.step(kind, pseudo_rule, param)
        gam[i] = st.gamma
        if has_psi:
            psis[i] = rec.psi
        evals[i] = rec.n_target_evals
        rej[i] = rec.n_rejects
        moved += rec.moved
    cpu = time.process_time() - t0

    chain = ChainResult(gam, psis if has_psi else None, evals, rej, cpu,
                        seed if isinstance(seed, int) else None, burnin, sampler.label,
                        moved / n_iter if n_iter else float("nan"))
    e = ess(gam) if n_iter >= 50 else float("nan")
    sp = esps(e, cpu) if n_iter >= 50 and cpu > 0 else float("nan")
    rep = DiagnosticsReport(e, sp, float("nan"), float("nan"), float("nan"), n_iter, sampler.label)
    return GPriorRun(chain, rep, sampler, on_log_scale, param, race_out, fixed, burn)


def run_gprior_chains(m: GPriorModel, sampler: GammaSampler, n_iter: int, burnin: int,
                      n_chains: int = 2, seed: int = 0, on_log_scale: bool = False, **kw):
    """Independent chains with seeds derived from ``seed``; PSRF filled in."""
    runs = [
        run_gprior(m, sampler, n_iter, burnin, chain_stream(seed, c), on_log_scale, **kw)
        for c in range(n_chains)
    ]
    if n_chains >= 2 and n_iter >= 50:
        r = psrf([run.chain.draws for run in runs])
        for run in runs:
            run.report.psrf_upper95 = r
    for c, run in enumerate(runs):
        run.chain.seed = seed + c
    return runs
