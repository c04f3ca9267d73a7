"""Truncated local-level model and the FFBS-based cascading pseudo-target.

Model for alpha_1..alpha_T observed at increasing times s_1..s_T::

    y_t = alpha_t + eps_t,            eps_t ~ N(0, obs_var)
    alpha_1 ~ N(init_mean, init_var)  restricted to alpha_1 >= lower_bound
    alpha_t | alpha_{t-1} ~ N(alpha_{t-1}, evo_rate (s_t - s_{t-1}))
                                      restricted to alpha_t >= lower_bound

The evolution laws are proper truncated normals, so the prior density of
alpha_t carries 1 / P(alpha_t >= lower_bound | alpha_{t-1}). Ignoring the
truncation gives a linear-Gaussian model whose posterior factorises into
backward conditionals; those conditionals, truncated again, form the
pseudo-target for the block update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy import special as sc

from .diagnostics import ess, psrf
from .distributions import INF, ScalarDist, normal, student_t
from .samplers import (
    ChainResult,
    IMH,
    MQSlice,
    MSlice,
    MultiPseudo,
    MultiTarget,
    StepRecord,
    imh_step,
    mqslice_step,
    mslice_hyperrect_step,
    run_chain,
)
from .streams import chain_stream

__all__ = [
    "TruncDLM",
    "FFBSParams",
    "forward_filter",
    "backward_params",
    "cascade_pseudo_from_ffbs",
    "ssm_target",
    "qslice_tvp_update",
    "simulate_dlm",
    "SSMConfig",
    "run_ssm_demo",
    "SSM_SAMPLERS",
    "TABLE_COLUMNS",
]

_LOG_2PI = math.log(2.0 * math.pi)
SSM_SAMPLERS = ("mqslice", "imh", "mslice")
TABLE_COLUMNS = ("sampler", "settings", "psrf", "esps_mean", "esps_min", "evals")


@dataclass
class TruncDLM:
    times: np.ndarray
    obs: np.ndarray
    obs_var: float
    init_mean: float
    init_var: float
    evo_rate: float
    lower_bound: float = 0.0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.obs = np.asarray(self.obs, dtype=float)
        if self.times.shape != self.obs.shape or self.times.ndim != 1:
            raise ValueError("times and obs must be vectors of equal length")
        if self.times.shape[0] < 2:
            raise ValueError("need at least two time points")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not (self.obs_var > 0 and self.init_var > 0 and self.evo_rate > 0):
            raise ValueError("obs_var, init_var and evo_rate must be positive")

    @property
    def T(self) -> int:
        return self.obs.shape[0]

    @property
    def evo_var(self) -> np.ndarray:
        """Var(alpha_t | alpha_{t-1}) for t = 2..T (length T-1)."""
        return self.evo_rate * np.diff(self.times)


@dataclass
class FFBSParams:
    ff_mean: np.ndarray
    ff_var: np.ndarray
    pred_var: np.ndarray  # R_{t+1} = C_t + q_{t+1}, length T-1
    bs_gain: np.ndarray  # C_t / R_{t+1}
    bs_sd: np.ndarray

    @property
    def ff_sd(self) -> np.ndarray:
        return np.sqrt(self.ff_var)

    def bs_mean(self, t: int, alpha_next: float) -> float:
        return float(self.ff_mean[t] + self.bs_gain[t] * (alpha_next - self.ff_mean[t]))


def forward_filter(m: TruncDLM) -> FFBSParams:
    """Kalman filter for the untruncated model, plus backward-sampling scales."""
    T = m.T
    q = m.evo_var
    mean = np.empty(T)
    var = np.empty(T)
    a, R = m.init_mean, m.init_var
    for t in range(T):
        if t > 0:
            a, R = mean[t - 1], var[t - 1] + q[t - 1]
        K = R / (R + m.obs_var)
        mean[t] = a + K * (m.obs[t] - a)
        var[t] = R * m.obs_var / (R + m.obs_var)
    if np.any(~(var > 0)):
        raise ValueError("filter produced a nonpositive variance")
    pred = var[:-1] + q
    gain = var[:-1] / pred
    bs_var = var[:-1] * q / pred
    return FFBSParams(mean, var, pred, gain, np.sqrt(bs_var))


def backward_params(m: TruncDLM, ffbs: FFBSParams, alpha_next: float, t: int):
    """Location and scale of alpha_t | alpha_{t+1}, y_{1:t} (0-based t < T-1)."""
    if not 0 <= t < m.T - 1:
        raise IndexError(f"backward step index must be in [0, {m.T - 2}], got {t}")
    return ffbs.bs_mean(t, alpha_next), float(ffbs.bs_sd[t])


def _family_dist(family: str, loc: float, scale: float, trunc) -> ScalarDist:
    if family == "normal":
        return normal(loc, scale, trunc)
    if family.startswith("t"):
        df = float(family[1:]) if len(family) > 1 else 5.0
        return student_t(loc, scale, df, trunc)
    raise ValueError(f"unknown pseudo family {family!r}")


def cascade_pseudo_from_ffbs(m: TruncDLM, ffbs: FFBSParams, family: str = "normal") -> MultiPseudo:
    """Backward-sampling conditionals, truncated at the lower bound, ordered T..1."""
    T = m.T
    trunc = None if m.lower_bound == -INF else (m.lower_bound, INF)
    last = _family_dist(family, float(ffbs.ff_mean[-1]), float(math.sqrt(ffbs.ff_var[-1])), trunc)
    mean, gain, sd = ffbs.ff_mean, ffbs.bs_gain, ffbs.bs_sd

    def conditional(d, x):
        if d == T - 1:
            return last
        return _family_dist(family, float(mean[d] + gain[d] * (x[d + 1] - mean[d])), float(sd[d]), trunc)

    return MultiPseudo("cascade", T, conditional=conditional, order=tuple(range(T - 1, -1, -1)))


def ssm_target(m: TruncDLM) -> MultiTarget:
    """Joint full conditional of alpha_{1:T} with truncated, normalised evolutions."""
    y, s2 = m.obs, m.obs_var
    q = m.evo_var
    sq = np.sqrt(q)
    lb = m.lower_bound
    c_obs = -0.5 * m.T * (_LOG_2PI + math.log(s2))
    c_evo = -0.5 * float(np.sum(_LOG_2PI + np.log(q)))
    c_init = -0.5 * (_LOG_2PI + math.log(m.init_var))
    m0, v0 = m.init_mean, m.init_var

    def log_g(alpha):
        if lb > -INF and alpha.min() < lb:
            return -INF
        r = y - alpha
        d = np.diff(alpha)
        out = (c_obs - 0.5 * float(r @ r) / s2
               + c_init - 0.5 * (alpha[0] - m0) ** 2 / v0
               + c_evo - 0.5 * float(np.sum(d * d / q)))
        if lb > -INF:
            out -= float(np.sum(sc.log_ndtr((alpha[:-1] - lb) / sq)))
        return out

    lower = np.full(m.T, lb)
    upper = np.full(m.T, INF)
    return MultiTarget(log_g, lower, upper, "trunc-dlm")


def qslice_tvp_update(m: TruncDLM, alpha_in, family: str, rng) -> StepRecord:
    """Block update of alpha with the FFBS cascade as pseudo-target."""
    ffbs = forward_filter(m)
    return mqslice_step(ssm_target(m), cascade_pseudo_from_ffbs(m, ffbs, family), alpha_in, rng)


def simulate_dlm(T: int = 20, seed: int = 7, obs_var: float = 0.25, evo_rate: float = 0.05,
                 init_mean: float = 0.3, init_var: float = 1.0, lower_bound: float = 0.0,
                 irregular: bool = True) -> TruncDLM:
    """Synthetic data whose latent path hugs the lower bound."""
    rng = np.random.default_rng(seed)
    gaps = rng.uniform(0.5, 1.5, T - 1) if irregular else np.ones(T - 1)
    times = np.concatenate(([0.0], np.cumsum(gaps)))
    alpha = np.empty(T)
    lb = lower_bound if lower_bound > -INF else -1e300
    while True:
        alpha[0] = init_mean + math.sqrt(init_var) * rng.standard_normal()
        if alpha[0] >= lb:
            break
    alpha[0] = min(alpha[0], init_mean + 0.5)
    for t in range(1, T):
        sd = math.sqrt(evo_rate * gaps[t - 1])
        while True:
            a = alpha[t - 1] + sd * rng.standard_normal()
            if a >= lb:
                break
        alpha[t] = a
    y = alpha + math.sqrt(obs_var) * rng.standard_normal(T)
    return TruncDLM(times, y, obs_var, init_mean, init_var, evo_rate, lower_bound)


@dataclass
class SSMConfig:
    T: int = 20
    n_iter: int = 4_000
    burnin: int = 500
    n_chains: int = 2
    seed: int = 1
    data_seed: int = 7
    samplers: tuple = ("mqslice:normal", "mqslice:t5", "imh:normal", "imh:t5", "mslice:1.0")
    obs_var: float = 0.25
    evo_rate: float = 0.05
    lower_bound: float = 0.0


def _make_kernel(spec: str, m: TruncDLM):
    kind, _, arg = spec.partition(":")
    target = ssm_target(m)
    if kind in ("mqslice", "imh"):
        family = arg or "normal"
        pseudo = cascade_pseudo_from_ffbs(m, forward_filter(m), family)
        settings = "Gaussian" if family == "normal" else f"t, df={family[1:] or 5}"
        if kind == "mqslice":
            return MQSlice(target, pseudo, spec), settings, pseudo
        return _MultiIMH(target, pseudo, spec), settings, pseudo
    if kind == "mslice":
        w = float(arg) if arg else 1.0
        return MSlice(target, np.full(m.T, w), spec), f"w = {w:g}", None
    raise ValueError(f"unknown ssm sampler {spec!r}; kinds are {', '.join(SSM_SAMPLERS)}")


class _MultiIMH:
    """Independence sampler proposing the whole block from the cascade."""

    def __init__(self, target: MultiTarget, pseudo: MultiPseudo, label: str = "imh"):
        self.target, self.pseudo, self.label = target, pseudo, label

    def step(self, x, rng):
        log_g = self.target.log_g
        lh0 = log_g(x) - self.pseudo.log_density(x)
        psi = rng.uniforms(self.pseudo.dim)
        xs, lp = self.pseudo.from_psi(psi)
        lhs = log_g(xs) - lp
        if math.log(rng.uniform()) < lhs - lh0:
            return StepRecord(xs, psi, 2, 0, True)
        return StepRecord(x, None, 2, 0, False)


def _start_point(m: TruncDLM) -> np.ndarray:
    pseudo = cascade_pseudo_from_ffbs(m, forward_filter(m), "normal")
    return pseudo.from_psi(np.full(m.T, 0.5))[0]


def run_ssm_demo(config: Optional[SSMConfig] = None, model: Optional[TruncDLM] = None):
    """Run every configured sampler on the same data and summarise.

    Returns ``(chains, table)``: ``chains`` maps sampler spec to its list of
    ChainResults, ``table`` is a list of dicts keyed by ``TABLE_COLUMNS``
    with PSRF averaged over time points and ESpS per time point summarised
    by its mean and minimum (ESS pooled over chains, CPU summed).
    """
    cfg = config or SSMConfig()
    m = model or simulate_dlm(cfg.T, cfg.data_seed, cfg.obs_var, cfg.evo_rate,
                              lower_bound=cfg.lower_bound)
    x0 = _start_point(m)
    chains: Dict[str, List[ChainResult]] = {}
    table = []
    for k, spec in enumerate(cfg.samplers):
        kernel, settings, _ = _make_kernel(spec, m)
        runs = [
            run_chain(kernel, x0.copy(), cfg.n_iter, cfg.burnin, label=spec,
                      rng=chain_stream(cfg.seed, c, (k,)))
            for c in range(cfg.n_chains)
        ]
        for c, r in enumerate(runs):
            r.seed = cfg.seed + c
        chains[spec] = runs
        table.append(_summarise(spec.split(":")[0], settings, runs))
    return chains, table


def _summarise(kind, settings, runs) -> dict:
    draws = np.stack([r.draws for r in runs])  # chains x iters x T
    T = draws.shape[2]
    n = draws.shape[1]
    cpu = sum(r.cpu_seconds for r in runs)
    if n >= 50:
        ess_t = np.array([sum(ess(draws[c, :, t]) for c in range(len(runs))) for t in range(T)])
        esps_t = ess_t / cpu if cpu > 0 else np.full(T, np.nan)
        ps = (float(np.mean([psrf(draws[:, :, t]) for t in range(T)]))
              if len(runs) >= 2 else float("nan"))
    else:
        esps_t = np.full(T, np.nan)
        ps = float("nan")
    evals = float(np.mean(np.concatenate([r.evals_per_iter for r in runs])))
    return {
        "sampler": {"mqslice": "MQSlice", "imh": "IMH", "mslice": "MSlice"}.get(kind, kind),
        "settings": settings,
        "psrf": ps,
        "esps_mean": float(np.mean(esps_t)),
        "esps_min": float(np.min(esps_t)),
        "evals": evals,
    }
