"""Pseudo-target fidelity scores, fitting strategies and psi diagnostics.

Both scores live on (0, 1) after the change of variables psi = F(x):

* AUC is the area under h_psi / max h_psi, where h_psi(psi) = g(x)/pi_hat(x)
  at x = F^{-1}(psi).
* MSW (mean slice width) is the expected Lebesgue measure of the slice
  {psi : h_psi(psi) > v} when psi is stationary and v ~ U(0, h_psi(psi)).
  It equals the expected acceptance probability of an independence
  sampler proposing from the pseudo-target.

Quadrature uses the midpoint grid psi_i = (i + 1/2)/n.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .distributions import INF, ScalarDist, UnnormTarget, cauchy, student_t

__all__ = [
    "UnboundedRatioError",
    "InsufficientDataError",
    "CurvatureError",
    "PseudoFit",
    "PsiDiagnostics",
    "h_psi",
    "msw",
    "msw_from_weights",
    "auc_quadrature",
    "auc_from_samples",
    "msw_from_samples",
    "optimize_pseudo",
    "laplace_pseudo",
    "moment_match_pseudo",
    "psi_diagnostics",
    "DEFAULT_DFS",
]

DEFAULT_DFS = (1.0, 5.0, 20.0)
N_GRID = 1024
BINS = 30


class UnboundedRatioError(ValueError):
    """h_psi is not finite at some grid node."""


class InsufficientDataError(ValueError):
    """Too few (or degenerate) samples for a sample-based estimate."""


class CurvatureError(ValueError):
    """The log density is not concave at the located mode."""


@dataclass
class PseudoFit:
    dist: ScalarDist
    criterion: str
    score: float
    method: str
    meta: dict = field(default_factory=dict)

    def as_json(self) -> dict:
        d = self.dist
        return {
            "family": "t" if d.df is not None else d.family,
            "location": d.location,
            "scale": d.scale,
            "df": d.df,
            "trunc": None if d.trunc is None else [_json_num(d.trunc[0]), _json_num(d.trunc[1])],
            "criterion": self.criterion,
            "score": self.score,
            "method": self.method,
            "meta": self.meta,
        }


def _json_num(v):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return v


@dataclass
class PsiDiagnostics:
    histogram: np.ndarray
    edges: np.ndarray
    auc_estimate: float
    shape: str
    mean_psi: float

    def as_json(self) -> dict:
        return {
            "bins": int(len(self.histogram)),
            "counts": [int(c) for c in self.histogram],
            "auc_estimate": self.auc_estimate,
            "shape": self.shape,
            "mean_psi": self.mean_psi,
        }


def _grid(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) / n


def h_psi(target: UnnormTarget, pseudo: ScalarDist, n_grid: int = N_GRID, scaled: bool = True):
    """Ratio g/pi_hat on the psi midpoint grid, optionally divided by its max."""
    psi = _grid(n_grid)
    x = pseudo.inv_cdf_array(psi)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lh = target.log_g_vec(x) - pseudo.log_pdf_array(x)
    bad = np.isnan(lh) | (lh == INF)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise UnboundedRatioError(f"h_psi is not finite at psi={psi[i]:.6g} (x={x[i]:.6g})")
    top = lh.max()
    if top == -INF:
        raise UnboundedRatioError("h_psi vanishes on the whole grid (disjoint supports?)")
    if scaled:
        return np.exp(lh - top)
    return np.exp(lh)


def msw_from_weights(h: np.ndarray) -> float:
    """Mean slice width for a step function with equal-width pieces ``h``.

    alpha_i = sum_j min(h_j, h_i) / sum_j h_j and MSW = mean_i alpha_i.
    With h sorted, the inner sum is a prefix sum plus h_i times the count
    of values at or above h_i, so the cost is one sort.
    """
    h = np.sort(np.asarray(h, dtype=float))
    n = h.shape[0]
    total = h.sum()
    if not total > 0:
        raise UnboundedRatioError("h_psi has zero mass on the grid")
    prefix = np.concatenate(([0.0], np.cumsum(h)[:-1]))
    inner = prefix + h * (n - np.arange(n))  # sum_j min(h_j, h_i)
    return float(min(1.0, inner.sum() / (n * total)))


def msw(target: UnnormTarget, pseudo: ScalarDist, n_grid: int = N_GRID) -> float:
    """Mean slice width by quadrature on an ``n_grid`` midpoint grid."""
    return msw_from_weights(h_psi(target, pseudo, n_grid))


def auc_quadrature(target: UnnormTarget, pseudo: ScalarDist, n_grid: int = N_GRID) -> float:
    """Area under the max-scaled h_psi curve."""
    return float(h_psi(target, pseudo, n_grid).mean())


def _psi_hist(samples, pseudo: ScalarDist, bins: int):
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.shape[0] < 100:
        raise InsufficientDataError(f"need at least 100 samples, got {x.size}")
    psi = pseudo.cdf_array(x)
    inside = (psi > 0.0) & (psi < 1.0)
    if inside.sum() < 100:
        raise InsufficientDataError("fewer than 100 samples inside the pseudo-target support")
    counts, _ = np.histogram(psi[inside], bins=bins, range=(0.0, 1.0))
    return counts


def auc_from_samples(samples, pseudo: ScalarDist, bins: int = BINS) -> float:
    """Histogram estimate of AUC: mean bin height over max bin height."""
    counts = _psi_hist(samples, pseudo, bins)
    return float(counts.mean() / counts.max())


def msw_from_samples(samples, pseudo: ScalarDist, bins: int = BINS) -> float:
    """Histogram estimate of MSW using the bin heights as h_psi."""
    return msw_from_weights(_psi_hist(samples, pseudo, bins).astype(float))


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def _initial_guess(source, support):
    if isinstance(source, UnnormTarget):
        lo, hi = support
        x0 = 1.0 if lo == 0.0 else (0.0 if lo == -INF and hi == INF else 0.5 * (lo + hi))
        try:
            d = laplace_pseudo(source, x0, 20.0)
            return d.location, d.scale
        except (CurvatureError, ValueError):
            return x0, 1.0
    x = np.asarray(source, dtype=float)
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75])
    return float(med), float(max(q3 - q1, 1e-8) / 1.349)


def optimize_pseudo(source, criterion: str = "auc", dfs: Sequence[float] = DEFAULT_DFS,
                    trunc: Optional[tuple] = None, n_grid: int = N_GRID, bins: int = BINS,
                    box: Optional[tuple] = None, xatol: float = 1e-4, starts: int = 3) -> PseudoFit:
    """Fit a Student-t pseudo-target by maximising AUC or MSW.

    ``source`` is an :class:`UnnormTarget` (scores by quadrature) or an
    array of draws (scores from the psi histogram). For every df in
    ``dfs`` a bounded Nelder-Mead search runs over (location, log scale)
    from a Laplace or quartile-based start; the box corners are scored too
    and the best candidate overall is returned. ``trunc`` defaults to the
    target support (for draws, no truncation).
    """
    criterion = criterion.lower()
    if criterion not in ("auc", "msw"):
        raise ValueError(f"criterion must be 'auc' or 'msw', got {criterion!r}")
    from_target = isinstance(source, UnnormTarget)
    if from_target:
        support = tuple(source.support)
        if trunc is None and (support[0] > -INF or support[1] < INF):
            trunc = support
        method = "quadrature"
    else:
        source = np.asarray(source, dtype=float)
        if source.ndim != 1 or source.shape[0] < 100:
            raise InsufficientDataError(f"need at least 100 samples, got {source.size}")
        support = (-INF, INF)
        method = "samples"

    loc0, sc0 = _initial_guess(source, support)
    if box is None:
        box = ((loc0 - 10.0 * sc0, loc0 + 10.0 * sc0), (sc0 / 20.0, sc0 * 20.0))
    (llo, lhi), (slo, shi) = box
    bounds = [(llo, lhi), (math.log(slo), math.log(shi))]

    def score(loc, scale, df):
        try:
            d = student_t(loc, scale, df, trunc)
            if from_target:
                h = h_psi(source, d, n_grid)
                return float(h.mean()) if criterion == "auc" else msw_from_weights(h)
            if criterion == "auc":
                return auc_from_samples(source, d, bins)
            return msw_from_samples(source, d, bins)
        except (ValueError, FloatingPointError):
            return -INF

    best = None
    tried = []
    warn = []
    for df in dfs:
        cands = [(loc0, sc0), (llo, slo), (llo, shi), (lhi, slo), (lhi, shi)]
        for loc, s in cands:
            tried.append((score(loc, s, df), loc, s, df))
        for k in range(starts):
            start = np.array([loc0, math.log(sc0) + (0.0, 0.7, -0.7)[k % 3]])
            res = optimize.minimize(
                lambda th: -score(th[0], math.exp(th[1]), df),
                start,
                method="Nelder-Mead",
                bounds=bounds,
                options={"xatol": xatol, "fatol": 1e-10, "maxiter": 2000},
            )
            loc, ls = float(res.x[0]), float(res.x[1])
            tried.append((-float(res.fun), loc, math.exp(ls), df))
            on_edge = (abs(loc - llo) < 1e-3 * (lhi - llo) or abs(loc - lhi) < 1e-3 * (lhi - llo)
                       or abs(ls - bounds[1][0]) < 1e-3 or abs(ls - bounds[1][1]) < 1e-3)
            if on_edge:
                warn.append(f"df={df}: optimum on search-box boundary")
    finite = [t for t in tried if t[0] > -INF]
    if not finite:
        raise ValueError("criterion is non-finite for every candidate")
    best = max(finite, key=lambda t: t[0])
    sc, loc, s, df = best
    meta = {
        "n_grid": n_grid if from_target else None,
        "n_samples": None if from_target else int(source.shape[0]),
        "bins": None if from_target else bins,
        "dfs": [float(d) for d in dfs],
        "box": [[llo, lhi], [slo, shi]],
        "candidates": len(tried),
    }
    if warn:
        meta["warnings"] = sorted(set(warn))
    return PseudoFit(student_t(loc, s, df, trunc), criterion.upper(), float(sc), method, meta)


def _find_mode(log_g, x_init, support, tol=1e-8):
    lo, hi = support
    f0 = log_g(x_init)
    if not math.isfinite(f0):
        raise ValueError(f"log g is not finite at x_init={x_init}")
    step = 0.1 * max(1.0, abs(x_init))
    if lo > -INF or hi < INF:
        room = min(x_init - lo, hi - x_init)
        step = min(step, 0.25 * room)

    def val(x):
        v = log_g(x) if lo < x < hi else -INF
        return v

    # Find an uphill direction, then expand until the value drops.
    a, fa = x_init, f0
    d = step
    if val(a + d) < fa:
        d = -step
        if val(a + d) < fa:
            lo_b, hi_b = a - step, a + step
            return _golden(val, lo_b, hi_b, tol)
    b, fb = a + d, val(a + d)
    while True:
        c = b + 2.0 * (b - a)
        if not (lo < c < hi):
            edge = lo if d < 0 else hi
            c = b + 0.5 * (edge - b)
            fc = val(c)
            if fc >= fb and abs(c - edge) < tol * max(1.0, abs(edge)) * 1e3:
                raise CurvatureError(f"mode lies on the support boundary {edge}")
            if fc >= fb:
                a, fa, b, fb = b, fb, c, fc
                if abs(edge - b) < 1e-12 * max(1.0, abs(edge)):
                    raise CurvatureError(f"mode lies on the support boundary {edge}")
                continue
        fc = val(c)
        if fc < fb:
            break
        a, fa, b, fb = b, fb, c, fc
        if abs(b) > 1e300:
            raise CurvatureError("log density increases without bound")
    lo_b, hi_b = (a, c) if a < c else (c, a)
    return _golden(val, lo_b, hi_b, tol)


def _golden(f, a, b, tol):
    res = optimize.minimize_scalar(lambda x: -f(x), bounds=(a, b), method="bounded",
                                   options={"xatol": tol})
    return float(res.x)


def laplace_pseudo(target: UnnormTarget, x_init: float, df: float = 1.0,
                   inflate: float = 1.0) -> ScalarDist:
    """Student-t centred at the mode with scale (-l'')^(-1/2), truncated to the support."""
    log_g = target.log_g
    lo, hi = target.support
    mode = _find_mode(log_g, float(x_init), (lo, hi))
    if (lo > -INF and mode - lo < 1e-6 * max(1.0, abs(lo))) or (hi < INF and hi - mode < 1e-6 * max(1.0, abs(hi))):
        raise CurvatureError(f"mode {mode} lies on the support boundary")
    s = 1.0
    for _ in range(2):
        h = 1e-4 * s
        if not (lo < mode - h and mode + h < hi):
            h = 0.25 * min(mode - lo, hi - mode)
        f0, fp, fm = log_g(mode), log_g(mode + h), log_g(mode - h)
        d2 = (fp - 2.0 * f0 + fm) / (h * h)
        if not d2 < 0.0:
            raise CurvatureError(f"second derivative {d2} at mode {mode} is not negative")
        s = (-d2) ** -0.5
    trunc = None if (lo == -INF and hi == INF) else (lo, hi)
    return student_t(mode, inflate * s, df, trunc)


def moment_match_pseudo(samples, support: Optional[tuple] = None) -> ScalarDist:
    """Cauchy with location = median and scale = IQR/2."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.shape[0] < 100:
        raise InsufficientDataError(f"need at least 100 samples, got {x.size}")
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75])
    if not q3 > q1:
        raise InsufficientDataError("interquartile range is zero")
    trunc = None
    if support is not None and (support[0] > -INF or support[1] < INF):
        trunc = tuple(support)
    return cauchy(float(med), float(0.5 * (q3 - q1)), trunc)


def psi_diagnostics(psis, bins: int = BINS) -> PsiDiagnostics:
    """Histogram of psi draws with AUC estimate and a shape label.

    Rules, checked in order: ``flat`` when max/min bin count < 2;
    ``off-center`` when the mean psi is outside [0.4, 0.6]; ``U-shaped`` when
    both end bins exceed 1.5 times the mean of the middle third;
    ``narrow-peaked`` otherwise.
    """
    p = np.asarray(psis, dtype=float)
    if p.ndim != 1:
        raise ValueError("psis must be one-dimensional")
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise ValueError("psi values must lie in (0, 1)")
    if p.shape[0] < 10 * bins:
        raise InsufficientDataError(f"need at least {10 * bins} psi draws for {bins} bins")
    counts, edges = np.histogram(p, bins=bins, range=(0.0, 1.0))
    auc = float(counts.mean() / counts.max())
    mean = float(p.mean())
    lo_c = counts.min()
    third = bins // 3
    mid = counts[third : bins - third].mean()
    if lo_c > 0 and counts.max() / lo_c < 2.0:
        shape = "flat"
    elif not 0.4 <= mean <= 0.6:
        shape = "off-center"
    elif counts[0] > 1.5 * mid and counts[-1] > 1.5 * mid:
        shape = "U-shaped"
    else:
        shape = "narrow-peaked"
    return PsiDiagnostics(counts, edges, auc, shape, mean)
