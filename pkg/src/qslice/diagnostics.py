"""Chain diagnostics: AR-spectral ESS, ESpS, Kolmogorov-Smirnov and PSRF."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

__all__ = [
    "DegenerateSeriesError",
    "DiagnosticsReport",
    "ess",
    "ar_fit",
    "esps",
    "ks_test",
    "kolmogorov_sf",
    "psrf",
    "thin",
    "report",
]


class DegenerateSeriesError(ValueError):
    """Series is constant (or too short) so its spectrum is undefined."""


@dataclass
class DiagnosticsReport:
    ess: float
    esps: float
    ks_D: float
    ks_p: float
    psrf_upper95: float
    n: int
    kernel_label: str

    def as_dict(self) -> dict:
        return asdict(self)


def ar_fit(series: Sequence[float], max_order: Optional[int] = None):
    """Least-squares AR fit with the order chosen by AIC.

    All orders are fitted on the same rows (t = K..S-1, K the largest order)
    from one QR factorisation of ``[x_{t-1}, ..., x_{t-K}, x_t]``, so the
    residual sums of squares of every order come from the triangular
    factor. Returns ``(phi, sigma2, order)`` for the demeaned series.
    """
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    S = x.shape[0]
    K = int(10 * math.log10(S)) if max_order is None else int(max_order)
    K = max(0, min(K, S // 2 - 1))
    n = S - K
    cols = [x[K - j : S - j] for j in range(1, K + 1)] + [x[K:]]
    Z = np.column_stack(cols)
    R = np.linalg.qr(Z, mode="r")
    r_y = R[:, K]
    tail = np.cumsum((r_y[::-1]) ** 2)[::-1]  # tail[k] = sum_{j>=k} r_y[j]^2
    rss = tail[: K + 1]
    with np.errstate(divide="ignore"):
        aic = n * np.log(rss / n) + 2.0 * np.arange(K + 1)
    k = int(np.argmin(aic))
    if k:
        phi = np.linalg.solve(R[:k, :k], r_y[:k])
    else:
        phi = np.zeros(0)
    return phi, float(rss[k] / n), k


def ess(series: Sequence[float]) -> float:
    """Effective sample size from the AR spectral density at frequency zero."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("ess expects a one-dimensional series")
    S = x.shape[0]
    if S < 50:
        raise DegenerateSeriesError(f"need at least 50 draws for ESS, got {S}")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    sd = x.std()
    if sd == 0.0 or sd <= 1e-14 * max(1.0, abs(x.mean())):
        raise DegenerateSeriesError("series is constant")
    z = (x - x.mean()) / sd
    phi, sigma2, _ = ar_fit(z)
    v0 = sigma2 / (1.0 - phi.sum()) ** 2
    return float(S * z.var(ddof=1) / v0)


def esps(ess_value: float, cpu_seconds: float) -> float:
    """Effective samples per CPU second."""
    if not cpu_seconds > 0.0:
        raise ValueError(f"cpu_seconds must be positive, got {cpu_seconds}")
    return float(ess_value) / cpu_seconds


def kolmogorov_sf(lam: float, terms: int = 100) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution.

    Uses the alternating series 2 sum (-1)^(j-1) exp(-2 j^2 lam^2) for
    ``lam >= 1`` and the Jacobi-theta form of the CDF below that, each
    truncated at ``terms`` terms.
    """
    if lam <= 0.0:
        return 1.0
    if lam < 1.0:
        c = -(math.pi ** 2) / (8.0 * lam * lam)
        s = math.fsum(math.exp(c * (2 * j - 1) ** 2) for j in range(1, terms + 1))
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * s))
    s = math.fsum((-1) ** (j - 1) * math.exp(-2.0 * j * j * lam * lam) for j in range(1, terms + 1))
    return min(1.0, max(0.0, 2.0 * s))


def ks_test(samples: Sequence[float], cdf: Callable) -> tuple:
    """One-sample K-S test. Returns ``(D, p)``.

    ``cdf`` is applied to the sorted sample; it may be vectorised or scalar.
    The p-value uses the asymptotic Kolmogorov law with the Stephens small-
    sample correction for n >= 35 and the exact distribution below.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    if np.isnan(x).any():
        raise ValueError("K-S sample contains NaN")
    n = x.shape[0]
    if n < 1:
        raise ValueError("K-S test needs at least one sample")
    try:
        F = np.asarray(cdf(x), dtype=float)
        if F.shape != x.shape:
            raise TypeError
    except (TypeError, ValueError):
        F = np.array([cdf(float(v)) for v in x])
    i = np.arange(1, n + 1)
    D = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    D = min(max(D, 0.0), 1.0)
    if n >= 35:
        rn = math.sqrt(n)
        p = kolmogorov_sf((rn + 0.12 + 0.11 / rn) * D)
    else:
        p = float(stats.kstwo.sf(D, n))
    return D, p


def psrf(chains) -> float:
    """Upper 95% bound of the Gelman-Rubin potential scale reduction factor."""
    try:
        X = np.asarray(chains, dtype=float)
    except ValueError:
        raise ValueError("chains must have equal lengths") from None
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("psrf needs at least two chains of equal length")
    m, n = X.shape
    if n < 50:
        raise ValueError(f"psrf needs chains of length >= 50, got {n}")
    xbar = X.mean(axis=1)
    s2 = X.var(axis=1, ddof=1)
    W = s2.mean()
    B = n * xbar.var(ddof=1)
    if W <= 0.0:
        raise DegenerateSeriesError("all chains are constant")
    muhat = xbar.mean()
    var_w = s2.var(ddof=1) / m
    var_b = 2.0 * B * B / (m - 1)
    cov_wb = (n / m) * (_cov(s2, xbar ** 2) - 2.0 * muhat * _cov(s2, xbar))
    V = (n - 1) / n * W + (1 + 1 / m) * B / n
    var_V = ((n - 1) ** 2 * var_w + (1 + 1 / m) ** 2 * var_b
             + 2 * (n - 1) * (1 + 1 / m) * cov_wb) / n ** 2
    df_V = 2.0 * V * V / var_V if var_V > 0 else math.inf
    df_adj = (df_V + 3.0) / (df_V + 1.0)
    B_df = m - 1
    W_df = 2.0 * W * W / var_w if var_w > 0 else math.inf
    q = stats.f.ppf(0.975, B_df, W_df) if math.isfinite(W_df) else stats.chi2.ppf(0.975, B_df) / B_df
    R2_upper = (n - 1) / n + q * (1 + 1 / m) * (B / W) / n
    return float(math.sqrt(df_adj * R2_upper))


def _cov(a, b) -> float:
    return float(np.cov(a, b, ddof=1)[0, 1])


def thin(draws, k: int = 10) -> np.ndarray:
    return np.asarray(draws)[k - 1 :: k]


def report(result, cdf: Optional[Callable] = None, thin_by: int = 10,
           psrf_value: float = float("nan")) -> DiagnosticsReport:
    """Summarise one :class:`~qslice.samplers.ChainResult`."""
    draws = np.asarray(result.draws, dtype=float)
    n = draws.shape[0]
    e = ess(draws) if n >= 50 else float("nan")
    sp = esps(e, result.cpu_seconds) if n >= 50 and result.cpu_seconds > 0 else float("nan")
    D = p = float("nan")
    if cdf is not None and n:
        D, p = ks_test(thin(draws, thin_by), cdf)
    return DiagnosticsReport(e, sp, D, p, psrf_value, n, result.kernel_label)
