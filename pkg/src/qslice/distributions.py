"""Univariate distributions used as pseudo-targets, and the standard targets.

``ScalarDist`` is an immutable location-scale distribution with optional
truncation. Scalar methods (``log_pdf``, ``cdf``, ``inv_cdf``) are written
against the ``math`` module because they sit on the sampler hot path; the
``*_array`` methods are the vectorised counterparts used by quadrature.

Truncated distributions keep the untruncated mass below ``lo`` and above it
so that the quantile function can work from whichever tail is more accurate.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import special as sc

__all__ = [
    "ParameterError",
    "ScalarDist",
    "UnnormTarget",
    "normal",
    "student_t",
    "cauchy",
    "uniform",
    "beta",
    "gamma",
    "invgamma",
    "loggamma",
    "loginvgamma",
    "std_target",
    "STD_TARGETS",
    "parse_dist",
    "format_dist",
]

INF = math.inf
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT1_2 = math.sqrt(0.5)
_LOG_PI = math.log(math.pi)


class ParameterError(ValueError):
    """Invalid distribution parameters or arguments outside the domain."""


# ---------------------------------------------------------------------------
# Standardised families. Each works on z = (x - location) / scale and knows
# its own support. ``*_s`` methods take floats; the others take arrays.
# ---------------------------------------------------------------------------


class _Family:
    lo = -INF
    hi = INF

    def logpdf_s(self, z):
        return float(self.logpdf(z))

    def cdf_s(self, z):
        return float(self.cdf(z))

    def sf_s(self, z):
        return float(self.sf(z))

    def ppf_s(self, u):
        return float(self.ppf(u))

    def isf_s(self, s):
        return float(self.isf(s))


class _Normal(_Family):
    def logpdf(self, z):
        return -0.5 * z * z - _LOG_SQRT_2PI

    def logpdf_s(self, z):
        return -0.5 * z * z - _LOG_SQRT_2PI

    def cdf(self, z):
        return sc.ndtr(z)

    def sf(self, z):
        return sc.ndtr(-z)

    def ppf(self, u):
        return sc.ndtri(u)

    def isf(self, s):
        return -sc.ndtri(s)

    def cdf_s(self, z):
        return 0.5 * math.erfc(-z * _SQRT1_2)

    def sf_s(self, z):
        return 0.5 * math.erfc(z * _SQRT1_2)

    ppf_s = ppf
    isf_s = isf


class _StudentT(_Family):
    def __init__(self, df):
        self.df = df
        self.c = math.lgamma(0.5 * (df + 1.0)) - math.lgamma(0.5 * df) - 0.5 * math.log(df * math.pi)
        self.e = 0.5 * (df + 1.0)

    def logpdf(self, z):
        return self.c - self.e * np.log1p(z * z / self.df)

    def logpdf_s(self, z):
        return self.c - self.e * math.log1p(z * z / self.df)

    def cdf(self, z):
        return sc.stdtr(self.df, z)

    def sf(self, z):
        return sc.stdtr(self.df, -z)

    def ppf(self, u):
        return sc.stdtrit(self.df, u)

    def isf(self, s):
        return -sc.stdtrit(self.df, s)

    cdf_s = cdf
    sf_s = sf
    ppf_s = ppf
    isf_s = isf


class _Cauchy(_Family):
    # Closed forms written to keep relative accuracy in both tails.
    df = 1.0

    def logpdf(self, z):
        return -_LOG_PI - np.log1p(z * z)

    def logpdf_s(self, z):
        return -_LOG_PI - math.log1p(z * z)

    def cdf(self, z):
        return np.arctan2(1.0, -z) / np.pi

    def cdf_s(self, z):
        return math.atan2(1.0, -z) / math.pi

    def sf(self, z):
        return np.arctan2(1.0, z) / np.pi

    def sf_s(self, z):
        return math.atan2(1.0, z) / math.pi

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(u < 0.5, -1.0 / np.tan(np.pi * u), 1.0 / np.tan(np.pi * (1.0 - u)))

    def ppf_s(self, u):
        if u < 0.5:
            return -1.0 / math.tan(math.pi * u)
        return 1.0 / math.tan(math.pi * (1.0 - u))

    def isf(self, s):
        return -self.ppf(s)

    def isf_s(self, s):
        return -self.ppf_s(s)


class _Uniform(_Family):
    lo = 0.0
    hi = 1.0

    def logpdf(self, z):
        return np.zeros_like(np.asarray(z, dtype=float))

    def logpdf_s(self, z):
        return 0.0

    def cdf(self, z):
        return np.asarray(z, dtype=float)

    def cdf_s(self, z):
        return z

    def sf(self, z):
        return 1.0 - np.asarray(z, dtype=float)

    def sf_s(self, z):
        return 1.0 - z

    def ppf(self, u):
        return np.asarray(u, dtype=float)

    def ppf_s(self, u):
        return u

    def isf(self, s):
        return 1.0 - np.asarray(s, dtype=float)

    def isf_s(self, s):
        return 1.0 - s


class _Beta(_Family):
    lo = 0.0
    hi = 1.0

    def __init__(self, a, b):
        self.a, self.b = a, b
        self.c = -sc.betaln(a, b)

    def logpdf(self, z):
        return self.c + sc.xlogy(self.a - 1.0, z) + sc.xlog1py(self.b - 1.0, -z)

    def cdf(self, z):
        return sc.betainc(self.a, self.b, z)

    def sf(self, z):
        return sc.betainc(self.b, self.a, 1.0 - np.asarray(z, dtype=float))

    def ppf(self, u):
        return sc.betaincinv(self.a, self.b, u)

    def isf(self, s):
        return 1.0 - sc.betaincinv(self.b, self.a, s)


class _Gamma(_Family):
    lo = 0.0

    def __init__(self, a):
        self.a = a
        self.c = -math.lgamma(a)

    def logpdf(self, z):
        return self.c + sc.xlogy(self.a - 1.0, z) - z

    def cdf(self, z):
        return sc.gammainc(self.a, z)

    def sf(self, z):
        return sc.gammaincc(self.a, z)

    def ppf(self, u):
        return sc.gammaincinv(self.a, u)

    def isf(self, s):
        return sc.gammainccinv(self.a, s)


class _InvGamma(_Family):
    lo = 0.0

    def __init__(self, a):
        self.a = a
        self.c = -math.lgamma(a)

    def logpdf(self, z):
        z = np.asarray(z, dtype=float)
        return self.c - (self.a + 1.0) * np.log(z) - 1.0 / z

    def logpdf_s(self, z):
        return self.c - (self.a + 1.0) * math.log(z) - 1.0 / z

    def cdf(self, z):
        return sc.gammaincc(self.a, 1.0 / np.asarray(z, dtype=float))

    def sf(self, z):
        return sc.gammainc(self.a, 1.0 / np.asarray(z, dtype=float))

    def ppf(self, u):
        return 1.0 / sc.gammainccinv(self.a, u)

    def isf(self, s):
        return 1.0 / sc.gammaincinv(self.a, s)


class _LogGamma(_Family):
    """Law of log(X) for X ~ Gamma(a, 1)."""

    def __init__(self, a):
        self.a = a
        self.c = -math.lgamma(a)

    def logpdf(self, z):
        return self.c + self.a * z - np.exp(z)

    def logpdf_s(self, z):
        return self.c + self.a * z - math.exp(z)

    def cdf(self, z):
        return sc.gammainc(self.a, np.exp(z))

    def sf(self, z):
        return sc.gammaincc(self.a, np.exp(z))

    def ppf(self, u):
        return np.log(sc.gammaincinv(self.a, u))

    def isf(self, s):
        return np.log(sc.gammainccinv(self.a, s))


class _LogInvGamma(_Family):
    """Law of log(X) for X ~ InvGamma(a, 1)."""

    def __init__(self, a):
        self.a = a
        self.c = -math.lgamma(a)

    def logpdf(self, z):
        return self.c - self.a * z - np.exp(-z)

    def logpdf_s(self, z):
        return self.c - self.a * z - math.exp(-z)

    def cdf(self, z):
        return sc.gammaincc(self.a, np.exp(-z))

    def sf(self, z):
        return sc.gammainc(self.a, np.exp(-z))

    def ppf(self, u):
        return -np.log(sc.gammainccinv(self.a, u))

    def isf(self, s):
        return -np.log(sc.gammaincinv(self.a, s))


_N_PARAMS = {
    "normal": 0,
    "t": 1,
    "cauchy": 0,
    "uniform": 0,
    "beta": 2,
    "gamma": 1,
    "invgamma": 1,
    "loggamma": 1,
    "loginvgamma": 1,
}


@lru_cache(maxsize=256)
def _make_family(name, params):
    if name == "normal":
        return _Normal()
    if name == "cauchy":
        return _Cauchy()
    if name == "t":
        (df,) = params
        return _Cauchy() if df == 1.0 else _StudentT(df)
    if name == "uniform":
        return _Uniform()
    if name == "beta":
        return _Beta(*params)
    if name == "gamma":
        return _Gamma(*params)
    if name == "invgamma":
        return _InvGamma(*params)
    if name == "loggamma":
        return _LogGamma(*params)
    if name == "loginvgamma":
        return _LogInvGamma(*params)
    raise ParameterError(f"unknown family {name!r}")


@dataclass(frozen=True)
class ScalarDist:
    """Location-scale univariate distribution with optional truncation.

    ``params`` holds the family's shape parameters: ``(df,)`` for ``"t"``,
    ``(a, b)`` for ``"beta"`` and ``(shape,)`` for the gamma families.
    ``trunc`` is an open interval ``(lo, hi)`` in the original units; the
    effective support is its intersection with the family support.
    """

    family: str
    location: float = 0.0
    scale: float = 1.0
    params: tuple = ()
    trunc: Optional[tuple] = None
    _fam: _Family = field(init=False, repr=False, compare=False)
    _cache: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        fam_name = self.family
        if fam_name not in _N_PARAMS:
            raise ParameterError(f"unknown family {fam_name!r}")
        params = tuple(float(p) for p in self.params)
        if len(params) != _N_PARAMS[fam_name]:
            raise ParameterError(f"{fam_name} takes {_N_PARAMS[fam_name]} shape parameter(s), got {len(params)}")
        loc, scale = float(self.location), float(self.scale)
        if not math.isfinite(loc):
            raise ParameterError(f"location must be finite, got {loc}")
        if not (scale > 0.0 and math.isfinite(scale)):
            raise ParameterError(f"scale must be positive and finite, got {scale}")
        if any(not (p > 0.0 and math.isfinite(p)) for p in params):
            raise ParameterError(f"shape parameters must be positive, got {params}")
        fam = _make_family(fam_name, params)
        lo = loc + scale * fam.lo if fam.lo > -INF else -INF
        hi = loc + scale * fam.hi if fam.hi < INF else INF
        trunc = self.trunc
        if trunc is not None:
            tlo, thi = float(trunc[0]), float(trunc[1])
            if math.isnan(tlo) or math.isnan(thi) or not tlo < thi:
                raise ParameterError(f"truncation needs lo < hi, got {trunc}")
            trunc = (tlo, thi)
            lo, hi = max(lo, tlo), min(hi, thi)
            if not lo < hi:
                raise ParameterError(f"truncation {trunc} misses the support")
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "trunc", trunc)
        object.__setattr__(self, "_fam", fam)

        # Untruncated mass below lo (F_lo) and above hi (S_hi); the truncated
        # mass is Z. Work from the upper tail when the interval sits there.
        zlo = (lo - loc) / scale if lo > -INF else -INF
        zhi = (hi - loc) / scale if hi < INF else INF
        F_lo = fam.cdf_s(zlo) if zlo > fam.lo else 0.0
        S_lo = fam.sf_s(zlo) if zlo > fam.lo else 1.0
        F_hi = fam.cdf_s(zhi) if zhi < fam.hi else 1.0
        S_hi = fam.sf_s(zhi) if zhi < fam.hi else 0.0
        upper = F_lo > 0.5
        Z = (S_lo - S_hi) if upper else (F_hi - F_lo)
        if not Z > 0.0:
            raise ParameterError(f"truncation interval ({lo}, {hi}) has zero mass")
        truncated = zlo > fam.lo or zhi < fam.hi
        logZ = math.log(Z)
        object.__setattr__(
            self,
            "_cache",
            (lo, hi, F_lo, S_lo, S_hi, Z, math.log(scale) + logZ, upper, truncated),
        )

    # -- basic properties --------------------------------------------------

    @property
    def df(self) -> Optional[float]:
        if self.family == "t":
            return self.params[0]
        if self.family == "cauchy":
            return 1.0
        return None

    @property
    def support(self) -> tuple:
        return self._cache[0], self._cache[1]

    @property
    def is_truncated(self) -> bool:
        return self._cache[8]

    def untruncated(self) -> "ScalarDist":
        return ScalarDist(self.family, self.location, self.scale, self.params)

    def with_trunc(self, trunc) -> "ScalarDist":
        return ScalarDist(self.family, self.location, self.scale, self.params, trunc)

    def __str__(self):
        return format_dist(self)

    # -- scalar path -------------------------------------------------------

    def log_pdf(self, x: float) -> float:
        lo, hi = self._cache[0], self._cache[1]
        if not lo < x < hi:
            if math.isnan(x):
                raise ParameterError("log_pdf of NaN")
            return -INF
        return self._fam.logpdf_s((x - self.location) / self.scale) - self._cache[6]

    def cdf(self, x: float) -> float:
        lo, hi, F_lo, S_lo, S_hi, Z, _, upper, truncated = self._cache
        if x <= lo:
            return 0.0
        if x >= hi:
            return 1.0
        if x != x:
            raise ParameterError("cdf of NaN")
        z = (x - self.location) / self.scale
        if upper:
            p = (S_lo - self._fam.sf_s(z)) / Z
        elif truncated:
            p = (self._fam.cdf_s(z) - F_lo) / Z
        else:
            return float(self._fam.cdf_s(z))
        return min(max(p, 0.0), 1.0)

    def sf(self, x: float) -> float:
        """Upper-tail probability, accurate where ``cdf`` is near 1."""
        lo, hi, F_lo, S_lo, S_hi, Z, _, upper, truncated = self._cache
        if x <= lo:
            return 1.0
        if x >= hi:
            return 0.0
        if x != x:
            raise ParameterError("sf of NaN")
        z = (x - self.location) / self.scale
        if not truncated:
            return float(self._fam.sf_s(z))
        return min(max((self._fam.sf_s(z) - S_hi) / Z, 0.0), 1.0)

    def inv_cdf(self, u: float) -> float:
        if not 0.0 < u < 1.0:
            raise ParameterError(f"inv_cdf needs u in (0, 1), got {u}")
        lo, hi, F_lo, S_lo, S_hi, Z, _, upper, truncated = self._cache
        fam = self._fam
        if upper:
            z = fam.isf_s(S_lo - u * Z)
        elif truncated:
            z = fam.ppf_s(F_lo + u * Z)
        elif u > 0.5:
            z = fam.isf_s(1.0 - u)
        else:
            z = fam.ppf_s(u)
        x = self.location + self.scale * z
        # Guard against rounding pushing the quantile onto a bound.
        if x <= lo:
            x = math.nextafter(lo, INF)
        elif x >= hi:
            x = math.nextafter(hi, -INF)
        return float(x)

    def sample(self, rng) -> float:
        """Draw by inversion; ``rng`` is a ``VariateStream`` or numpy Generator."""
        u = rng.uniform() if hasattr(rng, "uniform_block") else _open_uniform(rng)
        return self.inv_cdf(u)

    # -- array path --------------------------------------------------------

    def log_pdf_array(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = self._cache[0], self._cache[1]
        inside = (x > lo) & (x < hi)
        z = (np.where(inside, x, self._inner_point()) - self.location) / self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self._fam.logpdf(z) - self._cache[6]
        return np.where(inside, out, -INF)

    def cdf_array(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi, F_lo, S_lo, S_hi, Z, _, upper, truncated = self._cache
        inside = (x > lo) & (x < hi)
        z = (np.where(inside, x, self._inner_point()) - self.location) / self.scale
        if upper:
            p = (S_lo - self._fam.sf(z)) / Z
        else:
            p = (self._fam.cdf(z) - F_lo) / Z
        p = np.clip(p, 0.0, 1.0)
        return np.where(x <= lo, 0.0, np.where(x >= hi, 1.0, p))

    def inv_cdf_array(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if np.any(~((u > 0.0) & (u < 1.0))):
            raise ParameterError("inv_cdf needs u in (0, 1)")
        lo, hi, F_lo, S_lo, S_hi, Z, _, upper, truncated = self._cache
        fam = self._fam
        if upper:
            z = fam.isf(S_lo - u * Z)
        elif truncated:
            z = fam.ppf(F_lo + u * Z)
        else:
            z = np.where(u > 0.5, fam.isf(np.minimum(1.0 - u, 0.5)), fam.ppf(np.minimum(u, 0.5)))
        x = self.location + self.scale * np.asarray(z, dtype=float)
        return np.clip(x, np.nextafter(lo, INF), np.nextafter(hi, -INF))

    def _inner_point(self):
        lo, hi = self._cache[0], self._cache[1]
        if lo > -INF and hi < INF:
            return 0.5 * (lo + hi)
        if lo > -INF:
            return lo + self.scale
        if hi < INF:
            return hi - self.scale
        return self.location


def _open_uniform(gen) -> float:
    u = gen.random()
    while u == 0.0:
        u = gen.random()
    return u


# -- constructors ------------------------------------------------------------


def normal(loc=0.0, scale=1.0, trunc=None) -> ScalarDist:
    return ScalarDist("normal", loc, scale, (), trunc)


def student_t(loc=0.0, scale=1.0, df=1.0, trunc=None) -> ScalarDist:
    if df == 1.0:
        return ScalarDist("cauchy", loc, scale, (), trunc)
    return ScalarDist("t", loc, scale, (df,), trunc)


def cauchy(loc=0.0, scale=1.0, trunc=None) -> ScalarDist:
    return ScalarDist("cauchy", loc, scale, (), trunc)


def uniform(lo=0.0, hi=1.0) -> ScalarDist:
    if not lo < hi:
        raise ParameterError(f"uniform needs lo < hi, got ({lo}, {hi})")
    return ScalarDist("uniform", lo, hi - lo)


def beta(a, b, trunc=None) -> ScalarDist:
    return ScalarDist("beta", 0.0, 1.0, (a, b), trunc)


def gamma(shape, scale=1.0, trunc=None) -> ScalarDist:
    return ScalarDist("gamma", 0.0, scale, (shape,), trunc)


def invgamma(shape, scale=1.0, trunc=None) -> ScalarDist:
    return ScalarDist("invgamma", 0.0, scale, (shape,), trunc)


def loggamma(shape, trunc=None) -> ScalarDist:
    return ScalarDist("loggamma", 0.0, 1.0, (shape,), trunc)


def loginvgamma(shape, trunc=None) -> ScalarDist:
    return ScalarDist("loginvgamma", 0.0, 1.0, (shape,), trunc)


# ---------------------------------------------------------------------------
# Unnormalised targets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnnormTarget:
    """Unnormalised log density ``log_g`` with declared support.

    ``log_g`` must return ``-inf`` off the support. ``log_g_array`` is an
    optional vectorised twin used by the quadrature metrics, and
    ``reference`` is the normalised law when it is known (used for K-S
    tests and exact reference draws).
    """

    log_g: Callable[[float], float]
    support: tuple = (-INF, INF)
    name: str = "target"
    log_g_array: Optional[Callable] = None
    reference: Optional[ScalarDist] = None

    def log_g_vec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.log_g_array is not None:
            return np.asarray(self.log_g_array(x), dtype=float)
        return np.array([self.log_g(float(v)) for v in x.ravel()]).reshape(x.shape)


def _normal_log_g(x):
    return -0.5 * x * x


def _normal_log_g_array(x):
    return -0.5 * x * x


def _gamma25_log_g(x):
    if x > 0.0:
        return 1.5 * math.log(x) - x
    return -INF


def _gamma25_log_g_array(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0.0, 1.5 * np.log(np.where(x > 0.0, x, 1.0)) - x, -INF)


def _invgamma2_log_g(x):
    if x > 0.0:
        return -3.0 * math.log(x) - 1.0 / x
    return -INF


def _invgamma2_log_g_array(x):
    xs = np.where(x > 0.0, x, 1.0)
    return np.where(x > 0.0, -3.0 * np.log(xs) - 1.0 / xs, -INF)


def _loggamma25_log_g(y):
    # 1.5*y - exp(y) + y  (Jacobian of theta = exp(y))
    if y > 700.0:
        return -INF
    return 2.5 * y - math.exp(y)


def _loggamma25_log_g_array(y):
    with np.errstate(over="ignore"):
        return 2.5 * y - np.exp(y)


def _loginvgamma2_log_g(y):
    # -3*y - exp(-y) + y
    if y < -700.0:
        return -INF
    return -2.0 * y - math.exp(-y)


def _loginvgamma2_log_g_array(y):
    with np.errstate(over="ignore"):
        return -2.0 * y - np.exp(-y)


STD_TARGETS = ("normal", "gamma2.5", "invgamma2", "log-gamma2.5", "log-invgamma2")


def std_target(name: str) -> UnnormTarget:
    """Return one of the five benchmark targets by name."""
    if name == "normal":
        return UnnormTarget(_normal_log_g, (-INF, INF), name, _normal_log_g_array, normal())
    if name == "gamma2.5":
        return UnnormTarget(_gamma25_log_g, (0.0, INF), name, _gamma25_log_g_array, gamma(2.5))
    if name == "invgamma2":
        return UnnormTarget(_invgamma2_log_g, (0.0, INF), name, _invgamma2_log_g_array, invgamma(2.0))
    if name == "log-gamma2.5":
        return UnnormTarget(_loggamma25_log_g, (-INF, INF), name, _loggamma25_log_g_array, loggamma(2.5))
    if name == "log-invgamma2":
        return UnnormTarget(
            _loginvgamma2_log_g, (-INF, INF), name, _loginvgamma2_log_g_array, loginvgamma(2.0)
        )
    raise KeyError(f"unknown target {name!r}; choose from {', '.join(STD_TARGETS)}")


# ---------------------------------------------------------------------------
# Distribution literals
# ---------------------------------------------------------------------------

_LITERAL = re.compile(
    r"^\s*(?P<name>[a-z]+)\s*\((?P<args>[^)]*)\)\s*"
    r"(?:(?P<open>[\[(])\s*(?P<lo>[^,\]\)]+)\s*,\s*(?P<hi>[^\]\)]+)\s*[\])])?\s*$",
    re.IGNORECASE,
)

_ALIASES = {
    "t": "t",
    "student": "t",
    "normal": "normal",
    "norm": "normal",
    "n": "normal",
    "cauchy": "cauchy",
    "unif": "uniform",
    "uniform": "uniform",
    "beta": "beta",
    "gamma": "gamma",
    "invgamma": "invgamma",
}


def _num(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return INF
    if t in ("-inf", "-infinity"):
        return -INF
    try:
        return float(t)
    except ValueError:
        raise ParameterError(f"not a number: {text!r}") from None


def parse_dist(text: str) -> ScalarDist:
    """Parse a literal such as ``t(1.47,1.82,5)[0,inf)`` or ``normal(0,1)``.

    Grammar::

        dist   := name "(" args ")" [ trunc ]
        name   := t | normal | cauchy | unif | beta | gamma | invgamma
        trunc  := ("[" | "(") lo "," hi ("]" | ")")

    ``t`` takes (loc, scale, df), ``normal``/``cauchy`` take (loc, scale),
    ``unif`` takes (lo, hi), ``beta`` takes (a, b) and ``gamma``/``invgamma``
    take (shape, scale). Bounds may be ``inf``/``-inf``; bracket style is
    accepted either way since the laws are continuous.
    """
    m = _LITERAL.match(text)
    if not m:
        raise ParameterError(f"cannot parse distribution literal {text!r}")
    name = _ALIASES.get(m.group("name").lower())
    if name is None:
        raise ParameterError(f"unknown distribution {m.group('name')!r} in {text!r}")
    args = [_num(a) for a in m.group("args").split(",")] if m.group("args").strip() else []
    trunc = None
    if m.group("lo") is not None:
        trunc = (_num(m.group("lo")), _num(m.group("hi")))
    expect = {"t": 3, "normal": 2, "cauchy": 2, "uniform": 2, "beta": 2, "gamma": 2, "invgamma": 2}[name]
    if len(args) != expect:
        raise ParameterError(f"{name} expects {expect} arguments in {text!r}")
    if name == "t":
        return student_t(args[0], args[1], args[2], trunc)
    if name == "normal":
        return normal(args[0], args[1], trunc)
    if name == "cauchy":
        return cauchy(args[0], args[1], trunc)
    if name == "uniform":
        if trunc is not None:
            raise ParameterError("unif does not take a truncation suffix")
        return uniform(args[0], args[1])
    if name == "beta":
        return beta(args[0], args[1], trunc)
    if name == "gamma":
        return gamma(args[0], args[1], trunc)
    return invgamma(args[0], args[1], trunc)


def _fmt(v: float) -> str:
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return repr(float(v))


def format_dist(d: ScalarDist) -> str:
    """Inverse of :func:`parse_dist` for the families it understands."""
    f = d.family
    if f == "t":
        core = f"t({_fmt(d.location)},{_fmt(d.scale)},{_fmt(d.params[0])})"
    elif f == "cauchy":
        core = f"t({_fmt(d.location)},{_fmt(d.scale)},1.0)"
    elif f == "normal":
        core = f"normal({_fmt(d.location)},{_fmt(d.scale)})"
    elif f == "uniform":
        return f"unif({_fmt(d.location)},{_fmt(d.location + d.scale)})"
    elif f == "beta":
        core = f"beta({_fmt(d.params[0])},{_fmt(d.params[1])})"
    elif f in ("gamma", "invgamma"):
        core = f"{f}({_fmt(d.params[0])},{_fmt(d.scale)})"
    else:
        core = f"{f}({_fmt(d.params[0])})"
    if d.trunc is not None:
        core += f"[{_fmt(d.trunc[0])},{_fmt(d.trunc[1])})"
    return core
