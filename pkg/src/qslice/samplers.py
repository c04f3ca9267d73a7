"""MCMC transition kernels and the chain runner.

Each ``*_step`` function performs one transition and returns a
:class:`StepRecord`. The small kernel classes bind tuning parameters (and,
for the latent slice sampler, the auxiliary width) so that a kernel can be
passed to :func:`run_chain` as a single object.

All slice levels live on the log scale: ``log v = log h(x0) + log U``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .distributions import ScalarDist, UnnormTarget
from .shrinkage import MAX_SHRINK, ShrinkageError, shrink_hyperrect, shrink_unit
from .streams import VariateStream

__all__ = [
    "InitializationError",
    "UnsupportedConfigError",
    "ChainError",
    "StepRecord",
    "ChainResult",
    "MultiPseudo",
    "MultiTarget",
    "qslice_step",
    "stepout_slice_step",
    "latent_slice_step",
    "gess_step",
    "imh_step",
    "rwm_step",
    "mqslice_step",
    "mslice_hyperrect_step",
    "QSlice",
    "StepOut",
    "Latent",
    "GESS",
    "IMH",
    "RWM",
    "MQSlice",
    "MSlice",
    "run_chain",
]

INF = math.inf
TWO_PI = 2.0 * math.pi


class InitializationError(ValueError):
    """The current state has a non-finite density (or ratio)."""


class UnsupportedConfigError(ValueError):
    """Kernel configuration outside what the kernel supports."""


class ChainError(RuntimeError):
    """A kernel failed inside :func:`run_chain`."""

    def __init__(self, message, iteration):
        super().__init__(message)
        self.iteration = iteration


@dataclass(slots=True)
class StepRecord:
    state: object
    psi: object = None
    n_target_evals: int = 1
    n_rejects: int = 0
    moved: bool = True


@dataclass
class ChainResult:
    draws: np.ndarray
    psis: Optional[np.ndarray]
    evals_per_iter: np.ndarray
    rejects_per_iter: np.ndarray
    cpu_seconds: float
    seed: object
    burnin: int
    kernel_label: str
    accept_rate: float = float("nan")

    @property
    def mean_evals(self) -> float:
        return float(np.mean(self.evals_per_iter)) if len(self.evals_per_iter) else float("nan")

    def __len__(self):
        return len(self.draws)


# ---------------------------------------------------------------------------
# Univariate kernels
# ---------------------------------------------------------------------------


def qslice_step(target: UnnormTarget, pseudo: ScalarDist, x0: float, rng,
                max_iter: int = MAX_SHRINK) -> StepRecord:
    """Quantile slice transition: uniform slice sampling of h on (0, 1)."""
    log_g = target.log_g
    log_pdf = pseudo.log_pdf
    inv_cdf = pseudo.inv_cdf
    lh0 = log_g(x0) - log_pdf(x0)
    if not -INF < lh0 < INF:
        raise InitializationError(f"log h(x0) is not finite at x0={x0!r} (got {lh0})")
    log_v = lh0 + math.log(rng.uniform())
    u0 = pseudo.cdf(x0)
    if not 0.0 < u0 < 1.0:
        raise InitializationError(f"pseudo CDF saturates at x0={x0!r} (psi={u0})")
    last = [x0]

    def in_slice(u):
        x = inv_cdf(u)
        last[0] = x
        return log_g(x) - log_pdf(x) > log_v

    try:
        u1, rejects = shrink_unit(u0, in_slice, rng, max_iter)
    except ShrinkageError as err:
        raise ShrinkageError(f"quantile slice: {err}", err.L, err.R) from None
    return StepRecord(last[0], u1, rejects + 2, rejects, True)


def stepout_slice_step(target: UnnormTarget, w: float, m: Optional[int], x0: float, rng,
                       max_iter: int = MAX_SHRINK) -> StepRecord:
    """Slice sampling with stepping out (at most ``m`` steps per side) and shrinkage."""
    log_g = target.log_g
    ly0 = log_g(x0)
    if not -INF < ly0 < INF:
        raise InitializationError(f"log g(x0) is not finite at x0={x0!r}")
    log_y = ly0 + math.log(rng.uniform())
    L = x0 - w * rng.uniform()
    R = L + w
    evals = 1
    cap = max_iter if m is None else m
    j = 0
    while j < cap:
        evals += 1
        if not log_g(L) > log_y:
            break
        L -= w
        j += 1
    j = 0
    while j < cap:
        evals += 1
        if not log_g(R) > log_y:
            break
        R += w
        j += 1
    for rejects in range(max_iter):
        x1 = L + rng.uniform() * (R - L)
        evals += 1
        if log_g(x1) > log_y:
            return StepRecord(x1, None, evals, rejects, True)
        if x1 <= x0:
            L = x1
        else:
            R = x1
    raise ShrinkageError(f"step-out slice: no acceptance within {max_iter} candidates", L, R)


def latent_slice_step(target: UnnormTarget, r: float, s: float, x0: float, rng,
                      max_iter: int = MAX_SHRINK):
    """One latent slice scan (Li and Walker). Returns ``(record, new_s)``.

    The augmented density is g(x) exp(-r s) 1{|x - l| < s/2}: the centre
    ``l`` is refreshed given ``(x, s)``, the width ``s`` given ``(x, l)``,
    and ``x`` is drawn by slice sampling with shrinkage on
    ``(l - s/2, l + s/2)``.
    """
    log_g = target.log_g
    ly0 = log_g(x0)
    if not -INF < ly0 < INF:
        raise InitializationError(f"log g(x0) is not finite at x0={x0!r}")
    l = x0 + s * (rng.uniform() - 0.5)
    s = 2.0 * abs(l - x0) - math.log(rng.uniform()) / r
    log_y = ly0 + math.log(rng.uniform())
    L = l - 0.5 * s
    R = l + 0.5 * s
    for rejects in range(max_iter):
        x1 = L + rng.uniform() * (R - L)
        if log_g(x1) > log_y:
            return StepRecord(x1, None, rejects + 2, rejects, True), s
        if x1 <= x0:
            L = x1
        else:
            R = x1
    raise ShrinkageError(f"latent slice: no acceptance within {max_iter} candidates", L, R)


def gess_step(target: UnnormTarget, pseudo: ScalarDist, x0: float, rng,
              max_iter: int = MAX_SHRINK) -> StepRecord:
    """Generalized elliptical slice transition with a Student-t pseudo-target.

    The t law is a normal scale mixture: given the current point the mixing
    variance is inverse gamma, an auxiliary normal defines the ellipse, and
    the angle is shrunk on the residual ratio g / t.
    """
    if pseudo.is_truncated or pseudo.df is None:
        raise UnsupportedConfigError("GESS needs an untruncated Student-t pseudo-target")
    mu, sig, nu = pseudo.location, pseudo.scale, pseudo.df
    log_g = target.log_g
    log_pdf = pseudo.log_pdf
    ll0 = log_g(x0) - log_pdf(x0)
    if not -INF < ll0 < INF:
        raise InitializationError(f"log g(x0)/t(x0) is not finite at x0={x0!r}")
    d0 = (x0 - mu) / sig
    s = 0.5 * (nu + d0 * d0) / rng.gamma(0.5 * (nu + 1.0))
    nv = math.sqrt(s) * sig * rng.normal()
    log_y = ll0 + math.log(rng.uniform())
    th = TWO_PI * rng.uniform()
    lo, hi = th - TWO_PI, th
    c0 = x0 - mu
    for rejects in range(max_iter):
        x1 = c0 * math.cos(th) + nv * math.sin(th) + mu
        if log_g(x1) - log_pdf(x1) > log_y:
            return StepRecord(x1, None, rejects + 2, rejects, True)
        if th < 0.0:
            lo = th
        else:
            hi = th
        th = lo + rng.uniform() * (hi - lo)
    raise ShrinkageError(f"elliptical slice: no acceptance within {max_iter} angles", lo, hi)


def imh_step(target: UnnormTarget, pseudo: ScalarDist, x0: float, rng) -> StepRecord:
    """Independence Metropolis-Hastings with proposal ``pseudo``."""
    log_g = target.log_g
    log_pdf = pseudo.log_pdf
    lh0 = log_g(x0) - log_pdf(x0)
    if not -INF < lh0 < INF:
        raise InitializationError(f"log h(x0) is not finite at x0={x0!r}")
    u = rng.uniform()
    xs = pseudo.inv_cdf(u)
    lhs = log_g(xs) - log_pdf(xs)
    if math.log(rng.uniform()) < lhs - lh0:
        return StepRecord(xs, u, 2, 0, True)
    return StepRecord(x0, None, 2, 0, False)


def rwm_step(target: UnnormTarget, c: float, x0: float, rng) -> StepRecord:
    """Random-walk Metropolis with a N(0, c^2) increment."""
    log_g = target.log_g
    l0 = log_g(x0)
    if not -INF < l0 < INF:
        raise InitializationError(f"log g(x0) is not finite at x0={x0!r}")
    xs = x0 + c * rng.normal()
    ls = log_g(xs)
    if ls >= l0 or math.log(rng.uniform()) < ls - l0:
        return StepRecord(xs, None, 2, 0, True)
    return StepRecord(x0, None, 2, 0, False)


# ---------------------------------------------------------------------------
# Multivariate kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiTarget:
    """Unnormalised log density on R^D with box support ``lower``/``upper``."""

    log_g: Callable[[np.ndarray], float]
    lower: np.ndarray
    upper: np.ndarray
    name: str = "target"

    @property
    def dim(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class MultiPseudo:
    """Joint pseudo-target built from univariate pieces.

    ``kind="independent"``: ``components`` holds one ScalarDist per
    coordinate. ``kind="cascade"``: ``conditional(d, x)`` returns the law of
    coordinate ``d`` given the coordinates that precede it in ``order``
    (already filled in ``x``). The joint density is the product of the
    pieces, so the map to psi is a bijection onto (0, 1)^D.
    """

    kind: str
    dim: int
    components: Optional[Sequence[ScalarDist]] = None
    conditional: Optional[Callable[[int, np.ndarray], ScalarDist]] = None
    order: Optional[Sequence[int]] = None

    def __post_init__(self):
        if self.kind == "independent":
            if self.components is None or len(self.components) != self.dim:
                raise ValueError("independent pseudo needs one component per coordinate")
        elif self.kind == "cascade":
            if self.conditional is None:
                raise ValueError("cascade pseudo needs a conditional function")
            order = tuple(range(self.dim)) if self.order is None else tuple(self.order)
            if sorted(order) != list(range(self.dim)):
                raise ValueError("cascade order must be a permutation of the coordinates")
            object.__setattr__(self, "order", order)
        else:
            raise ValueError(f"unknown pseudo kind {self.kind!r}")

    def _pieces(self, x):
        if self.kind == "independent":
            return enumerate(self.components)
        return ((d, self.conditional(d, x)) for d in self.order)

    def to_psi(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        psi = np.empty(self.dim)
        for d, dist in self._pieces(x):
            psi[d] = dist.cdf(x[d])
        return psi

    def log_density(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return math.fsum(dist.log_pdf(x[d]) for d, dist in self._pieces(x))

    def from_psi(self, psi):
        """Map psi to the original scale; returns ``(x, log_density(x))``."""
        x = np.empty(self.dim)
        lp = 0.0
        if self.kind == "independent":
            for d, dist in enumerate(self.components):
                xd = dist.inv_cdf(psi[d])
                x[d] = xd
                lp += dist.log_pdf(xd)
            return x, lp
        for d in self.order:
            dist = self.conditional(d, x)
            xd = dist.inv_cdf(psi[d])
            x[d] = xd
            lp += dist.log_pdf(xd)
        return x, lp

    def sample(self, rng) -> np.ndarray:
        return self.from_psi(np.array([rng.uniform() for _ in range(self.dim)]))[0]


def mqslice_step(target: MultiTarget, pseudo: MultiPseudo, x0, rng,
                 max_iter: int = MAX_SHRINK) -> StepRecord:
    """Multivariate quantile slice: hyperrectangle shrinkage on psi-space."""
    x0 = np.asarray(x0, dtype=float)
    log_g = target.log_g
    lh0 = log_g(x0) - pseudo.log_density(x0)
    if not -INF < lh0 < INF:
        raise InitializationError("log h(x0) is not finite at the current state")
    psi0 = pseudo.to_psi(x0)
    if np.any(~((psi0 > 0.0) & (psi0 < 1.0))):
        bad = np.flatnonzero(~((psi0 > 0.0) & (psi0 < 1.0))).tolist()
        raise InitializationError(f"pseudo CDF saturates at coordinates {bad}")
    log_v = lh0 + math.log(rng.uniform())
    last = [x0]

    def in_slice(psi):
        x, lp = pseudo.from_psi(psi)
        last[0] = x
        return log_g(x) - lp > log_v

    try:
        psi1, rejects = shrink_hyperrect(psi0, in_slice, rng, max_iter=max_iter)
    except ShrinkageError as err:
        raise ShrinkageError(f"multivariate quantile slice: {err}", err.L, err.R) from None
    return StepRecord(last[0], psi1, rejects + 2, rejects, True)


def mslice_hyperrect_step(target: MultiTarget, widths, x0, rng,
                          max_iter: int = MAX_SHRINK) -> StepRecord:
    """Hyperrectangle slice sampling on the original scale (no pseudo-target)."""
    x0 = np.asarray(x0, dtype=float)
    widths = np.asarray(widths, dtype=float)
    log_g = target.log_g
    ly0 = log_g(x0)
    if not -INF < ly0 < INF:
        raise InitializationError("log g(x0) is not finite at the current state")
    log_y = ly0 + math.log(rng.uniform())
    L = x0 - widths * rng.uniforms(len(x0))
    R = L + widths
    L = np.maximum(L, target.lower)
    R = np.minimum(R, target.upper)
    evals = [1]

    def in_slice(x):
        evals[0] += 1
        return log_g(x) > log_y

    x1, rejects = shrink_hyperrect(x0, in_slice, rng, L, R, max_iter)
    return StepRecord(x1, None, evals[0], rejects, True)


# ---------------------------------------------------------------------------
# Kernel objects
# ---------------------------------------------------------------------------


class QSlice:
    def __init__(self, target, pseudo: ScalarDist, label: str = "qslice"):
        self.target, self.pseudo, self.label = target, pseudo, label

    def step(self, x, rng):
        return qslice_step(self.target, self.pseudo, x, rng)


class StepOut:
    def __init__(self, target, w: float, m: Optional[int] = None, label: str = "stepout"):
        if not w > 0:
            raise ValueError("step-out width must be positive")
        self.target, self.w, self.m, self.label = target, w, m, label

    def step(self, x, rng):
        return stepout_slice_step(self.target, self.w, self.m, x, rng)


class Latent:
    """Latent slice kernel; carries the auxiliary width ``s`` between steps."""

    def __init__(self, target, r: float, s: Optional[float] = None, label: str = "latent"):
        if not r > 0:
            raise ValueError("latent rate must be positive")
        self.target, self.r, self.label = target, r, label
        self.s = 2.0 / r if s is None else s

    def step(self, x, rng):
        rec, self.s = latent_slice_step(self.target, self.r, self.s, x, rng)
        return rec


class GESS:
    def __init__(self, target, pseudo: ScalarDist, label: str = "gess"):
        if pseudo.is_truncated or pseudo.df is None:
            raise UnsupportedConfigError("GESS needs an untruncated Student-t pseudo-target")
        self.target, self.pseudo, self.label = target, pseudo, label

    def step(self, x, rng):
        return gess_step(self.target, self.pseudo, x, rng)


class IMH:
    def __init__(self, target, pseudo: ScalarDist, label: str = "imh"):
        self.target, self.pseudo, self.label = target, pseudo, label

    def step(self, x, rng):
        return imh_step(self.target, self.pseudo, x, rng)


class RWM:
    def __init__(self, target, c: float, label: str = "rwm"):
        if not c > 0:
            raise ValueError("proposal sd must be positive")
        self.target, self.c, self.label = target, c, label

    def step(self, x, rng):
        return rwm_step(self.target, self.c, x, rng)


class MQSlice:
    def __init__(self, target: MultiTarget, pseudo: MultiPseudo, label: str = "mqslice"):
        self.target, self.pseudo, self.label = target, pseudo, label

    def step(self, x, rng):
        return mqslice_step(self.target, self.pseudo, x, rng)


class MSlice:
    def __init__(self, target: MultiTarget, widths, label: str = "mslice"):
        self.target, self.widths, self.label = target, np.asarray(widths, dtype=float), label

    def step(self, x, rng):
        return mslice_hyperrect_step(self.target, self.widths, x, rng)


# ---------------------------------------------------------------------------
# Chain runner
# ---------------------------------------------------------------------------


def run_chain(kernel, x_init, n_iter: int, burnin: int = 0, seed=0, label: Optional[str] = None,
              rng=None) -> ChainResult:
    """Run ``burnin + n_iter`` transitions and keep the last ``n_iter``.

    ``kernel`` is an object with ``step(x, rng)`` or a bare callable with the
    same signature. Only the retained phase is timed (process CPU time).
    ``seed`` may be an int, a ``VariateStream`` or a numpy Generator; ``rng``
    overrides it when given.
    """
    if n_iter < 0 or burnin < 0:
        raise ValueError("n_iter and burnin must be nonnegative")
    step = kernel.step if hasattr(kernel, "step") else kernel
    if label is None:
        label = getattr(kernel, "label", getattr(kernel, "__name__", "kernel"))
    if rng is None:
        rng = seed if isinstance(seed, VariateStream) else VariateStream(seed)
    x = x_init
    i = 0
    phase = "burn-in"
    try:
        for i in range(burnin):
            x = step(x, rng).state
        phase = "sampling"
        records = [None] * n_iter
        t0 = time.process_time()
        for i in range(n_iter):
            rec = step(x, rng)
            records[i] = rec
            x = rec.state
        cpu = time.process_time() - t0
    except (ShrinkageError, InitializationError, ValueError, ArithmeticError) as err:
        raise ChainError(f"{label}: {phase} iteration {i}: {err}", i) from err

    draws = np.array([r.state for r in records], dtype=float)
    evals = np.fromiter((r.n_target_evals for r in records), dtype=np.int64, count=n_iter)
    rej = np.fromiter((r.n_rejects for r in records), dtype=np.int64, count=n_iter)
    psis = None
    if n_iter and records[0].psi is not None and all(r.psi is not None for r in records):
        psis = np.array([r.psi for r in records], dtype=float)
    acc = float(np.mean([r.moved for r in records])) if n_iter else float("nan")
    seed_repr = seed if isinstance(seed, (int, np.integer)) else None
    return ChainResult(draws, psis, evals, rej, cpu, seed_repr, burnin, label, acc)
