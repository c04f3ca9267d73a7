"""Shrinkage procedures: on an interval through a CDF, on (0, 1), and on boxes.

Every routine starts from an anchor that is inside the acceptance set,
proposes uniformly (in the transformed scale) on the current bounds and,
after a rejection, moves the bound on the candidate's side of the anchor
to the candidate. A candidate tied with the anchor counts as "below".
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .distributions import ScalarDist

__all__ = [
    "MAX_SHRINK",
    "ShrinkageError",
    "generalized_shrink",
    "shrink_unit",
    "shrink_hyperrect",
]

MAX_SHRINK = 10_000


class ShrinkageError(RuntimeError):
    """The shrinkage loop hit its iteration cap."""

    def __init__(self, message, L=None, R=None):
        super().__init__(message)
        self.L = L
        self.R = R


def _cap_error(L, R, max_iter, space):
    return ShrinkageError(
        f"shrinkage did not accept a candidate within {max_iter} iterations; "
        f"final {space} bounds L={L!r}, R={R!r} (empty slice or CDF saturation?)",
        L,
        R,
    )


def generalized_shrink(Q: ScalarDist, in_A: Callable[[float], bool], x0: float, rng,
                       max_iter: int = MAX_SHRINK):
    """Shrink on the support of ``Q`` using ``Q``-restricted proposals.

    Candidates are ``Q.inv_cdf`` of a uniform on ``(Q(L), Q(R))``. The CDF
    value that produced a rejected candidate becomes the new CDF bound, so
    no extra CDF evaluations are spent. Returns ``(x1, rejects)``.
    """
    L, R = Q.support
    FL, FR = 0.0, 1.0
    for rejects in range(max_iter):
        w = FL + rng.uniform() * (FR - FL)
        if not FL < w < FR:
            w = math.nextafter(FL, FR) if w <= FL else math.nextafter(FR, FL)
        x1 = Q.inv_cdf(w)
        if in_A(x1):
            return x1, rejects
        if x1 <= x0:
            L, FL = x1, w
        else:
            R, FR = x1, w
    raise _cap_error(L, R, max_iter, "theta")


def shrink_unit(u0: float, in_A: Callable[[float], bool], rng, max_iter: int = MAX_SHRINK):
    """Uniform shrinkage on (0, 1) anchored at ``u0``. Returns ``(u1, rejects)``."""
    if not 0.0 < u0 < 1.0:
        raise ValueError(f"anchor must lie in (0, 1), got {u0}")
    L, R = 0.0, 1.0
    for rejects in range(max_iter):
        u1 = L + rng.uniform() * (R - L)
        if not L < u1 < R:
            u1 = math.nextafter(L, R) if u1 <= L else math.nextafter(R, L)
        if in_A(u1):
            return u1, rejects
        if u1 <= u0:
            L = u1
        else:
            R = u1
    raise _cap_error(L, R, max_iter, "psi")


def shrink_hyperrect(psi0, in_A: Callable[[np.ndarray], bool], rng,
                     lower: Optional[np.ndarray] = None, upper: Optional[np.ndarray] = None,
                     max_iter: int = MAX_SHRINK):
    """Hyperrectangle shrinkage anchored at ``psi0``.

    The box defaults to the unit hypercube; ``lower``/``upper`` give another
    starting box (used by the untransformed multivariate slice sampler).
    Each coordinate shrinks independently toward the anchor.
    Returns ``(psi1, rejects)``.
    """
    psi0 = np.asarray(psi0, dtype=float)
    D = psi0.shape[0]
    L = np.zeros(D) if lower is None else np.array(lower, dtype=float)
    R = np.ones(D) if upper is None else np.array(upper, dtype=float)
    if np.any(~((L <= psi0) & (psi0 <= R))):
        raise ValueError("anchor must lie inside the starting box")
    for rejects in range(max_iter):
        z = L + rng.uniforms(D) * (R - L)
        if in_A(z):
            return z, rejects
        below = z <= psi0
        L = np.where(below, z, L)
        R = np.where(below, R, z)
    raise _cap_error(L.tolist(), R.tolist(), max_iter, "box")
