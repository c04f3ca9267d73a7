"""Buffered random variates for the samplers.

Kernels draw one scalar at a time, and a per-call ``Generator.random()`` is
several times slower than the slice logic around it. ``VariateStream``
refills blocks from a numpy ``Generator`` and hands them out one by one.
Two streams built from the same seed emit identical sequences, which the
tests use to drive different implementations with shared variates.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = ["VariateStream", "ScriptedStream", "chain_stream"]

_BLOCK = 4096


class VariateStream:
    """Seeded source of uniforms on the open interval (0, 1) and normals."""

    def __init__(self, seed=None, block: int = _BLOCK):
        if isinstance(seed, np.random.Generator):
            self.generator = seed
        else:
            self.generator = np.random.default_rng(seed)
        self._block = block
        self._u: list = []
        self._n: list = []

    def uniform_block(self, n: int) -> np.ndarray:
        u = self.generator.random(n)
        bad = u == 0.0
        while bad.any():
            u[bad] = self.generator.random(int(bad.sum()))
            bad = u == 0.0
        return u

    def uniform(self) -> float:
        """One draw from Uniform(0, 1), never exactly 0 or 1."""
        if not self._u:
            self._u = self.uniform_block(self._block).tolist()
            self._u.reverse()
        return self._u.pop()

    def uniforms(self, n: int) -> np.ndarray:
        return np.array([self.uniform() for _ in range(n)])

    def normal(self) -> float:
        if not self._n:
            self._n = self.generator.standard_normal(self._block).tolist()
            self._n.reverse()
        return self._n.pop()

    def exponential(self) -> float:
        return -math.log(self.uniform())

    def gamma(self, shape: float) -> float:
        return float(self.generator.gamma(shape))


class ScriptedStream(VariateStream):
    """Stream that replays fixed variates; used for hand-traced checks."""

    def __init__(self, uniforms: Iterable[float] = (), normals: Iterable[float] = (),
                 gammas: Iterable[float] = ()):
        self._su = list(uniforms)
        self._sn = list(normals)
        self._sg = list(gammas)
        self.generator = None

    def uniform(self) -> float:
        if not self._su:
            raise IndexError("scripted uniforms exhausted")
        return float(self._su.pop(0))

    def normal(self) -> float:
        if not self._sn:
            raise IndexError("scripted normals exhausted")
        return float(self._sn.pop(0))

    def gamma(self, shape: float) -> float:
        if not self._sg:
            raise IndexError("scripted gamma draws exhausted")
        return float(self._sg.pop(0))

    def uniform_block(self, n: int) -> np.ndarray:
        return self.uniforms(n)


def chain_stream(seed: int, chain: int = 0, extra: Optional[Sequence[int]] = None) -> VariateStream:
    """Independent stream for chain ``chain`` of a run seeded with ``seed``.

    Streams are spawned from ``SeedSequence(seed)`` keyed by the chain index,
    so chains never share state and any chain can be rerun alone.
    """
    key = (int(chain),) + tuple(int(e) for e in (extra or ()))
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return VariateStream(np.random.Generator(np.random.PCG64(ss)))
