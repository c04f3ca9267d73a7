"""Adaptive ESpS race for scalar tuning parameters (c, w, r).

Each round runs a short segment for five candidate values and keeps the
one with the highest effective samples per CPU second. The next round
spans half the previous range, centred on the winner.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np

from .diagnostics import DegenerateSeriesError, ess

__all__ = ["RaceRound", "RaceResult", "race"]


@dataclass
class RaceRound:
    values: List[float]
    esps: List[float]
    best: float


@dataclass
class RaceResult:
    best: float
    rounds: List[RaceRound] = field(default_factory=list)

    def as_json(self) -> dict:
        return {
            "best": self.best,
            "rounds": [{"values": r.values, "esps": r.esps, "best": r.best} for r in self.rounds],
        }


def _score(draws, cpu) -> float:
    try:
        e = ess(draws)
    except DegenerateSeriesError:
        return 0.0
    return e / max(cpu, 1e-9)


def race(run_segment: Callable[[float], tuple], lo: float, hi: float, rounds: int = 5,
         n_values: int = 5) -> RaceResult:
    """Tune a positive parameter by successive halving of the search range.

    ``run_segment(value)`` runs the sampler for one segment with that value
    and returns ``(draws, cpu_seconds)``.
    """
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got ({lo}, {hi})")
    values = list(np.linspace(lo, hi, n_values))
    width = hi - lo
    out = RaceResult(best=float("nan"))
    for _ in range(rounds):
        scores = []
        for v in values:
            draws, cpu = run_segment(float(v))
            scores.append(float(_score(draws, cpu)))
        k = int(np.argmax(scores))
        best = float(values[k])
        out.rounds.append(RaceRound([float(v) for v in values], scores, best))
        width *= 0.5
        new_lo = best - 0.5 * width
        if new_lo <= 0.0:
            new_lo = 0.5 * best
        grid = np.linspace(new_lo, new_lo + width, n_values)
        others = [float(g) for g in grid if not np.isclose(g, best)][: n_values - 1]
        values = sorted(others + [best])
    out.best = out.rounds[-1].best
    return out
