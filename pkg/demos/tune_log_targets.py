"""Tune every kernel on the two log-scale benchmark targets.

Prints the settings frozen into ``qslice.bench.SETTINGS``. Pseudo-targets
come from the quadrature optimizer (MSW, AUC) and the Laplace rule with a
Cauchy family; the step sizes come from a five-round ESpS race whose range
spans a generous multiple of the target's standard deviation. The race
depends on CPU timing, so reruns give slightly different winners.
"""

import numpy as np

from qslice.bench import tune_scalar
from qslice.distributions import format_dist, std_target
from qslice.pseudo import laplace_pseudo, optimize_pseudo


def main():
    for name in ("log-gamma2.5", "log-invgamma2"):
        target = std_target(name)
        u = np.linspace(0.0005, 0.9995, 4000)
        sd = float(np.std(target.reference.inv_cdf_array(u)))
        print(f"{name}  (sd {sd:.3f})")
        for crit in ("msw", "auc"):
            fit = optimize_pseudo(target, crit)
            print(f"  {crit:8s} {format_dist(fit.dist)}  score {fit.score:.4f}")
        print(f"  laplace  {format_dist(laplace_pseudo(target, 0.2, df=1.0))}")
        ranges = {"rwm": (0.2 * sd, 6 * sd), "stepout": (0.2 * sd, 6 * sd),
                  "latent": (0.02 / sd, 2.0 / sd)}
        for kind, (lo, hi) in ranges.items():
            res = tune_scalar(target, kind, lo, hi, seed=11)
            print(f"  {kind:8s} {res.best:.3g}")


if __name__ == "__main__":
    main()
