"""Command-line harness: ``qslice {bench,tune,diag,gprior,ssm}``.

Every subcommand accepts ``--config FILE`` (a JSON object whose keys are the
long option names with dashes replaced by underscores, or BenchConfig fields
for ``bench``); explicit flags override file values. Exit status is 0 on
success, 2 for configuration or input errors and 3 for sampler or runtime
failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import bench as bench_mod
from .diagnostics import DegenerateSeriesError
from .distributions import INF, STD_TARGETS, ParameterError, format_dist, parse_dist, std_target
from .pseudo import (
    DEFAULT_DFS,
    BINS,
    InsufficientDataError,
    optimize_pseudo,
    psi_diagnostics,
)
from .samplers import ChainError, InitializationError, UnsupportedConfigError
from .shrinkage import ShrinkageError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
SCHEMAS = ("bench_config", "bench_output", "pseudo_fit", "race", "psi_diagnostics",
           "gprior_summary", "ssm_output")


def load_schema(name: str) -> dict:
    """Shipped JSON schema for one of the machine-readable outputs."""
    if name not in SCHEMAS:
        raise KeyError(f"unknown schema {name!r}; choose from {', '.join(SCHEMAS)}")
    text = resources.files("qslice").joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _config_error(msg):
    return CLIError(msg, EXIT_CONFIG)


def _runtime_error(msg):
    return CLIError(msg, EXIT_RUNTIME)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _num(v):
    """JSON-safe number: NaN and infinities become None."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return _num(obj)


def _dump_json(doc) -> str:
    return json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n"


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_csv_cell(r[h]) for h in header])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]):
    if out:
        try:
            Path(out).write_text(text, encoding="utf-8")
        except OSError as err:
            raise _config_error(f"--out: cannot write {out}: {err}") from None
    else:
        sys.stdout.write(text)


def _note(msg: str):
    print(msg, file=sys.stderr)


def _read_column(path: str, what: str) -> np.ndarray:
    """One column of reals; a non-numeric first line is taken as a header."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise _config_error(f"{what}: cannot read {path}: {err}") from None
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    vals = []
    for i, ln in enumerate(lines):
        cell = ln.split(",")[0].strip()
        try:
            vals.append(float(cell))
        except ValueError:
            if i == 0:
                continue
            raise _config_error(f"{what}: line {i + 1} of {path} is not a number: {cell!r}") from None
    if not vals:
        raise _config_error(f"{what}: {path} holds no values")
    return np.asarray(vals, dtype=float)


def _apply_config(args, defaults: dict, allowed: set):
    """Fill unset options from ``--config``, then from ``defaults``."""
    data = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as err:
            raise _config_error(f"--config: cannot read {args.config}: {err}") from None
        except json.JSONDecodeError as err:
            raise _config_error(f"--config: invalid JSON in {args.config}: {err}") from None
        if not isinstance(data, dict):
            raise _config_error("--config: top level must be a JSON object")
    for key, value in data.items():
        if key not in allowed:
            raise _config_error(f"--config: unknown key {key!r}")
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    for key, value in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return data


def _float_list(text: str, what: str) -> List[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise _config_error(f"{what}: expected comma-separated numbers, got {text!r}") from None


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


_BENCH_FLAG_TO_FIELD = {
    "targets": "targets", "kernels": "kernels", "iters": "n_iter", "burnin": "burnin",
    "chains": "n_chains", "seed": "seed", "thin": "thin", "jobs": "jobs", "out": "out_path",
    "format": "format", "x_init": "x_init",
}


def cmd_bench(args) -> int:
    base = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as err:
            raise _config_error(f"--config: cannot read {args.config}: {err}") from None
        except json.JSONDecodeError as err:
            raise _config_error(f"--config: invalid JSON: {err}") from None
        if not isinstance(base, dict):
            raise _config_error("--config: top level must be a JSON object")
    for flag, fld in _BENCH_FLAG_TO_FIELD.items():
        v = getattr(args, flag)
        if v is None:
            continue
        if flag in ("targets", "kernels"):
            v = [s.strip() for s in v.split(",") if s.strip()] if v != "all" else None
            if v is None:
                continue
        base[fld] = v
    try:
        cfg = bench_mod.BenchConfig.from_dict(base)
    except bench_mod.ConfigError as err:
        raise _config_error(f"config field {err}") from None
    except TypeError as err:
        raise _config_error(f"config: {err}") from None
    try:
        rows = bench_mod.run_bench(cfg)
    except (ChainError, ShrinkageError, InitializationError, UnsupportedConfigError,
            InsufficientDataError, ArithmeticError) as err:
        raise _runtime_error(f"bench: {err}") from None
    text = bench_mod.rows_to_csv(rows) if cfg.format == "csv" else bench_mod.rows_to_json(rows, cfg) + "\n"
    _emit(text, cfg.out_path)
    for g in bench_mod.group_summary(rows):
        rate = g["ks_reject_rate"]
        _note(f"{g['target']:>14s} {g['kernel']:<22s} K-S reject {rate if rate == rate else float('nan'):.2f}"
              f"  median ESpS {g['median_esps']:.0f}  evals {g['mean_evals']:.2f}")
    return EXIT_OK


TUNE_DEFAULTS = {"criterion": "auc", "rounds": 5, "iters": 1000, "seed": 0, "format": "json"}
DIAG_DEFAULTS = {"bins": BINS, "format": "json", "seed": 0}
GPRIOR_DEFAULTS = {"sampler": "qslice", "log_scale": False, "iters": 50_000, "burnin": 10_000,
                   "chains": 2, "extra_cost": 0, "seed": 0, "format": "csv"}
SSM_DEFAULTS = {"sampler": "all", "pseudo_family": "normal", "width": 1.0, "T": 20, "iters": 4_000,
                "burnin": 500, "chains": 2, "seed": 0, "format": "csv"}


# ---------------------------------------------------------------------------
# tune
# ---------------------------------------------------------------------------


def cmd_tune(args) -> int:
    _apply_config(args, TUNE_DEFAULTS, {"target", "samples", "criterion", "dfs", "trunc", "kernel",
                                        "range", "rounds", "iters", "seed", "out", "format", "jobs"})
    if args.kernel:
        if args.target is None:
            raise _config_error("--kernel tuning needs --target")
        try:
            target = std_target(args.target)
        except KeyError as err:
            raise _config_error(f"--target: {err.args[0]}") from None
        rng_ = _float_list(args.range or "0.5,10", "--range")
        if len(rng_) != 2 or not 0 < rng_[0] < rng_[1]:
            raise _config_error(f"--range: need lo,hi with 0 < lo < hi, got {args.range!r}")
        try:
            res = bench_mod.tune_scalar(target, args.kernel, rng_[0], rng_[1], seed=args.seed,
                                        rounds=args.rounds, iters=args.iters)
        except (ChainError, ShrinkageError) as err:
            raise _runtime_error(f"tune: {err}") from None
        doc = {"target": args.target, "kernel": args.kernel, **res.as_json()}
        _emit(_dump_json(doc), args.out)
        return EXIT_OK

    if (args.target is None) == (args.samples is None):
        raise _config_error("give exactly one of --target or --samples (or --kernel with --target)")
    dfs = _float_list(args.dfs, "--dfs") if args.dfs else list(DEFAULT_DFS)
    if not dfs or any(not d > 0 for d in dfs):
        raise _config_error(f"--dfs: degrees of freedom must be positive, got {args.dfs!r}")
    trunc = None
    if args.trunc:
        t = str(args.trunc).replace("inf", str(INF))
        lohi = _float_list(t, "--trunc")
        if len(lohi) != 2 or not lohi[0] < lohi[1]:
            raise _config_error(f"--trunc: need lo,hi with lo < hi, got {args.trunc!r}")
        trunc = tuple(lohi)
    if args.target is not None:
        try:
            source = std_target(args.target)
        except KeyError as err:
            raise _config_error(f"--target: {err.args[0]}") from None
    else:
        source = _read_column(args.samples, "--samples")
    try:
        fit = optimize_pseudo(source, args.criterion, dfs=dfs, trunc=trunc)
    except InsufficientDataError as err:
        raise _runtime_error(f"tune: insufficient data: {err}") from None
    except (ValueError, ArithmeticError) as err:
        raise _runtime_error(f"tune: {err}") from None
    doc = fit.as_json()
    doc["dist"] = format_dist(fit.dist)
    _emit(_dump_json(doc), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# diag
# ---------------------------------------------------------------------------


def cmd_diag(args) -> int:
    _apply_config(args, DIAG_DEFAULTS, {"chain", "pseudo", "bins", "out", "hist", "format",
                                        "seed", "jobs"})
    if not args.chain or not args.pseudo:
        raise _config_error("diag needs --chain and --pseudo")
    try:
        pseudo = parse_dist(args.pseudo)
    except ParameterError as err:
        raise _config_error(f"--pseudo: {err}") from None
    x = _read_column(args.chain, "--chain")
    lo, hi = pseudo.support
    inside = (x > lo) & (x < hi)
    psi = pseudo.cdf_array(x[inside]) if inside.any() else np.empty(0)
    ok = (psi > 0.0) & (psi < 1.0)
    excluded_idx = np.flatnonzero(~inside).tolist()
    if not ok.all():
        excluded_idx = sorted(excluded_idx + np.flatnonzero(inside)[~ok].tolist())
    if excluded_idx:
        _note(f"warning: {len(excluded_idx)} value(s) outside the pseudo-target support "
              f"were excluded (rows {excluded_idx[:10]}{' ...' if len(excluded_idx) > 10 else ''})")
    try:
        d = psi_diagnostics(psi[ok], bins=args.bins)
    except InsufficientDataError as err:
        raise _runtime_error(f"diag: {err}") from None
    doc = d.as_json()
    doc["pseudo"] = format_dist(pseudo)
    doc["n"] = int(ok.sum())
    doc["excluded"] = [{"row": i, "value": float(x[i])} for i in excluded_idx]
    _emit(_dump_json(doc), args.out)
    hist_path = args.hist
    if hist_path is None and args.out:
        p = Path(args.out)
        hist_path = str(p.with_name(p.stem + "_hist.csv"))
    if hist_path:
        rows = [{"bin_lo": float(d.edges[i]), "bin_hi": float(d.edges[i + 1]),
                 "count": int(d.histogram[i])} for i in range(len(d.histogram))]
        try:
            Path(hist_path).write_text(_to_csv(("bin_lo", "bin_hi", "count"), rows), encoding="utf-8")
        except OSError as err:
            raise _config_error(f"--hist: cannot write {hist_path}: {err}") from None
    return EXIT_OK


# ---------------------------------------------------------------------------
# gprior
# ---------------------------------------------------------------------------

GPRIOR_COLUMNS = ("kernel", "pseudo", "chain_id", "ess", "esps", "psrf", "mean_evals", "gamma_mean",
                  "tuning")


def cmd_gprior(args) -> int:
    from . import gprior as gp

    _apply_config(args, GPRIOR_DEFAULTS,
                  {"sampler", "log_scale", "pseudo", "iters", "burnin", "chains", "seed",
                   "extra_cost", "out", "summary", "format", "dump_burnin", "jobs"})
    try:
        sampler = gp.GammaSampler(args.sampler, args.pseudo)
    except ValueError as err:
        raise _config_error(f"--sampler/--pseudo: {err}") from None
    if args.iters < 0 or args.burnin < 0 or args.chains < 1:
        raise _config_error("--iters/--burnin must be >= 0 and --chains >= 1")
    if args.extra_cost < 0:
        raise _config_error("--extra-cost must be >= 0")
    m = gp.mtcars_model(extra_cost=args.extra_cost)
    try:
        runs = gp.run_gprior_chains(m, sampler, args.iters, args.burnin, args.chains,
                                    args.seed, bool(args.log_scale))
    except (ChainError, ShrinkageError, InitializationError, UnsupportedConfigError,
            InsufficientDataError, gp.LaplaceError, ArithmeticError, ValueError) as err:
        raise _runtime_error(f"gprior: {err}") from None
    rows = []
    for c, run in enumerate(runs):
        rows.append({
            "kernel": sampler.kind,
            "pseudo": sampler.pseudo or "",
            "chain_id": c,
            "ess": run.report.ess,
            "esps": run.report.esps,
            "psrf": run.report.psrf_upper95,
            "mean_evals": run.chain.mean_evals if args.iters else float("nan"),
            "gamma_mean": float(np.mean(run.chain.draws)) if args.iters else float("nan"),
            "tuning": run.tuning if run.tuning is not None else float("nan"),
        })
    pooled = np.concatenate([r.chain.draws for r in runs]) if args.iters else np.empty(0)
    ess_total = sum(r.report.ess for r in runs) if args.iters >= 50 else float("nan")
    summary = {
        "sampler": sampler.label,
        "log_scale": bool(args.log_scale),
        "n_chains": args.chains,
        "iters": args.iters,
        "burnin": args.burnin,
        "extra_cost": args.extra_cost,
        "psrf": runs[0].report.psrf_upper95,
        "gamma_mean": float(pooled.mean()) if pooled.size else float("nan"),
        "gamma_se": float(pooled.std(ddof=1) / math.sqrt(ess_total)) if pooled.size >= 50 and ess_total > 0 else float("nan"),
        "esps_median": float(np.median([r.report.esps for r in runs])) if args.iters >= 50 else float("nan"),
        "mean_evals": float(np.mean([r["mean_evals"] for r in rows])),
        "fixed_pseudo": format_dist(runs[0].fixed_pseudo) if runs[0].fixed_pseudo is not None else None,
    }
    if args.format == "json":
        _emit(_dump_json({"rows": rows, "summary": summary}), args.out)
    else:
        _emit(_to_csv(GPRIOR_COLUMNS, rows), args.out)
    if args.summary:
        try:
            Path(args.summary).write_text(_dump_json(summary), encoding="utf-8")
        except OSError as err:
            raise _config_error(f"--summary: cannot write {args.summary}: {err}") from None
    else:
        _note(_dump_json(summary).rstrip())
    if args.dump_burnin:
        burn = runs[0].burnin_draws
        if runs[0].log_scale:
            burn = np.exp(burn)
        Path(args.dump_burnin).write_text("gamma\n" + "".join(f"{v!r}\n" for v in burn.tolist()),
                                          encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# ssm
# ---------------------------------------------------------------------------


def cmd_ssm(args) -> int:
    from . import ssm

    _apply_config(args, SSM_DEFAULTS,
                  {"sampler", "pseudo_family", "width", "T", "iters", "burnin", "chains", "seed",
                   "out", "format", "jobs"})
    if args.sampler not in ("mqslice", "imh", "mslice", "all"):
        raise _config_error(f"--sampler: unknown ssm sampler {args.sampler!r}")
    if args.pseudo_family not in ("normal", "t5"):
        raise _config_error(f"--pseudo-family: expected normal or t5, got {args.pseudo_family!r}")
    if args.T < 2:
        raise _config_error("--T must be at least 2")
    if args.iters < 0 or args.burnin < 0 or args.chains < 1:
        raise _config_error("--iters/--burnin must be >= 0 and --chains >= 1")
    if not args.width > 0:
        raise _config_error("--width must be positive")
    if args.sampler == "all":
        specs = ("mqslice:normal", "mqslice:t5", "imh:normal", "imh:t5", f"mslice:{args.width}")
    elif args.sampler == "mslice":
        specs = (f"mslice:{args.width}",)
    else:
        specs = (f"{args.sampler}:{args.pseudo_family}",)
    cfg = ssm.SSMConfig(T=args.T, n_iter=args.iters, burnin=args.burnin, n_chains=args.chains,
                        seed=args.seed, samplers=specs)
    try:
        _, table = ssm.run_ssm_demo(cfg)
    except (ChainError, ShrinkageError, InitializationError, ArithmeticError) as err:
        raise _runtime_error(f"ssm: {err}") from None
    if args.format == "json":
        _emit(_dump_json({"rows": table}), args.out)
    else:
        _emit(_to_csv(ssm.TABLE_COLUMNS, table), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common(p):
    p.add_argument("--config", help="JSON file of option values (flags override)")
    p.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (bench only)")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    from .gprior import KERNELS as GP_KERNELS, PSEUDOS as GP_PSEUDOS

    parser = argparse.ArgumentParser(prog="qslice", description="Quantile slice sampling benchmarks and tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="standard-target benchmark")
    _common(b)
    b.add_argument("--targets", help=f"comma list from {', '.join(STD_TARGETS)} (default all)")
    b.add_argument("--kernels", help="comma list of table kernels or kind:arg specs (default all 13)")
    b.add_argument("--iters", type=int, help="retained iterations per chain (default 20000)")
    b.add_argument("--burnin", type=int, help="burn-in iterations (default 1000)")
    b.add_argument("--chains", type=int, help="chains per target and kernel (default 20)")
    b.add_argument("--thin", type=int, help="thinning for the K-S test (default 10)")
    b.add_argument("--x-init", dest="x_init", type=float, help="initial state (default 0.2)")
    b.set_defaults(func=cmd_bench)

    t = sub.add_parser("tune", help="fit a pseudo-target or race a step size")
    _common(t)
    t.add_argument("--target", help="benchmark target name")
    t.add_argument("--samples", help="file with one column of draws")
    t.add_argument("--criterion", choices=("auc", "msw"))
    t.add_argument("--dfs", help="comma list of Student-t df (default 1,5,20)")
    t.add_argument("--trunc", help="truncation lo,hi for the pseudo-target")
    t.add_argument("--kernel", choices=("rwm", "stepout", "latent"), help="race this kernel's tuning parameter")
    t.add_argument("--range", help="race start range lo,hi (default 0.5,10)")
    t.add_argument("--rounds", type=int)
    t.add_argument("--iters", type=int, help="iterations per race candidate")
    t.set_defaults(func=cmd_tune)

    d = sub.add_parser("diag", help="psi histogram diagnostics for a chain")
    _common(d)
    d.add_argument("--chain", help="file with one column of draws")
    d.add_argument("--pseudo", help="pseudo-target literal, e.g. 't(0,1,5)[0,inf]'")
    d.add_argument("--bins", type=int)
    d.add_argument("--hist", help="histogram CSV path (default next to --out)")
    d.set_defaults(func=cmd_diag)

    g = sub.add_parser("gprior", help="hyper-g regression Gibbs sampler")
    _common(g)
    g.add_argument("--sampler", choices=GP_KERNELS)
    g.add_argument("--pseudo", choices=GP_PSEUDOS)
    g.add_argument("--log-scale", dest="log_scale", action="store_true", default=None)
    g.add_argument("--iters", type=int)
    g.add_argument("--burnin", type=int)
    g.add_argument("--chains", type=int)
    g.add_argument("--extra-cost", dest="extra_cost", type=int)
    g.add_argument("--summary", help="write the JSON summary here (default stderr)")
    g.add_argument("--dump-burnin", dest="dump_burnin", help="write chain 0's burn-in gamma draws here")
    g.set_defaults(func=cmd_gprior)

    s = sub.add_parser("ssm", help="truncated state-space block update comparison")
    _common(s)
    s.add_argument("--sampler", choices=("mqslice", "imh", "mslice", "all"))
    s.add_argument("--pseudo-family", dest="pseudo_family", choices=("normal", "t5"))
    s.add_argument("--width", type=float, help="MSlice hyperrectangle width")
    s.add_argument("--T", dest="T", type=int)
    s.add_argument("--iters", type=int)
    s.add_argument("--burnin", type=int)
    s.add_argument("--chains", type=int)
    s.set_defaults(func=cmd_ssm)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        print("qslice: error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except CLIError as err:
        print(f"qslice {args.command}: error: {err}", file=sys.stderr)
        return err.code
    except (ParameterError, DegenerateSeriesError) as err:
        print(f"qslice {args.command}: error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
