"""Command-line interface: pvalue, ci, simulate, and backtest subcommands.

Outputs are deterministic for a fixed seed: floats print with 17
significant digits, timing columns are zero unless explicitly requested,
and simulation reductions do not depend on thread count.  Exit codes:
0 success, 2 usage or input errors (argparse errors and malformed data
files, reported with a line number), 3 unhandled numerical failures.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import date

import numpy as np

from ._backtest import backtest_report
from ._ci import IntervalResult
from ._scores import score_stats
from ._simlab import DGP, METHODS, derive_rng_tagged, report_csv, run_study
from ._tails import QuantileSpec, directed_tail

_LATTICE_CHOICES = {"midp": "midp", "cf": "cornish_fisher", "none": "none"}


class InputError(Exception):
    """Bad user input (file contents, config values); maps to exit code 2."""


def _fmt(v: object) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return str(v)


def _read_numbers(path: str) -> np.ndarray:
    """One value per line (blank lines and # comments allowed)."""
    if path == "-":
        lines = sys.stdin.read().splitlines()
    else:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as e:
            raise InputError(f"cannot read {path}: {e}") from e
    vals = []
    for i, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        try:
            vals.append(float(s))
        except ValueError as e:
            raise InputError(f"{path}: line {i}: not a number: {s!r}") from e
    if not vals:
        raise InputError(f"{path}: no numeric data")
    return np.asarray(vals, dtype=float)


def _read_return_csv(path: str, prices: bool) -> tuple[list[str], np.ndarray]:
    """CSV of `date,return` (or `date,price` with prices=True), ISO dates."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    dates: list[str] = []
    vals: list[float] = []
    for i, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        parts = [p.strip() for p in s.split(",")]
        if len(parts) != 2:
            raise InputError(f"{path}: line {i}: expected 'date,value', got {s!r}")
        if i == 1 and not _is_float(parts[1]):
            continue  # header row
        try:
            date.fromisoformat(parts[0])
        except ValueError as e:
            raise InputError(f"{path}: line {i}: bad ISO date {parts[0]!r}") from e
        if not _is_float(parts[1]):
            raise InputError(f"{path}: line {i}: not a number: {parts[1]!r}")
        dates.append(parts[0])
        vals.append(float(parts[1]))
    if len(vals) < 3:
        raise InputError(f"{path}: need at least 3 data rows")
    arr = np.asarray(vals, dtype=float)
    if prices:
        if np.any(arr <= 0.0):
            raise InputError(f"{path}: prices must be positive to form log returns")
        return dates[1:], np.diff(np.log(arr))
    return dates, arr


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _spec_from(args: argparse.Namespace) -> QuantileSpec:
    return QuantileSpec(
        tau=args.tau,
        alpha=getattr(args, "alpha", 0.05),
        ridge_c=args.ridge_c,
        lattice_mode=_LATTICE_CHOICES[args.lattice],
        c0=args.c0,
    )


def _emit(pairs: list[tuple[str, object]], out: str | None) -> None:
    text = "".join(f"{k}={_fmt(v)}\n" for k, v in pairs)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_pvalue(args: argparse.Namespace) -> int:
    sample = _read_numbers(args.data)
    spec = _spec_from(args)
    stats = score_stats(sample, args.t, args.tau, ridge_c=args.ridge_c)
    res = directed_tail(stats, spec)
    _emit(
        [
            ("n", res.n),
            ("k", res.k),
            ("tau", res.tau),
            ("t", args.t),
            ("x_obs", res.x),
            ("u_x", res.u_x),
            ("p_down", res.p_down),
            ("p_up", res.p_up),
            ("p_dir", res.p_dir),
            ("p_two_sided", res.p_two_sided),
            ("branch", res.branch),
            ("r", res.r),
            ("q_pm", res.q_pm),
            ("w", res.w),
            ("r_star", res.r_star),
            ("lattice", res.lattice_mode),
            ("solver_status", res.solver_status),
            ("solver_iterations", res.solver_iterations),
        ],
        args.out,
    )
    return 0


def cmd_ci(args: argparse.Namespace) -> int:
    sample = _read_numbers(args.data)
    spec = _spec_from(args)
    if args.method not in METHODS:
        raise InputError(f"unknown method {args.method!r}; choose from {sorted(METHODS)}")
    rng = derive_rng_tagged(args.seed, 0, args.method)
    res: IntervalResult = METHODS[args.method](sample, spec, rng, args.n_boot)
    # no method echo: aliases that share an interval construction must
    # produce byte-identical output
    _emit(
        [
            ("tau", res.tau),
            ("alpha", res.alpha),
            ("n", res.n),
            ("lower", res.lower),
            ("upper", res.upper),
            ("lower_open", res.lower_open),
            ("upper_open", res.upper_open),
            ("anchor", res.anchor),
            ("residual_lower", res.residual_lower),
            ("residual_upper", res.residual_upper),
            ("status", res.status),
        ],
        args.out,
    )
    return 0


def _load_config(path: str) -> dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    out: dict[str, str] = {}
    for i, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise InputError(f"{path}: line {i}: expected key=value, got {s!r}")
        k, _, v = s.partition("=")
        out[k.strip()] = v.strip()
    return out


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg: dict[str, str] = _load_config(args.config) if args.config else {}

    def pick(flag_val, key: str, cast, default):
        if flag_val is not None:
            return flag_val
        if key in cfg:
            try:
                return cast(cfg[key])
            except ValueError as e:
                raise InputError(f"config {key}: bad value {cfg[key]!r}") from e
        return default

    dgp_text = pick(args.dgp, "dgp", str, "normal")
    tau = pick(args.tau, "tau", float, 0.5)
    n = pick(args.n, "n", int, 100)
    alpha = pick(args.alpha, "alpha", float, 0.05)
    n_rep = pick(args.reps, "R", int, 200)
    seed = pick(args.seed, "seed", int, 0)
    methods_text = pick(args.methods, "methods", str, "snqesa,exact,pctboot")
    threads = pick(args.threads, "threads", int, os.cpu_count() or 1)
    n_boot = pick(args.n_boot, "n_boot", int, 1000)
    try:
        dgp = DGP.parse(dgp_text)
    except ValueError as e:
        raise InputError(str(e)) from e
    methods = [m.strip() for m in methods_text.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise InputError(f"unknown methods {bad}; choose from {sorted(METHODS)}")
    if n < 2 or n_rep < 1:
        raise InputError("need n >= 2 and R >= 1")
    reports = run_study(
        dgp,
        tau,
        n,
        alpha,
        n_rep,
        methods,
        seed,
        threads=threads,
        n_boot=n_boot,
        timing=args.timing,
    )
    text = report_csv(reports)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_backtest(args: argparse.Namespace) -> int:
    dates, returns = _read_return_csv(args.data, args.prices)
    if args.window >= len(returns):
        raise InputError(
            f"window {args.window} needs more than {args.window} returns, have {len(returns)}"
        )
    report, path = backtest_report(
        returns,
        tau=args.tau,
        window=args.window,
        model=args.model,
        compute_ci=args.ci,
        ci_alpha=1.0 - args.ci_level,
    )
    cols = [
        "model",
        "tau",
        "window",
        "n_returns",
        "n_forecasts",
        "exceedances",
        "exceedance_rate",
        "pof_lr",
        "pof_p",
        "ind_lr",
        "ind_p",
        "cc_lr",
        "cc_p",
        "n_green",
        "n_yellow",
        "n_red",
        "var_vol",
        "change_vol",
        "max_drawdown",
        "turning_ratio",
        "stability",
        "ee_fail",
        "ee_gap",
        "ee_ratio",
        "ee_score",
        "ee_k",
    ]
    header = ",".join(cols)
    row = ",".join(_fmt(getattr(report, c)) for c in cols)
    text = header + "\n" + row + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.path_out:
        fc_dates = dates[path.start :]
        lines = ["date,var,ci_lo,ci_hi,hit"]
        for i in range(path.var.size):
            lines.append(
                f"{fc_dates[i]},{path.var[i]:.17g},{path.ci_lo[i]:.17g},"
                f"{path.ci_hi[i]:.17g},{1 if path.hit[i] else 0}"
            )
        with open(args.path_out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def _add_spec_flags(p: argparse.ArgumentParser, with_alpha: bool = True) -> None:
    p.add_argument("--tau", type=float, required=True, help="quantile level in (0,1)")
    if with_alpha:
        p.add_argument("--alpha", type=float, default=0.05, help="two-sided miscoverage")
    p.add_argument("--ridge-c", dest="ridge_c", type=float, default=0.25)
    p.add_argument("--lattice", choices=sorted(_LATTICE_CHOICES), default="midp")
    p.add_argument("--c0", type=float, default=2.0, help="branch crossover half-width")
    p.add_argument("--out", default=None, help="write output to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="snqesa",
        description="Saddlepoint tail probabilities and confidence intervals for quantiles.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pvalue", help="directed and two-sided p-values at a candidate value")
    p.add_argument("data", help="file with one observation per line, or - for stdin")
    p.add_argument("--t", type=float, required=True, help="candidate quantile value")
    _add_spec_flags(p, with_alpha=False)
    p.set_defaults(func=cmd_pvalue, alpha=0.05)

    p = sub.add_parser("ci", help="confidence interval for the tau-quantile")
    p.add_argument("data", help="file with one observation per line, or - for stdin")
    _add_spec_flags(p)
    p.add_argument("--method", default="snqesa", help=f"one of {sorted(METHODS)}")
    p.add_argument("--seed", type=int, default=0, help="seed for resampling methods")
    p.add_argument("--n-boot", dest="n_boot", type=int, default=1000)
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("simulate", help="Monte Carlo coverage study, CSV output")
    p.add_argument("--config", default=None, help="key=value file; flags override it")
    p.add_argument("--dgp", default=None, help="e.g. normal, lognormal, student_t(5)")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--reps", "-R", dest="reps", type=int, default=None, help="replications")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--methods", default=None, help="comma-separated method list")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: logical cores)")
    p.add_argument("--n-boot", dest="n_boot", type=int, default=None)
    p.add_argument("--timing", action="store_true", help="record wall time (breaks byte determinism)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("backtest", help="rolling VaR backtest from a return CSV")
    p.add_argument("data", help="CSV of date,return (or date,price with --prices)")
    p.add_argument("--prices", action="store_true", help="input is prices; use log returns")
    p.add_argument("--tau", type=float, default=0.99, help="VaR confidence level")
    p.add_argument("--window", type=int, default=250)
    p.add_argument("--model", choices=["hs", "fhs"], default="hs")
    p.add_argument("--ci", action="store_true", help="attach window-quantile intervals")
    p.add_argument("--ci-level", dest="ci_level", type=float, default=0.95)
    p.add_argument("--out", default=None, help="report CSV path (default stdout)")
    p.add_argument("--path-out", dest="path_out", default=None, help="per-day path CSV")
    p.set_defaults(func=cmd_backtest)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0
    except Exception as e:  # numerical failure surface, not a usage error
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
