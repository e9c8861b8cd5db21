"""Command line interface: ``fppkn <subcommand> ...``.

Exit codes: 0 success, 2 bad configuration or arguments, 3 verification
failure, 4 refused because a resource limit would be exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace

from .census import CensusLimitError, census
from .convolution import ConvolutionDomainError
from .harness import (
    ConfigError,
    ExperimentConfig,
    convolution_rows,
    fmt_float,
    parse_config,
    rows_to_csv,
    run_experiment,
    summary_to_json,
)
from .predictor import predict
from .simulator import ResourceLimitError
from .weights import ModelSpecError, format_model, parse_model

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_RESOURCE = 0, 2, 3, 4

CENSUS_COLUMNS = ("n", "k", "l", "exact", "asymptotic", "upper", "rel_error")
# lower / estimate / upper are natural logs of probabilities; std_error is the
# standard error of the log estimate (the relative standard error)
CONV_COLUMNS = ("family", "params", "k", "x", "lower", "estimate", "upper", "method", "std_error")
_CONV_SOURCE = {"lower": "log_lower", "estimate": "log_estimate", "upper": "log_upper", "std_error": "rel_std_error"}


def _int_list(text):
    return tuple(int(float(t)) for t in text.replace(",", " ").split())


def _float_list(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


def _write(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _experiment_args(p, kind_choices, default_kind):
    p.add_argument("--config", help="key = value config file; explicit flags override it")
    p.add_argument("--kind", choices=kind_choices, default=None, help=f"experiment kind (default {default_kind})")
    p.add_argument("--model", help="weight model, e.g. 'powered:exp:lambda=1:rule=const(s=1)'")
    p.add_argument("--n", type=int, help="single graph size")
    p.add_argument("--n-grid", type=_int_list, help="comma separated graph sizes")
    p.add_argument("--reps", type=int, help="replications per n")
    p.add_argument("--seed", type=lambda t: int(t, 0), help="master seed")
    p.add_argument("--workers", type=int, help="worker processes (output does not depend on it)")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--summary", help="JSON summary path")


def _config_from_args(args, default_kind, options=None):
    cfg = None
    if args.config:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    grid = args.n_grid or ((args.n,) if args.n is not None else None)
    if cfg is None:
        if grid is None:
            raise ConfigError("give --n, --n-grid or --config")
        cfg = ExperimentConfig(kind=args.kind or default_kind, model=args.model or "", n_grid=grid)
    updates = {
        "kind": args.kind, "model": args.model, "n_grid": grid, "reps": args.reps,
        "seed": args.seed, "workers": args.workers, "out": args.out, "summary": args.summary,
    }
    cfg = replace(cfg, **{k: v for k, v in updates.items() if v is not None})
    if options:
        cfg = replace(cfg, options={**cfg.options, **{k: v for k, v in options.items() if v is not None}})
    return cfg.validate()


def _run(cfg):
    rows, summary = run_experiment(cfg)
    _write(rows_to_csv(rows), cfg.out)
    text = summary_to_json(summary)
    if cfg.summary:
        _write(text, cfg.summary)
    elif cfg.out not in (None, "-"):
        sys.stdout.write(text)
    return summary


def cmd_simulate(args):
    _run(_config_from_args(args, "scaling", {"beta": args.beta}))
    return EXIT_OK


def cmd_gumbel(args):
    args.kind = "gumbel"
    summary = _run(_config_from_args(args, "gumbel"))
    for block in summary["per_n"]:
        print(f"n={block['n']} KS={block.get('gumbel_ks')}", file=sys.stderr)
    return EXIT_OK


def cmd_moments(args):
    args.kind = "moments"
    _run(_config_from_args(args, "moments", {"eps": args.eps, "mc_reps": args.mc_reps}))
    return EXIT_OK


def cmd_predict(args):
    model = parse_model(args.model)
    out = [predict(model, n, beta=args.beta).to_dict() for n in (args.n_grid or (args.n,))]
    _write(json.dumps(out if len(out) > 1 else out[0], indent=2, sort_keys=True, default=str) + "\n", args.out)
    return EXIT_OK


def cmd_census(args):
    lines = [",".join(CENSUS_COLUMNS)]
    for n in args.n_grid or (args.n,):
        for k in args.k_grid or tuple(range(1, n)):
            for r in census(n, k, method=args.method):
                lines.append(",".join(fmt_float(v) for v in (r.n, r.k, r.l, r.exact, r.asymptotic, r.upper,
                                                              r.rel_error)))
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_convolve(args):
    model = parse_model(args.model)
    family, _, params = format_model(model).partition(":")
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(CONV_COLUMNS)
    for k in args.k_grid:
        for j, x in enumerate(args.x_grid):
            for r in convolution_rows(model, args.n, k, x, args.mc_reps, args.seed + 1000 * k + j, args.model):
                vals = [family, params] + [r[_CONV_SOURCE.get(c, c)] for c in CONV_COLUMNS[2:]]
                out.writerow([v if isinstance(v, str) else fmt_float(v) for v in vals])
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_verify(args):
    from .acceptance import report_ok, verify

    report = verify(args.level, progress=lambda msg: print(msg, file=sys.stderr))
    width = max(len(c.id) for c in report)
    lines = []
    for c in report:
        if args.verbose or c.status == "fail":
            lines.append(f"{c.status.upper():7s} {c.id:{width}s} observed={c.observed} expected={c.expected}")
    ok = report_ok(report)
    failed = sum(c.status == "fail" for c in report)
    lines.append(f"{'OK' if ok else 'FAILED'}: {len(report) - failed}/{len(report)} checks passed")
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser():
    parser = argparse.ArgumentParser(prog="fppkn", description="First passage percolation on the complete graph")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo of (W_n, H_n) over an n grid")
    _experiment_args(p, ("scaling", "hopcount", "gumbel"), "scaling")
    p.add_argument("--beta", type=float, help="hopcount band exponent")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gumbel", help="Gumbel statistic and KS distance in the very-small regime")
    _experiment_args(p, ("gumbel",), "gumbel")
    p.set_defaults(func=cmd_gumbel)

    p = sub.add_parser("moments", help="first and second moment diagnostics")
    _experiment_args(p, ("moments",), "moments")
    p.add_argument("--eps", type=float, help="lower band slack (default 0.3)")
    p.add_argument("--mc-reps", type=int, help="Monte Carlo budget for non-closed-form terms")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("predict", help="regime and predicted (W_n, H_n) with the limit law")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--n-grid", type=_int_list)
    p.add_argument("--beta", type=float, default=0.25)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("census", help="exact and asymptotic path-pair counts")
    p.add_argument("--n", type=int)
    p.add_argument("--n-grid", type=_int_list)
    p.add_argument("--k", dest="k_grid", type=_int_list, help="path lengths (default 1..n-1)")
    p.add_argument("--method", choices=("auto", "reduced", "enumerate"), default="auto")
    p.add_argument("--out")
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("convolve", help="bounds and estimate of log F^{*k}(x)")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, default=10, help="graph size entering s_n (default 10)")
    p.add_argument("--k", dest="k_grid", type=_int_list, default=(2,))
    p.add_argument("--x", dest="x_grid", type=_float_list, required=True)
    p.add_argument("--mc-reps", type=int, default=100_000)
    p.add_argument("--seed", type=lambda t: int(t, 0), default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convolve)

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--verbose", "-v", action="store_true", help="list passing checks too")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("predict", "census") and args.n is None and not args.n_grid:
        parser.error("give --n or --n-grid")
    try:
        return args.func(args)
    except (ResourceLimitError, CensusLimitError) as exc:
        print(f"fppkn: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, ModelSpecError, ConvolutionDomainError, ValueError, OSError) as exc:
        print(f"fppkn: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
