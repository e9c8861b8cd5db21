"""Experiment configs, Monte Carlo drivers and CSV/JSON output.

A config is flat ``key = value`` text::

    kind = hopcount
    model = powered:uniform:lambda=1:rule=gammalog(gamma=2)
    n_grid = 1000, 10000
    reps = 500
    seed = 7
    workers = 4

Output bytes depend only on the config, never on ``workers``: replication
``i`` always uses ``instance_seed(seed, i)`` and rows are emitted in index
order.  Every experiment kind writes the same CSV columns (:data:`COLUMNS`);
columns a kind does not use are left empty.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import stats

from . import census as census_mod
from .convolution import (
    ConvolutionDomainError,
    bounds_generic,
    bounds_logfrechet,
    bounds_powered,
    conv_best,
)
from .predictor import (
    TIE_TOL,
    GumbelSpec,
    eta,
    eta_k,
    gamma_threshold,
    limit_cdf,
    minimizer_k,
    moment_diagnostics,
    predict,
)
from .simulator import sample_batch
from .weights import (
    LogFrechet,
    ModelSpecError,
    Powered,
    classify_regime,
    format_model,
    parse_model,
    scale_un,
)

__all__ = [
    "SCHEMA_VERSION",
    "COLUMNS",
    "KINDS",
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "format_config",
    "run_experiment",
    "rows_to_csv",
    "summary_to_json",
    "gumbel_ks",
    "fmt_float",
]

SCHEMA_VERSION = 1
KINDS = ("scaling", "hopcount", "gumbel", "census", "convolution", "moments")

COLUMNS = (
    "schema", "kind", "model", "n", "rep", "seed",
    "W", "H", "u_n", "s_n", "W_pred_low", "W_pred_high", "H_pred",
    "W_norm", "H_norm", "gumbel_T",
    "k", "l", "exact", "asymptotic", "upper", "rel_error",
    "x", "log_lower", "log_estimate", "log_upper", "method", "rel_std_error",
    "lower_sum", "mean_Nk", "var_ratio_sum",
)


class ConfigError(ValueError):
    """Invalid or unsatisfiable experiment configuration."""


def fmt_float(x) -> str:
    """17 significant digits; empty for ``None``."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


# ---------------------------------------------------------------------------
# config


def _int_list(text):
    return tuple(int(float(t)) for t in text.replace(";", ",").split(",") if t.strip())


def _float_list(text):
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


_OPTION_PARSERS = {
    "beta": float,
    "k_grid": _int_list,
    "x_grid": _float_list,
    "mc_reps": int,
    "eps": float,
    "census_method": str,
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    model: str
    n_grid: tuple
    reps: int = 1
    seed: int = 0
    workers: int = 1
    out: Optional[str] = None
    summary: Optional[str] = None
    options: dict = field(default_factory=dict)

    def option(self, key, default=None):
        return self.options.get(key, default)

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if not self.n_grid:
            raise ConfigError("n_grid is empty")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if self.n_grid[0] < 3:
            raise ConfigError("every n must be at least 3")
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.kind != "census":
            try:
                model = parse_model(self.model)
            except ModelSpecError as exc:
                raise ConfigError(str(exc)) from exc
        if self.kind == "gumbel":
            reg = classify_regime(model)
            if reg.kind != "very_small" or not isinstance(model, Powered):
                raise ConfigError("gumbel experiments need a powered model with s_n log n -> gamma")
            gamma = reg.param
            if gamma <= gamma_threshold(1) + TIE_TOL:
                raise ConfigError(f"gumbel limit needs gamma > 2 log 2, got {gamma}")
            if minimizer_k(gamma)[2]:
                raise ConfigError(f"gamma = {gamma} is a tie point: no single-k Gumbel limit")
        beta = self.option("beta", 0.25)
        if not 0 < beta < 1:
            raise ConfigError("beta must lie in (0, 1)")
        return self


_CONFIG_KEYS = {"kind", "model", "n_grid", "n", "reps", "seed", "workers", "out", "summary"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat ``key = value`` lines (``#`` starts a comment)."""
    values = {}
    options = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key in values or key in options:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key in _CONFIG_KEYS:
            values[key] = value
        elif key in _OPTION_PARSERS:
            try:
                options[key] = _OPTION_PARSERS[key](value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    for req in ("kind",):
        if req not in values:
            raise ConfigError(f"missing required key {req!r}")
    grid = values.get("n_grid", values.get("n"))
    if grid is None:
        raise ConfigError("missing n_grid")
    try:
        cfg = ExperimentConfig(
            kind=values["kind"],
            model=values.get("model", ""),
            n_grid=_int_list(grid),
            reps=int(values.get("reps", 1)),
            seed=int(values.get("seed", "0"), 0),
            workers=int(values.get("workers", 1)),
            out=values.get("out"),
            summary=values.get("summary"),
            options=options,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def format_config(cfg: ExperimentConfig) -> str:
    lines = [
        f"kind = {cfg.kind}",
        f"model = {cfg.model}",
        "n_grid = " + ", ".join(str(n) for n in cfg.n_grid),
        f"reps = {cfg.reps}",
        f"seed = {cfg.seed}",
    ]
    for key in sorted(cfg.options):
        v = cfg.options[key]
        if isinstance(v, tuple):
            v = ", ".join(fmt_float(t) for t in v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# statistics


def gumbel_ks(samples, a_k: float):
    """Two-sided KS distance to the CDF ``1 - exp(-a_k e**t)``."""
    x = np.asarray(samples, dtype=float)
    if x.size < 100:
        raise ValueError("gumbel_ks needs at least 100 samples")
    res = stats.kstest(x, lambda t: limit_cdf(t, a_k))
    return float(res.statistic), int(x.size)


def _median(values):
    v = [x for x in values if x is not None]
    return float(np.median(v)) if v else None


# ---------------------------------------------------------------------------
# experiment kinds


def _row(**kw):
    row = dict.fromkeys(COLUMNS)
    row["schema"] = SCHEMA_VERSION
    row.update(kw)
    return row


def _simulation(cfg, model):
    rows, per_n = [], []
    beta = cfg.option("beta", 0.25)
    for n in cfg.n_grid:
        pred = predict(model, n, beta)
        s, u = pred.s_n, pred.u_n
        scale = s * math.log(n)
        h_pred = pred.H_value if pred.H_value is not None else pred.H_center
        spec = pred.limit_law if isinstance(pred.limit_law, GumbelSpec) else None
        results = sample_batch(model, n, cfg.reps, cfg.seed, workers=cfg.workers)
        block = []
        for i, r in enumerate(results):
            t = float(spec.statistic(r.weight)) if spec is not None else None
            block.append(_row(
                kind=cfg.kind, model=cfg.model, n=n, rep=i, seed=r.seed,
                W=r.weight, H=r.hopcount, u_n=u, s_n=s,
                W_pred_low=pred.W_lower, W_pred_high=pred.W_upper, H_pred=h_pred,
                W_norm=r.weight / (u * scale), H_norm=r.hopcount / scale, gumbel_T=t,
            ))
        rows.extend(block)
        per_n.append(_summarise_sim(cfg, n, pred, block, spec))
    return rows, per_n


def _summarise_sim(cfg, n, pred, block, spec):
    W = [r["W"] for r in block]
    H = [r["H"] for r in block]
    hist = {}
    for h in H:
        hist[str(h)] = hist.get(str(h), 0) + 1
    out = {
        "n": n,
        "reps": len(block),
        "median_W": _median(W),
        "mean_W": float(np.mean(W)),
        "median_H": _median(H),
        "median_W_norm": _median([r["W_norm"] for r in block]),
        "median_H_norm": _median([r["H_norm"] for r in block]),
        "H_freq": dict(sorted(hist.items(), key=lambda kv: int(kv[0]))),
        "prediction": _jsonable(pred.to_dict()),
    }
    if pred.W_lower is not None and pred.W_upper is not None:
        out["W_band_coverage"] = float(np.mean([pred.W_lower <= w <= pred.W_upper for w in W]))
    if pred.H_band is not None:
        lo, hi = pred.H_band
        out["H_band_coverage"] = float(np.mean([lo <= h <= hi for h in H]))
    if pred.H_value is not None:
        out["freq_H_pred"] = float(np.mean([h == pred.H_value for h in H]))
    if pred.W_center is not None:
        out["median_abs_W_dev"] = float(np.median([abs(w - pred.W_center) for w in W]))
    if spec is not None and len(block) >= 100:
        d, size = gumbel_ks([r["gumbel_T"] for r in block], spec.a_k)
        out["gumbel_ks"] = d
        out["gumbel_ks_size"] = size
    return out


def _census(cfg):
    rows, per_n = [], []
    method = cfg.option("census_method", "auto")
    for n in cfg.n_grid:
        ks = cfg.option("k_grid") or tuple(range(1, n))
        for k in ks:
            if not 1 <= k <= n - 1:
                raise ConfigError(f"k = {k} outside [1, n-1] for n = {n}")
            for res in census_mod.census(n, k, method=method):
                rows.append(_row(
                    kind="census", n=n, k=k, l=res.l, exact=res.exact,
                    asymptotic=res.asymptotic, upper=res.upper, rel_error=res.rel_error,
                ))
        per_n.append({"n": n, "k_grid": list(ks)})
    return rows, per_n


def convolution_rows(model, n, k, x, mc_reps=100_000, seed=0, model_text=""):
    """Bounds and best estimate of ``F^{*k}(x)`` (log scale) as CSV rows."""
    est = conv_best(model, n, k, x, reps=mc_reps, seed=seed)
    rows = []
    bounds = []
    try:
        bounds.append(("generic", bounds_generic(model, n, k, x)))
    except (ValueError, ConvolutionDomainError):
        pass
    if isinstance(model, Powered) and 1.0 / model.sn(n) > 1:
        try:
            bounds.append(("powered", bounds_powered(model.base, 1.0 / model.sn(n), k, x)))
        except ConvolutionDomainError:
            pass
    if isinstance(model, LogFrechet) and model.alpha > 1:
        try:
            bounds.append(("logfrechet", bounds_logfrechet(model.rho, model.alpha, k, x)))
        except ConvolutionDomainError:
            pass
    for name, b in bounds:
        rows.append(_row(
            kind="convolution", model=model_text, n=n, k=k, x=x,
            log_lower=b.log_lower, log_estimate=est.log_value, log_upper=b.log_upper,
            method=f"{est.method}/{name}", rel_std_error=est.rel_std_error,
        ))
    if not bounds:
        rows.append(_row(
            kind="convolution", model=model_text, n=n, k=k, x=x,
            log_estimate=est.log_value, method=est.method, rel_std_error=est.rel_std_error,
        ))
    return rows


def _convolution(cfg, model):
    rows, per_n = [], []
    ks = cfg.option("k_grid") or (1, 2, 3)
    xs = cfg.option("x_grid") or (0.1, 0.2, 0.3)
    mc = cfg.option("mc_reps", 100_000)
    for n in cfg.n_grid:
        block = []
        for k in ks:
            for j, x in enumerate(xs):
                seed = cfg.seed + 1000 * k + j
                block.extend(convolution_rows(model, n, k, x, mc, seed, cfg.model))
        violations = sum(
            1 for r in block
            if r["log_upper"] is not None and not (r["log_lower"] <= r["log_estimate"] <= r["log_upper"])
        )
        rows.extend(block)
        per_n.append({"n": n, "rows": len(block), "sandwich_violations": violations})
    return rows, per_n


def _moments(cfg, model):
    rows, per_n = [], []
    eps = cfg.option("eps", 0.3)
    mc = cfg.option("mc_reps", 20_000)
    for n in cfg.n_grid:
        s = model.sn(n)
        x = s * math.log(n)
        if x < 1:
            raise ConfigError(f"s_n log n = {x:.4g} < 1 at n = {n}: the moment bands are undefined")
        u = scale_un(model, n)
        k = eta_k(x)
        b = math.e * eta(x) * u
        d = (1 - eps) * math.e * math.floor(x) * u
        rec = moment_diagnostics(model, n, k, b, d, reps=mc, seed=cfg.seed)
        rows.append(_row(
            kind="moments", model=cfg.model, n=n, k=k, u_n=u, s_n=s,
            W_pred_low=d, W_pred_high=b, lower_sum=rec.lower_sum, mean_Nk=rec.mean_Nk,
            var_ratio_sum=rec.var_ratio_sum,
        ))
        per_n.append({"n": n, "k": k, "b": b, "d": d, "log_lower_sum": rec.log_lower_sum,
                      "log_mean_Nk": rec.log_mean_Nk, "var_ratio_sum": rec.var_ratio_sum})
    return rows, per_n


def run_experiment(cfg: ExperimentConfig):
    """Run ``cfg``; returns ``(rows, summary)``.

    Rows are dicts over :data:`COLUMNS`; the summary is JSON-serialisable.
    """
    cfg.validate()
    model = parse_model(cfg.model) if cfg.kind != "census" else None
    if cfg.kind in ("scaling", "hopcount", "gumbel"):
        rows, per_n = _simulation(cfg, model)
    elif cfg.kind == "census":
        rows, per_n = _census(cfg)
    elif cfg.kind == "convolution":
        rows, per_n = _convolution(cfg, model)
    else:
        rows, per_n = _moments(cfg, model)
    summary = {
        "schema": SCHEMA_VERSION,
        "config": {
            "kind": cfg.kind,
            "model": format_model(model) if model is not None else cfg.model,
            "n_grid": list(cfg.n_grid),
            "reps": cfg.reps,
            "seed": cfg.seed,
            "options": _jsonable(cfg.options),
        },
        "per_n": per_n,
    }
    return rows, summary


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def rows_to_csv(rows, columns=COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([r.get(c) if isinstance(r.get(c), str) else fmt_float(r.get(c)) for c in columns])
    return buf.getvalue()


def summary_to_json(summary) -> str:
    return json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n"


def with_workers(cfg: ExperimentConfig, workers: int) -> ExperimentConfig:
    return replace(cfg, workers=workers)
