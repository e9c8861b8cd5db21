"""Acceptance criteria and the verification report.

Each ``criterion_*`` function returns a list of :class:`Check` records; a
criterion passes iff all of its checks pass.  The same functions back
``fppkn verify`` and ``tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Any, Optional

import numpy as np

from .census import (
    ERROR_LAW_C,
    pair_count_asymptotic,
    pair_count_upper,
    pair_counts_enumerated,
    pair_counts_reduced,
    path_count_exact,
)
from .convolution import (
    asymptotic_small_s,
    bounds_generic,
    bounds_logfrechet,
    bounds_powered,
    conv_closed_uniform,
    conv_conditional_mc,
    conv_grid,
    logfrechet_xhat,
)
from .harness import ExperimentConfig, rows_to_csv, run_experiment, summary_to_json
from .predictor import (
    eta,
    g_gamma,
    gamma_threshold,
    minimizer_k,
    predict,
    psi,
    stirling_a,
    theta,
)
from .simulator import Instance, brute_force_shortest, sample_batch, shortest_path
from .weights import (
    Constant,
    Exponential,
    LogFrechet,
    NegPowerExp,
    Powered,
    Uniform,
    parse_model,
)

__all__ = ["Check", "CRITERIA", "run_criterion", "verify", "report_ok", "MASTER_SEED"]

MASTER_SEED = 20240611
# log-scale roundoff allowance for exact estimates that coincide with a bound
FP_SLACK = 1e-12

VERY_SMALL_MODEL = "powered:uniform:lambda=1:rule=gammalog(gamma=2)"
INTERMEDIATE_MODEL = "powered:uniform:lambda=1:rule=powlog(c=1,a=0.75)"
CONSTANT_MODEL = "powered:exp:lambda=1:rule=const(s=1)"
GOLDEN_CONFIG = ExperimentConfig(
    kind="scaling", model=CONSTANT_MODEL, n_grid=(100, 1000), reps=100, seed=MASTER_SEED
)


@dataclass(frozen=True)
class Check:
    id: str
    status: str  # "pass", "fail" or "skipped"
    observed: Any = None
    expected: Any = None
    tolerance: Any = None

    @property
    def ok(self) -> bool:
        return self.status != "fail"


def _check(cid, cond, observed=None, expected=None, tolerance=None):
    return Check(cid, "pass" if cond else "fail", observed, expected, tolerance)


def _close(a, b, rtol):
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


def _nondecreasing(v):
    return all(b >= a for a, b in zip(v, v[1:]))


def _nonincreasing(v):
    return all(b <= a for a, b in zip(v, v[1:]))


# ---------------------------------------------------------------------------
# 1-2: path-pair census


def criterion_1():
    checks = []
    for n in range(5, 9):
        for k in range(1, n):
            full = pair_counts_enumerated(n, k)
            red = pair_counts_reduced(n, k)
            pc = path_count_exact(n, k)
            tag = f"census[n={n},k={k}]"
            checks.append(_check(f"{tag}.reduced==enumerated", full == red, red, full))
            checks.append(_check(f"{tag}.sum", sum(full) == pc * pc, sum(full), pc * pc))
            checks.append(_check(f"{tag}.diag", full[k] == math.factorial(n - 2) // math.factorial(n - k - 1),
                                 full[k], pc))
            if k >= 2:
                checks.append(_check(f"{tag}.l=k-1", full[k - 1] == 0, full[k - 1], 0))
            for l in range(1, k - 1):
                up = pair_count_upper(n, k, l)
                checks.append(_check(f"{tag}.upper[l={l}]", full[l] <= up, full[l], f"<= {up}"))
    return checks


def criterion_2(C: float = ERROR_LAW_C):
    checks = []
    for k in (2, 3, 4):
        ls = list(range(1, k - 1)) + [k]
        errs = {}
        for n in (100, 200, 400):
            counts = pair_counts_reduced(n, k)
            for l in ls:
                rel = abs(counts[l] / pair_count_asymptotic(n, k, l) - 1.0)
                errs[(n, l)] = rel
                bound = C * k**4 / n
                checks.append(_check(f"errlaw[k={k},l={l},n={n}]", rel <= bound, rel, f"<= {bound:.6g}", "C k^4/n"))
        for l in ls:
            for n in (100, 200):
                a, b = errs[(n, l)], errs[(2 * n, l)]
                checks.append(_check(f"errlaw-decay[k={k},l={l},n={n}->{2 * n}]", b <= 0.7 * a, b, f"<= 0.7*{a:.6g}"))
    return checks


# ---------------------------------------------------------------------------
# 3-4: convolution


CONV_GRID = [(p, k, x) for p in (2, 4, 8) for k in (2, 3) for x in (0.3, 0.5)]


def criterion_3(reps: int = 1_000_000):
    checks = []
    cf = conv_closed_uniform(2, 2, 0.5).value
    checks.append(_check("closed[p=2,k=2,x=0.5]", abs(cf - 0.5**4 * 4 / 24) <= 1e-15, cf, 0.01041667, "1e-15"))
    for i, (p, k, x) in enumerate(CONV_GRID):
        model = Powered(Uniform(1.0), Constant(1.0 / p))
        mc = conv_conditional_mc(model, 10, k, x, reps=reps, seed=MASTER_SEED + i)
        exact = conv_closed_uniform(p, k, x).value
        z = (mc.value - exact) / mc.std_error
        checks.append(_check(f"closed-vs-mc[p={p},k={k},x={x}]", abs(z) <= 3.0,
                             f"{mc.value:.8g} ± {mc.std_error:.2g}", f"{exact:.8g}", "3 sigma"))
    return checks


GRID_POINTS = 3001


def _bound_points():
    """``(label, bound_pair, log_lo, log_hi)`` over all families.

    ``[log_lo, log_hi]`` is a rigorous bracket of ``log F^{*k}(x)``: the
    closed form where available, else the grid-convolution bracket.
    """
    pts = []

    def closed(p, k, x):
        v = conv_closed_uniform(p, k, x).log_value
        return v, v

    def grid(model, k, x):
        g = conv_grid(model, 10, k, np.linspace(0.0, x, GRID_POINTS))
        return float(g.log_lower[-1]), float(g.log_upper[-1])

    # generic rough bounds
    for p in (2, 4):
        for k in (2, 3):
            for x in (0.2, 0.5):
                m = Powered(Uniform(1.0), Constant(1.0 / p))
                pts.append((f"generic/uniform[p={p},k={k},x={x}]", bounds_generic(m, 10, k, x), *closed(p, k, x)))
    for k in (2, 3):
        for x in (0.2, 0.3):
            m = Powered(Exponential(1.0), Constant(0.25))
            pts.append((f"generic/exp[p=4,k={k},x={x}]", bounds_generic(m, 10, k, x), *grid(m, k, x)))
    for alpha in (2.0, 3.0):
        m = LogFrechet(1.0, alpha)
        x = logfrechet_xhat(1.0, alpha) / 2
        for k in (1, 2, 3):
            pts.append((f"generic/logfrechet[a={alpha},k={k}]", bounds_generic(m, 10, k, x), *grid(m, k, x)))
    for gamma in (0.5, 1.0):
        m = NegPowerExp(gamma)
        for k in (2, 3):
            for x in (0.1, 0.2):
                pts.append((f"generic/negpow[g={gamma},k={k},x={x}]", bounds_generic(m, 10, k, x), *grid(m, k, x)))
    # powered-family bounds
    for p in (2, 4, 8):
        for k in (1, 2, 3):
            pts.append((f"powered/uniform[p={p},k={k},x=0.3]", bounds_powered(Uniform(1.0), p, k, 0.3),
                        *closed(p, k, 0.3)))
    for p in (4, 8):
        for k in (1, 2, 3):
            for x in (0.3, 0.5):
                m = Powered(Exponential(1.0), Constant(1.0 / p))
                pts.append((f"powered/exp[p={p},k={k},x={x}]", bounds_powered(Exponential(1.0), p, k, x),
                            *grid(m, k, x)))
    # log-Frechet bounds
    for rho in (1.0, 2.0):
        for alpha in (2.0, 3.0):
            m = LogFrechet(rho, alpha)
            xh = logfrechet_xhat(rho, alpha)
            for k in (1, 2, 3):
                for frac in (0.5, 0.25):
                    x = xh * frac
                    pts.append((f"logfrechet[rho={rho},a={alpha},k={k},x=xhat*{frac}]",
                                bounds_logfrechet(rho, alpha, k, x), *grid(m, k, x)))
    return pts


def criterion_4():
    checks = []
    pts = _bound_points()
    checks.append(_check("bounds.grid_size", len(pts) >= 60, len(pts), ">= 60"))
    for label, bp, lo, hi in pts:
        # the whole bracket must sit inside the sandwich
        ok = (bp.log_upper is not None and bp.log_lower <= bp.log_upper
              and bp.log_lower <= lo + FP_SLACK and hi <= bp.log_upper + FP_SLACK)
        upper = "None" if bp.log_upper is None else f"{bp.log_upper:.6g}"
        checks.append(_check(f"sandwich/{label}", ok, f"[{lo:.6g}, {hi:.6g}]", f"inside [{bp.log_lower:.6g}, {upper}]",
                             FP_SLACK))
    for k in (2, 3):
        errs = []
        for p in (10, 20, 40, 80):
            r = math.exp(asymptotic_small_s(p, k, 0.5) - conv_closed_uniform(p, k, 0.5).log_value)
            errs.append(abs(r - 1.0))
        checks.append(_check(f"small-s-asymptotic[k={k}].monotone", all(b < a for a, b in zip(errs, errs[1:])), errs))
        checks.append(_check(f"small-s-asymptotic[k={k}].p=40", errs[2] <= 0.2, errs[2], "<= 0.2"))
    return checks


# ---------------------------------------------------------------------------
# 5-9: simulation

SIM_MODELS = (
    "powered:exp:lambda=1:rule=const(s=1)",
    "powered:uniform:lambda=2:rule=gammalog(gamma=2)",
    "logfrechet:rho=1:alpha=3",
    "negpowexp:gamma=1.5",
)


def criterion_5(seeds: int = 1000):
    models = [parse_model(m) for m in SIM_MODELS]
    bad = []
    total = 0
    for n in range(5, 10):
        for s in range(seeds):
            inst = Instance(n, MASTER_SEED * 1_000_003 + 7919 * n + s, models[s % len(models)])
            ref = brute_force_shortest(inst)
            for bidi in (True, False):
                got = shortest_path(inst, bidirectional=bidi)
                total += 1
                if not (_close(got.weight, ref.weight, 1e-12) and got.hopcount == ref.hopcount
                        and got.path == ref.path):
                    bad.append((n, s, bidi))
    return [_check("dijkstra==bruteforce", not bad, f"{len(bad)} mismatches of {total}", "0")]


def criterion_6(reps: int = 300):
    model = parse_model(CONSTANT_MODEL)
    n = 4000
    res = sample_batch(model, n, reps, MASTER_SEED)
    mean_w = float(np.mean([n * r.weight / math.log(n) for r in res]))
    med_h = float(np.median([r.hopcount / math.log(n) for r in res]))
    return [
        _check("constant-s.mean(nW/log n)", 0.85 <= mean_w <= 1.15, mean_w, "[0.85, 1.15]"),
        _check("constant-s.median(H/log n)", 0.7 <= med_h <= 1.3, med_h, "[0.7, 1.3]"),
    ]


@lru_cache(maxsize=None)
def very_small_batches(reps: int = 2000, grid: tuple = (1000, 10_000, 100_000)):
    """Shared batches for the very-small regime; the first ``r`` replications
    of a batch are exactly the ``r``-replication batch with the same seed."""
    model = parse_model(VERY_SMALL_MODEL)
    return {n: tuple(sample_batch(model, n, reps, MASTER_SEED)) for n in grid}


def criterion_7(reps: int = 500):
    batches = very_small_batches()
    target = 2 / math.e
    grid = sorted(batches)
    freq = [float(np.mean([r.hopcount == 2 for r in batches[n][:reps]])) for n in grid]
    dev = [float(np.median([abs(r.weight - target) for r in batches[n][:reps]])) for n in grid]
    return [
        _check("very-small.freq(H=2).nondecreasing", _nondecreasing(freq), freq),
        _check("very-small.freq(H=2)@1e5", freq[-1] >= 0.6, freq[-1], ">= 0.6"),
        _check("very-small.median|W-2/e|.nonincreasing", _nonincreasing(dev), dev),
    ]


def criterion_8(reps: int = 2000):
    from .harness import gumbel_ks

    batches = very_small_batches()
    model = parse_model(VERY_SMALL_MODEL)
    grid = sorted(batches)
    ks = []
    for n in grid:
        spec = predict(model, n).limit_law
        t = spec.statistic([r.weight for r in batches[n][:reps]])
        ks.append(gumbel_ks(t, spec.a_k)[0])
    return [
        _check("gumbel.ks.nonincreasing", _nonincreasing(ks), ks),
        _check("gumbel.ks@1e5", ks[-1] <= 0.15, ks[-1], "<= 0.15"),
    ]


def criterion_9(reps: int = 200, grid=(1000, 10_000, 30_000)):
    model = parse_model(INTERMEDIATE_MODEL)
    cover, med = [], []
    for n in grid:
        pred = predict(model, n)
        res = sample_batch(model, n, reps, MASTER_SEED)
        cover.append(float(np.mean([pred.W_lower <= r.weight <= pred.W_upper for r in res])))
        med.append(float(np.median([r.hopcount / pred.H_center for r in res])))
    return [
        _check("intermediate.W_band.nondecreasing", _nondecreasing(cover), cover),
        _check("intermediate.median(H/(s log n)) in [0.5,2]", all(0.5 <= m <= 2 for m in med), med),
        _check("intermediate.median closer to 1", abs(med[-1] - 1) < abs(med[0] - 1), med),
    ]


# ---------------------------------------------------------------------------
# 10-11


def constants_table():
    """``(id, observed, expected)`` for the predictor unit values."""
    e = math.e
    return [
        ("eta(2)", eta(2), 2.0),
        ("eta(2.5)", eta(2.5), 2 * math.exp(0.25)),
        ("eta(1.1)", eta(1.1), math.exp(0.1)),
        ("g_2(2)", g_gamma(2, 2), 2 / e),
        ("g_0(3.7)", g_gamma(0, 3.7), 3.7),
        ("g_5(1)", g_gamma(5, 1), 1.0),
        ("minimizer_k(1).k", minimizer_k(1)[0], 1),
        ("minimizer_k(1).value", minimizer_k(1)[1], 1.0),
        ("minimizer_k(2).k", minimizer_k(2)[0], 2),
        ("minimizer_k(2).value", minimizer_k(2)[1], 2 / e),
        ("minimizer_k(2log2).tie", float(minimizer_k(2 * math.log(2))[2]), 1.0),
        ("minimizer_k(2log2).value", minimizer_k(2 * math.log(2))[1], 1.0),
        ("gamma_1", gamma_threshold(1), 1.3862943611198906),
        ("gamma_2", gamma_threshold(2), 6 * math.log(1.5)),
        *[(f"minimizer_k(gamma_{k}).tie", float(minimizer_k(gamma_threshold(k))[2]), 1.0) for k in (1, 2, 3)],
        ("theta(0)", theta(0), 1),
        ("theta(1)", theta(1), 1),
        ("theta(2)", theta(2), 4),
        ("a_1", stirling_a(1), 1.0),
        ("a_2", stirling_a(2), math.sqrt(math.pi)),
        ("a_3", stirling_a(3), 3.6275987284684357),
        ("psi(0)", psi(0), 1.0),
        ("psi(1/2)", psi(0.5), math.log(2)),
        ("psi(1)", psi(1), 0.0),
    ]


def criterion_10():
    return [_check(cid, abs(obs - exp) <= 1e-9, obs, exp, 1e-9) for cid, obs, exp in constants_table()]


def determinism_configs():
    return [
        ExperimentConfig("scaling", CONSTANT_MODEL, (200, 400), reps=6, seed=MASTER_SEED),
        ExperimentConfig("hopcount", VERY_SMALL_MODEL, (1000,), reps=8, seed=MASTER_SEED),
        ExperimentConfig("gumbel", VERY_SMALL_MODEL, (500,), reps=100, seed=MASTER_SEED),
        ExperimentConfig("census", "", (6, 20), seed=MASTER_SEED, options={"k_grid": (2, 3)}),
        ExperimentConfig("convolution", "powered:exp:lambda=1:rule=const(s=0.25)", (10,), seed=MASTER_SEED,
                         options={"k_grid": (2,), "x_grid": (0.3,), "mc_reps": 2000}),
        ExperimentConfig("moments", "powered:uniform:lambda=1:rule=const(s=0.2)", (10_000,), seed=MASTER_SEED),
    ]


def criterion_11(worker_counts=(1, 8)):
    checks = []
    for cfg in determinism_configs():
        digests = []
        for w in worker_counts:
            for _ in range(2 if w == worker_counts[0] else 1):
                rows, summary = run_experiment(ExperimentConfig(**{**cfg.__dict__, "workers": w}))
                digests.append((rows_to_csv(rows), summary_to_json(summary)))
        same = all(d == digests[0] for d in digests)
        checks.append(_check(f"determinism[{cfg.kind}]", same, f"{len(digests)} runs", "identical bytes"))
    return checks


CRITERIA = {
    1: ("path-pair census exactness", criterion_1),
    2: ("census error law", criterion_2),
    3: ("closed form vs conditional MC", criterion_3),
    4: ("bound certification", criterion_4),
    5: ("simulator optimality", criterion_5),
    6: ("constant-s first-order constant", criterion_6),
    7: ("very-small regime trend", criterion_7),
    8: ("Gumbel KS trend", criterion_8),
    9: ("intermediate regime trend", criterion_9),
    10: ("predictor constants", criterion_10),
    11: ("determinism", criterion_11),
}


def run_criterion(i: int):
    """``(passed, checks, seconds)`` for criterion ``i``."""
    t0 = time.perf_counter()
    checks = CRITERIA[i][1]()
    return all(c.ok for c in checks), checks, time.perf_counter() - t0


# ---------------------------------------------------------------------------
# verification report


def golden_summary_text() -> str:
    return resources.files("fppkn").joinpath("data/golden_scaling.json").read_text()


def _golden_check():
    rows, summary = run_experiment(GOLDEN_CONFIG)
    got = summary_to_json(summary)
    return [_check("golden.summary", got == golden_summary_text(), "bytes match" if got == golden_summary_text()
                   else "bytes differ", "data/golden_scaling.json")]


QUICK = (1, 2, 3, 4, 5, 10)
FULL = tuple(range(1, 12))


def verify(level: str = "quick", progress=None):
    """Run the verification suite; returns a list of :class:`Check`.

    ``quick`` runs exact oracles and closed-form checks; ``full`` adds the
    Monte Carlo trend criteria, the determinism runs and the golden summary.
    """
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    report = []
    for i in (QUICK if level == "quick" else FULL):
        ok, checks, secs = run_criterion(i)
        if progress is not None:
            progress(f"criterion {i:2d} ({CRITERIA[i][0]}): {'pass' if ok else 'FAIL'} [{secs:.1f}s]")
        report.extend(Check(f"C{i}:{c.id}", c.status, c.observed, c.expected, c.tolerance) for c in checks)
    if level == "full":
        report.extend(_golden_check())
    return report


def report_ok(report) -> bool:
    return all(c.status != "fail" for c in report)
