"""Network-based prox, its error metrics, and the exact-vs-approximate timing harness."""

import csv
import math
import time
from dataclasses import dataclass, fields

import numpy as np

from ._validation import check_int, check_scalar, check_vector
from .datagen import record_rng
from .features import Filtered, feature_names, moment_features
from .prox import ProxResult, clip_to_threshold, l1_within, prox_linf_sort
from .tinynn import MlpModel, forward


class FilteredInputError(ValueError):
    """The input has ``||x||_1 <= alpha``; its prox is exactly zero."""


def _predict(model, w):
    if isinstance(model, MlpModel):
        return forward(model, w)
    return float(np.asarray(model.predict(w[None, :])).ravel()[0])


def _check_width(model, k):
    width = model.n_features if isinstance(model, MlpModel) else getattr(model, "n_features_in_", None)
    if width is not None and width != k + 3:
        raise ValueError(f"model expects {width} features but k={k} gives {k + 3}")


def assemble_prox(x, t):
    """Clamp a candidate threshold into ``[0, ||x||_inf]`` and apply the clip map.

    Returns ``(ProxResult, clamped)``.
    """
    upper = float(np.abs(x).max())
    clamped = not 0.0 <= t <= upper
    t = min(max(t, 0.0), upper)
    return ProxResult(clip_to_threshold(x, t), t), clamped


def approx_threshold(x, alpha, model, k=10, *, fast=False):
    """Unclamped threshold estimate ``alpha * (tau_tilde + mu)``."""
    out = moment_features(x, alpha, k, fast=fast)
    if isinstance(out, Filtered):
        raise FilteredInputError(f"||x||_1 / alpha = {out.l1_scaled:.6g} <= 1; the prox is zero")
    w, mu = out
    return alpha * (_predict(model, w) + mu)


def approx_prox(x, alpha, model, k=10, *, fast=False):
    """Prox from the network's threshold; ``model`` is an MlpModel or a fitted regressor."""
    x = check_vector(x)
    alpha = check_scalar(alpha, "alpha", strictly_positive=True)
    _check_width(model, k)
    result, _ = assemble_prox(x, approx_threshold(x, alpha, model, k, fast=fast))
    return result


def objective(x, alpha, y):
    """``1/2 ||y - x||^2 + alpha ||y||_inf``."""
    d = y - x
    return 0.5 * float(d @ d) + alpha * float(np.abs(y).max())


def delta_p(x, exact, approx):
    """Relative l2 error of the prox vector; NaN when the exact prox is zero."""
    denom = float(np.linalg.norm(exact.prox))
    if denom == 0.0:
        return math.nan
    return float(np.linalg.norm(exact.prox - approx.prox)) / denom


def delta_f(x, alpha, exact, approx):
    """Relative excess objective; NaN when the optimal objective is zero."""
    x = np.asarray(x, dtype=np.float64)
    f_exact = objective(x, alpha, exact.prox)
    if f_exact == 0.0:
        return math.nan
    return (objective(x, alpha, approx.prox) - f_exact) / f_exact


@dataclass
class ErrorSummary:
    n: int
    n_excluded: int
    n_clamped: int
    dp_median: float
    dp_mean: float
    dp_sd: float
    df_median: float
    df_mean: float
    df_sd: float


def _stats(values):
    values = np.asarray(values, dtype=np.float64)
    values = values[~np.isnan(values)]
    if values.size == 0:
        return math.nan, math.nan, math.nan, 0
    return float(np.median(values)), float(values.mean()), float(values.std()), values.size


def evaluate(triples, model, k=10):
    """Per-instance ``(delta_p, delta_f, clamped)`` for the non-filtered triples."""
    _check_width(model, k)
    dp, df, clamped = [], [], []
    for t in triples:
        x = check_vector(t.x)
        if l1_within(np.abs(x), t.alpha):
            continue
        exact = prox_linf_sort(x, t.alpha)
        approx, was_clamped = assemble_prox(x, approx_threshold(x, t.alpha, model, k))
        dp.append(delta_p(x, exact, approx))
        df.append(delta_f(x, t.alpha, exact, approx))
        clamped.append(was_clamped)
    return np.array(dp), np.array(df), np.array(clamped, dtype=bool)


def summarize_errors(triples, model, k=10):
    dp, df, clamped = evaluate(triples, model, k)
    if dp.size == 0:
        raise ValueError("no non-filtered instances to evaluate")
    dp_med, dp_mean, dp_sd, n_dp = _stats(dp)
    df_med, df_mean, df_sd, n_df = _stats(df)
    if n_dp == 0 and n_df == 0:
        raise ValueError("every instance has an undefined error")
    excluded = int(np.count_nonzero(np.isnan(dp) | np.isnan(df)))
    return ErrorSummary(
        n=int(dp.size),
        n_excluded=excluded,
        n_clamped=int(clamped.sum()),
        dp_median=dp_med,
        dp_mean=dp_mean,
        dp_sd=dp_sd,
        df_median=df_med,
        df_mean=df_mean,
        df_sd=df_sd,
    )


@dataclass
class TimingRow:
    """Mean seconds per vector; ``approx_total`` is the sum of the three stages."""

    m: int
    count: int
    preprocess: float
    inference: float
    assemble: float
    approx_total: float
    exact_total: float


def bench_vectors(m, count, mix, seed):
    """The deterministic workload for one length: ``(x, alpha)`` pairs."""
    dists = [d for d, p in mix for _ in range(round(p * count))][:count]
    while len(dists) < count:
        dists.append(mix[-1][0])
    for i, dist in enumerate(dists):
        rng = record_rng(seed, m * 1_000_003 + i)
        alpha = float(rng.uniform(1.0, 6.0))
        yield dist.sample(rng, m), alpha


def _time_one(x, alpha, model, k, clock):
    t0 = clock()
    out = moment_features(x, alpha, k, fast=True)
    t1 = clock()
    if isinstance(out, Filtered):
        return None
    w, mu = out
    tt = _predict(model, w)
    t2 = clock()
    assemble_prox(x, alpha * (tt + mu))
    t3 = clock()
    prox_linf_sort(x, alpha)
    t4 = clock()
    return t1 - t0, t2 - t1, t3 - t2, t4 - t3


def bench(lengths, count, mix, model, k=10, seed=0, *, warmup=True):
    """Time the approximate prox stage by stage against the exact sort-based prox.

    Vectors are generated one at a time and timed with a monotonic clock;
    an untimed pass over the first vector of each length runs first.
    Filtered vectors are skipped and not counted.
    """
    count = check_int(count, "count", minimum=1)
    _check_width(model, k)
    clock = time.perf_counter_ns
    rows = []
    for m in lengths:
        m = check_int(m, "length", minimum=1)
        totals = np.zeros(4, dtype=np.int64)
        n = 0
        for i, (x, alpha) in enumerate(bench_vectors(m, count, mix, seed)):
            if warmup and i == 0:
                _time_one(x, alpha, model, k, clock)
            sample = _time_one(x, alpha, model, k, clock)
            if sample is None:
                continue
            totals += sample
            n += 1
        if n == 0:
            raise ValueError(f"every vector of length {m} was filtered")
        pre, inf, asm, exact = (totals / n / 1e9).tolist()
        rows.append(TimingRow(m, n, pre, inf, asm, pre + inf + asm, exact))
    return rows


def _write_dataclass_rows(rows, cls, path):
    names = [f.name for f in fields(cls)]
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in rows:
            vals = [getattr(row, n) for n in names]
            w.writerow([v if isinstance(v, int) else format(v, ".17g") for v in vals])


def write_error_summary(summary, path):
    _write_dataclass_rows([summary], ErrorSummary, path)


def write_timing(rows, path):
    _write_dataclass_rows(rows, TimingRow, path)


def emit_curves(report, path):
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_mse", "test_mse_tau_hat", "test_mse_tau"])
        for i in range(report.epochs):
            w.writerow(
                [
                    i + 1,
                    format(report.train_mse[i], ".17g"),
                    format(report.test_mse_tau_hat[i], ".17g"),
                    format(report.test_mse_tau[i], ".17g"),
                ]
            )


def emit_saliency(values, path):
    values = np.asarray(values, dtype=np.float64)
    names = feature_names(values.size - 3)
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature_name", "value"])
        for name, v in zip(names, values):
            w.writerow([name, format(float(v), ".17g")])


def read_curves(path):
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["epoch", "train_mse", "test_mse_tau_hat", "test_mse_tau"]:
        raise ValueError(f"{path}: not a learning-curve file")
    return [(int(r[0]), float(r[1]), float(r[2]), float(r[3])) for r in rows[1:]]


def read_saliency(path):
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["feature_name", "value"]:
        raise ValueError(f"{path}: not a saliency file")
    return [(r[0], float(r[1])) for r in rows[1:]]
