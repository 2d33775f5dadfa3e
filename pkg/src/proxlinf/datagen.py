"""Seeded synthetic ``x``-``alpha``-``tau`` triples, splits and CSV files.

Record ``i`` draws from its own generator seeded by ``(seed, i)``, so any
subset of records can be produced independently and in any order.

Raw file::

    PROXDS,1,count=<n>
    m,alpha,tau,x_1,...,x_m[,label]

Feature file::

    w1,...,w{k+3},tau_hat,mu,alpha,m[,label]
    ...
"""

import csv
import math
import re
from dataclasses import dataclass

import numpy as np
from sklearn.model_selection import train_test_split

from ._validation import check_int
from .features import FeatureTable
from .prox import prox_linf_sort

RAW_MAGIC = "PROXDS"
RAW_VERSION = "1"


class DatasetFormatError(ValueError):
    pass


def _fmt(v):
    return format(float(v), ".17g")


@dataclass(frozen=True)
class Distribution:
    """``normal`` is N(0, 1); ``uniform`` is U(0, scale)."""

    kind: str
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("normal", "uniform"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "normal" and self.scale != 1.0:
            raise ValueError("normal data is always N(0, 1)")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError("uniform scale must be positive")

    @classmethod
    def parse(cls, text):
        m = re.fullmatch(r"(normal|uniform)(?::([0-9.eE+-]+))?", text.strip())
        if not m:
            raise ValueError(f"cannot parse distribution {text!r} (use normal, uniform or uniform:A)")
        kind, scale = m.groups()
        return cls(kind, float(scale) if scale else 1.0)

    @property
    def label(self):
        if self.kind == "uniform" and self.scale != 1.0:
            return f"uniform:{self.scale:g}"
        return self.kind

    def sample(self, rng, m):
        if self.kind == "normal":
            return rng.standard_normal(m)
        return rng.uniform(0.0, self.scale, m)


def parse_mix(text):
    """``"normal=0.5,uniform=0.5"`` -> ``((Distribution, 0.5), ...)``."""
    mix = []
    for part in text.split(","):
        if not part.strip():
            continue
        name, _, prop = part.partition("=")
        mix.append((Distribution.parse(name), float(prop) if prop else 1.0))
    return tuple(mix)


@dataclass(frozen=True)
class DatasetSpec:
    count: int
    mix: tuple = ((Distribution("uniform"), 1.0),)
    length_range: tuple = (1000, 2000)
    alpha_range: tuple = (1.0, 6.0)
    seed: int = 0

    def __post_init__(self):
        check_int(self.count, "count", minimum=1)
        if not self.mix:
            raise ValueError("mix must name at least one distribution")
        props = [p for _, p in self.mix]
        if min(props) < 0 or not math.isclose(sum(props), 1.0, abs_tol=1e-9):
            raise ValueError(f"mix proportions must be nonnegative and sum to 1, got {props}")
        lo, hi = self.length_range
        check_int(lo, "min length", minimum=1)
        if check_int(hi, "max length") < lo:
            raise ValueError("max length must be >= min length")
        a_lo, a_hi = self.alpha_range
        if not (0 < a_lo < a_hi and math.isfinite(a_hi)):
            raise ValueError(f"alpha_range must satisfy 0 < low < high, got {self.alpha_range}")
        check_int(self.seed, "seed", minimum=0)

    def assignment(self):
        """Distribution of every record: exact counts, largest remainder, in mix order."""
        quotas = [p * self.count for _, p in self.mix]
        counts = [math.floor(q) for q in quotas]
        short = self.count - sum(counts)
        by_remainder = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
        for i in by_remainder[:short]:
            counts[i] += 1
        out = []
        for (dist, _), c in zip(self.mix, counts):
            out += [dist] * c
        return out


@dataclass(frozen=True, eq=False)
class Triple:
    x: np.ndarray
    alpha: float
    tau: float
    label: str = None

    def __eq__(self, other):
        if not isinstance(other, Triple):
            return NotImplemented
        return (
            self.alpha == other.alpha
            and self.tau == other.tau
            and self.label == other.label
            and np.array_equal(self.x, other.x)
        )


def record_rng(seed, index):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def generate_one(spec, index, dist):
    rng = record_rng(spec.seed, index)
    lo, hi = spec.length_range
    m = int(rng.integers(lo, hi + 1))
    alpha = float(rng.uniform(*spec.alpha_range))
    x = dist.sample(rng, m)
    return Triple(x=x, alpha=alpha, tau=prox_linf_sort(x, alpha).tau, label=dist.label)


def generate(spec):
    return [generate_one(spec, i, dist) for i, dist in enumerate(spec.assignment())]


def split(n, test_fraction=0.2, stratify_labels=None, seed=0):
    """Random train/test index split, optionally stratified by label.

    Returns sorted ``(train_index, test_index)`` covering ``range(n)``.
    """
    n = check_int(n, "n", minimum=2)
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    train, test = train_test_split(
        np.arange(n),
        test_size=test_fraction,
        random_state=seed,
        shuffle=True,
        stratify=None if stratify_labels is None else np.asarray(stratify_labels),
    )
    return np.sort(train), np.sort(test)


def save_raw(triples, path):
    triples = list(triples)
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(f"{RAW_MAGIC},{RAW_VERSION},count={len(triples)}\n")
        for t in triples:
            row = [str(t.x.size), _fmt(t.alpha), _fmt(t.tau)] + [_fmt(v) for v in t.x]
            if t.label is not None:
                row.append(t.label)
            fh.write(",".join(row) + "\n")


def _float(tok, path, lineno):
    try:
        v = float(tok)
    except ValueError:
        raise DatasetFormatError(f"{path}: line {lineno}: not a number: {tok!r}") from None
    if not math.isfinite(v):
        raise DatasetFormatError(f"{path}: line {lineno}: non-finite value")
    return v


def load_raw(path):
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetFormatError(f"{path}: empty file")
    header = rows[0]
    m = re.fullmatch(r"count=(\d+)", header[2]) if len(header) == 3 else None
    if header[:2] != [RAW_MAGIC, RAW_VERSION] or m is None:
        raise DatasetFormatError(f"{path}: line 1: expected '{RAW_MAGIC},{RAW_VERSION},count=<n>'")
    count = int(m.group(1))
    body = rows[1:]
    if len(body) != count:
        raise DatasetFormatError(f"{path}: header announces {count} records, found {len(body)}")
    triples = []
    for lineno, row in enumerate(body, start=2):
        if len(row) < 4:
            raise DatasetFormatError(f"{path}: line {lineno}: expected at least 4 fields, got {len(row)}")
        try:
            size = int(row[0])
        except ValueError:
            raise DatasetFormatError(f"{path}: line {lineno}: bad length field {row[0]!r}") from None
        if size < 1 or len(row) not in (size + 3, size + 4):
            raise DatasetFormatError(
                f"{path}: line {lineno}: length {size} needs {size + 3} fields (+1 label), got {len(row)}"
            )
        alpha = _float(row[1], path, lineno)
        tau = _float(row[2], path, lineno)
        x = np.array([_float(tok, path, lineno) for tok in row[3 : size + 3]])
        label = row[size + 3] if len(row) == size + 4 else None
        triples.append(Triple(x=x, alpha=alpha, tau=tau, label=label))
    return triples


def feature_header(k, with_labels=False):
    cols = [f"w{i}" for i in range(1, k + 4)] + ["tau_hat", "mu", "alpha", "m"]
    return cols + ["label"] if with_labels else cols


def save_features(table, path):
    with_labels = table.labels is not None
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(",".join(feature_header(table.k, with_labels)) + "\n")
        for i in range(len(table)):
            row = [_fmt(v) for v in table.W[i]]
            row += [_fmt(table.tau_hat[i]), _fmt(table.mu[i]), _fmt(table.alpha[i]), str(int(table.m[i]))]
            if with_labels:
                row.append(table.labels[i])
            fh.write(",".join(row) + "\n")


def load_features(path, k=None):
    """Read a feature file; ``k`` (if given) must match the header's width."""
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetFormatError(f"{path}: empty file")
    header = rows[0]
    with_labels = header[-1:] == ["label"]
    n_w = len(header) - 4 - with_labels
    file_k = n_w - 3
    if file_k < 1 or header != feature_header(file_k, with_labels):
        raise DatasetFormatError(f"{path}: line 1: unrecognised feature header")
    if k is not None and k != file_k:
        raise DatasetFormatError(f"{path}: file holds k={file_k} moments, expected k={k}")
    body = rows[1:]
    if not body:
        raise DatasetFormatError(f"{path}: no feature rows")
    width = len(header)
    W = np.empty((len(body), n_w))
    cols = np.empty((len(body), 3))
    m = np.empty(len(body), dtype=np.int64)
    labels = [] if with_labels else None
    for i, row in enumerate(body):
        lineno = i + 2
        if len(row) != width:
            raise DatasetFormatError(f"{path}: line {lineno}: expected {width} fields, got {len(row)}")
        W[i] = [_float(tok, path, lineno) for tok in row[:n_w]]
        cols[i] = [_float(tok, path, lineno) for tok in row[n_w : n_w + 3]]
        try:
            m[i] = int(row[n_w + 3])
        except ValueError:
            raise DatasetFormatError(f"{path}: line {lineno}: bad length field") from None
        if with_labels:
            labels.append(row[-1])
    return FeatureTable(W=W, tau_hat=cols[:, 0], mu=cols[:, 1], alpha=cols[:, 2], m=m, labels=labels)
