"""Length-independent moment features of an ``x``-``alpha``-``tau`` triple.

Each vector is reduced to ``k + 3`` numbers: the min and max of the scaled,
centered magnitudes, ``k`` root-normalized moments and ``log(m)``. Dividing
by ``alpha`` removes it as a parameter, and centering by the mean magnitude
``mu`` shifts the target by the same amount, so the network learns
``tau_hat = tau / alpha - mu``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._validation import check_int, check_scalar, check_vector
from .prox import l1_within


@dataclass(frozen=True)
class Filtered:
    """Marker for inputs whose prox is identically zero (``||x||_1 <= alpha``)."""

    l1_scaled: float


@dataclass(frozen=True, eq=False)
class FeatureRecord:
    w: np.ndarray
    tau_hat: float
    mu: float
    alpha: float
    m: int

    @property
    def tau(self):
        return self.alpha * (self.tau_hat + self.mu)


@dataclass(frozen=True, eq=False)
class PaddedRecord:
    x_hat: np.ndarray
    tau_hat: float


def feature_names(k):
    return ["min", "max"] + [f"m{j}" for j in range(1, k + 1)] + ["ln_m"]


def _signed_root(u, j):
    # odd moments of centered data can be negative; keep the real root
    return math.copysign(abs(u) ** (1.0 / j), u)


def _filtered(x, alpha):
    # same test as the prox short-circuit, so the two always agree
    a = np.abs(x)
    if l1_within(a, alpha):
        return Filtered(math.fsum(a.tolist()) / alpha)
    return None


def moment_features(x, alpha, k=10, *, fast=False):
    """Feature vector ``w`` and centering constant ``mu`` for one vector.

    With ``fast=False`` every sum is exactly rounded, which makes ``w`` a
    symmetric function of ``x`` bit for bit. ``fast=True`` uses a fused
    single-pass kernel whose rounding depends on element order; use it where
    throughput matters more than bitwise reproducibility across permutations.

    Returns :class:`Filtered` when ``||x||_1 <= alpha``.
    """
    x = check_vector(x)
    alpha = check_scalar(alpha, "alpha", strictly_positive=True)
    k = check_int(k, "k", minimum=1)
    filtered = _filtered(x, alpha)
    if filtered is not None:
        return filtered
    m = x.size
    w = np.empty(k + 3)
    if fast:
        lo, hi, mu, sums = _kernels.moment_sums(x, alpha, k)
        w[0], w[1] = lo, hi
        w[2] = sums[0] / m
        for j in range(2, k + 1):
            w[j + 1] = _signed_root(sums[j - 1] / m, j)
    else:
        x_hat = np.abs(x) / alpha
        mu = min(max(math.fsum(x_hat.tolist()) / m, x_hat.min()), x_hat.max())
        c = x_hat - mu
        w[0], w[1] = c.min(), c.max()
        w[2] = math.fsum(np.abs(c).tolist()) / m
        power = c.copy()
        for j in range(2, k + 1):
            power *= c
            w[j + 1] = _signed_root(math.fsum(power.tolist()) / m, j)
    w[k + 2] = math.log(m)
    return w, float(mu)


def make_features(x, alpha, tau, k=10):
    """Preprocess one triple into a :class:`FeatureRecord` (or :class:`Filtered`)."""
    tau = check_scalar(tau, "tau")
    out = moment_features(x, alpha, k)
    if isinstance(out, Filtered):
        return out
    w, mu = out
    alpha = float(alpha)
    return FeatureRecord(w=w, tau_hat=tau / alpha - mu, mu=mu, alpha=alpha, m=int(np.size(x)))


def make_padded(x, alpha, tau, ell):
    """Zero-pad ``x`` to length ``ell`` and scale by ``1/alpha``."""
    x = check_vector(x)
    alpha = check_scalar(alpha, "alpha", strictly_positive=True)
    tau = check_scalar(tau, "tau")
    ell = check_int(ell, "ell", minimum=1)
    if ell < x.size:
        raise ValueError(f"ell={ell} is shorter than the vector (m={x.size})")
    filtered = _filtered(x, alpha)
    if filtered is not None:
        return filtered
    x_hat = np.zeros(ell)
    x_hat[: x.size] = np.abs(x) / alpha
    return PaddedRecord(x_hat=x_hat, tau_hat=tau / alpha)


@dataclass(eq=False)
class FeatureTable:
    """Column-stacked feature records, the unit of training and persistence."""

    W: np.ndarray
    tau_hat: np.ndarray
    mu: np.ndarray
    alpha: np.ndarray
    m: np.ndarray
    labels: list = field(default=None)

    def __post_init__(self):
        n = self.W.shape[0]
        for name in ("tau_hat", "mu", "alpha", "m"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"column {name!r} does not match {n} rows")
        if self.labels is not None and len(self.labels) != n:
            raise ValueError("labels do not match the number of rows")

    def __len__(self):
        return self.W.shape[0]

    @property
    def k(self):
        return self.W.shape[1] - 3

    @property
    def tau(self):
        return self.alpha * (self.tau_hat + self.mu)

    @classmethod
    def from_records(cls, records, labels=None):
        records = list(records)
        if not records:
            raise ValueError("no feature records")
        return cls(
            W=np.vstack([r.w for r in records]),
            tau_hat=np.array([r.tau_hat for r in records]),
            mu=np.array([r.mu for r in records]),
            alpha=np.array([r.alpha for r in records]),
            m=np.array([r.m for r in records], dtype=np.int64),
            labels=None if labels is None else list(labels),
        )

    def subset(self, index):
        index = np.asarray(index, dtype=np.intp)
        return FeatureTable(
            W=self.W[index],
            tau_hat=self.tau_hat[index],
            mu=self.mu[index],
            alpha=self.alpha[index],
            m=self.m[index],
            labels=None if self.labels is None else [self.labels[i] for i in index],
        )
