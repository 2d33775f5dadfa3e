"""Exact proximal operator of ``alpha * ||.||_inf`` and its companions.

The prox of ``x`` clips every entry to ``[-tau, tau]``; all the work is in
finding the threshold ``tau``, the minimizer over ``t >= 0`` of

    psi(t) = 1/2 * sum_{|x_k| >= t} (|x_k| - t)**2 + alpha * t.

Two exact routes are provided (a sort-based scan and an expected linear-time
divide and conquer), plus the classical route through projection onto the
l1 ball, which serves as an independent cross-check.
"""

import math
from typing import NamedTuple

import numpy as np

from . import _kernels
from ._validation import check_real, check_scalar, check_vector


class ProxResult(NamedTuple):
    prox: np.ndarray
    tau: float


class PsiEval(NamedTuple):
    t: float
    value: float
    derivative: float
    active_count: int


def l1_norm(x):
    return float(np.abs(x).sum())


def l1_within(a, alpha):
    """``sum(a) <= alpha`` for nonnegative ``a``, decided on the exactly rounded sum.

    The fast pairwise sum settles almost every case; ``fsum`` is used only
    when the two sides are within that sum's rounding error, so the answer
    never depends on element order.
    """
    s = float(a.sum())
    if abs(s - alpha) > a.size * 2.3e-16 * s:
        return s <= alpha
    return math.fsum(a.tolist()) <= alpha


def sigma_t(x_k, t):
    """Clip the scalar ``x_k`` to ``[-t, t]``."""
    x_k = check_real(x_k, "x_k")
    t = check_scalar(t, "t")
    if x_k >= t:
        return t
    if x_k <= -t:
        return -t
    return x_k


def clip_to_threshold(x, t):
    """Vector form of :func:`sigma_t`; always returns a new array."""
    return np.clip(x, -t, t)


def psi_eval(x, alpha, t):
    """Value and one-sided derivative of ``psi`` at ``t``.

    The active set is ``{k : |x_k| >= t}``; at a knot this gives the
    right-continuous derivative, which agrees with the left one for ``t > 0``.
    """
    a = np.abs(check_vector(x))
    alpha = check_scalar(alpha, "alpha")
    t = check_scalar(t, "t")
    active = a[a >= t]
    gap = active - t
    value = 0.5 * float(gap @ gap) + alpha * t
    derivative = -float(active.sum()) + active.size * t + alpha
    return PsiEval(t, value, derivative, int(active.size))


def _trivial(x, a, alpha):
    """Handle the closed-form cases; returns None when a search is needed."""
    if alpha == 0.0:
        return ProxResult(x.copy(), float(a.max()))
    if l1_within(a, alpha):
        return ProxResult(np.zeros_like(x), 0.0)
    return None


def _threshold_from_active(active, alpha):
    # Exactly rounded sum: the threshold then depends only on the active
    # multiset, not on the order in which a given algorithm visited it.
    return (math.fsum(active.tolist()) - alpha) / active.size


def prox_linf_sort(x, alpha):
    """Exact prox by sorting ``|x|`` and scanning down for the active set.

    ``O(m log m)``. Returns a :class:`ProxResult`; ``x`` is not modified.

    >>> prox_linf_sort([3.0, -1.0], 1.0)
    ProxResult(prox=array([ 2., -1.]), tau=2.0)
    """
    x = check_vector(x)
    alpha = check_scalar(alpha, "alpha")
    a = np.abs(x)
    done = _trivial(x, a, alpha)
    if done is not None:
        return done
    s = np.sort(a)[::-1]
    n = _kernels.sorted_scan(s, alpha)
    if n == 0:
        # only reachable when rounding puts sum(s) on the wrong side of alpha
        return ProxResult(np.zeros_like(x), 0.0)
    tau = _threshold_from_active(s[:n], alpha)
    return ProxResult(clip_to_threshold(x, tau), tau)


def prox_linf_dc(x, alpha, seed=None):
    """Exact prox by randomized-pivot divide and conquer.

    Expected ``O(m)``, worst case ``O(m**2)``. ``seed`` (int, Generator or
    None) drives the pivot choice only; the result does not depend on it.
    """
    x = check_vector(x)
    alpha = check_scalar(alpha, "alpha")
    a = np.abs(x)
    done = _trivial(x, a, alpha)
    if done is not None:
        return done
    rng = np.random.default_rng(seed)

    work = a[a != 0]
    above_sum = 0.0  # sum of magnitudes known to lie in the active set
    above_count = 0
    upper_min = np.inf
    while work.size:
        p = work[rng.integers(work.size)]
        upper = work[work > p]
        lower = work[work < p]
        n_p = work.size - upper.size - lower.size
        nu = float(upper.sum())
        dpsi = -(above_sum + nu) + (above_count + upper.size) * p + alpha
        if dpsi < 0:
            work = upper
        else:
            upper_min = p
            work = lower
            above_sum += nu + p * n_p
            above_count += upper.size + n_p

    tau = _threshold_from_active(a[a >= upper_min], alpha)
    return ProxResult(clip_to_threshold(x, tau), tau)


def simplex_threshold(x, alpha):
    """Soft-threshold level of the projection of ``x`` onto ``{y >= 0, sum y = alpha}``."""
    x = check_vector(x)
    alpha = check_scalar(alpha, "alpha", strictly_positive=True)
    v = np.sort(x)[::-1]
    t0 = (np.cumsum(v) - alpha) / np.arange(1, v.size + 1)
    feasible = np.flatnonzero(t0 < v)
    return float(t0[feasible[-1]])


def project_simplex(x, alpha):
    """Euclidean projection onto the scaled simplex ``{y >= 0, sum y = alpha}``."""
    x = check_vector(x)
    tau = simplex_threshold(x, alpha)
    return np.maximum(x - tau, 0.0)


def project_l1_ball(x, alpha):
    """Euclidean projection onto ``{y : ||y||_1 <= alpha}``."""
    x = check_vector(x)
    alpha = check_scalar(alpha, "alpha", strictly_positive=True)
    if l1_norm(x) <= alpha:
        return x.copy()
    return np.sign(x) * project_simplex(np.abs(x), alpha)


def prox_linf_moreau(x, alpha):
    """Prox via the Moreau decomposition, ``x - P_{||.||_1 <= alpha}(x)``."""
    x = check_vector(x)
    alpha = check_scalar(alpha, "alpha", strictly_positive=True)
    prox = x - project_l1_ball(x, alpha)
    return ProxResult(prox, float(np.abs(prox).max()))


PROX_ALGORITHMS = {
    "sort": prox_linf_sort,
    "dc": prox_linf_dc,
    "moreau": prox_linf_moreau,
}
