"""Compiled inner loops.

Only loops that cannot be expressed as a handful of whole-array numpy calls
live here; everything else stays in plain numpy.
"""

import numba
import numpy as np

_TILE = 512


@numba.njit(cache=True)
def sorted_scan(s, alpha):
    """Size of the active set for the threshold, scanning ``s`` downward.

    ``s`` must be sorted in decreasing order and ``sum(s) > alpha > 0``.
    Returns ``n`` such that the threshold is ``(s[0] + ... + s[n-1] - alpha) / n``,
    or 0 if no interval is accepted.
    """
    m = s.size
    gamma = 0.0
    fallback = 0
    i = 0
    while i < m:
        gamma += s[i]
        j = 1
        while i + j < m and s[i + j] == s[i]:
            gamma += s[i]
            j += 1
        i += j - 1
        n = i + 1
        t0 = (gamma - alpha) / n
        nxt = s[i + 1] if i + 1 < m else 0.0
        if nxt < t0 and t0 <= s[i]:
            return n
        # In exact arithmetic the first group with nxt < t0 is the answer; a
        # one-ulp overshoot of t0 past a knot would otherwise reject it.
        if nxt < t0 and fallback == 0:
            fallback = n
        i += 1
    return fallback


@numba.njit(cache=True, fastmath=True)
def moment_sums(x, alpha, k):
    """Single-pass moment statistics of ``|x|/alpha`` centered at its mean.

    Returns ``(min, max, mu, sums)`` where ``sums[0] = sum |c_i|`` and
    ``sums[j-1] = sum c_i**j`` for ``j >= 2``. Summation order is unspecified.
    """
    m = x.size
    inv = 1.0 / alpha
    total = 0.0
    lo = np.inf
    hi = -np.inf
    for i in range(m):
        v = abs(x[i]) * inv
        total += v
        lo = min(lo, v)
        hi = max(hi, v)
    # the true mean lies in [lo, hi]; rounding must not push it outside
    mu = min(max(total / m, lo), hi)
    sums = np.zeros(k)
    c = np.empty(_TILE)
    p = np.empty(_TILE)
    for start in range(0, m, _TILE):
        n = min(_TILE, m - start)
        acc = 0.0
        for i in range(n):
            v = abs(x[start + i]) * inv - mu
            c[i] = v
            p[i] = v
            acc += abs(v)
        sums[0] += acc
        for j in range(1, k):
            acc = 0.0
            for i in range(n):
                pv = p[i] * c[i]
                p[i] = pv
                acc += pv
            sums[j] += acc
    return lo - mu, hi - mu, mu, sums
