"""Small numeric helpers: monotone inversion and isotonic envelopes."""

import numpy as np


def bisect_increasing(fn, target, lo, hi, n_iter=200, log=False):
    """Solve ``fn(x) = target`` for increasing ``fn`` on ``[lo, hi]``.

    Vectorized over ``target`` (and array ``lo``/``hi``).  With ``log=True``
    the bracket is bisected geometrically (requires ``lo > 0``).  Values of
    ``target`` outside ``[fn(lo), fn(hi)]`` return the nearest endpoint.
    """
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    if log:
        lo, hi = np.log(lo), np.log(hi)
        f = lambda u: fn(np.exp(u))
    else:
        f = fn
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = f(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, np.abs(mid))):
            break
    out = 0.5 * (lo + hi)
    return np.exp(out) if log else out


def nonincreasing_majorant(values):
    """Smallest non-increasing sequence that dominates ``values``.

    ``values`` must be ordered by increasing abscissa; the result is the
    running maximum taken from the right.
    """
    v = np.asarray(values, dtype=float)
    return np.maximum.accumulate(v[::-1])[::-1]


def nondecreasing_majorant(values):
    return np.maximum.accumulate(np.asarray(values, dtype=float))


def log_spaced(lo, hi, per_decade):
    n = max(2, int(np.ceil(per_decade * np.log10(hi / lo))) + 1)
    return np.geomspace(lo, hi, n)
