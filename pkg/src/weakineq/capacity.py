"""Capacities of half-lines and the capacity-measure conditions for WLSI.

In one dimension the capacity of ``[x, inf)`` relative to ``[m, inf)`` is
``1 / int_m^x 1/rho``, so everything reduces to tail masses and the
resistance integral tabulated by :class:`~weakineq.measure.Measure1D`.
"""

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._numeric import nonincreasing_majorant
from .exceptions import AtMedian, InsufficientRange
from .rates import RateFunction

KERNELS = ("half", "e2")


def kernel_s(mass, kernel="half"):
    """The specific ``s`` used for a set of measure ``mass``.

    ``half``: ``(m/2) log(1 + 1/(2m))``; ``e2``: ``(m/2) log(1 + e^2/m)``.
    """
    mass = np.asarray(mass, float)
    if kernel == "half":
        return 0.5 * mass * np.log1p(1.0 / (2.0 * mass))
    if kernel == "e2":
        return 0.5 * mass * np.log1p(math.e**2 / mass)
    raise ValueError(f"kernel must be one of {KERNELS}")


def resistance(mu, a, b):
    """``int_a^b 1/rho``; returns ``+inf`` (with a warning) past the float range."""
    out = mu.resistance(a, b)
    if not np.all(np.isfinite(out)):
        warnings.warn("resistance overflows double precision (deep tail); reported as +inf",
                      RuntimeWarning, stacklevel=2)
    return out


def cap_halfline(mu, x, side="right"):
    """Capacity of the half-line beyond ``x`` relative to the half-line from the median."""
    x = np.asarray(x, float)
    xs = np.atleast_1d(x)
    if side == "right" and np.any(xs <= mu.median):
        if np.any(np.abs(xs - mu.median) < 1e-12 * max(1.0, abs(mu.median))):
            raise AtMedian("capacity of the half-line from the median is infinite")
        raise ValueError("x must lie right of the median for side='right'")
    if side == "left" and np.any(xs >= mu.median):
        if np.any(np.abs(xs - mu.median) < 1e-12 * max(1.0, abs(mu.median))):
            raise AtMedian("capacity of the half-line from the median is infinite")
        raise ValueError("x must lie left of the median for side='left'")
    out = 1.0 / mu.resistance_from_median(xs)
    return float(out[0]) if x.ndim == 0 else out


def default_x_grid(mu, side, n=400, q_hi=0.49, q_lo=1e-9):
    """Points beyond the median, log-spaced in tail mass from ``q_hi`` to ``q_lo``."""
    q = np.geomspace(q_hi, q_lo, n)
    lo_end = mu.tail_mass(mu.grid[-1], "right") if side == "right" else mu.tail_mass(mu.grid[0], "left")
    q = q[q > max(lo_end, 0.0) * 10 + 1e-300]
    x = mu.quantile_right(q) if side == "right" else mu.quantile_left(q)
    # keep strictly beyond the median and strictly monotone
    x = x[(x > mu.median) if side == "right" else (x < mu.median)]
    keep = np.concatenate([[True], np.abs(np.diff(x)) > 0])
    return x[keep]


@dataclass(frozen=True)
class CapacityProfile:
    """Rows ``(x, mass, cap)`` for half-lines on one side of the median."""

    side: str
    median: float
    x: np.ndarray
    mass: np.ndarray
    cap: np.ndarray
    kernel: str = "half"

    @property
    def resistance(self):
        return 1.0 / self.cap

    @property
    def s_star(self):
        return kernel_s(self.mass, self.kernel)

    def lhs(self, beta):
        s = self.s_star
        b = beta(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(np.isinf(b), 0.0, s / b)

    def to_csv(self, path, beta=None):
        lhs = self.lhs(beta) if beta is not None else np.full(self.x.shape, np.nan)
        ratio = lhs / self.cap
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "mass", "cap", "s_star", "lhs", "ratio"])
            for row in zip(self.x, self.mass, self.cap, self.s_star, lhs, ratio):
                w.writerow([f"{v:.17g}" for v in row])


def capacity_profile(mu, side="right", x_grid=None, kernel="half"):
    x = default_x_grid(mu, side) if x_grid is None else np.asarray(x_grid, float)
    order = np.argsort(np.abs(x - mu.median))
    x = x[order]
    mass = np.atleast_1d(mu.tail_mass(x, side))
    cap = np.atleast_1d(cap_halfline(mu, x, side))
    return CapacityProfile(side, mu.median, x, mass, cap, kernel)


def check_necessary(mu, beta, x_grid=None, kernel="half"):
    """Compare ``s*/beta(s*)`` with the capacity of every sampled half-line.

    ``x_grid`` may hold points on both sides of the median; ``None`` uses the
    default tail-mass grid on each side.  Returns the worst ratio and the
    violating rows (ratio > 1, with a relative slack of ``1e-12`` for rounding).
    """
    profiles = []
    if x_grid is None:
        profiles = [capacity_profile(mu, s, None, kernel) for s in ("right", "left")]
    else:
        x = np.asarray(x_grid, float)
        for side, sel in (("right", x > mu.median), ("left", x < mu.median)):
            if sel.any():
                profiles.append(capacity_profile(mu, side, x[sel], kernel))
    worst, violations = 0.0, []
    for p in profiles:
        ratio = p.lhs(beta) / p.cap
        worst = max(worst, float(np.max(ratio)) if ratio.size else 0.0)
        for i in np.nonzero(ratio > 1.0 + 1e-12)[0]:
            violations.append({"side": p.side, "x": float(p.x[i]), "mass": float(p.mass[i]),
                               "ratio": float(ratio[i])})
    return {"worst_ratio": worst, "violations": violations, "n_checked": int(sum(p.x.size for p in profiles))}


def beta_from_capacity(mu, x_grid=None, kernel="half"):
    """Smallest non-increasing rate compatible with the necessary condition.

    Samples ``beta(s_A) = s_A / Cap(A)`` over half-lines on both sides and
    returns the non-increasing majorant as a tabulated rate.
    """
    s_all, b_all = [], []
    for side in ("right", "left"):
        if x_grid is None:
            xs = None
        else:
            x = np.asarray(x_grid, float)
            xs = x[(x > mu.median) if side == "right" else (x < mu.median)]
            if xs.size == 0:
                continue
        p = capacity_profile(mu, side, xs, kernel)
        s = p.s_star
        s_all.append(s)
        b_all.append(s / p.cap)
    s = np.concatenate(s_all)
    b = np.concatenate(b_all)
    ok = np.isfinite(b) & (b > 0)
    s, b = s[ok], b[ok]
    if s.size < 8:
        raise InsufficientRange(f"only {s.size} usable half-lines (need >= 8)")
    order = np.argsort(s)
    s, b = s[order], b[order]
    # merge abscissae that agree to rounding (mirror images on symmetric measures)
    new_group = np.concatenate([[True], np.diff(np.log(s)) > 1e-9])
    inv = np.cumsum(new_group) - 1
    uniq = s[new_group]
    bmax = np.full(uniq.shape, -np.inf)
    np.maximum.at(bmax, inv, b)
    env = nonincreasing_majorant(bmax)
    if uniq.size < 8:
        raise InsufficientRange("fewer than 8 distinct sample points")
    rate = RateFunction.tabulated(uniq, env, label="capacity")
    rate.params.update({"kernel": kernel})
    return rate
