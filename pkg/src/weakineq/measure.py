"""One-dimensional measures given by a potential, and their core functionals.

A measure is ``dmu = exp(-phi(x)) dx / Z``.  Everything downstream (capacity,
Hardy constants, the Fokker-Planck solver, the inequality verifier) consumes
the tables built here: cell masses, tail masses, and the resistance integral
of ``1/rho``.
"""

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import quadrature
from .exceptions import (
    AtMedian,
    ConfigError,
    MassDeficit,
    NegativeInput,
    NonFinitePotential,
    OutOfDomain,
)

FAMILIES = ("heavy_tail", "subexp", "double_exp", "gaussian", "uniform", "lebesgue", "custom")
TRUNCATION_LEVEL = 60.0
MASS_TOL = 1e-6
_OVERFLOW = 700.0


@dataclass(frozen=True)
class Potential:
    """Log-density ``phi`` (up to the normalizer) with optional derivatives.

    ``kinks`` lists points where ``phi`` is not differentiable; grids always
    place a node there so per-cell quadrature sees a smooth integrand.
    """

    phi: Callable
    phi_prime: Optional[Callable] = None
    phi_second: Optional[Callable] = None
    domain: tuple = (-math.inf, math.inf)
    family: str = "custom"
    alpha: Optional[float] = None
    smoothed: bool = False
    kinks: tuple = ()
    label: str = ""

    # -- families ---------------------------------------------------------
    @classmethod
    def subexp(cls, alpha, smoothed=False):
        """``phi = |t|**alpha`` or its smoothed form ``(1 + t**2)**(alpha/2)``."""
        a = float(alpha)
        if a <= 0:
            raise ValueError("alpha must be positive")
        if smoothed:
            return cls(
                phi=lambda t: (1.0 + t * t) ** (a / 2),
                phi_prime=lambda t: a * t * (1.0 + t * t) ** (a / 2 - 1),
                phi_second=lambda t: a * (1.0 + t * t) ** (a / 2 - 2) * (1.0 + (a - 1) * t * t),
                family="double_exp" if a == 1 else "subexp",
                alpha=a,
                smoothed=True,
                label=f"subexp(alpha={a:g}, smoothed)",
            )

        def d1(t):
            return a * np.sign(t) * np.abs(t) ** (a - 1)

        def d2(t):
            with np.errstate(divide="ignore"):
                return a * (a - 1) * np.abs(t) ** (a - 2) if a != 1 else np.zeros_like(np.asarray(t, float))

        return cls(
            phi=lambda t: np.abs(t) ** a,
            phi_prime=d1,
            phi_second=d2,
            family="double_exp" if a == 1 else "subexp",
            alpha=a,
            kinks=(0.0,),
            label=f"subexp(alpha={a:g})",
        )

    @classmethod
    def double_exp(cls, smoothed=False):
        return cls.subexp(1.0, smoothed=smoothed)

    @classmethod
    def gaussian(cls):
        return cls(
            phi=lambda t: t * t,
            phi_prime=lambda t: 2.0 * t,
            phi_second=lambda t: np.full_like(np.asarray(t, float), 2.0),
            family="gaussian",
            alpha=2.0,
            label="gaussian",
        )

    @classmethod
    def heavy_tail(cls, alpha):
        """``rho(t) = (alpha/2) (1+|t|)**(-1-alpha)``, already normalized."""
        a = float(alpha)
        c = math.log(a / 2)
        return cls(
            phi=lambda t: (1 + a) * np.log1p(np.abs(t)) - c,
            phi_prime=lambda t: (1 + a) * np.sign(t) / (1 + np.abs(t)),
            phi_second=lambda t: -(1 + a) / (1 + np.abs(t)) ** 2,
            family="heavy_tail",
            alpha=a,
            kinks=(0.0,),
            label=f"heavy_tail(alpha={a:g})",
        )

    @classmethod
    def uniform(cls, a=0.0, b=1.0):
        zero = lambda t: np.zeros_like(np.asarray(t, float))
        return cls(phi=zero, phi_prime=zero, phi_second=zero, domain=(a, b),
                   family="custom", label=f"uniform[{a:g},{b:g}]")

    @classmethod
    def lebesgue(cls):
        """Flat potential on the whole line (base measure for perturbation)."""
        zero = lambda t: np.zeros_like(np.asarray(t, float))
        return cls(phi=zero, phi_prime=zero, phi_second=zero, family="lebesgue", label="lebesgue")

    @classmethod
    def tabulated(cls, x, phi):
        """Cubic-spline potential through tabulated ``(x, phi)`` pairs."""
        from scipy.interpolate import CubicSpline

        x = np.asarray(x, float)
        phi = np.asarray(phi, float)
        if not np.all(np.isfinite(phi)):
            raise NonFinitePotential("tabulated potential has non-finite values")
        if x.size < 4 or np.any(np.diff(x) <= 0):
            raise ValueError("tabulated x must be strictly increasing with >= 4 points")
        spl = CubicSpline(x, phi)
        d1, d2 = spl.derivative(1), spl.derivative(2)
        return cls(phi=spl, phi_prime=d1, phi_second=d2, domain=(x[0], x[-1]),
                   family="custom", label="tabulated")

    # -- transformations --------------------------------------------------
    def scaled(self, c):
        """Potential ``c * phi`` (e.g. ``2V`` for ``dmu = exp(-2V) dx``)."""
        d1 = None if self.phi_prime is None else (lambda t, f=self.phi_prime: c * f(t))
        d2 = None if self.phi_second is None else (lambda t, f=self.phi_second: c * f(t))
        return Potential(lambda t, f=self.phi: c * f(t), d1, d2, self.domain, self.family,
                         self.alpha, self.smoothed, self.kinks, f"{c:g}*{self.label}")

    def plus(self, other, weight=1.0):
        """Potential ``phi + weight * other.phi``."""
        def combine(f, g):
            if f is None or g is None:
                return None
            return lambda t: f(t) + weight * g(t)

        lo = max(self.domain[0], other.domain[0])
        hi = min(self.domain[1], other.domain[1])
        return Potential(combine(self.phi, other.phi), combine(self.phi_prime, other.phi_prime),
                         combine(self.phi_second, other.phi_second), (lo, hi), "custom",
                         None, self.smoothed or other.smoothed,
                         tuple(sorted(set(self.kinks) | set(other.kinks))),
                         f"{self.label}+{weight:g}*{other.label}")

    def check_derivatives(self, x, rtol=1e-4):
        """Compare supplied derivatives with centered differences at ``x``.

        Returns the worst relative discrepancy for ``phi_prime`` and
        ``phi_second`` (``nan`` when a derivative is not supplied).
        """
        x = np.asarray(x, float)
        x = x[np.all(np.abs(x[:, None] - np.asarray(self.kinks or [np.inf])[None, :]) > 1e-3, axis=1)]
        h = 1e-4 * np.maximum(1.0, np.abs(x))
        out = []
        for deriv, fd in (
            (self.phi_prime, (self.phi(x + h) - self.phi(x - h)) / (2 * h)),
            (self.phi_second, (self.phi(x + h) - 2 * self.phi(x) + self.phi(x - h)) / h**2),
        ):
            if deriv is None:
                out.append(float("nan"))
                continue
            d = np.asarray(deriv(x), float)
            scale = np.maximum(np.abs(d), np.abs(fd))
            scale = np.maximum(scale, np.max(scale) * 1e-6 + 1e-12)
            out.append(float(np.max(np.abs(d - fd) / scale)))
        return tuple(out)


@dataclass(frozen=True)
class GridFunction:
    """Piecewise-linear function given by its values at the grid nodes."""

    values: np.ndarray
    grid: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, float)
        g = np.asarray(self.grid, float)
        if v.shape != g.shape:
            raise ValueError(f"{v.size} values for a grid of {g.size} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "grid", g)

    @classmethod
    def from_callable(cls, mu, fn):
        return cls(np.asarray(fn(mu.grid), float), mu.grid)

    @property
    def slopes(self):
        return np.diff(self.values) / np.diff(self.grid)

    def __call__(self, x):
        return np.interp(x, self.grid, self.values)


def _as_values(f, mu):
    if isinstance(f, GridFunction):
        v = f.values
    else:
        v = np.asarray(f, float)
    if v.shape != mu.grid.shape:
        raise ValueError(f"{v.size} values for a grid of {mu.grid.size} nodes")
    return v


def make_grid(x_min, x_max, n, spacing="uniform", center=0.0, scale=1.0, kinks=()):
    """Strictly increasing grid of ``n + 1`` nodes.

    ``spacing="sinh"`` maps a uniform grid through ``center + scale*sinh(u)``,
    which keeps the relative cell width roughly constant in the tails.
    """
    if n < 1 or not x_min < x_max:
        raise ValueError("need x_min < x_max and n >= 1")
    if spacing == "uniform":
        x = np.linspace(x_min, x_max, n + 1)
    elif spacing == "sinh":
        u = np.linspace(np.arcsinh((x_min - center) / scale), np.arcsinh((x_max - center) / scale), n + 1)
        x = center + scale * np.sinh(u)
        x[0], x[-1] = x_min, x_max
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    for k in kinks:
        if x_min < k < x_max:
            i = int(np.argmin(np.abs(x - k)))
            if 0 < i < n:
                x[i] = k
    return x


class Measure1D:
    """Tabulated 1D measure.  Build with :func:`build_measure`.

    Attributes are read-only after construction.
    """

    def __init__(self, potential, grid, is_probability=True, truncated=(False, False)):
        self.potential = potential
        self.grid = np.asarray(grid, float)
        self.is_probability = bool(is_probability)
        self.truncated = truncated
        x = self.grid
        phi_nodes = np.asarray(potential.phi(x), float)
        if not np.all(np.isfinite(phi_nodes)):
            raise NonFinitePotential("potential is not finite on the grid")
        self.phi_nodes = phi_nodes

        # Per-cell shift keeps exp() in range for both the density and 1/rho.
        lo_shift = np.minimum(phi_nodes[:-1], phi_nodes[1:])
        hi_shift = np.maximum(phi_nodes[:-1], phi_nodes[1:])
        a, b = x[:-1], x[1:]
        raw_mass = self._cellwise(lambda t, s: np.exp(-(potential.phi(t) - s)), a, b, lo_shift)
        if not np.all(np.isfinite(raw_mass)):
            raise NonFinitePotential("density integral is not finite on some cell")
        # log of unnormalized cell masses
        with np.errstate(divide="ignore"):
            log_cell = np.log(raw_mass) - lo_shift
        top = np.max(log_cell)
        log_z = top + math.log(np.sum(np.exp(log_cell - top)))
        self.log_z = float(log_z)
        self.z = float(math.exp(log_z)) if log_z < _OVERFLOW else math.inf
        self.log_norm = self.log_z if self.is_probability else 0.0
        self.cell_mass = np.exp(log_cell - self.log_norm)

        raw_res = self._cellwise(lambda t, s: np.exp(potential.phi(t) - s), a, b, hi_shift)
        log_res = np.log(raw_res) + hi_shift + self.log_norm
        with np.errstate(over="ignore"):
            self.cell_resistance = np.where(log_res < _OVERFLOW, np.exp(np.minimum(log_res, _OVERFLOW)), np.inf)
        self.resistance_overflow = bool(np.any(~np.isfinite(self.cell_resistance)))

        self.cdf = np.concatenate([[0.0], np.cumsum(self.cell_mass)])
        self.sf = np.concatenate([np.cumsum(self.cell_mass[::-1])[::-1], [0.0]])
        self.total_mass = float(self.cdf[-1])
        self.median = self._solve_median()
        self._build_resistance_tables()
        for arr in (self.grid, self.phi_nodes, self.cell_mass, self.cell_resistance, self.cdf, self.sf):
            arr.setflags(write=False)

    # -- construction helpers ---------------------------------------------
    @staticmethod
    def _cellwise(fn, a, b, shift):
        """Integrate ``fn(t, shift_i)`` over each ``[a_i, b_i]``."""
        vals, _ = quadrature.integrate_intervals(fn, a, b, param=shift)
        return vals

    def _solve_median(self):
        if not self.is_probability:
            return float(self._quantile_left(np.array([0.5 * self.total_mass]))[0])
        return float(self.quantile(0.5))

    def _build_resistance_tables(self):
        x, m = self.grid, self.median
        k = int(np.clip(np.searchsorted(x, m, side="right") - 1, 0, x.size - 2))
        self._k = k
        right_first = self._partial_resistance(np.array([m]), np.array([x[k + 1]]))[0]
        left_first = self._partial_resistance(np.array([x[k]]), np.array([m]))[0]
        rr = np.full(x.size, np.nan)
        rr[k + 1] = right_first
        rr[k + 2:] = right_first + np.cumsum(self.cell_resistance[k + 1:])
        rl = np.full(x.size, np.nan)
        rl[k] = left_first
        if k > 0:
            rl[:k] = left_first + np.cumsum(self.cell_resistance[:k][::-1])[::-1]
        self._res_right = rr
        self._res_left = rl

    # -- pointwise density ------------------------------------------------
    def density(self, x):
        return np.exp(-np.asarray(self.potential.phi(x), float) - self.log_norm)

    def _partial_mass(self, a, b):
        shift = np.minimum(self.potential.phi(a), self.potential.phi(b))
        raw = self._cellwise(lambda t, s: np.exp(-(self.potential.phi(t) - s)), a, b, shift)
        return raw * np.exp(-shift - self.log_norm)

    def _partial_resistance(self, a, b):
        shift = np.maximum(self.potential.phi(a), self.potential.phi(b))
        raw = self._cellwise(lambda t, s: np.exp(self.potential.phi(t) - s), a, b, shift)
        with np.errstate(over="ignore"):
            return raw * np.exp(np.minimum(shift + self.log_norm, _OVERFLOW + 50))

    def _check_domain(self, x):
        x = np.asarray(x, float)
        if np.any(x < self.grid[0]) or np.any(x > self.grid[-1]):
            raise OutOfDomain(f"x outside [{self.grid[0]:g}, {self.grid[-1]:g}]")
        return x

    # -- cdf / tails ------------------------------------------------------
    def cdf_at(self, x):
        return self.tail_mass(x, "left")

    def tail_mass(self, x, side="right"):
        """``mu((-inf, x])`` (left) or ``mu([x, +inf))`` (right)."""
        x = self._check_domain(x)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        i = np.clip(np.searchsorted(self.grid, x, side="right") - 1, 0, self.grid.size - 2)
        if side == "left":
            out = self.cdf[i] + self._partial_mass(self.grid[i], x)
        elif side == "right":
            out = self.sf[i + 1] + self._partial_mass(x, self.grid[i + 1])
        else:
            raise ValueError("side must be 'left' or 'right'")
        if self.is_probability:
            out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if scalar else out

    def _quantile_left(self, p):
        # x with mu((-inf,x]) = p, bracketed by the node table
        i = np.clip(np.searchsorted(self.cdf, p, side="right") - 1, 0, self.grid.size - 2)
        lo, hi = self.grid[i], self.grid[i + 1]
        base = self.cdf[i]
        return self._bisect_cells(lambda x, j: base[j] + self._partial_mass(lo[j], x), p, lo, hi)

    def _quantile_right(self, q):
        # x with mu([x,+inf)) = q
        i = np.clip(np.searchsorted(-self.sf, -q, side="left") - 1, 0, self.grid.size - 2)
        lo, hi = self.grid[i], self.grid[i + 1]
        base = self.sf[i + 1]
        # mu([x, inf)) is decreasing in x; negate to bisect an increasing map
        return self._bisect_cells(lambda x, j: -(base[j] + self._partial_mass(x, hi[j])), -q, lo, hi)

    @staticmethod
    def _bisect_cells(fn, target, lo, hi, n_iter=80):
        lo = lo.copy()
        hi = hi.copy()
        j = np.arange(lo.size)
        for _ in range(n_iter):
            mid = 0.5 * (lo + hi)
            below = fn(mid, j) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 4e-16 * np.maximum(1.0, np.abs(mid))):
                break
        return 0.5 * (lo + hi)

    def quantile(self, p):
        """Inverse cdf; the upper half is solved from the right tail for accuracy."""
        p = np.asarray(p, float)
        scalar = p.ndim == 0
        p = np.atleast_1d(p)
        out = np.empty_like(p)
        low = p <= 0.5
        if low.any():
            out[low] = self._quantile_left(p[low])
        if (~low).any():
            out[~low] = self._quantile_right(1.0 - p[~low])
        return float(out[0]) if scalar else out

    def quantile_right(self, q):
        """x with ``mu([x, +inf)) = q`` (accurate for tiny ``q``)."""
        q = np.atleast_1d(np.asarray(q, float))
        return self._quantile_right(q)

    def quantile_left(self, p):
        p = np.atleast_1d(np.asarray(p, float))
        return self._quantile_left(p)

    # -- resistance -------------------------------------------------------
    def _res_from_median(self, x):
        """Signed resistance ``int_m^x 1/rho`` (negative for x < m)."""
        x = np.atleast_1d(np.asarray(x, float))
        m, g, k = self.median, self.grid, self._k
        out = np.empty_like(x)
        right = x >= m
        if right.any():
            xr = x[right]
            i = np.clip(np.searchsorted(g, xr, side="right") - 1, 0, g.size - 2)
            near = i <= k
            base = np.where(near, 0.0, self._res_right[np.maximum(i, k + 1)])
            start = np.where(near, m, g[i])
            out[right] = base + self._partial_resistance(start, xr)
        if (~right).any():
            xl = x[~right]
            i = np.clip(np.searchsorted(g, xl, side="right") - 1, 0, g.size - 2)
            near = i >= k
            base = np.where(near, 0.0, self._res_left[np.minimum(i + 1, k)])
            end = np.where(near, m, g[np.minimum(i + 1, g.size - 1)])
            out[~right] = -(base + self._partial_resistance(xl, end))
        return out

    def resistance(self, a, b):
        """``int_a^b dt / rho(t)`` for ``a < b``."""
        a = self._check_domain(a)
        b = self._check_domain(b)
        scalar = a.ndim == 0 and b.ndim == 0
        a, b = np.broadcast_arrays(np.atleast_1d(a), np.atleast_1d(b))
        if np.any(a >= b):
            raise ValueError("resistance needs a < b")
        with np.errstate(invalid="ignore"):
            out = self._res_from_median(b) - self._res_from_median(a)
        return float(out[0]) if scalar else out

    def resistance_from_median(self, x):
        """Unsigned ``|int_m^x 1/rho|``; raises :class:`AtMedian` at the median."""
        x = np.atleast_1d(self._check_domain(x))
        res = np.abs(self._res_from_median(x))
        tiny = np.abs(x - self.median) < 1e-12 * max(1.0, abs(self.median))
        if np.any(tiny):
            raise AtMedian("half-line starts at the median: capacity diverges")
        return res

    # -- quadrature tables for functionals ---------------------------------
    @cached_property
    def _gl(self):
        xq, w, theta = quadrature.cell_nodes(self.grid, 8)
        wq = w * np.exp(-np.asarray(self.potential.phi(xq), float) - self.log_norm)
        s = wq.sum(axis=1)
        scale = np.where(s > 0, self.cell_mass / np.where(s > 0, s, 1.0), 0.0)
        wq = wq * scale[:, None]
        return xq, wq, np.array(theta)

    def integrate_values(self, values_q):
        """``sum`` of quadrature values against the mu-weights."""
        return float(np.sum(self._gl[1] * values_q))

    def at_quadrature(self, f):
        v = _as_values(f, self)
        theta = self._gl[2]
        return v[:-1, None] + (v[1:] - v[:-1])[:, None] * theta

    def integrate(self, f):
        """``int f dmu`` for a grid function (piecewise linear)."""
        return self.integrate_values(self.at_quadrature(f))

    @cached_property
    def node_mass(self):
        """Masses of the dual cells ``[x_{i-1/2}, x_{i+1/2}]`` around each node."""
        g = self.grid
        mid = 0.5 * (g[:-1] + g[1:])
        left = self._partial_mass(g[:-1], mid)
        right = self.cell_mass - left
        out = np.zeros(g.size)
        out[:-1] += left
        out[1:] += right
        out.setflags(write=False)
        return out

    def mean(self):
        return self.integrate(self.grid)

    def describe(self):
        return {
            "label": self.potential.label,
            "family": self.potential.family,
            "alpha": self.potential.alpha,
            "smoothed": self.potential.smoothed,
            "x_min": float(self.grid[0]),
            "x_max": float(self.grid[-1]),
            "n_cells": int(self.grid.size - 1),
            "z": self.z,
            "median": self.median,
            "total_mass": self.total_mass,
            "is_probability": self.is_probability,
        }


# -- construction ------------------------------------------------------------

def _auto_extent(potential, level=TRUNCATION_LEVEL):
    """Interval where ``phi <= min(phi) + level`` (clipped to the domain)."""
    lo_d, hi_d = potential.domain
    probe = np.concatenate([-np.geomspace(1e-3, 1e15, 400)[::-1], [0.0], np.geomspace(1e-3, 1e15, 400)])
    probe = probe[(probe >= lo_d) & (probe <= hi_d)]
    vals = np.asarray(potential.phi(probe), float)
    finite = np.isfinite(vals)
    if not finite.any():
        raise NonFinitePotential("potential is not finite anywhere on the probe")
    i0 = int(np.argmin(np.where(finite, vals, np.inf)))
    c, base = probe[i0], vals[i0]
    ends = []
    for direction, bound in ((-1, lo_d), (1, hi_d)):
        if math.isfinite(bound):
            ends.append(bound)
            continue
        step = 1.0
        while step < 1e16 and potential.phi(c + direction * step) < base + level:
            step *= 2.0
        if step >= 1e16:
            raise MassDeficit(math.nan, "potential does not reach the truncation level; not normalizable?")
        inner, outer = step / 2, step
        for _ in range(200):
            mid = 0.5 * (inner + outer)
            if potential.phi(c + direction * mid) < base + level:
                inner = mid
            else:
                outer = mid
        ends.append(c + direction * outer)
    return ends[0], ends[1], c


def _tail_beyond(mu, side):
    """Mass of the density beyond the grid end, by quadrature after ``x = x_end + L v/(1-v)``."""
    pot = mu.potential
    x_end = mu.grid[-1] if side == "right" else mu.grid[0]
    sign = 1.0 if side == "right" else -1.0
    L = max(1.0, abs(x_end))
    v = np.linspace(0.0, 1.0 - 1e-12, 129)

    def f(vv):
        x = x_end + sign * L * vv / (1.0 - vv)
        with np.errstate(over="ignore", invalid="ignore"):
            val = np.exp(-np.asarray(pot.phi(x), float) - mu.log_norm) * L / (1.0 - vv) ** 2
        return np.where(np.isfinite(val), val, 0.0)

    vals, _ = quadrature.integrate_cells(f, v, rtol=1e-8)
    return float(np.sum(vals))


def build_measure(potential, grid_spec=None, *, is_probability=True, spacing="auto",
                  check_mass=True, scale=1.0):
    """Normalize ``exp(-phi)`` on a grid and tabulate cdf, median and resistance.

    Parameters
    ----------
    potential : Potential
    grid_spec : (x_min, x_max, n) or None
        ``n`` is the number of cells (``n >= 64``).  ``None`` truncates where
        ``phi`` exceeds its minimum by 60 and uses 4096 cells.
    spacing : {"auto", "uniform", "sinh"}
        ``auto`` picks ``sinh`` for extents wider than 400.
    """
    lo_d, hi_d = potential.domain
    if grid_spec is None:
        x_min, x_max, center = _auto_extent(potential)
        n = 4096
    else:
        x_min, x_max, n = grid_spec
        x_min, x_max, n = float(x_min), float(x_max), int(n)
        center = 0.0
    if n < 64:
        raise ValueError("grid needs at least 64 cells")
    if not x_min < x_max:
        raise ValueError("x_min must be < x_max")
    x_min, x_max = max(x_min, lo_d), min(x_max, hi_d)
    if spacing == "auto":
        spacing = "sinh" if x_max - x_min > 400 else "uniform"
    if spacing == "sinh" and not x_min < center < x_max:
        center = 0.5 * (x_min + x_max)
    grid = make_grid(x_min, x_max, n, spacing=spacing, center=center, scale=scale, kinks=potential.kinks)
    truncated = (x_min > lo_d, x_max < hi_d)
    mu = Measure1D(potential, grid, is_probability=is_probability, truncated=truncated)
    if is_probability and check_mass:
        deficit = 0.0
        if truncated[0]:
            deficit += _tail_beyond(mu, "left")
        if truncated[1]:
            deficit += _tail_beyond(mu, "right")
        mu.mass_deficit = deficit
        if deficit > MASS_TOL:
            raise MassDeficit(deficit)
    else:
        mu.mass_deficit = 0.0
    return mu


# -- functionals ---------------------------------------------------------------

def tail_mass(mu, x, side="right"):
    return mu.tail_mass(x, side)


def entropy(mu, g):
    """``Ent_mu(g) = int g log(g / int g dmu) dmu`` with ``0 log 0 = 0``."""
    v = _as_values(g, mu)
    if np.any(v < -1e-14 * max(1.0, np.max(np.abs(v)))):
        raise NegativeInput("entropy needs g >= 0")
    gq = np.maximum(mu.at_quadrature(np.maximum(v, 0.0)), 0.0)
    mass = mu.integrate_values(gq)
    if not mass > 0:
        raise NegativeInput("entropy needs int g dmu > 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(gq > 0, gq * np.log(gq / mass), 0.0)
    return max(mu.integrate_values(integrand), 0.0)


def variance(mu, f):
    fq = mu.at_quadrature(f)
    mean = mu.integrate_values(fq) / mu.total_mass
    return max(mu.integrate_values((fq - mean) ** 2), 0.0)


def oscillation(f):
    v = f.values if isinstance(f, GridFunction) else np.asarray(f, float)
    return float(np.max(v) - np.min(v))


def dirichlet(mu, f):
    """``int |f'|^2 dmu`` with the exact slope on every cell."""
    v = _as_values(f, mu)
    slope = np.diff(v) / np.diff(mu.grid)
    return float(np.sum(slope**2 * mu.cell_mass))


# -- external formats ------------------------------------------------------------

_MEASURE_KEYS = {"family", "alpha", "grid", "smoothed", "csv", "spacing", "is_probability", "domain"}
_GRID_KEYS = {"xmin", "xmax", "n"}


def potential_from_config(cfg, base_dir=None):
    unknown = set(cfg) - _MEASURE_KEYS
    if unknown:
        raise ConfigError(f"unknown measure key(s): {sorted(unknown)}")
    family = cfg.get("family")
    alpha = cfg.get("alpha")
    smoothed = bool(cfg.get("smoothed", False))
    if family == "subexp":
        if alpha is None:
            raise ConfigError("measure.alpha is required for family 'subexp'")
        return Potential.subexp(alpha, smoothed=smoothed)
    if family == "double_exp":
        return Potential.double_exp(smoothed=smoothed)
    if family == "gaussian":
        return Potential.gaussian()
    if family == "heavy_tail":
        if alpha is None:
            raise ConfigError("measure.alpha is required for family 'heavy_tail'")
        return Potential.heavy_tail(alpha)
    if family == "uniform":
        lo, hi = cfg.get("domain", [0.0, 1.0])
        return Potential.uniform(lo, hi)
    if family == "lebesgue":
        return Potential.lebesgue()
    if family == "custom":
        path = cfg.get("csv")
        if path is None:
            raise ConfigError("measure.csv is required for family 'custom'")
        if base_dir is not None:
            import os
            path = os.path.join(base_dir, path)
        return potential_from_csv(path)
    raise ConfigError(f"measure.family must be one of {FAMILIES}, got {family!r}")


def measure_from_config(cfg, base_dir=None):
    """Build a measure from the JSON-style dict documented in the README."""
    pot = potential_from_config(cfg, base_dir)
    grid = cfg.get("grid")
    spec = None
    if grid is not None:
        unknown = set(grid) - _GRID_KEYS
        if unknown:
            raise ConfigError(f"unknown measure.grid key(s): {sorted(unknown)}")
        try:
            spec = (float(grid["xmin"]), float(grid["xmax"]), int(grid.get("n", 4096)))
        except KeyError as exc:
            raise ConfigError(f"measure.grid is missing {exc.args[0]!r}") from None
    return build_measure(pot, spec, is_probability=bool(cfg.get("is_probability", True)),
                         spacing=cfg.get("spacing", "auto"))


def potential_from_csv(path):
    """Read a tabulated potential from a CSV file with header ``x,phi``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["x", "phi"]:
            raise ConfigError(f"{path}: expected header 'x,phi', got {','.join(header)!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                raise ConfigError(f"{path}:{lineno}: cannot parse {row!r}") from None
    x, phi = np.array(rows).T
    return Potential.tabulated(x, phi)
