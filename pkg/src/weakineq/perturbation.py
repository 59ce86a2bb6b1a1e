"""Unbounded perturbations ``dnu_V = e^{-2V} dmu / Z`` of a base measure.

Conventions: the base is ``dmu = e^{-2W} dx`` (``W = 0`` for Lebesgue) and
its generator is ``L = (1/2) d^2 - W' d``, so that with ``f = e^{-V} g``

    int |f'|^2 dmu = int |g'|^2 dnu + int g^2 (2LV - |V'|^2) dnu.
"""

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from ._numeric import bisect_increasing
from .exceptions import DerivativeMissing, MassDeficit, PremiseViolated, TailIntegralDiverges
from .measure import Measure1D, Potential, _auto_extent, build_measure
from .rates import RateFunction

MOMENT_ORDERS = (1.0, 1.5, 1.9)


def _base_potential(base):
    return base.potential if isinstance(base, Measure1D) else base


def generator_on(base, V, x):
    """``LV(x) = (1/2) V'' - W' V'`` for the base ``e^{-2W} dx``."""
    pb = _base_potential(base)
    if V.phi_prime is None or V.phi_second is None or pb.phi_prime is None:
        raise DerivativeMissing("V', V'' and the base W' are required")
    w1 = 0.5 * np.asarray(pb.phi_prime(x), float)
    return 0.5 * np.asarray(V.phi_second(x), float) - w1 * np.asarray(V.phi_prime(x), float)


def _h_table(G, A, z_max=1e12, n=4000):
    z = np.geomspace(max(A, 1e-12), z_max, n)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = 2.0 * z / np.asarray(G(z), float)
    r = np.where(np.isnan(r), math.inf, r)
    return z, np.maximum.accumulate(r)


@dataclass
class GoodPotentialReport:
    """Grid evidence for ``|V'|^2 - 2LV >= G(V)`` on ``{V >= A}``."""

    A: float
    G: Callable = field(repr=False)
    verdict: str
    worst_margin: float
    violations: list
    M_V: float
    inf_V: float
    b_grid: np.ndarray = field(repr=False)
    h_of_b: np.ndarray = field(repr=False)
    moments: dict
    base: Potential = field(repr=False)
    V: Potential = field(repr=False)
    _z: np.ndarray = field(repr=False, default=None)
    _hz: np.ndarray = field(repr=False, default=None)

    def h(self, b):
        """``h(b) = sup_{A <= z <= b} 2z/G(z)``."""
        b = np.asarray(b, float)
        idx = np.searchsorted(self._z, b, side="right") - 1
        prev = np.where(idx >= 0, self._hz[np.clip(idx, 0, None)], -math.inf)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            end = 2.0 * b / np.asarray(self.G(b), float)
        end = np.where(np.isnan(end), math.inf, end)
        out = np.maximum(prev, end)
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        return {
            "A": self.A,
            "verdict": self.verdict,
            "worst_margin": self.worst_margin,
            "violations": self.violations[:20],
            "n_violations": len(self.violations),
            "M_V": self.M_V,
            "inf_V": self.inf_V,
            "b_grid": self.b_grid.tolist(),
            "h_of_b": self.h_of_b.tolist(),
            "moments": {str(k): v for k, v in self.moments.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def moment_check(base, V, orders=MOMENT_ORDERS):
    """``int e^{-pV} dmu`` for each ``p`` (``inf`` when it diverges)."""
    pb = _base_potential(base)
    out = {}
    for p in orders:
        f = lambda x, p=p: math.exp(-p * float(V.phi(x)) - float(pb.phi(x)))
        lo, hi = pb.domain
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val = integrate.quad(f, lo, hi, limit=400)[0]
            except (integrate.IntegrationWarning, OverflowError):
                val = math.inf
        out[p] = val if math.isfinite(val) else math.inf
    return out


def _scan_grid(V, level, n=4001):
    lo, hi, c = _auto_extent(V, level)
    inner = np.linspace(lo, hi, n)
    tails = [c + (hi - c) * np.geomspace(1.0, 1e3, 200), c - (c - lo) * np.geomspace(1.0, 1e3, 200)]
    x = np.unique(np.concatenate([inner, *tails]))
    return x[(x >= V.domain[0]) & (x <= V.domain[1])]


def check_good(base, V, G, A, x_grid=None, level=400.0, b_max=None, n_b=60, tol=1e-10):
    """Test the (G, mu)-good condition for ``V`` on a scan grid.

    ``base`` is a :class:`Potential` ``2W`` or a :class:`Measure1D`
    (``is_probability=False`` allowed).  ``G`` is vectorized.  The scan
    defaults to ``{V <= min V + level}`` plus geometric tails out to 1000
    times that extent.
    """
    pb = _base_potential(base)
    x = _scan_grid(V, level) if x_grid is None else np.asarray(x_grid, float)
    v = np.asarray(V.phi(x), float)
    v1 = np.asarray(V.phi_prime(x), float) if V.phi_prime is not None else None
    if v1 is None:
        raise DerivativeMissing("V' is required")
    LV = generator_on(pb, V, x)
    q = v1**2 - 2.0 * LV
    outer = v >= A
    margin = q[outer] - np.asarray(G(v[outer]), float)
    scale = np.maximum(1.0, np.abs(q[outer]))
    bad = margin < -tol * scale
    violations = [{"x": float(xx), "V": float(vv), "margin": float(mm)}
                  for xx, vv, mm in zip(x[outer][bad], v[outer][bad], margin[bad])]
    inner = ~outer
    M_V = float(np.max(2.0 * LV[inner] - v1[inner] ** 2)) if inner.any() else -math.inf
    z, hz = _h_table(G, A)
    b_top = float(np.max(v)) if b_max is None else b_max
    b_grid = np.geomspace(max(A, 1e-6), max(b_top, 10 * max(A, 1e-6)), n_b)
    rep = GoodPotentialReport(
        A=float(A), G=G,
        verdict="PASS" if not violations else "FAIL",
        worst_margin=float(np.min(margin / scale)) if margin.size else math.inf,
        violations=violations, M_V=M_V, inf_V=float(np.min(v)),
        b_grid=b_grid, h_of_b=np.zeros(0), moments=moment_check(pb, V),
        base=pb, V=V, _z=z, _hz=hz,
    )
    rep.h_of_b = np.asarray(rep.h(b_grid), float)
    return rep


def s_b(beta_wl, h):
    """``inf{s : beta(s) <= h}`` by bisection in ``log s`` (0 if every ``s`` qualifies)."""
    top = beta_wl.s_max if math.isfinite(beta_wl.s_max) else 1.0
    lt = math.log(top)
    if beta_wl.at_log(lt) > h:
        return math.inf
    lo = -745.0
    if beta_wl.at_log(lo) <= h:
        return 0.0
    # beta non-increasing: -beta(e^l) is non-decreasing in l
    l_star = bisect_increasing(lambda l: -float(beta_wl.at_log(l)), -h, lo, lt)
    return math.exp(l_star)


def _nu_measure(base, V):
    pb = _base_potential(base)
    return pb.plus(V, weight=2.0)


def tail_term(base, V, b):
    """``int_{V >= b} 2V dnu_V`` with ``nu_V = e^{-2V} mu`` normalized."""
    pot = _nu_measure(base, V)
    try:
        nu = build_measure(pot)
    except MassDeficit as exc:
        raise TailIntegralDiverges(f"nu_V is not normalizable on the truncated domain: {exc}") from exc
    log_norm = nu.log_norm
    lo_d, hi_d = pot.domain

    def f(x):
        vv = float(V.phi(x))
        return 2.0 * vv * math.exp(-float(pot.phi(x)) - log_norm) if vv >= b else 0.0

    total = 0.0
    grid = nu.grid
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            above = np.asarray(V.phi(grid), float) >= b
            # cells inside {V >= b} by their quadrature nodes; cells crossing
            # the level set by quad on the part beyond the crossing
            xq, wq, _ = nu._gl
            vq = np.asarray(V.phi(xq), float)
            full = above[:-1] & above[1:]
            total += float(np.sum((wq * 2.0 * vq)[full]))
            for i in np.nonzero(above[:-1] != above[1:])[0]:
                lo, hi = grid[i], grid[i + 1]
                r = optimize.brentq(lambda x: float(V.phi(x)) - b, lo, hi, xtol=1e-14)
                total += integrate.quad(f, r, hi)[0] if above[i + 1] else integrate.quad(f, lo, r)[0]
            total += integrate.quad(f, grid[-1], hi_d, limit=200)[0] if hi_d > grid[-1] else 0.0
            total += integrate.quad(f, lo_d, grid[0], limit=200)[0] if lo_d < grid[0] else 0.0
        except integrate.IntegrationWarning as exc:
            raise TailIntegralDiverges(str(exc)) from exc
    if not math.isfinite(total):
        raise TailIntegralDiverges("int 2V dnu_V diverges")
    return total


def wit_constants(report, beta_wl_base, beta_wp_nu, u, b):
    """``C(u, b)`` and ``D(u, b)`` for the perturbed weak Poincare inequality.

    ``C = h(b) + (2 + 2A + M h(b)) beta_WP^V(u)`` and
    ``D = s_b e^{-2 inf V} + (2 + 2A + M h(b)) u + int_{V >= b} 2V dnu_V``.
    ``M`` enters as ``max(M(V), 0)``.
    """
    if b < report.A:
        raise PremiseViolated(f"b={b:g} must be >= A={report.A:g}")
    if u <= 0:
        raise ValueError("u must be positive")
    h = report.h(b)
    M = max(report.M_V, 0.0)
    k = 2.0 + 2.0 * report.A + M * h
    C = h + k * float(beta_wp_nu(u))
    sb = s_b(beta_wl_base, h)
    D = sb * math.exp(-2.0 * report.inf_V) + k * u + tail_term(report.base, report.V, b)
    return C, D


def _last_decade_ok(ratio, limit=0.2):
    tail = ratio[-max(3, ratio.size // 5):]
    return bool(np.all(np.isfinite(tail)) and tail[-1] < limit and np.all(np.diff(tail) <= 1e-12))


def corollary_ts_check(report, beta_wl_base, a=1.0, a_prime=1.0, b_hi=1e6, s_lo=1e-12):
    """Premises ``h(b)/b -> 0`` and ``beta(s)/log(1/s) -> 0``; if both hold,
    ``beta_v(s) = a h(a' log(1/s))``.
    """
    b = np.geomspace(b_hi / 10, b_hi, 20)
    h_ok = _last_decade_ok(np.asarray(report.h(b), float) / b)
    s = np.geomspace(s_lo, 10 * s_lo, 20)[::-1]
    beta_ok = _last_decade_ok(np.asarray(beta_wl_base(s), float) / np.log(1.0 / s))
    out = {"poincare": bool(h_ok and beta_ok), "h_premise": h_ok, "beta_premise": beta_ok, "beta_v": None}
    if out["poincare"]:
        A = report.A

        def log_fn(ls):
            arg = np.maximum(a_prime * (-np.asarray(ls, float)), A)
            return a * np.asarray(report.h(arg), float)

        out["beta_v"] = RateFunction.from_log(log_fn, 1.0, "perturbed", {"a": a, "a_prime": a_prime,
                                                                          "constants": "defaults, not derived"})
    return out
