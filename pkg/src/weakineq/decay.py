"""Predicted decay curves for the entropy of the semigroup, and the devices
used to combine them (entropy splitting, total-variation schedules).
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import log_ndtr

from .exceptions import (
    NoCertificate,
    NotInvertible,
    PremiseViolated,
    TimeOutOfRange,
)
from .rates import RateFunction, detect_poincare

XI_FORMS = ("stated", "gronwall")


@dataclass
class BoundCurve:
    """A named bound ``t -> bound(t)`` valid on ``[t_min, t_max]``."""

    name: str
    fn: Callable
    t_min: float = 0.0
    t_max: float = math.inf
    params: dict = field(default_factory=dict)

    def __call__(self, t):
        t = np.asarray(t, float)
        out = np.asarray(self.fn(t), float)
        return float(out) if out.ndim == 0 else out

    def scaled(self, c, name=None):
        return BoundCurve(name or f"{c:g}*{self.name}", lambda t, f=self.fn: c * f(t),
                          self.t_min, self.t_max, {**self.params, "prefactor": c})

    def is_nonincreasing(self, t_lo=None, t_hi=None, n=200, rtol=1e-9):
        lo = self.t_min if t_lo is None else t_lo
        hi = (self.t_max if math.isfinite(self.t_max) else lo + 100.0) if t_hi is None else t_hi
        t = np.linspace(lo, hi, n)
        v = self(t)
        return bool(np.all(np.diff(v) <= rtol * np.abs(v[:-1]) + 1e-300))

    def to_csv(self, path, t):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "bound", "name"])
            for ti, bi in zip(np.atleast_1d(t), np.atleast_1d(self(t))):
                w.writerow([f"{ti:.17g}", f"{bi:.17g}", self.name])


# -- WLSI decay ------------------------------------------------------------------

def xi_inverse(beta_wl, eps, r):
    """``-(1/2) beta(r) log(r/eps)``, the time at which ``xi_eps`` reaches ``r``."""
    r = np.asarray(r, float)
    return -0.5 * beta_wl(r) * np.log(r / eps)


def xi_from_beta(beta_wl, eps, form="stated", log_r_min=-700.0):
    """Decay curve ``t -> (e^{-1} + eps) * xi_eps(t)`` from a WLSI rate.

    ``xi_eps(t) = r`` solves ``-(1/2) beta(r) log(r/eps) = t`` with
    ``r in (0, eps)``, by bisection in ``log r``.  With
    ``form="gronwall"`` the value is divided by ``eps``, which is what the
    Gronwall step produces for the same choice of ``r``.  The caller applies
    the ``Osc^2(sqrt h)`` factor.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if form not in XI_FORMS:
        raise ValueError(f"form must be one of {XI_FORMS}")
    le = math.log(eps)
    lr = np.linspace(log_r_min + le, le, 2001)[:-1]
    g = -0.5 * beta_wl.at_log(lr) * (lr - le)
    if not np.all(np.diff(g) < 0) or not np.all(np.isfinite(g)):
        raise NotInvertible("r -> -(1/2) beta(r) log(r/eps) is not strictly monotone on (0, eps)")
    t_max = float(g[0])
    factor = (math.exp(-1) + eps) / (eps if form == "gronwall" else 1.0)

    def r_of_t(t):
        t = np.atleast_1d(np.asarray(t, float))
        lo = np.full(t.shape, lr[0])
        hi = np.full(t.shape, le)
        for _ in range(120):
            mid = 0.5 * (lo + hi)
            gm = -0.5 * beta_wl.at_log(mid) * (mid - le)
            above = gm > t
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        return np.exp(0.5 * (lo + hi))

    def fn(t):
        t = np.asarray(t, float)
        out = factor * r_of_t(t)
        return out.reshape(t.shape)

    curve = BoundCurve(f"xi(eps={eps:g},{form})", fn, 0.0, t_max,
                       {"eps": eps, "form": form, "factor": factor, "beta": beta_wl.label,
                        "prefactor_kind": "osc2"})
    curve.r_of_t = r_of_t
    return curve


def converse_beta_from_xi(xi, t_hi=None, lo_s=1e-8, hi_s=1e-2):
    """WLSI rate ``psi^{-1}`` with ``psi(t) = 2 sqrt(2 xi(t))``.

    Returns ``(beta, detect_poincare_report)``.
    """
    t0 = xi.t_min
    psi = lambda t: 2.0 * np.sqrt(2.0 * np.asarray(xi(t), float))
    t_probe = np.linspace(t0, t0 + 50.0, 501)[1:]
    pv = psi(t_probe)
    if not np.all(np.diff(pv) < 0):
        raise NotInvertible("xi must be strictly decreasing")
    s_top = float(psi(t0)) if np.isfinite(psi(t0)) else math.inf

    def beta_log(ls):
        shape = np.shape(ls)
        s = np.exp(np.atleast_1d(np.asarray(ls, float)))
        lo = np.full(s.shape, float(t0))
        hi = np.full(s.shape, float(t0) + 1.0 if t_hi is None else t_hi)
        # grow the bracket until psi(hi) <= s
        for _ in range(200):
            need = psi(hi) > s
            if not need.any():
                break
            hi = np.where(need, t0 + 2.0 * (hi - t0), hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            above = psi(mid) > s
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.all(hi - lo <= 1e-13 * np.maximum(1.0, hi)):
                break
        return (0.5 * (lo + hi)).reshape(shape)

    beta = RateFunction.from_log(beta_log, s_top, f"converse({xi.name})")
    return beta, detect_poincare(beta, lo_s, hi_s)


def restricted_lsi_curve(A, ent0):
    """``t -> exp(-t/A) Ent(h)``."""
    return BoundCurve("restricted_lsi", lambda t: ent0 * np.exp(-np.asarray(t) / A), 0.0, math.inf,
                      {"A": A, "ent0": ent0})


def exponential_curve(rate, prefactor, name="exponential"):
    return BoundCurve(name, lambda t: prefactor * np.exp(-rate * np.asarray(t)), 0.0, math.inf,
                      {"rate": rate, "prefactor": prefactor})


def constant_curve(value, name="constant"):
    return BoundCurve(name, lambda t: np.full(np.shape(t), float(value)), 0.0, math.inf, {"value": value})


# -- entropy splitting and iterated curves -------------------------------------------

def entropy_split_bound(H, K, c):
    """``(e c + 2) (H / log K) log(log K / H)``; premise ``H <= log(K)/(2e)``, ``K >= e^2``."""
    if K < math.e**2 * (1 - 1e-12):
        raise PremiseViolated("entropy split needs K >= e^2")
    if c <= 0 or H < 0:
        raise ValueError("need c > 0 and H >= 0")
    lk = math.log(K)
    if H > lk / (2 * math.e) * (1 + 1e-12):
        raise PremiseViolated(f"entropy split needs H <= log(K)/(2e) = {lk / (2 * math.e):.6g}")
    if H == 0:
        return 0.0
    return (math.e * c + 2.0) * (H / lk) * math.log(lk / H)


def iterated_decay_curve(xi, k, eps, C=1.0):
    """``t -> C / log(1/xi(t))^{k(1-eps)}`` (``C`` is a free constant)."""
    if k < 1 or not 0 <= eps <= 1:
        raise ValueError("need k >= 1 and eps in [0, 1]")
    power = k * (1.0 - eps)

    def fn(t):
        v = np.asarray(xi(t), float)
        return C / np.log(1.0 / v) ** power

    return BoundCurve(f"iterated(k={k},eps={eps:g})", fn, xi.t_min, xi.t_max,
                      {"k": k, "eps": eps, "C": C, "power": power, "free": ["C"]})


def lo_exponent(alpha, eps):
    return (1.0 - eps) * alpha / (2.0 - eps * alpha)


def lo_decay_curve(alpha, eps, t_offset=0.0):
    """``t -> exp(1 - (t - t_offset)^gamma)``, ``gamma = (1-eps) alpha / (2 - eps alpha)``."""
    if not 1 <= alpha <= 2:
        raise ValueError("alpha must lie in [1, 2]")
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    g = lo_exponent(alpha, eps)

    def fn(t):
        tt = np.maximum(np.asarray(t, float) - t_offset, 0.0)
        return np.exp(1.0 - tt**g)

    return BoundCurve(f"lo(alpha={alpha:g},eps={eps:g})", fn, t_offset, math.inf,
                      {"alpha": alpha, "eps": eps, "gamma": g, "t_offset": t_offset})


# -- diffusion-specific bounds ---------------------------------------------------------

def c_min(potential, x_grid):
    """``max(0, -min(V'^2 - V''))`` over ``x_grid``."""
    x = np.asarray(x_grid, float)
    v1 = np.asarray(potential.phi_prime(x), float)
    v2 = np.asarray(potential.phi_second(x), float)
    return max(0.0, -float(np.min(v1**2 - v2)))


def royer_bounds(V, x, t, p, cmin=None, x_grid=None):
    """Right-hand sides of the log-moment and L^2 bounds for ``P_t delta_x`` (dimension 1).

    Returns ``(log_moment_ub, l2_ub)``; ``log_moment_ub`` is ``nan`` when
    ``t`` is outside ``(0, 1/(2 pi))`` (the L^2 bound holds for all ``t > 0``).
    """
    if t <= 0:
        raise TimeOutOfRange("t must be positive")
    if p < 1:
        raise ValueError("p must be >= 1")
    if cmin is None:
        grid = np.linspace(-20, 20, 4001) if x_grid is None else x_grid
        cmin = c_min(V, grid)
    vx = float(V.phi(np.asarray(x, float)))
    l2 = (2 * math.pi * t) ** -0.5 * math.exp(cmin * t) * math.exp(2 * vx)
    if t < 1 / (2 * math.pi):
        vp = max(vx, 0.0)
        lm = 4 ** (p - 1) * (vp**p + (cmin * t / 2) ** p + (0.5 * math.log(1 / (2 * math.pi * t))) ** p
                             + math.exp(vx + p * (math.log(p) - 1) + cmin * t / 2))
    else:
        lm = math.nan
    return lm, l2


def royer_log_moment(V, x, t, p, cmin=None):
    """Log-moment bound alone; raises :class:`TimeOutOfRange` outside ``(0, 1/(2 pi))``."""
    if not 0 < t < 1 / (2 * math.pi):
        raise TimeOutOfRange("the log-moment bound needs t in (0, 1/(2 pi))")
    return royer_bounds(V, x, t, p, cmin)[0]


def check_initial_condition(alpha, D=None, D_prime=1.0, n=201, extent=50.0):
    """Worst slack of ``|y|^a <= D (|x|^a + |y-x|^2 + D')`` on a 2D grid (``<= 0`` means it holds)."""
    D = 2 ** (alpha - 1) if D is None else D
    g = np.linspace(-extent, extent, n)
    X, Y = np.meshgrid(g, g)
    lhs = np.abs(Y) ** alpha
    rhs = D * (np.abs(X) ** alpha + (Y - X) ** 2 + D_prime)
    return float(np.max(lhs - rhs))


def l2_membership(lam, t, u_max=80.0, n=400, margin=0.05):
    """Decide whether ``P_t nu`` is in ``L^2(mu)`` for ``nu = e^{-lam|x|}dx/Z`` under the sign drift.

    The inner integral ``int_{x>0} e^x e^{-(u-x)^2/2t} e^{-lam x} dx`` has the
    closed form ``sqrt(2 pi t) exp(a u + a^2 t/2) Phi((u + a t)/sqrt t)`` with
    ``a = 1 - lam``.  The growth rate of its square on ``[u_max/2, u_max]``
    is fitted; finite iff the rate is below ``-margin``.
    """
    if lam <= 0 or t <= 0:
        raise ValueError("lam and t must be positive")
    a = 1.0 - lam
    u = np.linspace(u_max / 2, u_max, n)
    log_inner = 0.5 * math.log(2 * math.pi * t) + a * u + a * a * t / 2 + log_ndtr((u + a * t) / math.sqrt(t))
    rate = float(np.polyfit(u, 2 * log_inner, 1)[0])
    return {"finite": bool(rate < -margin), "tail_exponent": rate}


# -- total variation ---------------------------------------------------------------------

def tv_bound_schedule(K_grid, tail, var_route=None, ent_route=None):
    """Lower envelope over ``K`` of ``route(t, K) + tail(K)``.

    ``tail(K)`` bounds ``2 int (h-K)_+ dmu``; ``var_route(t, K)`` bounds
    ``Var(P_t(h ^ K))`` and ``ent_route(t, K)`` returns ``(mass_K, bound on
    Ent(P_t(h ^ K)))``.  At least one route is required.
    """
    if var_route is None and ent_route is None:
        raise NoCertificate("a variance or entropy decay route is required")
    K_grid = np.asarray(K_grid, float)
    tails = np.array([tail(K) for K in K_grid], float)

    def fn(t):
        shape = np.shape(t)
        t = np.atleast_1d(np.asarray(t, float))
        best = np.full(t.shape, np.inf)
        for K, tl in zip(K_grid, tails):
            if var_route is not None:
                best = np.minimum(best, np.sqrt(np.maximum(var_route(t, K), 0.0)) + tl)
            if ent_route is not None:
                m, e = ent_route(t, K)
                best = np.minimum(best, np.sqrt(2 * m * np.maximum(e, 0.0)) + tl)
        return best.reshape(shape)

    return BoundCurve("tv_schedule", fn, 0.0, math.inf, {"K_grid": K_grid.tolist()})


def tv_bound_from_density(mu, h, K_grid, C_P=None, xi=None):
    """TV schedule for a density ``h`` using a Poincare constant and/or a WLSI curve.

    ``xi`` is a curve from :func:`xi_from_beta` (factor included); the entropy
    route uses ``Ent(P_t g) <= xi(t) Osc^2(sqrt g)`` for ``g = h ^ K``.
    """
    from .measure import GridFunction, oscillation, variance

    if C_P is None and xi is None:
        raise NoCertificate("need C_P or a WLSI decay curve")
    v = h.values if isinstance(h, GridFunction) else np.asarray(h, float)

    def tail(K):
        return 2.0 * mu.integrate(np.maximum(v - K, 0.0))

    stats = {}
    for K in np.asarray(K_grid, float):
        g = np.minimum(v, K)
        stats[float(K)] = (mu.integrate(g), variance(mu, g), oscillation(np.sqrt(g)) ** 2)

    var_route = None
    if C_P is not None:
        var_route = lambda t, K: stats[float(K)][1] * np.exp(-t / C_P)
    ent_route = None
    if xi is not None:
        ent_route = lambda t, K: (stats[float(K)][0], xi(t) * stats[float(K)][2])
    return tv_bound_schedule(K_grid, tail, var_route, ent_route)


# -- fitting helpers ---------------------------------------------------------------------

def fit_stretched_exponent(t, values, gamma_bounds=(0.05, 3.0)):
    """Fit ``log v = log c - d t^gamma``; returns ``{"gamma", "d", "log_c"}``."""
    from scipy.optimize import curve_fit

    t = np.asarray(t, float)
    y = np.log(np.asarray(values, float))
    slope0 = max(-(y[-1] - y[0]) / (t[-1] - t[0]), 1e-6)

    def model(tt, log_c, d, g):
        return log_c - d * tt**g

    p, _ = curve_fit(model, t, y, p0=(y[0], slope0, 1.0),
                     bounds=([-np.inf, 0.0, gamma_bounds[0]], [np.inf, np.inf, gamma_bounds[1]]),
                     maxfev=20000)
    return {"log_c": float(p[0]), "d": float(p[1]), "gamma": float(p[2])}


def fit_free_constant(curve, t, values):
    """Smallest ``C`` with ``values <= C * curve(t)`` and the least-squares ``C`` in log scale."""
    shape = np.asarray(curve(t), float)
    ratio = np.asarray(values, float) / shape
    return {"C_dominating": float(np.max(ratio)), "C_lsq": float(np.exp(np.mean(np.log(ratio))))}
