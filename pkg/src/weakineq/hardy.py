"""Two-sided Hardy-type bounds on the optimal WLSI constant in 1D."""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .capacity import capacity_profile, kernel_s
from .exceptions import DerivativeMissing, InsufficientRange, ZeroDerivative
from .measure import _auto_extent, build_measure


def _b_integrand(mass, res, beta):
    s = kernel_s(mass, "half")
    return s / beta(s) * res


def _B_integrand(mass, res, beta):
    y = mass * np.log1p(math.e**2 / mass)
    return 16.0 * y / beta(14.0 / 3.0 * y) * res


def _is_divergent(vals, mass, frac=0.1, min_slope=0.25):
    """Monotone growth over the last decile at a log-log rate in ``log(1/mass)``.

    A bounded integrand creeping up to its limit has a slope that decays like
    ``1/log(1/mass)``; a divergent one (e.g. ``~ log(1/mass)``) keeps slope ~1.
    """
    k = max(3, int(math.ceil(frac * vals.size)))
    tail, m = vals[-k:], mass[-k:]
    if not np.all(np.diff(tail) > 0):
        return False
    if not np.all(np.isfinite(tail)):
        return True
    slope = np.polyfit(np.log(np.log(1.0 / m)), np.log(tail), 1)[0]
    return bool(slope > min_slope)


@dataclass
class HardyBounds:
    b_plus: float
    b_minus: float
    B_plus: float
    B_minus: float
    x_at_b_plus: float
    x_at_b_minus: float
    x_at_B_plus: float
    x_at_B_minus: float
    divergent: list = field(default_factory=list)

    @property
    def lower(self):
        return max(self.b_plus, self.b_minus)

    @property
    def upper(self):
        return max(self.B_plus, self.B_minus)

    def to_dict(self):
        d = asdict(self)
        d.update(lower=self.lower, upper=self.upper)
        return d


def hardy_bounds(mu, beta, x_grid=None):
    """``b_+-`` and ``B_+-`` as suprema over half-lines beyond the median.

    ``x_grid=None`` scans 400 points per side, log-spaced in tail mass from
    0.49 down to 1e-9.  A constant whose integrand keeps growing over the
    last decile of the scan (log-log slope in ``log(1/mass)`` above 0.25) is
    listed in ``divergent``.
    """
    out, divergent = {}, []
    for side, tag in (("right", "plus"), ("left", "minus")):
        if x_grid is None:
            p = capacity_profile(mu, side)
        else:
            x = np.asarray(x_grid, float)
            sel = (x > mu.median) if side == "right" else (x < mu.median)
            if not sel.any():
                raise InsufficientRange(f"x_grid has no point on the {side} of the median")
            p = capacity_profile(mu, side, x[sel])
        res = p.resistance
        for name, fn in (("b", _b_integrand), ("B", _B_integrand)):
            vals = fn(p.mass, res, beta)
            i = int(np.nanargmax(vals))
            out[f"{name}_{tag}"] = float(vals[i])
            out[f"x_at_{name}_{tag}"] = float(p.x[i])
            if _is_divergent(vals, p.mass):
                divergent.append(f"{name}_{tag}")
    return HardyBounds(divergent=divergent, **out)


def poincare_constant_bounds(mu, x_grid=None):
    """Muckenhoupt sandwich ``B <= C_P <= 4B`` with ``B = max_sides sup mass * resistance``."""
    best = 0.0
    for side in ("right", "left"):
        if x_grid is None:
            p = capacity_profile(mu, side)
        else:
            x = np.asarray(x_grid, float)
            sel = (x > mu.median) if side == "right" else (x < mu.median)
            p = capacity_profile(mu, side, x[sel])
        best = max(best, float(np.max(p.mass * p.resistance)))
    return best, 4.0 * best


def fit_rate_exponents(beta, lo=None, hi=None, n=200):
    """Least-squares fit ``log beta = log C + p log(1/s) + q log log(1/s)``.

    Tabulated rates are sampled inside their table, capped at ``s = 1e-2``.
    Returns ``{"p", "q", "log_C", "rms"}``.
    """
    table = getattr(beta, "table", None)
    if lo is None:
        lo = table[0][0] if table is not None else 1e-12
    if hi is None:
        hi = min(1e-2, table[0][-1]) if table is not None else 1e-2
    if hi / lo < 1e3 * (1 - 1e-9) or n < 12:
        raise InsufficientRange("exponent fit needs >= 12 samples over >= 3 decades")
    s = np.geomspace(lo, hi, n)
    L = np.log(1.0 / s)
    X = np.column_stack([np.ones_like(L), L, np.log(L)])
    y = np.log(beta(s))
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    rms = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
    return {"p": float(coef[1]), "q": float(coef[2]), "log_C": float(coef[0]), "rms": rms}


def sufficient_condition_check(potential, beta, eps, interval, n_scan=400, level=200.0, log_z=None):
    """Check the premises of the potential criterion outside ``interval``.

    ``phi`` is normalized (``phi + log Z``) so ``exp(-phi)`` is a probability
    density.  Reports the worst ``|phi''|/phi'^2``, the fitted ``A' <= A``
    from ``(phi + log|phi'|)/phi`` over points with ``phi > 0``, and the
    smallest ``c`` with ``phi/phi'^2 <= c beta(A e^{-phi} phi/|phi'|)``.
    The same fitted ``A`` is used in the premise and in the rate argument.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    x0, x1 = interval
    if potential.phi_prime is None or potential.phi_second is None:
        raise DerivativeMissing("the check needs phi' and phi''")
    if log_z is None:
        log_z = build_measure(potential).log_z
    lo, hi, _ = _auto_extent(potential, level)
    xs = []
    if hi > x1:
        xs.append(x1 + (hi - x1) * np.geomspace(1e-6, 1.0, n_scan))
    if lo < x0:
        xs.append(x0 - (x0 - lo) * np.geomspace(1e-6, 1.0, n_scan))
    x = np.concatenate(xs)
    phi = np.asarray(potential.phi(x), float) + log_z
    d1 = np.asarray(potential.phi_prime(x), float)
    d2 = np.asarray(potential.phi_second(x), float)
    if np.any(d1 == 0):
        raise ZeroDerivative(f"phi' vanishes at x={x[d1 == 0][0]:g} outside the interval")
    curv = np.abs(d2) / d1**2
    pos = phi > 0
    ratio = (phi[pos] + np.log(np.abs(d1[pos]))) / phi[pos]
    A = float(np.max(ratio)) if pos.any() else math.nan
    A_prime = float(np.min(ratio)) if pos.any() else math.nan
    arg_log = math.log(A) - phi[pos] + np.log(phi[pos]) - np.log(np.abs(d1[pos])) if A > 0 else None
    if arg_log is not None:
        need = (phi[pos] / d1[pos] ** 2) / beta.at_log(arg_log)
        c = float(np.max(need))
    else:
        c = math.inf
    ok_curv = bool(np.max(curv) <= 1 - eps)
    ok_ap = bool(pos.any() and A_prime > 0 and math.isfinite(A))
    ok_c = bool(math.isfinite(c))
    return {
        "verdict": "PASS" if ok_curv and ok_ap and ok_c else "FAIL",
        "max_curvature_ratio": float(np.max(curv)),
        "min_curvature_ratio": float(np.min(curv)),
        "curvature_ok": ok_curv,
        "A": A,
        "A_prime": A_prime,
        "ap_ok": ok_ap,
        "c": c,
        "excluded_nonpositive_phi": int((~pos).sum()),
        "n_scanned": int(x.size),
    }
