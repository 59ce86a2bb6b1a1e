"""Rate functions and the conversion formulas between inequality families.

A :class:`RateFunction` is a non-increasing map ``s -> beta(s)`` on
``(0, inf)``, frozen at ``beta(s_max)`` for ``s >= s_max``.  Internally every
evaluation goes through ``log s`` so that arguments such as
``1 / (4 t exp(1/t))`` stay representable.
"""

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from ._numeric import bisect_increasing, nonincreasing_majorant
from .exceptions import (
    InsufficientRange,
    PremiseWarning,
    ShapeViolation,
    UnsupportedKind,
)

KINDS = ("WLSI", "WPI", "SPI", "GBI", "RLSI")


class RateFunction:
    """Non-increasing positive function of ``s > 0``.

    Build one with :meth:`constant`, :meth:`power`, :meth:`tabulated` or
    :meth:`from_log` rather than calling the constructor.
    """

    def __init__(self, log_fn, s_max=math.inf, label="", params=None):
        self._log_fn = log_fn
        self.s_max = float(s_max)
        self.label = label
        self.params = dict(params or {})

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_log(cls, log_fn, s_max=math.inf, label="custom", params=None):
        """Wrap ``log_fn(log_s) -> beta``."""
        return cls(log_fn, s_max, label, params)

    @classmethod
    def from_callable(cls, fn, s_max=math.inf, label="custom", params=None):
        return cls(lambda ls: fn(np.exp(ls)), s_max, label, params)

    @classmethod
    def constant(cls, c):
        c = float(c)
        return cls(lambda ls: np.full(np.shape(ls), c), math.inf, "const", {"c": c})

    @classmethod
    def power(cls, c, p, q, s_max=None):
        """``c * s**(-p) * log(1/s)**q``; frozen above ``s_max`` (default ``1/e`` when ``q != 0``)."""
        c, p, q = float(c), float(p), float(q)
        if p < 0 or (q < 0 and p == 0):
            raise ValueError("power(c, p, q) needs p >= 0 and q >= 0 when p == 0")
        if s_max is None:
            s_max = math.exp(-1.0) if q != 0 else math.inf
        return cls(lambda ls: c * np.exp(-p * ls) * np.abs(ls) ** q, s_max, "power",
                   {"c": c, "p": p, "q": q})

    @classmethod
    def tabulated(cls, s, beta, s_max=None, label="table"):
        """Interpolate ``log beta`` linearly in ``log s``.

        Below the table the end slope is continued (clipped so the function
        stays non-increasing); above ``s_max`` the value is frozen.
        """
        s = np.asarray(s, float)
        beta = np.asarray(beta, float)
        order = np.argsort(s)
        s, beta = s[order], beta[order]
        if s.size < 2 or np.any(np.diff(s) <= 0):
            raise InsufficientRange("a tabulated rate needs >= 2 distinct s values")
        if np.any(beta <= 0) or not np.all(np.isfinite(beta)):
            raise ValueError("tabulated rate must be positive and finite")
        ls, lb = np.log(s), np.log(beta)
        slope = min(0.0, (lb[1] - lb[0]) / (ls[1] - ls[0]))

        def log_fn(x):
            x = np.asarray(x, float)
            inside = np.interp(x, ls, lb)
            below = lb[0] + slope * (x - ls[0])
            return np.exp(np.where(x < ls[0], below, inside))

        rf = cls(log_fn, s[-1] if s_max is None else s_max, label, {"n": int(s.size)})
        rf.table = (s, beta)
        return rf

    # -- evaluation -----------------------------------------------------------
    def at_log(self, log_s):
        ls = np.asarray(log_s, float)
        if self.s_max < math.inf:
            ls = np.minimum(ls, math.log(self.s_max))
        return np.asarray(self._log_fn(ls), float)

    def __call__(self, s):
        s = np.asarray(s, float)
        if np.any(s <= 0):
            raise ValueError("rate functions are defined for s > 0")
        out = self.at_log(np.log(s))
        return float(out) if out.ndim == 0 else out

    # -- algebra --------------------------------------------------------------
    def scaled(self, lam):
        lam = float(lam)
        return RateFunction(lambda ls, f=self.at_log: lam * f(ls), self.s_max,
                            f"{lam:g}*{self.label}", {**self.params, "scale": lam})

    def samples(self, lo=1e-12, hi=None, per_decade=20):
        hi = min(self.s_max if self.s_max < math.inf else 1.0, 1.0) if hi is None else hi
        n = max(2, int(math.ceil(per_decade * math.log10(hi / lo))) + 1)
        s = np.geomspace(lo, hi, n)
        return s, self(s)

    def is_nonincreasing(self, lo=1e-12, hi=None, per_decade=40, rtol=1e-9):
        _, b = self.samples(lo, hi, per_decade)
        return bool(np.all(np.diff(b) <= rtol * np.maximum(np.abs(b[1:]), 1e-300)))

    def envelope(self, lo=1e-14, hi=None, per_decade=40):
        """Smallest non-increasing majorant, sampled on a log grid.

        The returned function equals ``self`` wherever ``self`` is already
        non-increasing on the grid to the right of the point.
        """
        hi = self.s_max if hi is None else hi
        if not math.isfinite(hi):
            hi = 1.0
        n = max(2, int(math.ceil(per_decade * math.log10(hi / lo))) + 1)
        grid_ls = np.linspace(math.log(lo), math.log(hi), n)
        suffix = nonincreasing_majorant(self.at_log(grid_ls))
        suffix = np.append(suffix, 0.0)

        def log_fn(ls, f=self.at_log):
            ls = np.asarray(ls, float)
            j = np.searchsorted(grid_ls, ls, side="left")
            return np.maximum(f(ls), suffix[np.minimum(j, n)])

        return RateFunction(log_fn, self.s_max, f"envelope({self.label})", self.params)

    def to_csv(self, path, s=None):
        if s is None:
            s, b = self.samples()
        else:
            b = self(s)
        with open(path, "w") as fh:
            fh.write("s,beta\n")
            for si, bi in zip(np.atleast_1d(s), np.atleast_1d(b)):
                fh.write(f"{si:.17g},{bi:.17g}\n")

    def describe(self):
        return {"label": self.label, "s_max": self.s_max, "params": self.params}

    def __repr__(self):
        return f"RateFunction({self.label}, s_max={self.s_max:g}, params={self.params})"


class BecknerFunction:
    """Function ``T`` on ``(0, 1]`` of a general Beckner inequality."""

    def __init__(self, fn, label="T", params=None):
        self._fn = fn
        self.label = label
        self.params = dict(params or {})

    def __call__(self, t):
        t = np.asarray(t, float)
        if np.any(t <= 0) or np.any(t > 1 + 1e-12):
            raise ValueError("T is defined on (0, 1]")
        out = np.asarray(self._fn(t), float)
        return float(out) if out.ndim == 0 else out

    def scaled(self, lam):
        return BecknerFunction(lambda t, f=self._fn: lam * f(t), f"{lam:g}*{self.label}", self.params)

    def shape_report(self, lo=1e-6, n=400, rtol=1e-9):
        t = np.geomspace(lo, 1.0, n)
        v = self(t)
        nondecreasing = bool(np.all(np.diff(v) >= -rtol * np.abs(v[1:])))
        r = v / t
        ratio_nonincreasing = bool(np.all(np.diff(r) <= rtol * np.abs(r[1:])))
        return {"nondecreasing": nondecreasing, "ratio_nonincreasing": ratio_nonincreasing}


class SuperPoincareFunction:
    """``t -> beta_SP(t)`` on ``[1, inf)``, constant on ``[1, t_freeze)``."""

    def __init__(self, fn, t_freeze, label="beta_SP", params=None, premise_ok=True):
        self._fn = fn
        self.t_freeze = float(t_freeze)
        self.label = label
        self.params = dict(params or {})
        self.premise_ok = premise_ok

    def __call__(self, t):
        t = np.asarray(t, float)
        if np.any(t < 1):
            raise ValueError("beta_SP is defined on [1, inf)")
        out = np.asarray(self._fn(np.maximum(t, self.t_freeze)), float)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ConstantsPolicy:
    """Values for the constants the conversion statements leave unspecified.

    All default to 1 (``s0`` to 0.1); none of them is a sharp value.
    """

    c: float = 1.0
    c_prime: float = 1.0
    s0: float = 0.1
    kappa: float = 1.0
    C: float = 1.0
    C_prime: float = 1.0
    a: float = 1.0
    a_prime: float = 1.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ValueError(f"constant {k} must be a positive finite number, got {v!r}")
        if self.s0 >= math.exp(-1):
            raise ValueError("s0 must be below 1/e")

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown constant(s): {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Certificate:
    """An inequality kind, its rate function and how it was obtained."""

    kind: str
    rate: object
    provenance: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not self.provenance:
            raise ValueError("provenance must be non-empty")

    @classmethod
    def source(cls, kind, rate, name="given", **params):
        return cls(kind, rate, ({"step": name, **params},))

    def derive(self, kind, rate, step, **params):
        return Certificate(kind, rate, self.provenance + ({"step": step, **params},))

    def to_json(self):
        rate = getattr(self.rate, "describe", None)
        return json.dumps({
            "kind": self.kind,
            "rate": rate() if rate else {"label": getattr(self.rate, "label", "?")},
            "provenance": list(self.provenance),
        }, sort_keys=True, default=float)


# -- WLSI <-> WPI -------------------------------------------------------------

def _phi_half(s):
    """``(s/2) log(1 + 1/(2s))`` and the log factor."""
    L = np.log1p(1.0 / (2.0 * s))
    return 0.5 * s * L, L


def wlsi_to_wpi_value(beta_wl, s):
    """Pointwise ``24 beta_WL((s/2) log(1+1/(2s))) / log(1+1/(2s))``."""
    s = np.asarray(s, float)
    arg, L = _phi_half(s)
    return 24.0 * beta_wl(arg) / L


def wlsi_to_wpi(beta_wl, envelope=True, s_max=0.25):
    """Weak Poincare rate from a weak log-Sobolev rate.

    The raw formula need not be non-increasing (it increases for constant
    ``beta_wl``); by default its non-increasing majorant is returned.
    """
    def log_fn(ls):
        s = np.exp(ls)
        arg, L = _phi_half(s)
        return 24.0 * beta_wl.at_log(np.log(arg)) / L

    raw = RateFunction(log_fn, s_max, f"wpi({beta_wl.label})", {"source": beta_wl.label})
    return raw.envelope(hi=s_max) if envelope else raw


def wpi_to_wlsi(beta_wp, policy=ConstantsPolicy()):
    """``c' beta_WP(c s / log(1/s)) log(1/s)`` for ``s < s0``, frozen above."""
    c, cp = policy.c, policy.c_prime

    def log_fn(ls):
        L = -ls
        return cp * beta_wp.at_log(math.log(c) + ls - np.log(L)) * L

    return RateFunction(log_fn, policy.s0, f"wlsi({beta_wp.label})",
                        {"c": c, "c_prime": cp, "s0": policy.s0})


def phi_e2(s):
    """``s log(1 + e^2/s)``, increasing on ``(0, inf)``."""
    s = np.asarray(s, float)
    return s * np.log1p(math.e**2 / s)


def phi_e2_inverse(y):
    """Inverse of :func:`phi_e2` by bisection in ``log s``."""
    y = np.asarray(y, float)
    lo = np.full(y.shape, 1e-300)
    hi = np.maximum(y, 1.0) * 10
    return bisect_increasing(phi_e2, y, lo, hi, log=True)


def detect_poincare(beta_wl, lo=None, hi=None, per_decade=20, slope_tol=0.1):
    """Decide whether ``beta_wl(s) <= c1 log(c2/s)`` for small ``s``.

    The decision uses the slope of ``log beta`` against ``log log(1/s)`` over
    the last decade of the sampled range; ``yes`` iff it is at most
    ``1 + slope_tol``.  Tabulated rates are only sampled inside their table.
    """
    table = getattr(beta_wl, "table", None)
    if lo is None:
        lo = table[0][0] if table is not None else 1e-12
    if hi is None:
        hi = table[0][-1] if table is not None else 1e-2
        hi = min(hi, 1e-2) if hi > lo * 1e3 else hi
    if hi / lo < 1e3 * (1 - 1e-9):
        raise InsufficientRange("Poincare detection needs samples over >= 3 decades")
    s = np.geomspace(lo, hi, max(12, int(per_decade * math.log10(hi / lo)) + 1))
    b = beta_wl(s)
    L = np.log(1.0 / s)
    last = s <= lo * 10
    x, y = np.log(L[last]), np.log(b[last])
    slope = float(np.polyfit(x, y, 1)[0]) if last.sum() >= 2 else math.nan
    yes = bool(slope <= 1.0 + slope_tol)
    c2 = math.e
    c1 = float(np.max(b / np.log(c2 / s))) if yes else math.inf
    return {"poincare": yes, "c1": c1, "c2": c2, "slope": slope}


# -- WLSI -> SPI ----------------------------------------------------------------

def wlsi_to_spi(beta_wl, t_check=1e6, n_check=400):
    """``beta_SP(t) = 2 beta_WL(log(t/2)/(2t)) / log(t/2)`` for ``t >= 2e``.

    The premise (``x -> beta_WL(log(x/2)/(2x)) / log(x/2)`` non-increasing on
    ``(2, inf)``) is sampled on ``(2, t_check]``; a violation emits
    :class:`PremiseWarning` and is recorded on the result.
    """
    def fn(t):
        L = np.log(t / 2.0)
        return 2.0 * beta_wl.at_log(np.log(L) - np.log(2.0 * t)) / L

    x = 2.0 + np.geomspace(1e-6, t_check - 2.0, n_check)
    L = np.log(x / 2.0)
    g = beta_wl.at_log(np.log(L) - np.log(2.0 * x)) / L
    ok = bool(np.all(np.diff(g) <= 1e-9 * np.abs(g[1:])))
    if not ok:
        warnings.warn("SPI premise fails: beta(log(x/2)/(2x))/log(x/2) is not non-increasing on (2, inf)",
                      PremiseWarning, stacklevel=2)
    return SuperPoincareFunction(fn, 2 * math.e, f"spi({beta_wl.label})",
                                 {"t_freeze": 2 * math.e}, premise_ok=ok)


# -- WLSI <-> GBI ---------------------------------------------------------------

def wlsi_to_gbi_T(beta_wl):
    """``T(t) = t beta_WL(1/(4 t e^{1/t}))`` (without the factor 20)."""
    return BecknerFunction(lambda t: t * beta_wl.at_log(-np.log(4.0 * t) - 1.0 / t),
                           f"T({beta_wl.label})")


def wlsi_to_gbi(beta_wl, t_a=1.0, n_check=400):
    """GBI function ``20 T``.  Warns if ``T`` is not non-decreasing on ``(0, t_a]``."""
    T = wlsi_to_gbi_T(beta_wl)
    t = np.geomspace(1e-4, t_a, n_check)
    v = T(t)
    ok = bool(np.all(np.diff(v) >= -1e-9 * np.abs(v[1:])))
    if not ok:
        warnings.warn("GBI premise fails: T is not non-decreasing near 0", PremiseWarning, stacklevel=2)
    out = T.scaled(20.0)
    out.params.update({"factor": 20.0, "nondecreasing": ok, "t_a": t_a})
    out.nondecreasing = ok
    return out


def gbi_to_wlsi(T, policy=ConstantsPolicy(), check_shape=True):
    """``beta_WL(s) = C T(C'/log(1/s)) log(1/s)`` for ``s <= exp(-C')``."""
    if check_shape:
        rep = T.shape_report()
        if not (rep["nondecreasing"] and rep["ratio_nonincreasing"]):
            raise ShapeViolation(f"T fails its shape conditions: {rep}")
    C, Cp = policy.C, policy.C_prime

    def log_fn(ls):
        L = -ls
        return C * T(np.minimum(Cp / L, 1.0)) * L

    return RateFunction(log_fn, math.exp(-Cp), f"wlsi({T.label})", {"C": C, "C_prime": Cp})


# -- restricted log-Sobolev -------------------------------------------------------

def wlsi_to_swlsi(beta_wl, policy=ConstantsPolicy()):
    """``beta_SWL(u) = 16 beta_WL(kappa u^3 / log^6(1/u))`` for ``u <= s0``."""
    k = policy.kappa

    def log_fn(lu):
        return 16.0 * beta_wl.at_log(math.log(k) + 3.0 * lu - 6.0 * np.log(-lu))

    return RateFunction(log_fn, policy.s0, f"swl({beta_wl.label})", {"kappa": k, "s0": policy.s0})


def restricted_ls_constant(beta_swl, C_P, sup_norm, s0=None, u_min=1e-12):
    """``A = inf_{u in (0, s0]} beta_SWL(u) + u sqrt(3 C_P) sup_norm^2``.

    ``s0`` defaults to the rate's freezing point (1 when it has none).  A log
    grid scan is refined by golden-section search around the best node.

    Returns ``(A, u_star)``.
    """
    if C_P <= 0 or sup_norm <= 0:
        raise ValueError("C_P and sup_norm must be positive")
    if s0 is None:
        s0 = beta_swl.s_max if math.isfinite(beta_swl.s_max) else 1.0
    w = math.sqrt(3.0 * C_P) * sup_norm**2

    def obj(lu):
        return beta_swl.at_log(lu) + np.exp(lu) * w

    grid = np.linspace(math.log(u_min), math.log(s0), 241)
    vals = obj(grid)
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = float(obj(c)), float(obj(d))
    for _ in range(200):
        if b - a < 1e-12:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = float(obj(c))
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = float(obj(d))
    cand = [(float(vals[i]), grid[i]), (fc, c), (fd, d)]
    best, lu = min(cand)
    return best, math.exp(lu)


# -- tensorization and bounded perturbation ----------------------------------------

def tensorize(beta, n):
    """Rate ``s -> beta(s/n)`` of the ``n``-fold product."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return beta
    ln = math.log(n)
    s_max = beta.s_max * n
    return RateFunction(lambda ls, f=beta.at_log: f(ls - ln), s_max, f"tensor{n}({beta.label})",
                        {**beta.params, "n": n})


def tensorize_gbi(beta, n, policy=ConstantsPolicy()):
    """Dimension-free rate through the Beckner round trip (does not depend on ``n``)."""
    if int(n) < 1:
        raise ValueError("n must be >= 1")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PremiseWarning)
        T = wlsi_to_gbi(beta)
    return gbi_to_wlsi(T, policy)


def perturb_bounded(cert, osc_v):
    """Rate for ``e^{V} mu / Z`` when ``Osc(V) = osc_v``.

    WLSI and WPI: ``e^{2 osc} beta(u e^{-osc})``; SPI: ``e^{2 osc} beta(u e^{-2 osc})``.
    """
    if osc_v < 0:
        raise ValueError("osc_v must be >= 0")
    if cert.kind not in ("WLSI", "WPI", "SPI"):
        raise UnsupportedKind(f"bounded perturbation is not available for {cert.kind}")
    if osc_v == 0:
        return cert.derive(cert.kind, cert.rate, "perturb_bounded", osc_v=0.0)
    f = math.exp(2 * osc_v)
    rate = cert.rate
    if cert.kind == "SPI":
        shift = math.exp(-2 * osc_v)
        new = SuperPoincareFunction(lambda t: f * rate(np.maximum(t * shift, 1.0)), 1.0,
                                    f"perturbed({rate.label})", {"osc_v": osc_v})
    else:
        new = RateFunction(lambda ls: f * rate.at_log(ls - osc_v), rate.s_max * math.exp(osc_v),
                           f"perturbed({rate.label})", {"osc_v": osc_v})
    return cert.derive(cert.kind, new, "perturb_bounded", osc_v=float(osc_v))


def convert(cert, target, policy=ConstantsPolicy()):
    """Convert a certificate to another inequality kind when a rule exists."""
    rate = cert.rate
    if cert.kind == target:
        return cert
    if cert.kind == "WLSI" and target == "WPI":
        return cert.derive("WPI", wlsi_to_wpi(rate), "wlsi_to_wpi", factor=24.0)
    if cert.kind == "WPI" and target == "WLSI":
        return cert.derive("WLSI", wpi_to_wlsi(rate, policy), "wpi_to_wlsi", **policy.to_dict())
    if cert.kind == "WLSI" and target == "SPI":
        return cert.derive("SPI", wlsi_to_spi(rate), "wlsi_to_spi", t_freeze=2 * math.e)
    if cert.kind == "WLSI" and target == "GBI":
        return cert.derive("GBI", wlsi_to_gbi(rate), "wlsi_to_gbi", factor=20.0)
    if cert.kind == "GBI" and target == "WLSI":
        return cert.derive("WLSI", gbi_to_wlsi(rate, policy), "gbi_to_wlsi", C=policy.C,
                           C_prime=policy.C_prime)
    if cert.kind == "WLSI" and target == "RLSI":
        return cert.derive("RLSI", wlsi_to_swlsi(rate, policy), "wlsi_to_swlsi", kappa=policy.kappa,
                           s0=policy.s0)
    raise UnsupportedKind(f"no conversion from {cert.kind} to {target}")


