"""The diffusion ``dX = dB - V'(X) dt`` reversible for ``dmu = e^{-2V} dx``.

The Fokker-Planck solver works with the density ``h_t = d(law X_t)/dmu``,
which solves ``dh/dt = (1/2) h'' - V' h'``.  Space is discretized by finite
volumes in divergence form against ``mu``: node ``i`` carries the mass
``m_i`` of its dual cell and neighbouring nodes exchange the flux
``(h_{i+1} - h_i) / (2 R_i)`` where ``R_i = int 1/rho`` over the cell.  The
semi-discrete system is a reversible Markov chain with invariant masses
``m``, so ``h = 1`` is stationary to rounding and the discrete entropy
decays along every step of both time schemes.
"""

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.linalg import solveh_banded
from scipy.special import ndtr

from .decay import fit_free_constant
from .exceptions import ConfigError, Instability
from .hardy import poincare_constant_bounds
from .measure import GridFunction, Potential, _auto_extent, build_measure, potential_from_config

SCHEMES = ("explicit", "implicit")
TRACE_COLUMNS = ("t", "entropy", "variance", "tv", "fisher")
MC_BINS = 128


def mu_of(V, grid_spec=None, level=60.0, n=2048):
    """The probability measure ``e^{-2V} dx / Z`` on a truncated grid."""
    pot = V.scaled(2.0)
    if grid_spec is None:
        lo, hi, _ = _auto_extent(pot, level)
        grid_spec = (lo, hi, n)
    return build_measure(pot, grid_spec, spacing="uniform", check_mass=False)


def _kappa(mu):
    with np.errstate(divide="ignore"):
        k = 0.5 / mu.cell_resistance
    return np.where(np.isfinite(k), k, 0.0)


def stable_dt(mu):
    """Largest explicit step keeping the update a positive (Markov) kernel."""
    k = _kappa(mu)
    ks = np.zeros(mu.grid.size)
    ks[:-1] += k
    ks[1:] += k
    m = mu.node_mass
    ok = ks > 0
    return float(np.min(m[ok] / ks[ok]))


# -- initial data -----------------------------------------------------------------

def dirac_density(mu, x0, width):
    """``h_0`` for a Gaussian of standard deviation ``width`` centred at ``x0``."""
    x = mu.grid
    p = np.exp(-0.5 * ((x - x0) / width) ** 2) / (width * math.sqrt(2 * math.pi))
    with np.errstate(over="ignore", invalid="ignore"):
        h = np.where(p > 0, p / mu.density(x), 0.0)
    return _normalize(mu, h)


def two_level_density(mu, split=0.0, ratio=4.0):
    """``h_0 proportional to 1`` left of ``split`` and ``ratio`` right of it."""
    h = np.where(mu.grid < split, 1.0, float(ratio))
    return _normalize(mu, h)


def _normalize(mu, h):
    h = np.asarray(h, float)
    mass = float(np.dot(mu.node_mass, h))
    if not mass > 0:
        raise ConfigError("initial density has zero mass on the grid")
    return h / mass


@dataclass
class SolverConfig:
    """Fokker-Planck run description.

    ``initial`` is an array of node values, a :class:`GridFunction`, or a
    dict ``{"kind": "dirac", "x": x0, "width": w}`` (``width`` defaults to
    ``2 dx``), ``{"kind": "two_level", "split": c, "ratio": r}`` or
    ``{"kind": "constant"}``.
    """

    potential: Potential
    T: float
    grid: Optional[tuple] = None
    n: int = 2048
    level: float = 60.0
    dt: Optional[float] = None
    scheme: str = "explicit"
    initial: object = field(default_factory=lambda: {"kind": "constant"})
    n_samples: int = 60
    t_first: Optional[float] = None
    growth: float = 0.002
    dt_max: float = 0.02
    keep_densities: bool = False
    potential_spec: Optional[dict] = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if self.T <= 0:
            raise ConfigError("T must be positive")

    def measure(self):
        return mu_of(self.potential, self.grid, self.level, self.n)

    def initial_density(self, mu):
        init = self.initial
        if isinstance(init, GridFunction):
            return _normalize(mu, init.values)
        if isinstance(init, dict):
            kind = init.get("kind")
            if kind == "dirac":
                dx = float(np.min(np.diff(mu.grid)))
                return dirac_density(mu, float(init["x"]), float(init.get("width", 2 * dx)))
            if kind == "two_level":
                return two_level_density(mu, float(init.get("split", 0.0)), float(init.get("ratio", 4.0)))
            if kind == "constant":
                return np.ones(mu.grid.size)
            raise ConfigError(f"unknown initial kind {kind!r}")
        return _normalize(mu, np.asarray(init, float))

    def to_dict(self):
        init = self.initial
        if isinstance(init, GridFunction):
            init = {"kind": "values", "digest": hashlib.sha256(init.values.tobytes()).hexdigest()}
        elif not isinstance(init, dict):
            init = {"kind": "values", "digest": hashlib.sha256(np.asarray(init, float).tobytes()).hexdigest()}
        return {
            "potential": self.potential_spec or {"label": self.potential.label},
            "T": self.T, "grid": list(self.grid) if self.grid else None, "n": self.n,
            "level": self.level, "dt": self.dt, "scheme": self.scheme, "initial": init,
            "n_samples": self.n_samples, "t_first": self.t_first, "growth": self.growth,
            "dt_max": self.dt_max,
        }

    @classmethod
    def from_dict(cls, cfg):
        allowed = {"potential", "T", "grid", "n", "level", "dt", "scheme", "initial", "n_samples",
                   "t_first", "growth", "dt_max"}
        unknown = set(cfg) - allowed
        if unknown:
            raise ConfigError(f"unknown solver keys: {sorted(unknown)}")
        if "potential" not in cfg or "T" not in cfg:
            raise ConfigError("solver config needs 'potential' and 'T'")
        spec = dict(cfg["potential"])
        # ``scale`` multiplies the potential: V = scale * phi
        body = {k: v for k, v in spec.items() if k != "scale"}
        pot = potential_from_config(body)
        scale = float(spec.get("scale", 1.0))
        if scale != 1.0:
            pot = pot.scaled(scale)
        kw = {k: v for k, v in cfg.items() if k != "potential"}
        if kw.get("grid") is not None:
            g = kw["grid"]
            kw["grid"] = (g["xmin"], g["xmax"], g["n"]) if isinstance(g, dict) else tuple(g)
        return cls(potential=pot, potential_spec=spec, **kw)


# -- traces -----------------------------------------------------------------------

@dataclass
class DecayTrace:
    times: np.ndarray
    entropy: np.ndarray
    variance: np.ndarray
    tv: np.ndarray
    fisher: np.ndarray
    dirichlet_sqrt: np.ndarray
    mass: np.ndarray
    h0: np.ndarray = field(repr=False)
    h_final: np.ndarray = field(repr=False)
    grid: np.ndarray = field(repr=False)
    node_mass: np.ndarray = field(repr=False)
    densities: Optional[np.ndarray] = field(default=None, repr=False)
    dt: float = math.nan
    scheme: str = ""
    n_steps: int = 0
    curves: list = field(default_factory=list)

    @property
    def osc_sqrt_h0(self):
        r = np.sqrt(self.h0)
        return float(r.max() - r.min())

    @property
    def ent0(self):
        return float(self.entropy[0])

    def to_csv(self, path, digest=None):
        with open(path, "w", newline="") as fh:
            if digest:
                fh.write(f"# manifest {digest}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for row in zip(self.times, self.entropy, self.variance, self.tv, self.fisher):
                w.writerow([f"{v:.17g}" for v in row])


def _functionals(h, m, kappa):
    dh = np.diff(h)
    with np.errstate(divide="ignore", invalid="ignore"):
        logh = np.where(h > 0, np.log(np.where(h > 0, h, 1.0)), 0.0)
        ent = float(np.dot(m, np.where(h > 0, h * logh, 0.0)))
        fisher = float(np.sum(2 * kappa * dh * np.diff(logh)))
    mass = float(np.dot(m, h))
    var = float(np.dot(m, h * h)) - mass**2
    tv = float(np.dot(m, np.abs(h - 1.0)))
    dsq = float(np.sum(2 * kappa * np.diff(np.sqrt(np.maximum(h, 0.0))) ** 2))
    return max(ent, 0.0), max(var, 0.0), tv, fisher, dsq, mass


def sample_times(T, n_samples, t_first):
    return np.concatenate([[0.0], np.geomspace(t_first, T, max(n_samples - 1, 1))])


def evolve(config, mu=None):
    """Run the solver and return a :class:`DecayTrace` on a log time grid."""
    mu = config.measure() if mu is None else mu
    h = config.initial_density(mu).copy()
    m = np.asarray(mu.node_mass, float)
    if np.any(m <= 0):
        raise Instability("a node carries zero mass; shrink the grid extent")
    kappa = _kappa(mu)
    cap = stable_dt(mu)
    if config.scheme == "explicit":
        dt = 0.4 * cap if config.dt is None else float(config.dt)
        if dt > cap * (1 + 1e-12):
            raise Instability(f"explicit dt={dt:g} exceeds the stability cap {cap:g}; use the implicit scheme")
    else:
        dt = float(config.dt) if config.dt is not None else max(cap, 1e-6)
    t_first = config.t_first or max(10 * dt, config.T * 1e-4)
    times = sample_times(config.T, config.n_samples, t_first)

    # banded (upper) form of M + dt K for the implicit scheme
    def banded(step):
        ks = np.zeros(m.size)
        ks[:-1] += kappa
        ks[1:] += kappa
        ab = np.zeros((2, m.size))
        ab[1] = m + step * ks
        ab[0, 1:] = -step * kappa
        return ab

    rows = []
    dens = [] if config.keep_densities else None
    m0 = float(np.dot(m, h))
    n_steps = 0
    t = 0.0
    last_ab = (None, None)
    for ts in times:
        while t < ts - 1e-14 * max(1.0, ts):
            if config.scheme == "explicit":
                step = min(dt, ts - t)
                flux = kappa * np.diff(h)
                dh = np.zeros_like(h)
                dh[:-1] += flux
                dh[1:] -= flux
                h = h + step * dh / m
            else:
                step = min(max(dt, config.growth * t), config.dt_max, ts - t) if config.dt is None else min(dt, ts - t)
                step = max(step, 1e-300)
                if last_ab[0] != step:
                    last_ab = (step, banded(step))
                h = solveh_banded(last_ab[1], m * h)
            t += step
            n_steps += 1
        vals = _functionals(h, m, kappa)
        if np.min(h) < -1e-12 or abs(vals[5] - m0) > 1e-8:
            raise Instability(f"at t={t:g}: min h = {np.min(h):.3g}, mass drift {vals[5] - m0:.3g}")
        rows.append(vals)
        if dens is not None:
            dens.append(h.copy())
    arr = np.array(rows)
    return DecayTrace(
        times=times, entropy=arr[:, 0], variance=arr[:, 1], tv=arr[:, 2], fisher=arr[:, 3],
        dirichlet_sqrt=arr[:, 4], mass=arr[:, 5], h0=config.initial_density(mu), h_final=h,
        grid=np.asarray(mu.grid), node_mass=m, densities=None if dens is None else np.array(dens),
        dt=dt, scheme=config.scheme, n_steps=n_steps,
    )


def poincare_estimate(V, **kw):
    """Muckenhoupt sandwich ``(B, 4B)`` for ``e^{-2V}``."""
    return poincare_constant_bounds(mu_of(V, **kw))


# -- Ornstein-Uhlenbeck oracle ---------------------------------------------------------

def ou_transition(x0, t, width=0.0):
    """Mean and variance of ``X_t`` for ``dX = dB - X dt`` from ``N(x0, width^2)``."""
    e = math.exp(-t)
    return x0 * e, 0.5 * (1 - e * e) + width**2 * e * e


def trace_moments(trace, i=-1):
    """Mean and variance of the law ``h mu`` at sample ``i`` (node quadrature)."""
    h = trace.densities[i] if trace.densities is not None and i != -1 else trace.h_final
    w = trace.node_mass * h
    mean = float(np.dot(w, trace.grid))
    return mean, float(np.dot(w, (trace.grid - mean) ** 2))


# -- sign drift: explicit density ------------------------------------------------------

def _explicit_const(t, constant):
    if constant == "derived":
        return math.exp(-t / 2) / math.sqrt(2 * math.pi * t)
    if constant == "stated":
        return math.exp(-t / 2) * math.sqrt(2 / (math.pi * t))
    raise ValueError("constant must be 'derived' or 'stated'")


def _hit_density(x, T):
    return x * (2 * math.pi * T**3) ** -0.5 * math.exp(-x * x / (2 * T)) if T > 0 else 0.0


def sign_drift_remainder(x, t, u):
    """Exact density (w.r.t. ``mu = e^{-2|u|} du``) of ``X_t`` on ``{T_0 < t}``.

    After the hitting time of 0 the process restarts from 0; ``J`` below is
    the integral over ``v > |u|`` of the joint (|B|, local time) law.
    """
    u = np.abs(np.atleast_1d(np.asarray(u, float)))
    out = np.empty(u.shape)
    pre = 0.5 * math.exp(-t / 2 + x)
    for j, uj in enumerate(u):
        def f(T, uj=uj):
            s = t - T
            if s <= 0:
                return 0.0
            J = math.sqrt(2 / (math.pi * s)) * (math.exp(uj - uj * uj / (2 * s))
                                                 + math.exp(s / 2) * math.sqrt(2 * math.pi * s)
                                                 * ndtr((s - uj) / math.sqrt(s)))
            return _hit_density(x, T) * J
        out[j] = pre * integrate.quad(f, 0.0, t, limit=200)[0]
    return out


def sign_drift_remainder_bound(x, t):
    """``sup_u`` of the remainder after bounding the ``v``-integral by the whole line."""
    pre = 0.5 * math.exp(-t / 2 + x)

    def f(T):
        s = t - T
        if s <= 0:
            return 0.0
        return _hit_density(x, T) * (math.sqrt(2 / (math.pi * s)) + 2.0) * math.exp(s / 2)

    return pre * integrate.quad(f, 0.0, t, limit=200)[0]


def explicit_density_doubleexp(x, t, u_grid, constant="derived"):
    """Explicit part of the law of ``X_t`` (``dX = dB - sign(X) dt``, ``X_0 = x > 0``).

    Returns ``(GridFunction, remainder_bound)``.  Values are densities with
    respect to ``mu = e^{-2|u|} du``:
    ``c(t) e^x e^u (e^{-(x-u)^2/2t} - e^{-(x+u)^2/2t})`` for ``u >= 0`` and 0
    for ``u < 0``.  ``constant="derived"`` uses ``c(t) = e^{-t/2}/sqrt(2 pi t)``;
    ``"stated"`` uses ``e^{-t/2} sqrt(2/(pi t))``.
    """
    if x <= 0 or t <= 0:
        raise ValueError("need x > 0 and t > 0")
    u = np.asarray(u_grid, float)
    c = _explicit_const(t, constant)
    with np.errstate(over="ignore", invalid="ignore"):
        val = c * np.exp(x + u - (x - u) ** 2 / (2 * t)) * -np.expm1(-2 * x * u / t)
    val = np.where(u >= 0, val, 0.0)
    return GridFunction(val, u), sign_drift_remainder_bound(x, t)


# -- Monte Carlo ---------------------------------------------------------------------------

@dataclass
class MCTrace:
    times: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    tv: np.ndarray
    n_paths: int
    seed: int
    dt: float
    bin_edges: np.ndarray = field(repr=False)

    def to_csv(self, path, digest=None):
        with open(path, "w", newline="") as fh:
            if digest:
                fh.write(f"# manifest {digest}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "mean", "variance", "tv", "n_bins"])
            for row in zip(self.times, self.mean, self.variance, self.tv):
                w.writerow([f"{v:.17g}" for v in row] + [MC_BINS])


def equal_mass_edges(mu, n_bins=MC_BINS):
    q = np.linspace(0.0, 1.0, n_bins + 1)[1:-1]
    return np.concatenate([[-math.inf], mu.quantile(q), [math.inf]])


def euler_maruyama(V, x0, times, n_paths=10_000, seed=0, dt=1e-3, interval=None, mu=None):
    """Simulate ``dX = dB - V'(X) dt``; ``interval`` adds reflecting walls.

    ``x0`` is a float or an array of starting points.  TV against ``mu``
    uses 128 equal-mass bins: ``sum |counts/n - 1/128|``.
    """
    if V.phi_prime is None:
        raise ConfigError("the potential needs phi_prime for the drift")
    rng = np.random.Generator(np.random.PCG64(seed))
    X = np.broadcast_to(np.asarray(x0, float), (n_paths,)).copy()
    if mu is None:
        mu = mu_of(V, interval + (2048,) if interval else None)
    edges = equal_mass_edges(mu)
    times = np.asarray(times, float)
    out_m, out_v, out_tv = [], [], []
    t = 0.0
    sq = math.sqrt
    for ts in times:
        while t < ts - 1e-12:
            step = min(dt, ts - t)
            X = X - np.asarray(V.phi_prime(X), float) * step + sq(step) * rng.standard_normal(n_paths)
            if interval is not None:
                a, b = interval
                w = b - a
                Y = np.mod(X - a, 2 * w)
                X = a + np.where(Y > w, 2 * w - Y, Y)
            t += step
        counts = np.histogram(X, bins=edges)[0]
        out_m.append(float(X.mean()))
        out_v.append(float(X.var()))
        out_tv.append(float(np.sum(np.abs(counts / n_paths - 1.0 / MC_BINS))))
    return MCTrace(times, np.array(out_m), np.array(out_v), np.array(out_tv), n_paths, seed, dt, edges)


# -- overlays -------------------------------------------------------------------------------

def overlay_bounds(trace, curves, osc_sqrt_h=None, t_min=0.0, rtol=1e-9):
    """Compare each bound curve with the measured entropy.

    Curves with ``params["prefactor_kind"] == "osc2"`` are multiplied by
    ``Osc^2(sqrt h_0)``; curves with a free constant (``params["free"]``) are
    fitted rather than judged.  Returns one row per curve.
    """
    osc = trace.osc_sqrt_h0 if osc_sqrt_h is None else osc_sqrt_h
    sel = trace.times >= t_min
    t = trace.times[sel]
    ent = trace.entropy[sel]
    rows = []
    for c in curves:
        inside = (t >= c.t_min) & (t <= c.t_max)
        tt, ee = t[inside], ent[inside]
        bound = np.asarray(c(tt), float)
        if c.params.get("prefactor_kind") == "osc2":
            bound = bound * osc**2
        row = {"name": c.name, "n_checked": int(tt.size)}
        if c.params.get("free"):
            pos = ee > 0
            fit = fit_free_constant(lambda x: np.asarray(c(x), float), tt[pos], ee[pos]) if pos.any() else {}
            row.update(status="fit", holds=None, first_violation=None, **fit)
        else:
            bad = ee > bound * (1 + rtol) + 1e-15
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(bound > 0, ee / bound, np.where(ee > 0, np.inf, 0.0))
            row.update(
                status="holds" if not bad.any() else "fails",
                holds=bool(not bad.any()),
                first_violation=float(tt[bad][0]) if bad.any() else None,
                worst_ratio=float(np.max(ratio)) if tt.size else math.nan,
            )
        if "A" in c.params:
            pos = (ee > 1e-14 * max(trace.ent0, 1e-300)) & (tt > 0)
            if pos.sum() >= 3:
                row["measured_log_slope"] = float(np.polyfit(tt[pos], np.log(ee[pos]), 1)[0])
                row["predicted_log_slope"] = -1.0 / c.params["A"]
        rows.append(row)
    return rows


def config_digest(cfg_dict):
    return hashlib.sha256(json.dumps(cfg_dict, sort_keys=True, default=str).encode()).hexdigest()[:16]
