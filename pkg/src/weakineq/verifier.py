"""Empirical checks of the defining inequalities on families of test functions.

All functionals are evaluated on the same quadrature (Gauss-Legendre nodes
inside each cell, weights renormalized to a probability) so that the
checks are exactly self-consistent.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateFamily
from .measure import GridFunction
from .rates import RateFunction

FAMILY_KINDS = ("capacity_ramps", "tilts", "indicators_smoothed", "random_piecewise")


# -- functionals on the shared quadrature -------------------------------------------

def _values(mu, f):
    v = f.values if isinstance(f, GridFunction) else np.asarray(f, float)
    if v.shape != mu.grid.shape:
        raise ValueError("test function must live on the measure's grid")
    return v


def _weights(mu):
    w = mu._gl[1]
    return w / w.sum()


def _q(mu, f):
    return mu.at_quadrature(_values(mu, f))


def ent_q(w, g):
    """``Ent(g)`` for quadrature values ``g >= 0`` and probability weights ``w``."""
    mass = float(np.sum(w * g))
    if mass <= 0:
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(g > 0, g * np.log(g / mass), 0.0)
    return max(float(np.sum(w * t)), 0.0)


def var_q(w, f):
    m = float(np.sum(w * f))
    return max(float(np.sum(w * (f - m) ** 2)), 0.0)


def dirichlet_norm(mu, f):
    """``int |f'|^2 dmu`` with the same normalization as the quadrature weights."""
    v = _values(mu, f)
    slope = np.diff(v) / np.diff(mu.grid)
    return float(np.sum(slope**2 * mu.cell_mass)) / float(mu._gl[1].sum())


def functionals(mu, f):
    """``(Ent(f^2), Dirichlet(f), Osc^2(f), Var(f))``."""
    v = _values(mu, f)
    fq = mu.at_quadrature(v)
    w = _weights(mu)
    return ent_q(w, fq * fq), dirichlet_norm(mu, v), float(v.max() - v.min()) ** 2, var_q(w, fq)


# -- families -------------------------------------------------------------------------

@dataclass
class FunctionFamily:
    kind: str
    members: list = field(repr=False)
    ids: list
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.members)

    def __add__(self, other):
        return FunctionFamily(f"{self.kind}+{other.kind}", self.members + other.members,
                              self.ids + other.ids, {"parts": [self.params, other.params]})


def _ramp(x, a, b):
    if b < a:
        a, b, x = -a, -b, -x
    return np.clip((x - a) / (b - a), 0.0, 1.0)


def capacity_ramps(mu, k_max=20, gaps=(1, 2, 4)):
    """Ramps from 0 to 1 between the tail-mass levels ``2^-k`` and ``2^-(k+j)`` on each side."""
    members, ids = [], []
    x = mu.grid
    lo_mass = max(mu.tail_mass(x[-1], "right"), mu.tail_mass(x[0], "left"), 1e-300)
    for side in ("right", "left"):
        q_of = mu.quantile_right if side == "right" else mu.quantile_left
        for k in range(1, k_max + 1):
            for j in gaps:
                qa, qb = 2.0**-k, 2.0 ** -(k + j)
                if qb <= 10 * lo_mass:
                    continue
                a, b = float(q_of(np.array([qa]))[0]), float(q_of(np.array([qb]))[0])
                if a == b:
                    continue
                members.append(_ramp(x, a, b))
                ids.append(f"ramp:{side}:k={k}:j={j}")
    return FunctionFamily("capacity_ramps", members, ids, {"k_max": k_max, "gaps": list(gaps)})


def tilts(mu, thetas=(0.25, 0.5, 0.75, 0.9), caps=(2, 4, 8, 16, 64)):
    """``f = min(e^{theta phi/2}, cap)`` with ``phi`` the measure's potential (shifted to min 0)."""
    phi = mu.phi_nodes - float(np.min(mu.phi_nodes))
    members, ids = [], []
    for th in thetas:
        f = np.exp(np.minimum(th * phi / 2, 700.0))
        for c in caps:
            members.append(np.minimum(f, c))
            ids.append(f"tilt:theta={th:g}:cap={c:g}")
    return FunctionFamily("tilts", members, ids, {"thetas": list(thetas), "caps": list(caps)})


def indicators_smoothed(mu, levels=(0.5, 0.25, 0.1, 0.01, 1e-3, 1e-4), widths=(0.1, 0.5, 2.0)):
    """``(1 + tanh((x - c)/w))/2`` with ``c`` at right-tail quantiles (and mirrored)."""
    members, ids = [], []
    x = mu.grid
    for q in levels:
        for side in ("right", "left"):
            c = float((mu.quantile_right if side == "right" else mu.quantile_left)(np.array([q]))[0])
            sgn = 1.0 if side == "right" else -1.0
            for w in widths:
                members.append(0.5 * (1.0 + np.tanh(sgn * (x - c) / w)))
                ids.append(f"step:{side}:q={q:g}:w={w:g}")
    return FunctionFamily("indicators_smoothed", members, ids, {"levels": list(levels), "widths": list(widths)})


def random_piecewise(mu, n=50, seed=0, knots=12, positive=True):
    """Random piecewise-linear functions on knots placed at random quantiles."""
    rng = np.random.Generator(np.random.PCG64(seed))
    members, ids = [], []
    for i in range(n):
        q = np.sort(rng.uniform(1e-4, 1 - 1e-4, knots))
        xk = mu.quantile(q)
        xk, keep = np.unique(xk, return_index=True)
        yk = rng.uniform(0.0, 1.0, keep.size) if positive else rng.normal(size=keep.size)
        members.append(np.interp(mu.grid, xk, yk))
        ids.append(f"random:{seed}:{i}")
    return FunctionFamily("random_piecewise", members, ids, {"seed": seed, "n": n, "knots": knots})


def make_family(mu, kind, **kw):
    builders = {"capacity_ramps": capacity_ramps, "tilts": tilts,
                "indicators_smoothed": indicators_smoothed, "random_piecewise": random_piecewise}
    if kind not in builders:
        raise ValueError(f"kind must be one of {FAMILY_KINDS}")
    return builders[kind](mu, **kw)


# -- checks -----------------------------------------------------------------------------

def check_wlsi(mu, f, beta, s_grid):
    """``Ent(f^2) - beta(s) Dirichlet(f) - s Osc^2(f)`` for every ``s`` in ``s_grid``."""
    s = np.asarray(s_grid, float)
    ent, dir_, osc2, _ = functionals(mu, f)
    b = np.asarray(beta(s), float) if callable(beta) else np.full(s.shape, float(beta))
    with np.errstate(invalid="ignore"):
        rhs = np.where(dir_ > 0, b * dir_, 0.0) + s * osc2
    margin = rhs - ent
    scale = max(1.0, ent)
    return {"s": s, "lhs": ent, "rhs": rhs, "margin": margin,
            "min_margin": float(np.min(margin)), "holds": bool(np.min(margin) >= -1e-10 * scale)}


@dataclass
class EmpiricalRate:
    rate: RateFunction
    s: np.ndarray
    beta: np.ndarray
    worst_id: list

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "beta_emp", "worst_f_id"])
            for si, bi, fi in zip(self.s, self.beta, self.worst_id):
                w.writerow([f"{si:.17g}", f"{bi:.17g}", fi])


def empirical_beta(mu, family, s_grid, return_details=False):
    """``sup_f (Ent(f^2) - s Osc^2(f))_+ / Dirichlet(f)`` over the family.

    Constant members contribute 0.  :class:`DegenerateFamily` is raised when
    every non-constant member has Dirichlet energy below ``1e-14``.
    """
    s = np.sort(np.asarray(s_grid, float))
    if len(family) == 0:
        raise DegenerateFamily("empty family")
    best = np.zeros(s.shape)
    worst = ["" for _ in s]
    usable = 0
    nonconstant = 0
    for f, fid in zip(family.members, family.ids):
        ent, dir_, osc2, _ = functionals(mu, f)
        if osc2 == 0:
            continue
        nonconstant += 1
        if dir_ < 1e-14:
            continue
        usable += 1
        val = np.maximum(ent - s * osc2, 0.0) / dir_
        up = val > best
        best = np.where(up, val, best)
        for i in np.nonzero(up)[0]:
            worst[i] = fid
    if nonconstant and not usable:
        raise DegenerateFamily("every non-constant member has Dirichlet energy < 1e-14")
    ls = np.log(s)

    def log_fn(x, ls=ls, b=best.copy()):
        return np.interp(x, ls, b, left=b[0], right=b[-1])

    rate = RateFunction.from_log(log_fn, float(s[-1]), f"empirical({family.kind})",
                                 {"n_members": len(family), "s_lo": float(s[0])})
    out = EmpiricalRate(rate, s, best, worst)
    return out if return_details else rate


def gbi_quotient(mu, f, T, p):
    """``(int f^2 - (int |f|^p)^{2/p}) / T(2 - p)``."""
    fq = _q(mu, f)
    w = _weights(mu)
    a2 = float(np.sum(w * fq * fq))
    p = np.atleast_1d(np.asarray(p, float))
    ap = np.array([float(np.sum(w * np.abs(fq) ** pi)) ** (2.0 / pi) for pi in p])
    return (a2 - ap) / np.asarray(T(2.0 - p), float)


def check_gbi(mu, f, T, p_grid=None):
    """Margin ``Dirichlet(f) - sup_p quotient`` on a 64-point p-grid refined once near the maximiser."""
    p = np.linspace(1.0, 2.0, 66)[1:-1] if p_grid is None else np.asarray(p_grid, float)
    q = gbi_quotient(mu, f, T, p)
    i = int(np.argmax(q))
    lo, hi = p[max(i - 1, 0)], p[min(i + 1, p.size - 1)]
    pr = np.linspace(lo, hi, 33)
    pr = pr[(pr > 1) & (pr < 2)]
    qr = gbi_quotient(mu, f, T, pr) if pr.size else np.array([-math.inf])
    sup = float(max(np.max(q), np.max(qr)))
    p_star = float(pr[int(np.argmax(qr))] if pr.size and np.max(qr) >= np.max(q) else p[i])
    dir_ = dirichlet_norm(mu, f)
    margin = dir_ - sup
    return {"sup": sup, "p_star": p_star, "dirichlet": dir_, "margin": margin,
            "holds": bool(margin >= -1e-10 * max(1.0, abs(sup)))}


def probe_entropy_osc_ratio(mu, family):
    """``sup Ent(f^2)/Osc^2(f)`` over the non-constant members; ``(ratio, id)``."""
    best, best_id = -math.inf, None
    for f, fid in zip(family.members, family.ids):
        ent, _, osc2, _ = functionals(mu, f)
        if osc2 == 0:
            continue
        r = ent / osc2
        if r > best:
            best, best_id = r, fid
    if best_id is None:
        raise DegenerateFamily("every member is constant")
    return best, best_id
