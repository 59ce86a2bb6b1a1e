"""Composite adaptive Gauss-Kronrod quadrature on a fixed grid.

Every integral in the package goes through :func:`integrate_cells` (or the
fixed Gauss-Legendre rule from :func:`cell_nodes` for integrands that are
polynomial-times-density on each cell), so normalizers cancel in ratios.
"""

import numpy as np

# 7-point Gauss / 15-point Kronrod abscissae and weights on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # 15 nodes, ascending
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod abscissae (1, 3, 5, 7 from the end).
_GW[[1, 3, 5]] = _WG[:3]
_GW[[9, 11, 13]] = _WG[:3][::-1]
_GW[7] = _WG[3]


def _gk_eval(fn, a, b, param=None):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    y = fn(x) if param is None else fn(x, param[:, None])
    kron = half * (y @ _KW)
    gauss = half * (y @ _GW)
    return kron, np.abs(kron - gauss)


def integrate_cells(fn, edges, rtol=1e-13, atol=0.0, max_depth=30):
    """Integrate ``fn`` over each cell ``[edges[i], edges[i+1]]``.

    ``fn`` must be vectorized over 2-D arrays.  Cells whose Gauss/Kronrod
    difference exceeds ``max(atol, rtol*|K|)`` are bisected until they pass
    or ``max_depth`` is reached.

    Returns
    -------
    values : ndarray, shape (n_cells,)
    errors : ndarray, shape (n_cells,)
        Accumulated Gauss/Kronrod error estimates.
    """
    edges = np.asarray(edges, dtype=float)
    return integrate_intervals(fn, edges[:-1], edges[1:], rtol, atol, max_depth)


def integrate_intervals(fn, a, b, rtol=1e-13, atol=0.0, max_depth=30, param=None):
    """Like :func:`integrate_cells` for independent intervals ``[a[i], b[i]]``.

    With ``param`` (one value per interval) the integrand is called as
    ``fn(x, p)`` where ``p`` has shape ``(rows, 1)``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    n = a.size
    values = np.zeros(n)
    errors = np.zeros(n)
    a, b = a.ravel(), b.ravel()
    owner = np.arange(n)
    if param is not None:
        param = np.broadcast_to(np.asarray(param, dtype=float), (n,)).ravel()
    for depth in range(max_depth + 1):
        if owner.size == 0:
            break
        kron, err = _gk_eval(fn, a, b, None if param is None else param[owner])
        bad = ~np.isfinite(kron)
        ok = (err <= np.maximum(atol, rtol * np.abs(kron))) | bad | (depth == max_depth)
        np.add.at(values, owner[ok], kron[ok])
        np.add.at(errors, owner[ok], np.where(bad[ok], np.inf, err[ok]))
        keep = ~ok
        if not keep.any():
            break
        a, b, owner = a[keep], b[keep], owner[keep]
        m = 0.5 * (a + b)
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        owner = np.concatenate([owner, owner])
    return values, errors


def integrate(fn, a, b, rtol=1e-13, atol=0.0):
    """Scalar convenience wrapper over :func:`integrate_cells`."""
    vals, _ = integrate_cells(fn, np.array([a, b], dtype=float), rtol=rtol, atol=atol)
    return float(vals[0])


def cell_nodes(edges, order=8):
    """Gauss-Legendre nodes and weights for every cell.

    Returns ``(x, w, theta)`` with shapes ``(n_cells, order)``; ``theta`` is the
    relative position of each node inside its cell, in ``(0, 1)``.
    """
    edges = np.asarray(edges, dtype=float)
    t, w = np.polynomial.legendre.leggauss(order)
    theta = 0.5 * (t + 1.0)
    h = np.diff(edges)
    x = edges[:-1, None] + h[:, None] * theta[None, :]
    weights = 0.5 * h[:, None] * w[None, :]
    return x, weights, np.broadcast_to(theta, x.shape)
