"""Finite-difference stencils on uniform grids.

Arrays are indexed ``[i_v, j_u]``: axis 0 runs along v, axis 1 along u.
"""
from __future__ import annotations

import numpy as np

from .errors import GridTooSmall

MIN_POINTS = 9

_D1_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D1_CENTRAL6 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_D1_EDGE = (
    np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
    np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0,
)
_D2_CENTRAL = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D2_EDGE = (
    np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0,
    np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0,
)


def _check(f: np.ndarray, axis: int) -> None:
    if f.shape[axis] < MIN_POINTS:
        raise GridTooSmall(f"need at least {MIN_POINTS} samples along axis {axis}, got {f.shape[axis]}")


def _apply(f, axis, central, edges, odd):
    f = np.moveaxis(np.asarray(f), axis, 0)
    out = np.empty_like(f)
    n = f.shape[0]
    out[2:-2] = sum(c * f[k : n - 4 + k] for k, c in enumerate(central))
    sign = -1.0 if odd else 1.0
    for i, w in enumerate(edges):
        out[i] = sum(c * f[k] for k, c in enumerate(w))
        out[n - 1 - i] = sign * sum(c * f[n - 1 - k] for k, c in enumerate(w))
    return np.moveaxis(out, 0, axis)


def diff1(f, h: float, axis: int):
    """First derivative: sixth-order central wherever three neighbours exist on each side,
    fourth-order central on the third layer, one-sided fourth order on the two edge layers."""
    _check(np.asarray(f), axis)
    out = _apply(f, axis, _D1_CENTRAL, _D1_EDGE, odd=True)
    g = np.moveaxis(np.asarray(f), axis, 0)
    o = np.moveaxis(out, axis, 0)
    n = g.shape[0]
    o[3:-3] = sum(c * g[k : n - 6 + k] for k, c in enumerate(_D1_CENTRAL6) if c != 0.0)
    return out / h


def diff2(f, h: float, axis: int):
    """Fourth-order second derivative."""
    _check(np.asarray(f), axis)
    return _apply(f, axis, _D2_CENTRAL, _D2_EDGE, odd=False) / h**2


def d_u(f, h):
    return diff1(f, h, axis=1)


def d_v(f, h):
    return diff1(f, h, axis=0)


def d_uu(f, h):
    return diff2(f, h, axis=1)


def d_vv(f, h):
    return diff2(f, h, axis=0)


def laplacian5(f, h):
    """Second-order five-point Laplacian; boundary samples are NaN."""
    f = np.asarray(f)
    _check(f, 0)
    _check(f, 1)
    out = np.full(f.shape, np.nan, dtype=np.result_type(f, float))
    out[1:-1, 1:-1] = (
        f[2:, 1:-1] + f[:-2, 1:-1] + f[1:-1, 2:] + f[1:-1, :-2] - 4.0 * f[1:-1, 1:-1]
    ) / h**2
    return out


def cumulative_integral(g, h: float, axis: int, anchor: int):
    """Fourth-order cumulative integral of nodal values, zero at index ``anchor``.

    Each cell integral uses the four-point rule
    h/24 (-g[i-1] + 13 g[i] + 13 g[i+1] - g[i+2]), shifted one-sided at the ends.
    """
    g = np.moveaxis(np.asarray(g), axis, 0)
    cells = _edge_integrals(g, axis=0)
    cum = np.concatenate([np.zeros((1,) + g.shape[1:], dtype=g.dtype), np.cumsum(cells, axis=0)]) * h
    cum = cum - cum[anchor]
    return np.moveaxis(cum, 0, axis)


def _edge_integrals(g, axis: int):
    """Integral over every grid edge along ``axis`` by the four-point rule (unit spacing)."""
    g = np.moveaxis(np.asarray(g), axis, 0)
    n = g.shape[0]
    cells = np.empty((n - 1,) + g.shape[1:], dtype=g.dtype)
    cells[1 : n - 2] = (-g[0 : n - 3] + 13 * g[1 : n - 2] + 13 * g[2 : n - 1] - g[3:n]) / 24.0
    cells[0] = (9 * g[0] + 19 * g[1] - 5 * g[2] + g[3]) / 24.0
    cells[n - 2] = (9 * g[n - 1] + 19 * g[n - 2] - 5 * g[n - 3] + g[n - 4]) / 24.0
    return np.moveaxis(cells, 0, axis)


def cell_circulation(a, b, h: float):
    """Circulation of the 1-form a du + b dv around every grid cell.

    Edge integrals use the fourth-order four-point rule, so an exact form
    leaves a defect of order h^6 per cell.
    """
    au = _edge_integrals(a, axis=1)  # shape (nV, nU-1)
    bv = _edge_integrals(b, axis=0)  # shape (nV-1, nU)
    return h * (au[:-1] + bv[:, 1:] - au[1:] - bv[:, :-1])


def lagrange_weights(x: float, npts: int = 6) -> np.ndarray:
    """Weights of the Lagrange interpolant through nodes 0..npts-1 evaluated at x."""
    nodes = np.arange(npts, dtype=float)
    w = np.ones(npts)
    for k in range(npts):
        others = np.delete(nodes, k)
        w[k] = np.prod((x - others) / (nodes[k] - others))
    return w
