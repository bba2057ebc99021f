"""Sampled harmonic maps, their Hopf differential and the data (phi, omega, psi, beta).

For a harmonic map h into (M, sigma^2 |dz|^2) with Hopf coefficient
phi = sigma^2 h_w conj(h_wbar) and a continuous root r of phi,

    h_w    = r e^{omega + i psi} / sigma
    h_wbar = conj(r) e^{-omega + i psi} / sigma

so omega = 1/2 log(|h_w| / |h_wbar|), N_3 = tanh(omega) and g = -i e^{omega + i psi}.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from . import stencils
from .base import BaseManifold, check_chart, grad_log_sigma, sigma
from .errors import GridTooSmall, OddOrderZero, ZeroDilatation, ZeroModulus

# |h_wbar| below this fraction of |h_w| (or vice versa) is a vertical-normal sample.
VERTICAL_RATIO = 1e-13
SPACING_TOL = 1e-12


@dataclass(frozen=True)
class GridDomain:
    u_min: float
    u_max: float
    v_min: float
    v_max: float
    n_u: int
    n_v: int

    def __post_init__(self):
        if self.n_u < stencils.MIN_POINTS or self.n_v < stencils.MIN_POINTS:
            raise GridTooSmall(f"grid must be at least {stencils.MIN_POINTS}x{stencils.MIN_POINTS}")
        hu = (self.u_max - self.u_min) / (self.n_u - 1)
        hv = (self.v_max - self.v_min) / (self.n_v - 1)
        if abs(hu - hv) > SPACING_TOL:
            raise ValueError(f"cells must be square (du={hu!r}, dv={hv!r})")

    @classmethod
    def square(cls, n: int, lo: float = -0.6, hi: float = 0.6) -> "GridDomain":
        return cls(lo, hi, lo, hi, n, n)

    @classmethod
    def from_bounds(cls, bounds, n: int) -> "GridDomain":
        """Grid with ``n`` samples along u and the v count implied by square cells."""
        u0, u1, v0, v1 = map(float, bounds)
        h = (u1 - u0) / (n - 1)
        n_v = int(round((v1 - v0) / h)) + 1
        return cls(u0, u1, v0, v0 + (n_v - 1) * h, n, n_v)

    @property
    def h(self) -> float:
        return (self.u_max - self.u_min) / (self.n_u - 1)

    @property
    def shape(self):
        return (self.n_v, self.n_u)

    @property
    def u(self) -> np.ndarray:
        return np.linspace(self.u_min, self.u_max, self.n_u)

    @property
    def v(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.n_v)

    @property
    def w(self) -> np.ndarray:
        uu, vv = np.meshgrid(self.u, self.v)
        return uu + 1j * vv

    @property
    def center(self):
        return (self.n_v // 2, self.n_u // 2)

    def as_dict(self) -> dict:
        return {"uMin": self.u_min, "uMax": self.u_max, "vMin": self.v_min,
                "vMax": self.v_max, "nU": self.n_u, "nV": self.n_v}

    @classmethod
    def from_dict(cls, d: dict) -> "GridDomain":
        return cls(d["uMin"], d["uMax"], d["vMin"], d["vMax"], int(d["nU"]), int(d["nV"]))


def wirtinger(f, grid: GridDomain):
    """Return (f_w, f_wbar) with f_w = (f_u - i f_v)/2 and f_wbar = (f_u + i f_v)/2."""
    fu = stencils.d_u(f, grid.h)
    fv = stencils.d_v(f, grid.h)
    return 0.5 * (fu - 1j * fv), 0.5 * (fu + 1j * fv)


def interior(field, margin: int = 2):
    if margin == 0:
        return np.asarray(field)
    return np.asarray(field)[margin:-margin, margin:-margin]


def norms(field, margin: int = 2, mask=None):
    """(L-infinity, root-mean-square) over finite samples away from the boundary."""
    a = np.abs(np.asarray(field, dtype=complex if np.iscomplexobj(field) else float))
    if mask is not None:
        a = np.where(mask, a, np.nan)
    a = interior(a, margin)
    a = a[np.isfinite(a)]
    if a.size == 0:
        return 0.0, 0.0
    return float(a.max()), float(np.sqrt(np.mean(a**2)))


@dataclass
class HarmonicField:
    """Samples of h: Omega -> M with derivatives (finite differences unless supplied)."""

    grid: GridDomain
    h: np.ndarray
    manifold: BaseManifold
    hw: Optional[np.ndarray] = None
    hwb: Optional[np.ndarray] = None

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=complex)
        if self.h.shape != self.grid.shape:
            raise ValueError(f"h has shape {self.h.shape}, grid expects {self.grid.shape}")
        check_chart(self.manifold, self.h)
        if self.hw is None or self.hwb is None:
            self.hw, self.hwb = wirtinger(self.h, self.grid)

    @property
    def sigma(self):
        return sigma(self.manifold, self.h)


def hopf(hf: HarmonicField) -> np.ndarray:
    """phi = (sigma o h)^2 h_w conj(h_wbar)."""
    return hf.sigma**2 * hf.hw * np.conj(hf.hwb)


def harmonic_residual(hf: HarmonicField) -> np.ndarray:
    """|h_{w wbar} + 2 (log sigma)_z(h) h_w h_wbar| per sample."""
    g = hf.grid.h
    h_wwb = 0.25 * (stencils.d_uu(hf.h, g) + stencils.d_vv(hf.h, g))
    log_sigma_z = 0.5 * np.conj(grad_log_sigma(hf.manifold, hf.h))
    return np.abs(h_wwb + 2.0 * log_sigma_z * hf.hw * hf.hwb)


# ---------------------------------------------------------------------------
# branch tracking


def _line_sign_flips(p, axis):
    """Cumulative sign flips that make a complex root continuous along ``axis``."""
    p = np.moveaxis(p, axis, 0)
    jump = np.real(p[1:] * np.conj(p[:-1])) < 0
    parity = np.concatenate([np.zeros((1,) + p.shape[1:], dtype=int), np.cumsum(jump, axis=0)])
    return np.moveaxis(parity % 2, 0, axis)


def continuous_sqrt(phi: np.ndarray, center) -> np.ndarray:
    """Root of phi continued from the principal value at ``center``.

    Order: along the central row, then out along every column from that row.
    """
    ic, jc = center
    p = np.sqrt(phi)
    row = p[ic].copy()
    flips = (_line_sign_flips(row, 0) - _line_sign_flips(row, 0)[jc]) % 2
    row = np.where(flips, -row, row)
    out = np.empty_like(p)
    for sl in (slice(ic, None), slice(ic, None, -1)):
        block = p[sl].copy()
        block[0] = row
        out[sl] = np.where(_line_sign_flips(block, 0), -block, block)
    return out


def unwrap_from_center(angle: np.ndarray, center) -> np.ndarray:
    """Unwrap an angle field along the central row, then along columns."""
    ic, jc = center
    a = np.array(angle, dtype=float)
    row = np.unwrap(a[ic])
    row += 2 * np.pi * np.round((a[ic, jc] - row[jc]) / (2 * np.pi))
    out = np.empty_like(a)
    up = a[ic:].copy()
    up[0] = row
    out[ic:] = np.unwrap(up, axis=0)
    down = a[ic::-1].copy()
    down[0] = row
    out[ic::-1] = np.unwrap(down, axis=0)
    return out


def cell_winding(z: np.ndarray) -> np.ndarray:
    """Winding number of a nonvanishing complex field around every grid cell."""
    corners = [z[:-1, :-1], z[:-1, 1:], z[1:, 1:], z[1:, :-1]]
    total = np.zeros(corners[0].shape)
    for a, b in zip(corners, corners[1:] + corners[:1]):
        total += np.angle(b * np.conj(a))
    return np.rint(total / (2 * np.pi)).astype(int)


def zero_clusters(z: np.ndarray):
    """Summed winding of ``z`` around each cluster of cells that wind.

    A single cell can misjudge a zero of order two or more: the edge nearest
    the zero may sweep more than pi in argument.  Cells with nonzero winding
    are grouped and every group is grown by one cell before its windings are
    summed.  Interior edges cancel, so the sum is the winding along a loop at
    least one cell away from every zero inside.  Returns ``[(first_cell, total), ...]``.
    """
    wind = cell_winding(z)
    mask = wind != 0
    if not mask.any():
        return []
    box = np.ones((3, 3), dtype=bool)
    labels, n = ndimage.label(ndimage.binary_dilation(mask, structure=box), structure=box)
    totals = ndimage.sum_labels(wind, labels, index=np.arange(1, n + 1))
    first = [tuple(np.argwhere(mask & (labels == k))[0]) for k in range(1, n + 1)]
    return [(c, int(round(t))) for c, t in zip(first, totals)]


@dataclass
class WeierstrassField:
    """Sampled (phi, omega, psi, beta) together with the root used for eta.

    ``root`` already carries the eta sign: eta = -2i root dw and
    h_w = root e^{omega2 + i psi} / sigma.  ``eta_sign`` records whether the
    root was flipped relative to the principal branch at the grid center.
    ``vertical`` is +1 / -1 where omega = +/-inf (normal vertical), else 0.
    """

    grid: GridDomain
    phi: np.ndarray
    omega: np.ndarray
    psi: np.ndarray
    beta: np.ndarray
    root: np.ndarray
    eta_sign: int = 1
    convention: str = "omega2"
    vertical: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.vertical is None:
            self.vertical = np.zeros(self.grid.shape, dtype=np.int8)

    @property
    def omega2(self) -> np.ndarray:
        """omega in the convention omega = 1/2 log(|h_w|/|h_wbar|)."""
        return self.omega if self.convention == "omega2" else -self.omega

    @property
    def g(self) -> np.ndarray:
        return -1j * np.exp(self.omega2 + 1j * self.psi)

    @property
    def eta(self) -> np.ndarray:
        """Coefficient of the holomorphic one-form eta = -2i root dw."""
        return -2j * self.root

    @property
    def dilatation(self) -> np.ndarray:
        """a = conj(h_wbar) / h_w = e^{-2(omega + i psi)}."""
        return np.exp(-2.0 * (self.omega2 + 1j * self.psi))

    @property
    def regular(self) -> np.ndarray:
        return self.vertical == 0

    def reassemble(self, manifold: BaseManifold, h: np.ndarray):
        """(h_w, h_wbar) rebuilt from (root, omega, psi)."""
        s = sigma(manifold, h)
        hw = self.root * np.exp(self.omega2 + 1j * self.psi) / s
        hwb = np.conj(self.root) * np.exp(-self.omega2 + 1j * self.psi) / s
        return hw, hwb


def decompose(hf: HarmonicField, f: Optional[np.ndarray] = None, convention: str = "omega2",
              check_zeros: bool = True) -> WeierstrassField:
    """Split a harmonic map into (phi, omega, psi, beta).

    When the height ``f`` is given, the root of phi is chosen so that
    f_w = -i root (i.e. f = Re of the integral of eta).
    """
    if convention not in ("omega1", "omega2"):
        raise ValueError("convention must be 'omega1' or 'omega2'")
    grid = hf.grid
    center = grid.center
    a_w, a_wb = np.abs(hf.hw), np.abs(hf.hwb)
    scale = max(float(a_w.max()), float(a_wb.max()))
    if scale == 0.0:
        raise ZeroDilatation("h_w and h_wbar vanish identically")
    dead = (a_w <= 1e-14 * scale) & (a_wb <= 1e-14 * scale)
    if dead.mean() > 0.5:
        raise ZeroDilatation("h_w and h_wbar both vanish on most of the grid")

    phi = hopf(hf)
    vertical = np.zeros(grid.shape, dtype=np.int8)
    vertical[a_wb < VERTICAL_RATIO * a_w] = 1
    vertical[a_w < VERTICAL_RATIO * a_wb] = -1

    regular = vertical == 0
    if check_zeros and regular.all():
        for (i, j), total in zero_clusters(phi):
            if total % 2:
                raise OddOrderZero(f"phi has a zero of odd order near cell ({i}, {j})")

    with np.errstate(divide="ignore", invalid="ignore"):
        omega2 = 0.5 * np.log(a_w / a_wb)
    omega2 = np.where(vertical == 1, np.inf, np.where(vertical == -1, -np.inf, omega2))

    eta_sign = 1
    if regular.all():
        root = continuous_sqrt(phi, center)
        if f is not None:
            fw, _ = wirtinger(f, grid)
            ic, jc = center
            if np.real(np.conj(-1j * root[ic, jc]) * fw[ic, jc]) < 0:
                root = -root
                eta_sign = -1
        s = hf.sigma
        psi = unwrap_from_center(np.angle(s * hf.hw / root), center)
        beta = unwrap_from_center(np.angle(root), center)
    else:
        root = np.sqrt(phi)
        with np.errstate(divide="ignore", invalid="ignore"):
            psi = np.where(regular, np.angle(hf.sigma * hf.hw / root), np.nan)
        beta = np.where(regular, np.angle(root), np.nan)

    omega = omega2 if convention == "omega2" else -omega2
    return WeierstrassField(grid, phi, omega, psi, beta, root, eta_sign, convention, vertical)


def sinh_gordon_residual(wf: WeierstrassField, M: BaseManifold) -> np.ndarray:
    """|Lap omega + 2 K_M sinh(2 omega) |phi|| (NaN on the boundary and at vertical samples)."""
    om = np.where(wf.regular, wf.omega, np.nan)
    lap = stencils.laplacian5(om, wf.grid.h)
    return np.abs(lap + 2.0 * M.curvature * np.sinh(2.0 * om) * np.abs(wf.phi))


def bochner_residual(hf: HarmonicField) -> np.ndarray:
    """|Lap log(|h_w|/|h_wbar|) + 2 K_M J(h)| with J = sigma^2 (|h_w|^2 - |h_wbar|^2)."""
    a_w, a_wb = np.abs(hf.hw), np.abs(hf.hwb)
    if np.any(a_w == 0) or np.any(a_wb == 0):
        raise ZeroModulus("h_w or h_wbar vanishes on the grid")
    lap = stencils.laplacian5(np.log(a_w / a_wb), hf.grid.h)
    jac = hf.sigma**2 * (a_w**2 - a_wb**2)
    return np.abs(lap + 2.0 * hf.manifold.curvature * jac)


def cauchy_deviation_rhs(wf: WeierstrassField, h: np.ndarray, M: BaseManifold, theta: float = 0.0):
    """Predicted (omega + i psi)_wbar from the position of h in M."""
    L = grad_log_sigma(M, h) / sigma(M, h)
    e = np.exp(1j * wf.psi)
    p = np.real(L * np.conj(e))
    q = np.real(L * np.conj(1j * e))
    om = wf.omega2
    with np.errstate(invalid="ignore"):
        return np.abs(wf.phi) ** 0.5 * np.exp(-1j * (wf.beta + theta)) * (np.sinh(om) * p + 1j * np.cosh(om) * q)


def cauchy_deviation_residual(wf: WeierstrassField, hf: HarmonicField, M: BaseManifold) -> np.ndarray:
    """|(omega + i psi)_wbar - RHS| with the right side built from grad log sigma."""
    lhs_w, lhs_wb = wirtinger(wf.omega2 + 1j * wf.psi, wf.grid)
    out = np.abs(lhs_wb - cauchy_deviation_rhs(wf, hf.h, M))
    return np.where(wf.regular, out, np.nan)


def g_squared_residual(wf: WeierstrassField, hf: HarmonicField) -> np.ndarray:
    """|g^2 + h_w / conj(h_wbar)|, relative to |g|^2."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        g2 = wf.g**2
        out = np.abs(g2 + hf.hw / np.conj(hf.hwb)) / np.abs(g2)
    return np.where(wf.regular, out, np.nan)
