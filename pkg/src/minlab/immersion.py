"""Sampled conformal minimal immersions X = (h, f) into M x R and their curvatures."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import stencils
from .base import HYPERBOLIC_DISK, BaseManifold, grad_log_sigma
from .errors import DegenerateMetric, PeriodDefect
from .wdata import GridDomain, HarmonicField, WeierstrassField, decompose, norms

DEGENERATE_LAMBDA_SQ = 1e-14


def integrate_height(wf: WeierstrassField, tol: Optional[float] = None, rotate: float = 0.0) -> np.ndarray:
    """f = Re of the integral of e^{i rotate} eta, zero at the grid center.

    Integrates along the central row, then along every column.  Raises
    PeriodDefect when the circulation of Re(eta) around some cell exceeds
    ``tol`` (default 1e-5 h).
    """
    grid = wf.grid
    h = grid.h
    if not np.all(np.isfinite(wf.root)):
        raise PeriodDefect("eta is undefined at some samples")
    eta = np.exp(1j * rotate) * wf.eta
    fu = eta.real
    fv = -eta.imag
    tol = 1e-5 * h if tol is None else tol
    defect = float(np.max(np.abs(stencils.cell_circulation(fu, fv, h))))
    if defect > tol:
        raise PeriodDefect(f"max cell circulation of Re(eta) is {defect:.3e} > {tol:.3e}")
    ic, jc = grid.center
    row = stencils.cumulative_integral(fu[ic], h, axis=0, anchor=jc)
    cols = stencils.cumulative_integral(fv, h, axis=0, anchor=ic)
    return row[None, :] + cols


@dataclass
class Immersion:
    manifold: BaseManifold
    grid: GridDomain
    hfield: HarmonicField
    f: np.ndarray
    wf: WeierstrassField
    f_u: np.ndarray
    f_v: np.ndarray
    lambda_sq: np.ndarray

    @classmethod
    def build(cls, manifold: BaseManifold, grid: GridDomain, h, f, hw=None, hwb=None,
              convention: str = "omega2", check_zeros: bool = True) -> "Immersion":
        """Sample an immersion; derivatives by finite differences unless supplied."""
        hf = HarmonicField(grid, h, manifold, hw, hwb)
        f = np.asarray(f, dtype=float)
        wf = decompose(hf, f, convention=convention, check_zeros=check_zeros)
        f_u = stencils.d_u(f, grid.h)
        f_v = stencils.d_v(f, grid.h)
        s2 = hf.sigma**2
        h_u = hf.hw + hf.hwb
        h_v = 1j * (hf.hw - hf.hwb)
        E = s2 * np.abs(h_u) ** 2 + f_u**2
        G = s2 * np.abs(h_v) ** 2 + f_v**2
        return cls(manifold, grid, hf, f, wf, f_u, f_v, 0.5 * (E + G))

    @property
    def h(self) -> np.ndarray:
        return self.hfield.h

    @property
    def h_u(self):
        return self.hfield.hw + self.hfield.hwb

    @property
    def h_v(self):
        return 1j * (self.hfield.hw - self.hfield.hwb)

    @property
    def N3(self) -> np.ndarray:
        return np.tanh(self.wf.omega2)

    def metric_from_data(self) -> np.ndarray:
        """4 cosh^2(omega) |phi| (NaN at vertical-normal samples)."""
        with np.errstate(invalid="ignore", over="ignore"):
            return 4.0 * np.cosh(self.wf.omega2) ** 2 * np.abs(self.wf.phi)

    def metric_from_moduli(self) -> np.ndarray:
        """sigma^2 (|h_w| + |h_wbar|)^2."""
        return self.hfield.sigma**2 * (np.abs(self.hfield.hw) + np.abs(self.hfield.hwb)) ** 2


def conformality_residual(imm: Immersion):
    """(|E - G|, |F|) of the first fundamental form in the product metric."""
    s2 = imm.hfield.sigma**2
    hu, hv = imm.h_u, imm.h_v
    E = s2 * np.abs(hu) ** 2 + imm.f_u**2
    G = s2 * np.abs(hv) ** 2 + imm.f_v**2
    F = s2 * np.real(hu * np.conj(hv)) + imm.f_u * imm.f_v
    return np.abs(E - G), np.abs(F)


def height_residual(imm: Immersion) -> np.ndarray:
    """|(f_w)^2 + phi|."""
    fw = 0.5 * (imm.f_u - 1j * imm.f_v)
    return np.abs(fw**2 + imm.wf.phi)


def gauss_map(imm: Immersion, frame: str = "orthonormal") -> np.ndarray:
    """Unit normal, shape (3, nV, nU).

    In the orthonormal frame (sigma^-1 d_x, sigma^-1 d_y, d_t) the normal is
    (2 Re g, 2 Im g, |g|^2 - 1) / (|g|^2 + 1); the coordinate components divide
    the horizontal part by sigma.  Vertical-normal samples get (0, 0, +-1).
    """
    g = imm.wf.g
    m2 = np.abs(g) ** 2
    with np.errstate(invalid="ignore", over="ignore"):
        n = np.stack([2 * g.real, 2 * g.imag, m2 - 1.0]) / (m2 + 1.0)
    vert = imm.wf.vertical
    for k in (0, 1):
        n[k] = np.where(vert != 0, 0.0, n[k])
    n[2] = np.where(vert != 0, vert.astype(float), n[2])
    if frame == "coordinate":
        s = imm.hfield.sigma
        n[0] = n[0] / s
        n[1] = n[1] / s
    elif frame != "orthonormal":
        raise ValueError("frame must be 'orthonormal' or 'coordinate'")
    return n


def normal_from_tangents(imm: Immersion) -> np.ndarray:
    """Unit normal from X_u x X_v in the orthonormal frame (independent of g)."""
    s = imm.hfield.sigma
    tu = np.stack([s * imm.h_u.real, s * imm.h_u.imag, imm.f_u])
    tv = np.stack([s * imm.h_v.real, s * imm.h_v.imag, imm.f_v])
    n = np.cross(tu, tv, axis=0)
    return n / np.linalg.norm(n, axis=0)


def intrinsic_curvature(imm: Immersion) -> np.ndarray:
    """K = -Lap(log lambda) / lambda^2 (five-point Laplacian)."""
    if np.any(imm.lambda_sq < DEGENERATE_LAMBDA_SQ):
        raise DegenerateMetric("lambda^2 vanishes on the grid")
    log_lambda = 0.5 * np.log(imm.lambda_sq)
    return -stencils.laplacian5(log_lambda, imm.grid.h) / imm.lambda_sq


def second_fundamental_form(imm: Immersion):
    """(b_uu, b_uv, b_vv) of X in sigma^2 |dz|^2 + dt^2.

    Covariant second derivatives of the coordinates (x, y, t), corrected by the
    Christoffel symbols of the conformal base metric, projected on the normal.
    """
    if np.any(imm.lambda_sq < DEGENERATE_LAMBDA_SQ):
        raise DegenerateMetric("lambda^2 vanishes on the grid")
    hs = imm.grid.h
    M = imm.manifold
    x, y, t = imm.h.real, imm.h.imag, imm.f
    L = grad_log_sigma(M, imm.h)
    lx, ly = L.real, L.imag
    xu, yu = imm.h_u.real, imm.h_u.imag
    xv, yv = imm.h_v.real, imm.h_v.imag
    second = {
        "uu": (stencils.d_uu(x, hs), stencils.d_uu(y, hs), stencils.d_uu(t, hs), (xu, yu), (xu, yu)),
        "vv": (stencils.d_vv(x, hs), stencils.d_vv(y, hs), stencils.d_vv(t, hs), (xv, yv), (xv, yv)),
        "uv": (stencils.d_v(stencils.d_u(x, hs), hs), stencils.d_v(stencils.d_u(y, hs), hs),
               stencils.d_v(stencils.d_u(t, hs), hs), (xu, yu), (xv, yv)),
    }
    s = imm.hfield.sigma
    n = normal_from_tangents(imm)
    nx, ny, nt = n[0] / s, n[1] / s, n[2]
    out = {}
    for key, (dxx, dyy, dtt, (ax, ay), (bx, by)) in second.items():
        # Gamma^x_xx = lx, Gamma^x_yy = -lx, Gamma^x_xy = ly; Gamma^y_yy = ly, Gamma^y_xx = -ly, Gamma^y_xy = lx
        cx = lx * (ax * bx - ay * by) + ly * (ax * by + ay * bx)
        cy = ly * (ay * by - ax * bx) + lx * (ax * by + ay * bx)
        out[key] = s**2 * ((dxx + cx) * nx + (dyy + cy) * ny) + dtt * nt
    return out["uu"], out["uv"], out["vv"]


@dataclass
class CurvatureBundle:
    K: np.ndarray
    Kext: np.ndarray
    gauss_residual: np.ndarray
    mean_curvature: np.ndarray


def gauss_equation_residual(imm: Immersion) -> CurvatureBundle:
    """|K - K_ext - K_M N_3^2| with K_ext from the second fundamental form."""
    K = intrinsic_curvature(imm)
    buu, buv, bvv = second_fundamental_form(imm)
    lam2 = imm.lambda_sq
    Kext = (buu * bvv - buv**2) / lam2**2
    n3 = normal_from_tangents(imm)[2]
    res = np.abs(K - Kext - imm.manifold.curvature * n3**2)
    H = 0.5 * (buu + bvv) / lam2
    return CurvatureBundle(K, Kext, res, H)


@dataclass
class VerticalPointReport:
    flagged: np.ndarray
    violations: np.ndarray

    @property
    def passed(self) -> bool:
        return not self.violations.any()


def vertical_point_check(imm: Immersion, K: Optional[np.ndarray] = None, tol: float = 1e-3,
                         tol_n3: float = 1e-3) -> VerticalPointReport:
    """Where |K| <= tol in H^2 x R the normal must be horizontal (|N_3| <= tol_n3)."""
    if imm.manifold is not HYPERBOLIC_DISK:
        raise ValueError("vertical_point_check applies to H^2 x R")
    if K is None:
        K = intrinsic_curvature(imm)
    n3 = normal_from_tangents(imm)[2]
    flagged = np.isfinite(K) & (np.abs(K) <= tol)
    violations = flagged & (np.abs(n3) > tol_n3)
    return VerticalPointReport(flagged, violations)


def metric_agreement(imm: Immersion) -> float:
    """Max relative spread of lambda^2 computed from (h, f), from moduli and from (omega, phi)."""
    a = imm.lambda_sq
    b = imm.metric_from_moduli()
    c = imm.metric_from_data()
    reg = imm.wf.regular
    spread = np.maximum(np.abs(a - b), np.abs(a - c)) / a
    return norms(np.where(reg, spread, np.nan), margin=0)[0]
