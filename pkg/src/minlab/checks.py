"""Named residual checks over an immersion and the grid-refinement study.

Every check maps an Immersion to a per-sample residual field.  Norms skip the
two outer sample rings, where the one-sided stencils rather than the geometry
set the error.  Residuals of equations that balance a Laplacian against a
reaction term are reported relative to 1 + max|reaction|, so that steep data
(large sinh(2 omega) |phi|) are judged on the same footing as mild data.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from . import stencils
from .errors import MinlabError
from .immersion import (Immersion, conformality_residual, gauss_equation_residual, height_residual,
                        vertical_point_check)
from .report import VerificationReport
from .wdata import (GridDomain, bochner_residual, cauchy_deviation_residual, g_squared_residual,
                    harmonic_residual, interior, norms, sinh_gordon_residual)
from .base import HYPERBOLIC_DISK

FIRST = "first-derivative"
SECOND = "curvature"
DEFAULT_TOL = {FIRST: 1e-6, SECOND: 1e-3}
MARGIN = 2


@dataclass(frozen=True)
class ResidualCheck:
    name: str
    quantity: str
    kind: str
    field: Callable[[Immersion], np.ndarray]

    @property
    def default_tolerance(self) -> float:
        return DEFAULT_TOL[self.kind]


def _scale(reaction: np.ndarray) -> float:
    r = interior(np.abs(reaction), MARGIN)
    r = r[np.isfinite(r)]
    return 1.0 + (float(r.max()) if r.size else 0.0)


def _sinh_gordon(imm: Immersion):
    wf = imm.wf
    with np.errstate(invalid="ignore"):
        reaction = 2.0 * imm.manifold.curvature * np.sinh(2.0 * wf.omega) * np.abs(wf.phi)
    return sinh_gordon_residual(wf, imm.manifold) / _scale(np.where(wf.regular, reaction, np.nan))


def _bochner(imm: Immersion):
    hf = imm.hfield
    jac = hf.sigma**2 * (np.abs(hf.hw) ** 2 - np.abs(hf.hwb) ** 2)
    if imm.wf.regular.all():
        res = bochner_residual(hf)
    else:
        # vertical-normal samples have a vanishing modulus; judge the identity
        # on the remaining samples through log(|h_w|/|h_wbar|) = 2 omega
        lr = np.where(imm.wf.regular, 2.0 * imm.wf.omega2, np.nan)
        res = np.abs(stencils.laplacian5(lr, imm.grid.h) + 2.0 * imm.manifold.curvature * jac)
    return res / _scale(2.0 * imm.manifold.curvature * jac)


def _conformality(imm: Immersion):
    e_g, f = conformality_residual(imm)
    return np.maximum(e_g, f) / imm.lambda_sq.max()


def _metric(imm: Immersion):
    a, b, c = imm.lambda_sq, imm.metric_from_moduli(), imm.metric_from_data()
    spread = np.maximum(np.abs(a - b), np.abs(a - c)) / a
    return np.where(imm.wf.regular, spread, np.nan)


def _gauss(imm: Immersion):
    return gauss_equation_residual(imm).gauss_residual


def _mean_curvature(imm: Immersion):
    return np.abs(gauss_equation_residual(imm).mean_curvature)


def _vertical(imm: Immersion):
    if imm.manifold is not HYPERBOLIC_DISK:
        return np.zeros(imm.grid.shape)
    rep = vertical_point_check(imm)
    return rep.violations.astype(float)


CHECKS: Dict[str, ResidualCheck] = {c.name: c for c in [
    ResidualCheck("harmonic", "|h_wwbar + 2 (log sigma)_z h_w h_wbar|", SECOND,
                  lambda imm: harmonic_residual(imm.hfield)),
    ResidualCheck("sinh-gordon", "|Lap omega + 2 K sinh(2 omega)|phi|| / (1 + max reaction)", SECOND,
                  _sinh_gordon),
    ResidualCheck("bochner", "|Lap log(|h_w|/|h_wbar|) + 2 K J| / (1 + max reaction)", SECOND, _bochner),
    ResidualCheck("cauchy", "|(omega + i psi)_wbar - RHS|", FIRST,
                  lambda imm: cauchy_deviation_residual(imm.wf, imm.hfield, imm.manifold)),
    ResidualCheck("conformality", "max(|E - G|, |F|) / max lambda^2", FIRST, _conformality),
    ResidualCheck("height", "|f_w^2 + phi|", FIRST, height_residual),
    ResidualCheck("g-squared", "|g^2 + h_w / conj(h_wbar)| / |g|^2", FIRST,
                  lambda imm: g_squared_residual(imm.wf, imm.hfield)),
    ResidualCheck("metric", "relative spread of the three lambda^2", FIRST, _metric),
    ResidualCheck("gauss", "|K - K_ext - K_M N3^2|", SECOND, _gauss),
    ResidualCheck("mean-curvature", "|H| from the second fundamental form", SECOND, _mean_curvature),
    ResidualCheck("vertical", "count of |K| ~ 0 samples with |N3| > tol", SECOND, _vertical),
]}

#: the residuals tracked by the grid-refinement study
CONVERGENCE_CHECKS = ("harmonic", "sinh-gordon", "bochner", "cauchy", "conformality", "gauss")


def residual_report(imm: Immersion, checks: Optional[Iterable[str]] = None,
                    tolerances: Optional[Dict[str, float]] = None, title: str = "residuals") -> VerificationReport:
    """Evaluate the named checks (all by default) into a report.

    A check whose evaluation raises a library error is recorded with norm NaN,
    which counts as a failure.
    """
    names = list(CHECKS) if checks is None else list(checks)
    if not names:
        raise ValueError("no checks requested")
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks {unknown}; available: {', '.join(CHECKS)}")
    tolerances = tolerances or {}
    rep = VerificationReport(title)
    for n in names:
        c = CHECKS[n]
        try:
            value = norms(c.field(imm), MARGIN)[0]
        except MinlabError:
            value = float("nan")
        tol = tolerances.get(n, c.default_tolerance)
        if n == "vertical":
            tol = tolerances.get(n, 0.0)
        rep.add(n, c.quantity, value, tol)
    return rep


# ---------------------------------------------------------------------------
# refinement study


@dataclass
class ConvergenceRow:
    name: str
    kind: str
    coarse: float
    fine: float
    ratio: float
    floor: float
    limit: float

    @property
    def at_floor(self) -> bool:
        """Both levels are below the rounding floor, so no rate is measurable."""
        return self.coarse <= self.floor and self.fine <= self.floor

    @property
    def converges(self) -> bool:
        return self.at_floor or self.ratio >= 3.5

    @property
    def passed(self) -> bool:
        return self.converges and self.fine <= self.limit


def rounding_floor(imm: Immersion, kind: str) -> float:
    """Size of residual that rounding alone produces: eps * (data scale) / h^k."""
    eps = np.finfo(float).eps
    hs = imm.grid.h
    scale = max(1.0, float(np.max(imm.lambda_sq)), float(np.max(np.abs(imm.wf.phi))))
    power = 1 if kind == FIRST else 2
    return 1000.0 * eps * scale / hs**power


def _coincident(a: np.ndarray, b: np.ndarray):
    """Coarse and fine residuals on the coarse samples, two rings in on the coarse grid."""
    fine = b[::2, ::2]
    sl = (slice(MARGIN, -MARGIN), slice(MARGIN, -MARGIN))
    return a[sl], fine[sl]


def convergence_study(build: Callable[[GridDomain], Immersion], bounds=(-0.6, 0.6, -0.6, 0.6),
                      n_coarse: int = 129, names: Iterable[str] = CONVERGENCE_CHECKS,
                      tolerances: Optional[Dict[str, float]] = None) -> List[ConvergenceRow]:
    """Residuals on n and 2n - 1 samples, compared at the samples the grids share.

    Comparing at common samples keeps the boundary exclusion band fixed in the
    parameter plane; a band fixed in samples would shrink with h and let
    boundary-adjacent error into the fine norm.
    """
    tolerances = tolerances or {}
    g0 = GridDomain.from_bounds(bounds, n_coarse)
    g1 = GridDomain.from_bounds(bounds, 2 * n_coarse - 1)
    i0, i1 = build(g0), build(g1)
    rows = []
    for n in names:
        c = CHECKS[n]
        a, b = _coincident(np.abs(c.field(i0)), np.abs(c.field(i1)))
        ca = float(np.nanmax(a)) if np.isfinite(a).any() else 0.0
        fb = float(np.nanmax(b)) if np.isfinite(b).any() else 0.0
        ratio = ca / fb if fb > 0 else float("inf")
        rows.append(ConvergenceRow(n, c.kind, ca, fb, ratio, rounding_floor(i1, c.kind),
                                   tolerances.get(n, c.default_tolerance)))
    return rows
