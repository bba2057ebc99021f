"""The theta-associate family: rotate eta by e^{i theta} and rebuild the immersion.

The horizontal part h^theta and the phase psi^theta solve the first-order system

    h_u   = h_w + h_wbar,            h_v   = i (h_w - h_wbar),
    psi_u = 2 Im C - omega_v,        psi_v = omega_u - 2 Re C,

with h_w = e^{i theta} r e^{omega + i psi} / sigma(h),
h_wbar = e^{-i theta} conj(r) e^{-omega + i psi} / sigma(h) and
C = (L conj(h_w) - conj(L) h_wbar) / 2 where L = grad log sigma (h).  The system
is marched with RK4 from the grid center along the central row, then along
every column.  Integrability is witnessed by the cell circulation of both
one-forms (the loop defect).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np

from . import stencils
from .base import EUCLIDEAN, HYPERBOLIC_DISK, base_distance, fit_isometry, grad_log_sigma, sigma
from .errors import ChartExit, GridTooSmall, LoopDefectExceeded
from .immersion import Immersion, integrate_height
from .kernels import march_lines
from .report import VerificationReport
from .wdata import hopf, norms

_KIND = {EUCLIDEAN: 0, HYPERBOLIC_DISK: 1}


@dataclass(frozen=True)
class AssociateParams:
    theta: float
    steps: int = 8
    tol_loop: Optional[float] = None  # None means 1e-5 h

    def __post_init__(self):
        if not 0.0 <= self.theta < 2 * np.pi:
            raise ValueError("theta must lie in [0, 2 pi)")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")


@dataclass
class FamilyMember:
    theta: float
    imm: Immersion
    loop_defect: float
    hopf_rotation_error: float
    psi: np.ndarray
    loop_defect_full: float = 0.0

    @property
    def h(self):
        return self.imm.h

    @property
    def f(self):
        return self.imm.f


@lru_cache(maxsize=64)
def _march_weights(n: int, steps: int):
    """Lagrange weights for the RK4 stage positions k + m / (2 steps) of every edge."""
    if n < 6:
        raise GridTooSmall(f"a marched line needs at least 6 samples, got {n}")
    starts = np.clip(np.arange(n - 1) - 2, 0, n - 6).astype(np.int64)
    w = np.empty((n - 1, 2 * steps + 1, 6))
    for k in range(n - 1):
        for m in range(2 * steps + 1):
            w[k, m] = stencils.lagrange_weights(k + m / (2.0 * steps) - starts[k])
    w.setflags(write=False)
    starts.setflags(write=False)
    return w, starts


def _march(root, omega, aux, h0, psi0, step, theta, kind, axis, steps):
    n = root.shape[0]
    w, starts = _march_weights(n, steps)
    return march_lines(root, omega, aux, h0, psi0, w, starts, step, theta, kind, axis, steps)


def _nodal_derivatives(manifold, root, omega, psi, h, theta):
    s = sigma(manifold, h)
    e = np.exp(1j * psi) / s
    rot = np.exp(1j * theta)
    hw = rot * root * np.exp(omega) * e
    hwb = np.conj(rot * root) * np.exp(-omega) * e
    L = grad_log_sigma(manifold, h)
    C = 0.5 * (L * np.conj(hw) - np.conj(L) * hwb)
    return hw, hwb, C


def march_associate(imm: Immersion, theta: float, steps: int = 8, start: Optional[tuple] = None):
    """(h^theta, psi^theta) on the grid of ``imm``.  Raises ChartExit on leaving the chart.

    ``start = (h0, psi0)`` replaces the values at the grid center; moving them by
    an isometry of M (h0 -> gamma(h0), psi0 -> psi0 + arg gamma'(h0)) rebuilds
    the correspondingly moved surface from the data alone.
    """
    M = imm.manifold
    wf = imm.wf
    if not wf.regular.all():
        raise ValueError("the associate march needs a zero-free Hopf coefficient and finite omega")
    kind = _KIND.get(M, 2)
    grid = imm.grid
    ic, jc = grid.center
    if min(ic, jc) < 5 or grid.n_v - ic < 6 or grid.n_u - jc < 6:
        raise GridTooSmall("the march runs outward from the center and needs 6 samples each way")
    hs = grid.h
    om = np.ascontiguousarray(wf.omega2)
    om_u = stencils.d_u(om, hs)
    om_v = stencils.d_v(om, hs)
    root = np.ascontiguousarray(wf.root)
    ic, jc = grid.center
    h_c, psi_c = (imm.h[ic, jc], wf.psi[ic, jc]) if start is None else (complex(start[0]), float(start[1]))

    row_h = np.empty(grid.n_u, dtype=complex)
    row_p = np.empty(grid.n_u)

    def fail(exit_info, where):
        k, line = exit_info
        partial = np.full(grid.shape, np.nan + 0j)
        raise ChartExit(f"h^theta left the chart of {M.value} while marching {where}", partial, (k, line))

    for sl, sign in ((slice(jc, None), 1.0), (slice(jc, None, -1), -1.0)):
        lines = [a[ic, sl][:, None] for a in (root, om, om_v)]
        hh, pp, ex = _march(*[np.ascontiguousarray(x) for x in lines], [h_c], [psi_c], sign * hs, theta, kind, 0, steps)
        if ex is not None:
            fail(ex, "the central row")
        row_h[sl] = hh[:, 0]
        row_p[sl] = pp[:, 0]

    h_t = np.empty(grid.shape, dtype=complex)
    p_t = np.empty(grid.shape)
    for sl, sign in ((slice(ic, None), 1.0), (slice(ic, None, -1), -1.0)):
        blocks = [np.ascontiguousarray(a[sl]) for a in (root, om, om_u)]
        hh, pp, ex = _march(*blocks, row_h, row_p, sign * hs, theta, kind, 1, steps)
        if ex is not None:
            k, line = ex
            partial = h_t.copy()
            partial[sl] = hh
            i = ic + (k + 1 if sign > 0 else -(k + 1))
            raise ChartExit(f"h^theta left the chart of {M.value} near sample ({i}, {line})", partial, (i, line))
        h_t[sl] = hh
        p_t[sl] = pp
    return h_t, p_t


LOOP_MARGIN = 2


def loop_defect(imm: Immersion, h_t, psi_t, theta: float, margin: int = LOOP_MARGIN) -> float:
    """Max cell circulation of dh^theta and dpsi^theta.

    Cells touching the outer ``margin`` rings of samples are skipped, as in all
    residual norms: there the one-sided stencils, not integrability, set the defect.
    """
    wf = imm.wf
    hs = imm.grid.h
    om = wf.omega2
    hw, hwb, C = _nodal_derivatives(imm.manifold, wf.root, om, psi_t, h_t, theta)
    dh = stencils.cell_circulation(hw + hwb, 1j * (hw - hwb), hs)
    dp = stencils.cell_circulation(2 * C.imag - stencils.d_v(om, hs), stencils.d_u(om, hs) - 2 * C.real, hs)
    sl = (slice(margin, dh.shape[0] - margin), slice(margin, dh.shape[1] - margin))
    return float(max(np.abs(dh[sl]).max(), np.abs(dp[sl]).max()))


def make_associate(imm: Immersion, p: AssociateParams, force_march: bool = False) -> FamilyMember:
    """Build the theta-associate member of ``imm``.

    theta = 0 returns a copy of ``imm`` unless ``force_march`` is set.
    """
    hs = imm.grid.h
    if p.theta == 0.0 and not force_march:
        return FamilyMember(0.0, imm, 0.0, 0.0, imm.wf.psi.copy())
    h_t, psi_t = march_associate(imm, p.theta, p.steps)
    tol = 1e-5 * hs if p.tol_loop is None else p.tol_loop
    defect = loop_defect(imm, h_t, psi_t, p.theta)
    if not defect <= tol:
        raise LoopDefectExceeded(f"loop defect {defect:.3e} exceeds {tol:.3e}", defect)
    f_t = integrate_height(imm.wf, tol=max(tol, 1e-5 * hs), rotate=p.theta)
    member = Immersion.build(imm.manifold, imm.grid, h_t, f_t)
    q0 = hopf(imm.hfield)
    err = norms(hopf(member.hfield) - np.exp(2j * p.theta) * q0)[0] / np.abs(q0).max()
    full = loop_defect(imm, h_t, psi_t, p.theta, margin=0)
    return FamilyMember(p.theta, member, defect, err, psi_t, full)


def conjugate(imm: Immersion, steps: int = 8) -> FamilyMember:
    return make_associate(imm, AssociateParams(np.pi / 2, steps))


def family_errors(imm: Immersion, member: FamilyMember) -> dict:
    """Metric, Hopf, |N_3| and omega discrepancies of a member relative to ``imm``."""
    lam0 = imm.lambda_sq
    metric = norms(member.imm.lambda_sq - lam0)[0] / lam0.max()
    n3 = norms(np.abs(member.imm.N3) - np.abs(imm.N3))[0]
    om0, om1 = imm.wf.omega2, member.imm.wf.omega2
    omega = min(norms(om1 - om0)[0], norms(om1 + om0)[0])
    return {"metric": metric, "hopf": member.hopf_rotation_error, "n3": n3, "omega": omega,
            "loop": member.loop_defect}


def verify_family(imm: Immersion, thetas: Iterable[float], steps: int = 8, tol_metric: float = 1e-4,
                  tol_hopf: float = 1e-4, tol_n3: float = 1e-6, tol_omega: float = 1e-5,
                  members: Optional[dict] = None) -> VerificationReport:
    """Isometry, Hopf rotation, |N_3| and omega invariance for every theta."""
    rep = VerificationReport("associate family")
    tol_loop = 1e-5 * imm.grid.h
    for th in thetas:
        m = members[th] if members and th in members else make_associate(imm, AssociateParams(th, steps))
        e = family_errors(imm, m)
        tag = f"theta={th:.6g}"
        rep.add(f"{tag} metricError", "Linf |lambda2_t - lambda2| / max lambda2", e["metric"], tol_metric)
        rep.add(f"{tag} hopfRotationError", "Linf |Q_t - e^{2it} Q| / max |Q|", e["hopf"], tol_hopf)
        rep.add(f"{tag} n3Error", "Linf ||N3_t| - |N3||", e["n3"], tol_n3)
        rep.add(f"{tag} omegaError", "Linf min |omega_t -+ omega|", e["omega"], tol_omega)
        rep.add(f"{tag} loopDefect", "max cell circulation", e["loop"], tol_loop)
    return rep


def _sample_indices(shape, count: int = 400, margin: int = 0):
    nv, nu = shape
    k = max(3, int(np.sqrt(count)))
    iv = np.unique(np.linspace(margin, nv - 1 - margin, min(k, nv)).round().astype(int))
    iu = np.unique(np.linspace(margin, nu - 1 - margin, min(k, nu)).round().astype(int))
    return np.ix_(iv, iu)


def congruence_test(a: Immersion, b: Immersion, samples: int = 400, allow_reflection: bool = True):
    """Fit an isometry of M x R carrying X_a onto X_b sample by sample.

    Returns ``(AmbientIsometry, residual)`` with the residual the max product-metric
    distance over all samples.
    """
    if a.manifold is not b.manifold or a.grid != b.grid:
        raise ValueError("congruence_test needs immersions on the same grid and manifold")
    M = a.manifold
    idx = _sample_indices(a.grid.shape, samples)
    pairs = np.stack([a.h[idx].ravel(), b.h[idx].ravel()])
    iso, _ = fit_isometry(M, pairs, allow_reflection)
    d = base_distance(M, iso.base(a.h), b.h)
    best = None
    for s in (1, -1):
        c = float(np.mean(b.f - s * a.f))
        dt = s * a.f + c - b.f
        res = float(np.max(np.sqrt(d**2 + dt**2)))
        if best is None or res < best[2]:
            best = (s, c, res)
    s, c, res = best
    return replace(iso, vertical_shift=c, vertical_flip=s), res
