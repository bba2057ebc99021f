"""Curves in the parameter domain and what their projections do.

Tools: curvature of the horizontal projection h o gamma, the turning angle
between a surface and its theta-associate, an injectivity (graph) test for
associate members, and a divergent-path length criterion for conjugate graphs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import CubicSpline, RectBivariateSpline
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from . import stencils
from .base import EUCLIDEAN, HYPERBOLIC_DISK, BaseManifold, grad_log_sigma, sigma
from .errors import BranchAmbiguity, InconclusiveTail, ZeroSpeed
from .immersion import Immersion
from .report import VerificationReport
from .wdata import GridDomain

CHORD_TOL = 1e-9
MIN_SPEED = 1e-12


# ---------------------------------------------------------------------------
# curves and interpolation


@dataclass
class ParamCurve:
    """Samples w_k of a curve in the parameter plane with equal chords dt and tangent angles alpha_k."""

    w: np.ndarray
    alpha: np.ndarray
    dt: float

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=complex)
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.w.shape != self.alpha.shape or self.w.ndim != 1:
            raise ValueError("w and alpha must be 1-d arrays of equal length")
        if self.w.size < stencils.MIN_POINTS:
            raise ValueError(f"a curve needs at least {stencils.MIN_POINTS} samples")
        chords = np.abs(np.diff(self.w))
        if np.max(np.abs(chords - self.dt)) > CHORD_TOL:
            raise ValueError("curve samples are not equally spaced in euclidean arclength")

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.w.size)

    @property
    def length(self) -> float:
        return self.dt * (self.w.size - 1)

    @classmethod
    def segment(cls, w0: complex, w1: complex, dt: float) -> "ParamCurve":
        n = max(stencils.MIN_POINTS, int(np.floor(abs(w1 - w0) / dt)) + 1)
        step = dt * (w1 - w0) / abs(w1 - w0)
        w = w0 + step * np.arange(n)
        return cls(w, np.full(n, np.angle(step)), dt)

    @classmethod
    def through(cls, points: Sequence[complex], dt: float) -> "ParamCurve":
        """Resample a densely sampled smooth curve to equal chords ``dt``."""
        pts = np.asarray(points, dtype=complex)
        s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(pts)))])
        keep = np.concatenate([[True], np.diff(s) > 0])
        pts, s = pts[keep], s[keep]
        spline = CubicSpline(s, np.stack([pts.real, pts.imag], axis=1))

        def at(x):
            p = spline(x)
            return p[..., 0] + 1j * p[..., 1]

        out = [at(0.0)]
        knots = [0.0]
        while True:
            a = knots[-1]
            anchor = out[-1]

            def gap(x):
                return abs(at(x) - anchor) - dt

            b, found = a, False
            while b < s[-1]:
                b = min(b + 0.5 * dt, s[-1])
                if gap(b) >= 0:
                    found = True
                    break
            if not found:
                break
            x = brentq(gap, a, b, xtol=1e-15)
            knots.append(x)
            out.append(at(x))
        d = spline(np.array(knots), 1)
        return cls(np.array(out), np.arctan2(d[:, 1], d[:, 0]), dt)


class FieldInterpolator:
    """Bicubic interpolation of a real or complex grid field, with derivatives."""

    def __init__(self, grid: GridDomain, values: np.ndarray):
        values = np.asarray(values)
        self.complex = np.iscomplexobj(values)
        self._re = RectBivariateSpline(grid.v, grid.u, values.real, kx=3, ky=3)
        self._im = RectBivariateSpline(grid.v, grid.u, values.imag, kx=3, ky=3) if self.complex else None

    def __call__(self, w, du: int = 0, dv: int = 0):
        w = np.asarray(w, dtype=complex)
        out = self._re.ev(w.imag, w.real, dx=dv, dy=du)
        if self.complex:
            out = out + 1j * self._im.ev(w.imag, w.real, dx=dv, dy=du)
        return out


def _inside(grid: GridDomain, w, margin: float) -> bool:
    return (grid.u_min + margin <= w.real <= grid.u_max - margin
            and grid.v_min + margin <= w.imag <= grid.v_max - margin)


def geodesic_through(M: BaseManifold, p: complex, direction: float):
    """Unit-speed geodesic s -> Gamma(s) of M with Gamma(0) = p and initial angle ``direction``."""
    e = np.exp(1j * direction)
    if M is EUCLIDEAN:
        return lambda s: p + s * e
    if M is HYPERBOLIC_DISK:
        return lambda s: (np.tanh(s / 2) * e + p) / (1 + np.conj(p) * np.tanh(s / 2) * e)
    return lambda s: (np.tan(s / 2) * e + p) / (1 - np.conj(p) * np.tan(s / 2) * e)


def geodesic_pullback(imm: Immersion, w0: complex, direction: float, dt: Optional[float] = None,
                      margin: int = 3, max_points: int = 20000, fold_tol: float = 0.05) -> ParamCurve:
    """Curve gamma through w0 whose image h o gamma runs along a geodesic of M.

    The geodesic through h(w0) with initial angle ``direction`` is followed in
    both directions; each point is pulled back by Newton's method on the
    bicubic interpolant of h, continuing from the previous solution, until the
    curve reaches ``margin`` samples from the grid boundary or approaches a fold
    of h, where |tanh omega| drops below ``fold_tol`` and the pullback stalls.
    """
    grid = imm.grid
    dt = grid.h / 2 if dt is None else dt
    if dt > grid.h / 2:
        raise ValueError("curve resolution must satisfy dt <= h/2")
    H = FieldInterpolator(grid, imm.h)
    # smallest stretch of dh: sigma | |h_w| - |h_wbar| |, so that |dw| <= dt/4 per step
    lam = FieldInterpolator(grid, imm.hfield.sigma * np.abs(np.abs(imm.hfield.hw) - np.abs(imm.hfield.hwb)))
    fold = FieldInterpolator(grid, np.abs(np.tanh(imm.wf.omega2)))
    if float(fold(w0)) < fold_tol:
        raise ZeroSpeed("w0 lies on a fold of h")
    M = imm.manifold
    p = complex(H(w0))
    gamma = geodesic_through(M, p, direction)
    mg = margin * grid.h

    def solve(target, w):
        for _ in range(50):
            r = H(w) - target
            hu, hv = H(w, du=1), H(w, dv=1)
            J = np.array([[hu.real, hv.real], [hu.imag, hv.imag]])
            step = np.linalg.solve(J, [r.real, r.imag])
            w = w - (step[0] + 1j * step[1])
            if abs(step[0] + 1j * step[1]) < 1e-14:
                break
        return w

    branches = []
    for sign in (1.0, -1.0):
        pts = []
        w = complex(w0)
        s = 0.0
        while len(pts) < max_points:
            ds = 0.25 * dt * float(lam(w)) * sign
            s += ds
            w_new = solve(gamma(s), w)
            if (not _inside(grid, w_new, mg) or abs(w_new - w) > 2 * dt
                    or float(fold(w_new)) < fold_tol):
                break
            w = w_new
            pts.append(w)
        branches.append(pts)
    pts = branches[1][::-1] + [complex(w0)] + branches[0]
    return ParamCurve.through(pts, dt)


# ---------------------------------------------------------------------------
# curvature of projections


@dataclass
class CurveData:
    """Weierstrass quantities sampled along a curve."""

    omega: np.ndarray
    omega_u: np.ndarray
    omega_v: np.ndarray
    beta: np.ndarray
    abs_phi_sqrt: np.ndarray


def _sample_data(imm: Immersion, c: ParamCurve) -> CurveData:
    grid = imm.grid
    om = FieldInterpolator(grid, imm.wf.omega2)
    beta = FieldInterpolator(grid, imm.wf.beta)
    aphi = FieldInterpolator(grid, np.sqrt(np.abs(imm.wf.phi)))
    return CurveData(om(c.w), om(c.w, du=1), om(c.w, dv=1), beta(c.w), aphi(c.w))


def speed_factor(omega, alpha_beta):
    """R e^{iG} = cos(a) cosh(omega) + i sin(a) sinh(omega) with a = alpha + beta."""
    return np.cos(alpha_beta) * np.cosh(omega) + 1j * np.sin(alpha_beta) * np.sinh(omega)


def _unwrap_checked(angle):
    d = np.diff(angle)
    d = (d + np.pi) % (2 * np.pi) - np.pi
    if np.any(np.abs(d) > np.pi / 2):
        k = int(np.argmax(np.abs(d) > np.pi / 2))
        raise BranchAmbiguity(f"angle jumps by {d[k]:.3f} between samples {k} and {k + 1}")
    return angle[0] + np.concatenate([[0.0], np.cumsum(d)])


def projected_curvature(imm: Immersion, c: ParamCurve, theta: float = 0.0) -> np.ndarray:
    """Geodesic curvature of h^theta o gamma from the Weierstrass data.

    k = (sin(alpha) omega_u - cos(alpha) omega_v + G_t) / (2 |phi|^{1/2} R),
    where R e^{iG} = speed_factor(omega, alpha + beta + theta).
    """
    d = _sample_data(imm, c)
    D = speed_factor(d.omega, c.alpha + d.beta + theta)
    R = np.abs(D)
    if np.any(R < MIN_SPEED):
        raise ZeroSpeed("the projection is not immersed along the curve (R = 0)")
    G = _unwrap_checked(np.angle(D))
    Gt = stencils.diff1(G, c.dt, axis=0)
    return (np.sin(c.alpha) * d.omega_u - np.cos(c.alpha) * d.omega_v + Gt) / (2 * d.abs_phi_sqrt * R)


def conformal_curvature(M: BaseManifold, z: np.ndarray, dt: float) -> np.ndarray:
    """Geodesic curvature of a sampled curve z(t) in sigma^2 |dz|^2.

    k = k_e / sigma - <grad sigma, n> / sigma^2 with k_e the euclidean curvature
    and n the left unit normal.
    """
    z1 = stencils.diff1(z, dt, axis=0)
    z2 = stencils.diff2(z, dt, axis=0)
    sp = np.abs(z1)
    if np.any(sp < MIN_SPEED):
        raise ZeroSpeed("curve has zero speed")
    ke = np.imag(np.conj(z1) * z2) / sp**3
    n = 1j * z1 / sp
    s = sigma(M, z)
    L = grad_log_sigma(M, z)
    return ke / s - np.real(L * np.conj(n)) / s


def image_curvature(imm: Immersion, c: ParamCurve) -> np.ndarray:
    """Curvature of h o gamma computed from interpolated positions (independent of omega, psi)."""
    z = FieldInterpolator(imm.grid, imm.h)(c.w)
    return conformal_curvature(imm.manifold, z, c.dt)


def total_curvature(imm: Immersion, c: ParamCurve) -> float:
    """Integral of k ds along h o gamma (trapezoidal rule)."""
    z = FieldInterpolator(imm.grid, imm.h)(c.w)
    k = conformal_curvature(imm.manifold, z, c.dt)
    ds = sigma(imm.manifold, z) * np.abs(stencils.diff1(z, c.dt, axis=0))
    return float(trapezoid(k * ds, dx=c.dt))


@dataclass
class TurningData:
    R: np.ndarray
    G: np.ndarray
    R_theta: np.ndarray
    G_theta: np.ndarray
    delta: np.ndarray
    tan_identity_residual: float

    def within(self, lo: float = 0.0, hi: float = np.pi, slack: float = 1e-6) -> bool:
        return bool(np.all(self.delta >= lo - slack) and np.all(self.delta <= hi + slack))


def turning_angle_difference(imm: Immersion, c: ParamCurve, theta: float) -> TurningData:
    """G^theta - G along the curve on a continuous branch.

    The branch starts from the principal value of arg(R^theta e^{iG^theta} / (R e^{iG}))
    at the first sample.  The closed form
    tan(G^theta - G) = sinh(2 omega) sin(theta) / (2 cos(theta) R^2 - sin(theta) sin 2(alpha + beta))
    is evaluated alongside as a consistency residual.
    """
    d = _sample_data(imm, c)
    a = c.alpha + d.beta
    D0 = speed_factor(d.omega, a)
    D1 = speed_factor(d.omega, a + theta)
    G0 = _unwrap_checked(np.angle(D0))
    G1 = _unwrap_checked(np.angle(D1))
    delta = _unwrap_checked(np.angle(D1 * np.conj(D0)))
    R = np.abs(D0)
    num = np.sinh(2 * d.omega) * np.sin(theta)
    den = 2 * np.cos(theta) * R**2 - np.sin(theta) * np.sin(2 * a)
    # compare as points on the circle to avoid the poles of tan
    resid = np.abs(np.sin(delta) * den - np.cos(delta) * num) / np.hypot(num, den).clip(1e-300)
    return TurningData(R, G0, np.abs(D1), G1, delta, float(np.max(resid)))


# ---------------------------------------------------------------------------
# graph test for associate members


@dataclass
class KrustReport:
    collisions: List[tuple] = field(default_factory=list)
    sample_collisions: int = 0
    local_ok: bool = True
    orientation: int = 0
    domain_convex: Optional[bool] = None
    contained: Optional[bool] = None
    stride: int = 1

    @property
    def n_collisions(self) -> int:
        return len(self.collisions) + self.sample_collisions

    @property
    def passed(self) -> bool:
        return self.local_ok and self.n_collisions == 0

    @property
    def hypothesis_ok(self) -> Optional[bool]:
        """Whether the base graph was shown to lie over a geodesically convex domain."""
        if self.domain_convex is None:
            return None
        return bool(self.domain_convex and self.contained is not False)


def _triangles(z: np.ndarray):
    nv, nu = z.shape
    idx = np.arange(nv * nu).reshape(nv, nu)
    a, b, c, d = idx[:-1, :-1], idx[:-1, 1:], idx[1:, 1:], idx[1:, :-1]
    tri = np.concatenate([np.stack([a, b, c], -1).reshape(-1, 3), np.stack([a, c, d], -1).reshape(-1, 3)])
    zf = z.ravel()
    p = zf[tri]
    area = 0.5 * np.imag(np.conj(p[:, 1] - p[:, 0]) * (p[:, 2] - p[:, 0]))
    return tri, zf, area


def geodesic_segment(M: BaseManifold, a: complex, b: complex, n: int = 16) -> np.ndarray:
    """Points of the geodesic arc from a to b."""
    t = np.linspace(0.0, 1.0, n)
    if M is EUCLIDEAN:
        return a + t * (b - a)
    sgn = 1.0 if M is HYPERBOLIC_DISK else -1.0
    bb = (b - a) / (1 - sgn * np.conj(a) * b)
    q = t * bb
    return (q + a) / (1 + sgn * np.conj(a) * q)


def is_geodesically_convex(M: BaseManifold, boundary: np.ndarray, samples: int = 48, rel_tol: float = 1e-7) -> bool:
    """Sampled test that geodesic arcs between boundary points stay inside the region."""
    from shapely import contains_xy
    from shapely.geometry import Polygon

    poly = Polygon(np.stack([boundary.real, boundary.imag], 1))
    diam = float(np.max(np.abs(boundary - boundary.mean())))
    region = poly.buffer(rel_tol * diam)
    pick = boundary[np.linspace(0, boundary.size - 1, samples, endpoint=False).astype(int)]
    for i in range(pick.size):
        for j in range(i + 1, pick.size):
            seg = geodesic_segment(M, pick[i], pick[j])
            if not np.all(contains_xy(region, seg.real, seg.imag)):
                return False
    return True


def _boundary_loop(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z[0, :], z[1:, -1], z[-1, -2::-1], z[-2:0:-1, 0]])


def convex_hull_boundary(z: np.ndarray) -> np.ndarray:
    """Vertices of the euclidean convex hull of the points z (counterclockwise, open loop)."""
    from shapely import MultiPoint

    hull = MultiPoint(np.stack([z.real.ravel(), z.imag.ravel()], 1)).convex_hull
    xy = np.asarray(hull.exterior.coords)[:-1]
    return xy[:, 0] + 1j * xy[:, 1]


def krust_graph_check(member, base: Optional[Immersion] = None, hull: Optional[np.ndarray] = None,
                      max_side: int = 129, rel_area: float = 1e-6) -> KrustReport:
    """Injectivity test for h^theta of an associate member (or any Immersion).

    Local certificate: every image triangle of the (subsampled) grid has the same
    orientation.  Global test: image triangles that share no vertex must not
    overlap (shapely STRtree query plus intersection areas), and samples more
    than 4h apart in the parameter plane must not land within h^2 max|dh| of
    each other.

    Convexity is a property of the domain the base graph lives over, which may
    be larger than the sampled image.  With ``hull`` (boundary points of that
    domain) its geodesic convexity and the containment of h(Omega) of ``base``
    are reported; with only ``base`` the convexity of h(Omega) itself is tested.
    """
    from shapely import STRtree, intersection, area as shp_area, polygons

    imm = member.imm if hasattr(member, "imm") else member
    z_full = imm.h
    grid = imm.grid
    stride = max(1, int(np.ceil((max(grid.shape) - 1) / (max_side - 1))))
    z = z_full[::stride, ::stride]
    rep = KrustReport(stride=stride)

    tri, zf, area = _triangles(z)
    signs = np.sign(area)
    rep.orientation = int(np.sign(signs.sum()))
    rep.local_ok = bool(np.all(signs == rep.orientation) and rep.orientation != 0)

    coords = np.stack([zf.real, zf.imag], -1)[tri]
    polys = polygons(coords)
    tree = STRtree(polys)
    left, right = tree.query(polys, predicate="intersects")
    keep = left < right
    left, right = left[keep], right[keep]
    shared = (tri[left][:, :, None] == tri[right][:, None, :]).any(axis=(1, 2))
    left, right = left[~shared], right[~shared]
    if left.size:
        ov = shp_area(intersection(polys[left], polys[right]))
        thresh = rel_area * np.median(np.abs(area))
        bad = ov > thresh
        rep.collisions = [(int(a), int(b), float(o)) for a, b, o in zip(left[bad], right[bad], ov[bad])]

    hs = grid.h
    dh = np.sqrt(np.abs(imm.h_u) ** 2 + np.abs(imm.h_v) ** 2).max()
    eps = hs**2 * dh
    pts = np.stack([z_full.real.ravel(), z_full.imag.ravel()], 1)
    pairs = cKDTree(pts).query_pairs(eps, output_type="ndarray")
    if pairs.size:
        w = grid.w.ravel()
        far = np.abs(w[pairs[:, 0]] - w[pairs[:, 1]]) > 4 * hs
        rep.sample_collisions = int(far.sum())

    if hull is not None:
        from shapely import contains_xy
        from shapely.geometry import Polygon

        hull = np.asarray(hull, complex)
        rep.domain_convex = is_geodesically_convex(imm.manifold, hull)
        if base is not None:
            poly = Polygon(np.stack([hull.real, hull.imag], 1)).buffer(1e-9)
            rep.contained = bool(np.all(contains_xy(poly, base.h.real, base.h.imag)))
    elif base is not None:
        rep.domain_convex = is_geodesically_convex(base.manifold, _boundary_loop(base.h))
    return rep


# ---------------------------------------------------------------------------
# divergent-path criterion for conjugate graphs


def classify_tail(t: np.ndarray, g: np.ndarray, t_end: float, frac: float = 0.3,
                  threshold: float = 0.95, z: float = 3.0, log_tol: float = 0.05) -> tuple:
    """Classify the integral of g up to t_end as 'finite' or 'divergent'.

    The tail is fitted by g ~ A (t_end - t)^{-p}; p >= 1 diverges.  The decision
    uses p -+ z standard errors against ``threshold``.  A second fit
    log g = c - p x + b log(1 - x), x = log of the scaled distance to t_end, detects logarithmic
    factors: when |b| exceeds ``log_tol`` with p near 1 no power-law verdict is
    trustworthy and InconclusiveTail is raised, as it is when p straddles the
    threshold.
    """
    t = np.asarray(t, float)
    g = np.asarray(g, float)
    sel = (t >= t[0] + (1 - frac) * (t[-1] - t[0])) & (t < t_end) & (g > 0)
    if sel.sum() < 5:
        raise InconclusiveTail("too few tail samples")
    x = np.log((t_end - t[sel]) / (t_end - t[0]))  # scaled so that x < 0
    y = np.log(g[sel])
    coef, cov = np.polyfit(x, y, 1, cov=True)
    p = -coef[0]
    se = float(np.sqrt(max(cov[0, 0], 0.0)))
    A = np.stack([np.ones_like(x), x, np.log(1 - x)], 1)
    (_, a_log, b_log), *_ = np.linalg.lstsq(A, y, rcond=None)
    if abs(b_log) > log_tol and abs(-a_log - 1) < 0.5:
        raise InconclusiveTail(f"tail g ~ s^{{{a_log:.3f}}} |log s|^{{{b_log:.3f}}} is log-corrected near p = 1")
    if p - z * se >= threshold:
        return "divergent", p, se
    if p + z * se < threshold:
        return "finite", p, se
    raise InconclusiveTail(f"tail exponent {p:.3f} +- {se:.3f} straddles {threshold}")


@dataclass
class PathResult:
    label: str
    tail: str
    exponent: float
    integral: float
    length_graph: float
    length_conjugate: float
    length_conjugate_formula: float
    cos_integral: float

    @property
    def lower_bound_gap(self) -> float:
        """length_conjugate - (length_graph - 2 cos_integral); never negative."""
        return self.length_conjugate_formula - (self.length_graph - 2 * self.cos_integral)


def entire_graph_criterion(imm: Immersion, paths: Sequence[ParamCurve], conjugate_member=None,
                           t_end: Optional[Sequence[float]] = None, labels=None):
    """Evaluate the divergent-path hypothesis and the associated length relations.

    For each path: the tail class of the integral of |phi|^{1/2}, the length of
    X o gamma (integral of 2 cosh(omega) |phi|^{1/2}), the length of h* o gamma
    from R* and, when ``conjugate_member`` is given, measured directly from h*.
    Returns ``(VerificationReport, [PathResult])``.  The report states which
    paths were tested; a verdict covers only those paths.
    """
    rep = VerificationReport("entire graph criterion")
    results = []
    for k, c in enumerate(paths):
        label = labels[k] if labels else f"path{k}"
        d = _sample_data(imm, c)
        a = c.alpha + d.beta
        g = d.abs_phi_sqrt
        end = c.length + c.dt if t_end is None else t_end[k]
        try:
            tail, p, _ = classify_tail(c.t, g, end)
        except InconclusiveTail:
            tail, p = "inconclusive", float("nan")
        integral = float(trapezoid(g, dx=c.dt))
        lg = float(trapezoid(2 * np.cosh(d.omega) * g, dx=c.dt))
        rstar = np.sqrt(np.cosh(d.omega) ** 2 - np.cos(a) ** 2)
        lf = float(trapezoid(2 * g * rstar, dx=c.dt))
        J = float(trapezoid(np.abs(np.cos(a)) * g, dx=c.dt))
        if conjugate_member is not None:
            cimm = conjugate_member.imm if hasattr(conjugate_member, "imm") else conjugate_member
            z = FieldInterpolator(cimm.grid, cimm.h)(c.w)
            ds = sigma(cimm.manifold, z) * np.abs(stencils.diff1(z, c.dt, axis=0))
            lc = float(trapezoid(ds, dx=c.dt))
            rep.add(f"{label} conjugate length", "|l(h* o gamma) - int 2|phi|^1/2 R*| / l", abs(lc - lf) / lf, 1e-4)
        else:
            lc = float("nan")
        rep.add(f"{label} lower bound", "l(h* o gamma) - l(Gamma) + 2 int|cos||phi|^1/2", lf - lg + 2 * J, 0.0, "ge")
        results.append(PathResult(label, tail, p, integral, lg, lc, lf, J))
    return rep, results


def cumulative_phi_integral(imm: Immersion, c: ParamCurve) -> np.ndarray:
    g = _sample_data(imm, c).abs_phi_sqrt
    return cumulative_trapezoid(g, dx=c.dt, initial=0.0)
