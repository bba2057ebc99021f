"""Closed-form minimal surfaces in M x R with analytic derivatives.

Every entry is a map w = u + iv -> (h, h_w, h_wbar, f).  Entries built from
profile integrals (screw motions, helicoids and catenoids of H^2 x R) evaluate
those integrals by adaptive quadrature on the distinct values of u.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import quad

from .base import EUCLIDEAN, HYPERBOLIC_DISK, SPHERE, BaseManifold, sigma
from .errors import QuadratureFailure
from .wdata import GridDomain

QUAD_TOL = 1e-10
DEFAULT_DOMAIN = (-0.6, 0.6, -0.6, 0.6)

Fields = Callable[[np.ndarray], tuple]


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    manifold: BaseManifold
    fields: Fields = field(repr=False)
    params: dict = field(default_factory=dict)
    domain: tuple = DEFAULT_DOMAIN
    expected_K: Union[float, str, None] = None
    graph: bool = False

    def h(self, w):
        return self.fields(np.asarray(w, dtype=complex))[0]

    def hw(self, w):
        return self.fields(np.asarray(w, dtype=complex))[1]

    def hwb(self, w):
        return self.fields(np.asarray(w, dtype=complex))[2]

    def f(self, w):
        return self.fields(np.asarray(w, dtype=complex))[3]

    def phi(self, w):
        h, hw, hwb, _ = self.fields(np.asarray(w, dtype=complex))
        return sigma(self.manifold, h) ** 2 * hw * np.conj(hwb)

    def omega(self, w):
        _, hw, hwb, _ = self.fields(np.asarray(w, dtype=complex))
        with np.errstate(divide="ignore"):
            return 0.5 * np.log(np.abs(hw) / np.abs(hwb))

    def grid(self, n: int = 129, domain=None) -> GridDomain:
        return GridDomain.from_bounds(domain or self.domain, n)

    def immersion(self, grid: Optional[GridDomain] = None, n: int = 129, analytic: bool = True, **kw):
        """Sample the entry; ``analytic`` passes the exact h_w, h_wbar to the immersion."""
        from .immersion import Immersion

        grid = grid or self.grid(n)
        h, hw, hwb, f = self.fields(grid.w)
        if analytic:
            return Immersion.build(self.manifold, grid, h, f, hw, hwb, **kw)
        return Immersion.build(self.manifold, grid, h, f, **kw)


def _on_unique(fn, u):
    """Evaluate a scalar profile function once per distinct value of u."""
    uniq, inv = np.unique(u, return_inverse=True)
    vals = np.array([fn(float(x)) for x in uniq])
    return vals[inv].reshape(u.shape + vals.shape[1:])


def _quad(fn, a, b):
    if a == b:
        return 0.0
    val, err = quad(fn, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)
    if not np.isfinite(val) or err > QUAD_TOL:
        raise QuadratureFailure(f"quadrature on [{a}, {b}] missed the error target ({err:.2e})")
    return val


# ---------------------------------------------------------------------------
# H^2 x R


def cylinder(a: float = np.pi, b: float = 0.0) -> CatalogEntry:
    """Vertical cylinder over the geodesic of the disk joining e^{ia} and e^{ib}.

    With the defaults the geodesic is the real diameter and h = tanh(u/2), f = v.
    """
    d = float(np.mod(b - a, 2 * np.pi))
    if d == 0.0:
        raise ValueError("geodesic endpoints must be distinct")
    kappa = (d - np.pi) / 4.0
    rot = b - 2.0 * kappa
    t = np.tan(kappa)
    e = np.exp(1j * rot)

    def fields(w):
        z = np.tanh(w.real / 2.0) + 0j
        dz = 0.25 / np.cosh(w.real / 2.0) ** 2
        den = 1.0 - 1j * t * z
        h = e * (z + 1j * t) / den
        jac = e * (1.0 - t * t) / den**2
        return h, jac * dz, jac * dz, w.imag.copy()

    return CatalogEntry("cylinder", HYPERBOLIC_DISK, fields, {"a": a, "b": b}, expected_K=0.0)


def _cayley(z):
    return (z - 1j) / (z + 1j)


def _cayley_prime(z):
    return 2j / (z + 1j) ** 2


def scherk_h2() -> CatalogEntry:
    """Scherk-type graph t = ln((|z| + y)/x) over the quarter x, y > 0 of the half-plane.

    Conformal coordinates: z = e^{u + i gd(v)} with v > 0, so that t = v.
    The half-plane is carried to the disk by the Cayley map.
    """

    def fields(w):
        u, v = w.real, w.imag
        if np.any(v <= 0):
            raise ValueError("scherk-h2 needs v > 0")
        gd = 2.0 * np.arctan(np.tanh(v / 2.0))
        z = np.exp(u + 1j * gd)
        sech = 1.0 / np.cosh(v)
        cp = _cayley_prime(z)
        return _cayley(z), cp * 0.5 * z * (1 + sech), cp * 0.5 * z * (1 - sech), v.copy()

    return CatalogEntry("scherk-h2", HYPERBOLIC_DISK, fields, {}, domain=(-0.6, 0.6, 0.3, 1.5),
                        expected_K="nonconstant", graph=True)


def scherk_hull(radius: float = 0.999, n: int = 256) -> np.ndarray:
    """Boundary of the convex region under the Scherk graph, truncated to |zeta| <= radius.

    The graph lives over {x > 0}, a geodesic half-plane; in the disk this is the
    lower half-disk, bounded by a diameter.  The truncation is a hyperbolic disk,
    so the intersection stays convex.
    """
    phi = np.linspace(np.pi, 2 * np.pi, n)
    arc = radius * np.exp(1j * phi)
    return np.concatenate([arc, np.linspace(radius, -radius, n)[1:-1] + 0j])


def scherk_closed_form(x, y):
    """Height t = ln((sqrt(x^2 + y^2) + y)/x) of the Scherk graph in half-plane coordinates."""
    return np.log((np.hypot(x, y) + y) / x)


def scherk_conjugate_reference() -> CatalogEntry:
    """Parabolic graph t = x in half-plane coordinates: z = u + i sinh v, f = u."""

    def fields(w):
        u, v = w.real, w.imag
        z = u + 1j * np.sinh(v)
        zw = 0.5 * (1 + np.cosh(v))
        zwb = 0.5 * (1 - np.cosh(v))
        cp = _cayley_prime(z)
        return _cayley(z), cp * zw, cp * zwb, u.copy()

    return CatalogEntry("scherk-conjugate", HYPERBOLIC_DISK, fields, {}, domain=(-0.6, 0.6, 0.3, 1.5),
                        expected_K="nonconstant", graph=True)


def half_plane(zeta):
    """Inverse Cayley map from the disk to the upper half-plane."""
    return 1j * (1 + zeta) / (1 - zeta)


@lru_cache(maxsize=None)
def _screw_profile(d: float, s: float):
    """(Lambda(s), A(s)) from their derivatives, anchored at s = 0."""
    c = np.sqrt(1 + d * d)

    def lam_prime(x):
        return c * d * np.cosh(x) / (d * d + c * c * np.sinh(x) ** 2)

    def a_prime(x):
        U = c * np.cosh(x)
        return -d / (U * (U * U - 1.0))

    return _quad(lam_prime, 0.0, s), _quad(a_prime, 0.0, s)


def screw_profile_closed_form(d: float, s):
    """Closed forms of the screw-motion profile integrals (used as a test oracle)."""
    c = np.sqrt(1 + d * d)
    lam = np.arctan(c * np.sinh(s) / d)
    gd = 2.0 * np.arctan(np.tanh(np.asarray(s) / 2.0))
    return lam, d / c * gd - lam


def screw_motion(d: float = 1.0) -> CatalogEntry:
    """Screw-motion invariant minimal surface with K = -1 (conformal coordinates w = r + i tau).

    U(s) = sqrt(1 + d^2) cosh s is the distance profile, r = integral of ds/U,
    and the induced metric is U^2 |dw|^2, i.e. the band model of H^2.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    c = np.sqrt(1 + d * d)

    def fields(w):
        r, tau = w.real, w.imag
        if np.any(np.abs(c * r) >= np.pi / 2):
            raise ValueError(f"screw-motion needs |u| < pi/(2 sqrt(1+d^2)) = {np.pi / (2 * c):.4f}")
        s = np.arctanh(np.sin(c * r))
        prof = _on_unique(lambda x: _screw_profile(float(d), float(np.arctanh(np.sin(c * x)))), r)
        lam, A = prof[..., 0], prof[..., 1]
        U = c * np.cosh(s)
        root = np.sqrt(U * U - 1.0)
        R = root / (1.0 + U)
        h = R * np.exp(1j * (tau + A))
        dR = c * np.sinh(s) / ((1.0 + U) * root)
        dA = -d / (U * (U * U - 1.0))
        h_r = h * (dR / R + 1j * dA) * U
        f = lam + A + tau
        return h, 0.5 * (h_r + h), 0.5 * (h_r - h), f

    return CatalogEntry("screw-motion", HYPERBOLIC_DISK, fields, {"d": d}, expected_K=-1.0)


def canonical_disk(c: float = np.sqrt(2.0)) -> CatalogEntry:
    """Totally geodesic slice Y = (tan(c w / 2), 0): the hyperbolic plane in band coordinates."""

    def fields(w):
        h = np.tan(c * w / 2.0)
        return h, 0.5 * c / np.cos(c * w / 2.0) ** 2, np.zeros_like(h), np.zeros(w.shape)

    return CatalogEntry("canonical-disk", HYPERBOLIC_DISK, fields, {"c": c}, expected_K=-1.0)


@lru_cache(maxsize=None)
def _r_of_s(ell: float, s: float) -> float:
    return _quad(lambda x: 1.0 / np.sqrt(np.sinh(x) ** 2 + ell * ell), 0.0, s)


@lru_cache(maxsize=None)
def _s_of_r(ell: float, r: float) -> float:
    """Invert r(s) = integral_0^s dx / sqrt(sinh^2 x + ell^2) by Newton's method."""
    s = ell * r
    for _ in range(100):
        step = (_r_of_s(ell, s) - r) * np.sqrt(np.sinh(s) ** 2 + ell * ell)
        s -= step
        if abs(step) < 1e-15 * max(1.0, abs(s)):
            return s
    raise QuadratureFailure(f"profile inversion did not converge at r = {r}")


def _profile_s(ell, u):
    sup = _r_of_s(ell, 30.0)
    if np.any(np.abs(u) >= sup):
        raise ValueError(f"|u| must stay below {sup:.4f} for this profile")
    return _on_unique(lambda x: _s_of_r(float(ell), x), u)


def helicoid_h2r(pitch: float = 0.5) -> CatalogEntry:
    """Helicoid (tanh(s/2) e^{i tau}, pitch * tau) in conformal coordinates r(s) + i tau."""
    ell = float(pitch)
    if ell <= 0:
        raise ValueError("pitch must be positive")

    def fields(w):
        tau = w.imag
        s = _profile_s(ell, w.real)
        h = np.tanh(s / 2.0) * np.exp(1j * tau)
        h_r = 0.5 / np.cosh(s / 2.0) ** 2 * np.sqrt(np.sinh(s) ** 2 + ell * ell) * np.exp(1j * tau)
        return h, 0.5 * (h_r + h), 0.5 * (h_r - h), ell * tau

    return CatalogEntry("helicoid-h2r", HYPERBOLIC_DISK, fields, {"pitch": pitch}, expected_K="nonconstant")


def catenoid_h2r(neck: float = float(np.arctanh(0.5))) -> CatalogEntry:
    """Catenoid with neck radius ``neck``; it shares its coordinates with the helicoid of pitch tanh(neck).

    h = sqrt(sinh^2 s + l^2)/(k + cosh s) e^{i k tau}, f = l r with l = tanh(neck), k = sech(neck).
    """
    if neck <= 0:
        raise ValueError("neck must be positive")
    ell = float(np.tanh(neck))
    k = 1.0 / np.cosh(neck)

    def fields(w):
        r, tau = w.real, w.imag
        s = _profile_s(ell, r)
        q = np.sqrt(np.sinh(s) ** 2 + ell * ell)
        den = k + np.cosh(s)
        rho = q / den
        e = np.exp(1j * k * tau)
        # d rho / ds times ds / dr (= q)
        drho = (np.sinh(s) * np.cosh(s) / q) / den - q * np.sinh(s) / den**2
        h = rho * e
        h_r = drho * q * e
        h_tau = 1j * k * h
        return h, 0.5 * (h_r - 1j * h_tau), 0.5 * (h_r + 1j * h_tau), ell * r

    return CatalogEntry("catenoid-h2r", HYPERBOLIC_DISK, fields, {"neck": neck}, expected_K="nonconstant")


# ---------------------------------------------------------------------------
# R^3 and S^2 x R


def plane_e3() -> CatalogEntry:
    def fields(w):
        return w.copy(), np.ones_like(w), np.zeros_like(w), np.zeros(w.shape)

    return CatalogEntry("plane-e3", EUCLIDEAN, fields, {}, expected_K=0.0, graph=True)


def catenoid_e3() -> CatalogEntry:
    """Catenoid of R^3 with g = e^w, eta = dw: h = -cosh(u) e^{iv}, f = u."""

    def fields(w):
        return -np.cosh(w.real) * np.exp(1j * w.imag), -0.5 * np.exp(w), 0.5 * np.exp(-np.conj(w)), w.real.copy()

    return CatalogEntry("catenoid-e3", EUCLIDEAN, fields, {}, expected_K="nonconstant")


def helicoid_e3() -> CatalogEntry:
    """Helicoid of R^3, associate to the catenoid: h = -i sinh(u) e^{iv}, f = -v."""

    def fields(w):
        return (-1j * np.sinh(w.real) * np.exp(1j * w.imag), -0.5j * np.exp(w),
                -0.5j * np.exp(-np.conj(w)), -w.imag)

    return CatalogEntry("helicoid-e3", EUCLIDEAN, fields, {}, expected_K="nonconstant")


def equator_cylinder_s2() -> CatalogEntry:
    """Vertical cylinder over the equator of S^2: h = e^{iu}, f = v."""

    def fields(w):
        h = np.exp(1j * w.real)
        return h, 0.5j * h, 0.5j * h, w.imag.copy()

    return CatalogEntry("equator-cylinder-s2", SPHERE, fields, {}, expected_K=0.0)


def sector_control_e3(eps: float = 0.775, k: float = 1.5, beta: float = 0.0, spread: float = 3.0) -> CatalogEntry:
    """Minimal graph over a nearly closed annular sector whose associates self-overlap.

    h = e^w + conj(c e^{kw} / k) with c = eps e^{i beta}.  The perturbation opens
    the sector's gap on the base and, after the rotation of the associate family,
    pushes one end across the other.  Needs eps e^{(k-1) u} < 1 on the domain.
    """
    c = eps * np.exp(1j * beta)
    if eps * np.exp((k - 1) * 0.3) >= 1:
        raise ValueError("sector control is not a graph for these parameters")

    def fields(w):
        e1 = np.exp(w)
        g = c * np.exp(k * w)
        f = 2 * np.real(1j * np.sqrt(c) * (2 / (k + 1)) * np.exp((k + 1) * w / 2))
        return e1 + np.conj(g / k), e1, np.conj(g), f

    return CatalogEntry("sector-control-e3", EUCLIDEAN, fields, {"eps": eps, "k": k, "beta": beta},
                        domain=(0.0, 0.3, -spread, spread), expected_K="nonconstant", graph=True)


REGISTRY = {
    "cylinder": cylinder,
    "scherk-h2": scherk_h2,
    "screw-motion": screw_motion,
    "helicoid-h2r": helicoid_h2r,
    "catenoid-h2r": catenoid_h2r,
    "plane-e3": plane_e3,
    "helicoid-e3": helicoid_e3,
    "catenoid-e3": catenoid_e3,
}


def euclidean_classics():
    return [plane_e3(), helicoid_e3(), catenoid_e3()]


def get_entry(name: str, **params) -> CatalogEntry:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown entry {name!r}; known entries: {', '.join(REGISTRY)}") from None
    return factory(**params)
