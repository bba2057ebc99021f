"""Base surfaces M (R^2, the Poincare disk, the stereographic sphere) and their isometries.

Points of M are complex chart coordinates z = x + iy.  All functions accept
scalars or numpy arrays and broadcast.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation

from .errors import DegenerateConfiguration, OutOfChart

# Samples of the sphere chart further than this from the origin are rejected.
SPHERE_CHART_RADIUS = 10.0
DEGENERATE_SV = 1e-8


class BaseManifold(enum.Enum):
    EUCLIDEAN = "euclidean"
    HYPERBOLIC_DISK = "hyperbolic-disk"
    SPHERE = "sphere"

    @property
    def curvature(self) -> float:
        return {"euclidean": 0.0, "hyperbolic-disk": -1.0, "sphere": 1.0}[self.value]

    @classmethod
    def parse(cls, name: str) -> "BaseManifold":
        aliases = {"r2": "euclidean", "e2": "euclidean", "h2": "hyperbolic-disk",
                   "disk": "hyperbolic-disk", "s2": "sphere"}
        return cls(aliases.get(name, name))


EUCLIDEAN = BaseManifold.EUCLIDEAN
HYPERBOLIC_DISK = BaseManifold.HYPERBOLIC_DISK
SPHERE = BaseManifold.SPHERE


def check_chart(M: BaseManifold, z) -> None:
    z = np.asarray(z)
    if not np.all(np.isfinite(z)):
        raise OutOfChart("non-finite chart coordinate")
    r2 = np.abs(z) ** 2
    if M is HYPERBOLIC_DISK and np.any(r2 >= 1.0):
        raise OutOfChart(f"point outside the unit disk (max |z| = {np.sqrt(r2.max()):.6g})")
    if M is SPHERE and np.any(r2 > SPHERE_CHART_RADIUS**2):
        raise OutOfChart(f"point too close to the chart antipode (max |z| = {np.sqrt(r2.max()):.6g})")


def sigma(M: BaseManifold, z):
    """Conformal factor of the metric sigma(z)^2 |dz|^2."""
    check_chart(M, z)
    r2 = np.abs(z) ** 2
    if M is EUCLIDEAN:
        return np.ones_like(r2, dtype=float) if np.ndim(r2) else 1.0
    if M is HYPERBOLIC_DISK:
        return 2.0 / (1.0 - r2)
    return 2.0 / (1.0 + r2)


def grad_log_sigma(M: BaseManifold, z):
    """Euclidean gradient of log sigma, packed as the complex number d_x + i d_y."""
    check_chart(M, z)
    z = np.asarray(z, dtype=complex)
    r2 = np.abs(z) ** 2
    if M is EUCLIDEAN:
        out = np.zeros_like(z)
    elif M is HYPERBOLIC_DISK:
        out = 2.0 * z / (1.0 - r2)
    else:
        out = -2.0 * z / (1.0 + r2)
    return out if out.ndim else complex(out)


def _sphere_vec(z):
    z = np.asarray(z, dtype=complex)
    r2 = np.abs(z) ** 2
    return np.stack([2 * z.real, 2 * z.imag, r2 - 1.0]) / (1.0 + r2)


def base_distance(M: BaseManifold, z1, z2):
    """Geodesic distance in sigma^2 |dz|^2."""
    check_chart(M, z1)
    check_chart(M, z2)
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    if M is EUCLIDEAN:
        d = np.abs(z1 - z2)
    elif M is HYPERBOLIC_DISK:
        q = np.abs(z1 - z2) / np.abs(1.0 - np.conj(z1) * z2)
        d = 2.0 * np.arctanh(np.minimum(q, 1.0 - 1e-16))
    else:
        p, r = _sphere_vec(z1), _sphere_vec(z2)
        d = 2.0 * np.arctan2(np.linalg.norm(p - r, axis=0), np.linalg.norm(p + r, axis=0))
    return d if d.ndim else float(d)


# ---------------------------------------------------------------------------
# isometries


def mobius_apply(mat: np.ndarray, z):
    a, b, c, d = mat.ravel()
    return (a * z + b) / (c * z + d)


def mobius_derivative(mat: np.ndarray, z):
    a, b, c, d = mat.ravel()
    return (a * d - b * c) / (c * z + d) ** 2


def _centering(M: BaseManifold, p: complex) -> np.ndarray:
    """Matrix of an isometry of M sending p to 0."""
    if M is EUCLIDEAN:
        return np.array([[1.0, -p], [0.0, 1.0]], dtype=complex)
    if M is HYPERBOLIC_DISK:
        return np.array([[1.0, -p], [-np.conj(p), 1.0]], dtype=complex)
    return np.array([[1.0, -p], [np.conj(p), 1.0]], dtype=complex)


def _inv(mat: np.ndarray) -> np.ndarray:
    a, b, c, d = mat.ravel()
    return np.array([[d, -b], [-c, a]], dtype=complex)


def _normalize(mat: np.ndarray) -> np.ndarray:
    det = np.linalg.det(mat)
    return mat / np.sqrt(det)


def _local_matrix(M: BaseManifold, params: np.ndarray) -> np.ndarray:
    """Three-parameter isometry near a rotation about 0."""
    if M is EUCLIDEAN:
        alpha, bx, by = params
        return np.array([[np.exp(1j * alpha), bx + 1j * by], [0.0, 1.0]], dtype=complex)
    if M is HYPERBOLIC_DISK:
        alpha, qx, qy = params
        q = qx + 1j * qy
        p = q / np.sqrt(1.0 + abs(q) ** 2)
        rot = np.exp(1j * alpha)
        return np.array([[rot, -rot * p], [-np.conj(p), 1.0]], dtype=complex)
    x, y, zq, w = Rotation.from_rotvec(params).as_quat()
    a, b = w + 1j * zq, y + 1j * x
    return np.array([[a, b], [-np.conj(b), np.conj(a)]], dtype=complex)


@dataclass(frozen=True)
class BaseIsometry:
    """z -> (a z + b) / (c z + d), applied after complex conjugation when ``conjugate``."""

    manifold: BaseManifold
    matrix: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex))
    conjugate: bool = False

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.conjugate:
            z = np.conj(z)
        out = mobius_apply(self.matrix, z)
        return out if out.ndim else complex(out)

    def derivative_modulus(self, z):
        z = np.asarray(z, dtype=complex)
        if self.conjugate:
            z = np.conj(z)
        return np.abs(mobius_derivative(self.matrix, z))

    def preserves_metric(self, z, tol: float = 1e-10) -> bool:
        """Sampled check that sigma(gamma z) |gamma'(z)| = sigma(z)."""
        lhs = sigma(self.manifold, self(z)) * self.derivative_modulus(z)
        return bool(np.all(np.abs(lhs - sigma(self.manifold, z)) <= tol * np.abs(sigma(self.manifold, z))))

    @classmethod
    def rotation(cls, M: BaseManifold, angle: float, conjugate: bool = False) -> "BaseIsometry":
        return cls(M, np.array([[np.exp(1j * angle), 0], [0, 1]], dtype=complex), conjugate)

    @classmethod
    def translation(cls, M: BaseManifold, p: complex, angle: float = 0.0) -> "BaseIsometry":
        """Isometry sending 0 to p (then rotated by ``angle`` about p)."""
        mat = _inv(_centering(M, p)) @ np.array([[np.exp(1j * angle), 0], [0, 1]], dtype=complex)
        return cls(M, _normalize(mat))


@dataclass(frozen=True)
class AmbientIsometry:
    """Isometry (z, t) -> (base(z), flip * t + shift) of M x R."""

    base: BaseIsometry
    vertical_shift: float = 0.0
    vertical_flip: int = 1

    def apply(self, z, t):
        return self.base(z), self.vertical_flip * np.asarray(t) + self.vertical_shift


def _residual_vector(M: BaseManifold, a, b):
    if M is EUCLIDEAN:
        d = a - b
        return np.concatenate([d.real, d.imag])
    if M is HYPERBOLIC_DISK:
        d = 2.0 * (a - b) / (1.0 - np.conj(b) * a)
        return np.concatenate([d.real, d.imag])
    return (_sphere_vec(a) - _sphere_vec(b)).ravel()


def _fit_one_class(M, src, tgt):
    pre = _centering(M, src[0])
    post = _inv(_centering(M, tgt[0]))
    s0 = mobius_apply(pre, src)
    t0 = mobius_apply(_centering(M, tgt[0]), tgt)
    angle = float(np.angle(np.sum(t0 * np.conj(s0)))) if np.any(np.abs(s0) > 0) else 0.0
    if M is SPHERE:
        x0 = np.array([0.0, 0.0, angle])
    else:
        x0 = np.array([angle, 0.0, 0.0])

    def mat(x):
        return post @ _local_matrix(M, x) @ pre

    def fun(x):
        return _residual_vector(M, mobius_apply(mat(x), src), tgt)

    sol = least_squares(fun, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    m = _normalize(mat(sol.x))
    return m, float(np.max(base_distance(M, mobius_apply(m, src), tgt)))


def _degeneracy(M: BaseManifold, src: np.ndarray) -> float:
    s = mobius_apply(_centering(M, src[0]), src[1:])
    design = np.stack([s.real, s.imag])
    sv = np.linalg.svd(design, compute_uv=False)
    if sv[0] == 0.0:
        return 0.0
    return float(sv[-1] / sv[0])


def fit_isometry(M: BaseManifold, pairs, allow_reflection: bool = True):
    """Least-squares isometry of M mapping sources onto targets.

    ``pairs`` is a sequence of (source, target) chart points or a (2, n) array.
    Returns ``(AmbientIsometry, residual)`` with residual the max base distance
    between mapped sources and targets.  Both orientation classes are tried
    when ``allow_reflection`` is set and the better fit is kept.
    """
    arr = np.asarray(pairs, dtype=complex)
    if arr.ndim == 2 and arr.shape[0] == 2 and arr.shape[1] != 2:
        src, tgt = arr
    else:
        src, tgt = arr[:, 0], arr[:, 1]
    check_chart(M, src)
    check_chart(M, tgt)
    if src.size < 3:
        raise DegenerateConfiguration("need at least 3 point pairs")
    if _degeneracy(M, src) < DEGENERATE_SV:
        raise DegenerateConfiguration("source points lie on one geodesic")

    best = None
    for conj in ((False, True) if allow_reflection else (False,)):
        s = np.conj(src) if conj else src
        m, res = _fit_one_class(M, s, tgt)
        if best is None or res < best[2]:
            best = (m, conj, res)
    m, conj, res = best
    return AmbientIsometry(BaseIsometry(M, m, conj)), res
