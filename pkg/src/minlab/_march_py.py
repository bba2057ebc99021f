"""Pure numpy RK4 march of the associate system (reference implementation and fallback)."""
from __future__ import annotations

import numpy as np

_SPHERE_LIMIT = 10.0


def _rhs(h, psi, r, om, aux, rot, kind, axis):
    r2 = (h * np.conj(h)).real
    if kind == 0:
        s = np.ones_like(r2)
        L = np.zeros_like(h)
    elif kind == 1:
        s = 2.0 / (1.0 - r2)
        L = 2.0 * h / (1.0 - r2)
    else:
        s = 2.0 / (1.0 + r2)
        L = -2.0 * h / (1.0 + r2)
    e = np.exp(1j * psi) / s
    hw = rot * r * np.exp(om) * e
    hwb = np.conj(rot * r) * np.exp(-om) * e
    C = 0.5 * (L * np.conj(hw) - np.conj(L) * hwb)
    if axis == 0:
        return hw + hwb, 2.0 * C.imag - aux
    return 1j * (hw - hwb), aux - 2.0 * C.real


def _outside(h, kind):
    a = np.abs(h)
    if kind == 1:
        return ~(a < 1.0)
    if kind == 2:
        return ~(a <= _SPHERE_LIMIT)
    return ~np.isfinite(a)


def march_lines(root, omega, aux, h0, psi0, weights, starts, step, theta, kind, axis, steps):
    """Integrate (h, psi) along axis 0 of the (N, L) field arrays from index 0.

    ``weights[k, m]`` are 6-point Lagrange weights for position k + m/(2 steps)
    relative to node ``starts[k]``.  ``axis`` selects the u-equations (0) or the
    v-equations (1); ``step`` is the signed parameter increment per edge.
    Returns (h, psi, exit) where exit is None or (edge index, line index).
    """
    n, nl = root.shape
    h = np.empty((n, nl), dtype=complex)
    psi = np.empty((n, nl))
    h[0] = h0
    psi[0] = psi0
    rot = np.exp(1j * theta)
    dt = step / steps
    hc = np.array(h0, dtype=complex)
    pc = np.array(psi0, dtype=float)
    for k in range(n - 1):
        s0 = starts[k]
        rw = root[s0:s0 + 6]
        ow = omega[s0:s0 + 6]
        aw = aux[s0:s0 + 6]
        wk = weights[k]
        vals = [(wk[m] @ rw, wk[m] @ ow, wk[m] @ aw) for m in range(2 * steps + 1)]
        for j in range(steps):
            a, b, c = vals[2 * j], vals[2 * j + 1], vals[2 * j + 2]
            k1h, k1p = _rhs(hc, pc, *a, rot, kind, axis)
            h2 = hc + 0.5 * dt * k1h
            k2h, k2p = _rhs(h2, pc + 0.5 * dt * k1p, *b, rot, kind, axis)
            h3 = hc + 0.5 * dt * k2h
            k3h, k3p = _rhs(h3, pc + 0.5 * dt * k2p, *b, rot, kind, axis)
            h4 = hc + dt * k3h
            k4h, k4p = _rhs(h4, pc + dt * k3p, *c, rot, kind, axis)
            hc = hc + dt / 6.0 * (k1h + 2 * k2h + 2 * k3h + k4h)
            pc = pc + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
            bad = _outside(h2, kind) | _outside(h3, kind) | _outside(h4, kind) | _outside(hc, kind)
            if bad.any():
                h[k + 1:] = np.nan
                psi[k + 1:] = np.nan
                return h, psi, (k, int(np.argmax(bad)))
        h[k + 1] = hc
        psi[k + 1] = pc
    return h, psi, None
