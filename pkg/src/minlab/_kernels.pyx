# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled RK4 march of the associate system; mirrors minlab._march_py."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sin, cos, isfinite

cnp.import_array()

cdef double SPHERE_LIMIT = 10.0


cdef inline void _rhs(double complex h, double psi, double complex r, double om, double aux,
                      double complex rot, int kind, int axis,
                      double complex *dh, double *dpsi) noexcept nogil:
    cdef double r2 = h.real * h.real + h.imag * h.imag
    cdef double s
    cdef double complex L, e, hw, hwb, C
    if kind == 0:
        s = 1.0
        L = 0.0
    elif kind == 1:
        s = 2.0 / (1.0 - r2)
        L = 2.0 * h / (1.0 - r2)
    else:
        s = 2.0 / (1.0 + r2)
        L = -2.0 * h / (1.0 + r2)
    e = (cos(psi) + 1j * sin(psi)) / s
    hw = rot * r * exp(om) * e
    hwb = (rot * r).conjugate() * exp(-om) * e
    C = 0.5 * (L * hw.conjugate() - L.conjugate() * hwb)
    if axis == 0:
        dh[0] = hw + hwb
        dpsi[0] = 2.0 * C.imag - aux
    else:
        dh[0] = 1j * (hw - hwb)
        dpsi[0] = aux - 2.0 * C.real


cdef inline bint _outside(double complex h, int kind) noexcept nogil:
    cdef double a2 = h.real * h.real + h.imag * h.imag
    if kind == 1:
        return not (a2 < 1.0)
    if kind == 2:
        return not (a2 <= SPHERE_LIMIT * SPHERE_LIMIT)
    return not isfinite(a2)


def march_lines(const double complex[:, ::1] root, const double[:, ::1] omega, const double[:, ::1] aux,
                h0, psi0, const double[:, :, ::1] weights, const long[::1] starts,
                double step, double theta, int kind, int axis, int steps):
    cdef Py_ssize_t n = root.shape[0], nl = root.shape[1]
    cdef Py_ssize_t k, j, m, q, line, s0
    cdef double complex[::1] h0v = np.ascontiguousarray(h0, dtype=complex).reshape(-1)
    cdef double[::1] p0v = np.ascontiguousarray(psi0, dtype=float).reshape(-1)
    h_arr = np.full((n, nl), np.nan + 0j)
    psi_arr = np.full((n, nl), np.nan)
    cdef double complex[:, ::1] H = h_arr
    cdef double[:, ::1] P = psi_arr
    cdef double complex rot = cos(theta) + 1j * sin(theta)
    cdef double dt = step / steps
    cdef double complex hc, h2, h3, h4, k1h, k2h, k3h, k4h, ri[3]
    cdef double pc, k1p, k2p, k3p, k4p, oi[3], ai[3], wgt
    cdef Py_ssize_t exit_k = -1, exit_line = -1
    cdef bint bad
    with nogil:
        for line in range(nl):
            hc = h0v[line]
            pc = p0v[line]
            H[0, line] = hc
            P[0, line] = pc
            bad = False
            for k in range(n - 1):
                s0 = starts[k]
                for j in range(steps):
                    for m in range(3):
                        ri[m] = 0.0
                        oi[m] = 0.0
                        ai[m] = 0.0
                        for q in range(6):
                            wgt = weights[k, 2 * j + m, q]
                            ri[m] = ri[m] + wgt * root[s0 + q, line]
                            oi[m] = oi[m] + wgt * omega[s0 + q, line]
                            ai[m] = ai[m] + wgt * aux[s0 + q, line]
                    _rhs(hc, pc, ri[0], oi[0], ai[0], rot, kind, axis, &k1h, &k1p)
                    h2 = hc + 0.5 * dt * k1h
                    _rhs(h2, pc + 0.5 * dt * k1p, ri[1], oi[1], ai[1], rot, kind, axis, &k2h, &k2p)
                    h3 = hc + 0.5 * dt * k2h
                    _rhs(h3, pc + 0.5 * dt * k2p, ri[1], oi[1], ai[1], rot, kind, axis, &k3h, &k3p)
                    h4 = hc + dt * k3h
                    _rhs(h4, pc + dt * k3p, ri[2], oi[2], ai[2], rot, kind, axis, &k4h, &k4p)
                    hc = hc + dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h)
                    pc = pc + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
                    if _outside(h2, kind) or _outside(h3, kind) or _outside(h4, kind) or _outside(hc, kind):
                        if exit_k < 0 or k < exit_k:
                            exit_k = k
                            exit_line = line
                        bad = True
                        break
                if bad:
                    break
                H[k + 1, line] = hc
                P[k + 1, line] = pc
    if exit_k >= 0:
        h_arr[exit_k + 1:] = np.nan
        psi_arr[exit_k + 1:] = np.nan
        return h_arr, psi_arr, (int(exit_k), int(exit_line))
    return h_arr, psi_arr, None
