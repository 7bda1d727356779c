# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled loops for the diagnostics: truncated energies and box oscillation.

All kernels take 3-D C-contiguous float64 arrays; 2-D fields are passed with
a trailing axis of length 1 by the dispatching wrapper.
"""
from libc.math cimport fabs


def truncated_energy(const double[:, :, ::1] f, double h, inv2h,
                     const unsigned char[:, :, ::1] mask=None):
    """Return (sum (f-h)_+^2, sum |D (f-h)_+|^2) over the mask (or everything).

    ``D`` is the periodic central difference with coefficients ``inv2h``.
    """
    cdef Py_ssize_t n0 = f.shape[0], n1 = f.shape[1], n2 = f.shape[2]
    cdef Py_ssize_t i, j, k, ip, im, jp, jm, kp, km
    cdef double c0 = inv2h[0], c1 = inv2h[1], c2 = inv2h[2]
    cdef double v, a, b, g, e_sum = 0.0, g_sum = 0.0
    cdef bint use_mask = mask is not None
    for i in range(n0):
        ip = i + 1 if i + 1 < n0 else 0
        im = i - 1 if i > 0 else n0 - 1
        for j in range(n1):
            jp = j + 1 if j + 1 < n1 else 0
            jm = j - 1 if j > 0 else n1 - 1
            for k in range(n2):
                if use_mask and not mask[i, j, k]:
                    continue
                kp = k + 1 if k + 1 < n2 else 0
                km = k - 1 if k > 0 else n2 - 1
                v = f[i, j, k] - h
                if v > 0.0:
                    e_sum += v * v
                a = f[ip, j, k] - h
                b = f[im, j, k] - h
                g = ((a if a > 0.0 else 0.0) - (b if b > 0.0 else 0.0)) * c0
                g_sum += g * g
                a = f[i, jp, k] - h
                b = f[i, jm, k] - h
                g = ((a if a > 0.0 else 0.0) - (b if b > 0.0 else 0.0)) * c1
                g_sum += g * g
                a = f[i, j, kp] - h
                b = f[i, j, km] - h
                g = ((a if a > 0.0 else 0.0) - (b if b > 0.0 else 0.0)) * c2
                g_sum += g * g
    return e_sum, g_sum


def box_mean_oscillation(const double[:, :, ::1] f, sides, strides):
    """Max over periodic boxes of (1/|Q|) sum_Q |f - mean_Q f|.

    Boxes have side lengths ``sides`` (in cells) and corners on multiples of
    ``strides``.
    """
    cdef Py_ssize_t n0 = f.shape[0], n1 = f.shape[1], n2 = f.shape[2]
    cdef Py_ssize_t s0 = sides[0], s1 = sides[1], s2 = sides[2]
    cdef Py_ssize_t t0 = strides[0], t1 = strides[1], t2 = strides[2]
    cdef Py_ssize_t o0, o1, o2, a, b, c, ia, ib, ic
    cdef double inv_count = 1.0 / (s0 * s1 * s2)
    cdef double mean, dev, best = 0.0
    for o0 in range(0, n0, t0):
        for o1 in range(0, n1, t1):
            for o2 in range(0, n2, t2):
                mean = 0.0
                for a in range(s0):
                    ia = (o0 + a) % n0
                    for b in range(s1):
                        ib = (o1 + b) % n1
                        for c in range(s2):
                            ic = (o2 + c) % n2
                            mean += f[ia, ib, ic]
                mean *= inv_count
                dev = 0.0
                for a in range(s0):
                    ia = (o0 + a) % n0
                    for b in range(s1):
                        ib = (o1 + b) % n1
                        for c in range(s2):
                            ic = (o2 + c) % n2
                            dev += fabs(f[ia, ib, ic] - mean)
                dev *= inv_count
                if dev > best:
                    best = dev
    return best
