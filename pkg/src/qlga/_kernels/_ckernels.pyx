# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Signatures mirror ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange

cnp.import_array()


DEF MAXCH = 64


cdef inline void _sweep(const double *p, const double *sr, const double *si,
                        const double *ph, const Py_ssize_t *dd, double *o,
                        Py_ssize_t s, const int nch) noexcept nogil:
    # Called with literal channel counts so the compiler can unroll.
    cdef double xr[MAXCH]
    cdef double xi[MAXCH]
    cdef double ar, ai, tr
    cdef int j, k
    cdef Py_ssize_t t
    for j in range(nch):
        xr[j] = p[2 * (s * nch + j)]
        xi[j] = p[2 * (s * nch + j) + 1]
    for k in range(nch):
        ar = 0.0
        ai = 0.0
        for j in range(nch):
            ar = ar + sr[k * nch + j] * xr[j] - si[k * nch + j] * xi[j]
            ai = ai + sr[k * nch + j] * xi[j] + si[k * nch + j] * xr[j]
        if ph != NULL:
            tr = ar * ph[2 * s] - ai * ph[2 * s + 1]
            ai = ar * ph[2 * s + 1] + ai * ph[2 * s]
            ar = tr
        t = dd[s * nch + k] * nch + k
        o[2 * t] = ar
        o[2 * t + 1] = ai


def stream_collide(const double complex[:, ::1] psi,
                   const double complex[:, ::1] S,
                   const double complex[::1] phase,
                   const Py_ssize_t[:, ::1] dest,
                   double complex[:, ::1] out,
                   int nthreads=1):
    """Collide each site with ``S`` (times ``phase``) and scatter to ``dest``.

    Every output slot is written exactly once, so the result does not depend
    on the thread count.
    """
    cdef Py_ssize_t n = psi.shape[0]
    cdef int nch = <int> psi.shape[1]
    if nch > MAXCH:
        raise ValueError(f"at most {MAXCH} channels supported")
    cdef double sr[MAXCH * MAXCH]
    cdef double si[MAXCH * MAXCH]
    cdef Py_ssize_t s
    cdef int j, k
    cdef const double *src = <const double *> &psi[0, 0]
    cdef const double *ph = <const double *> &phase[0] if phase.shape[0] > 0 else NULL
    cdef double *dst = <double *> &out[0, 0]
    cdef const Py_ssize_t *dd = &dest[0, 0]
    for k in range(nch):
        for j in range(nch):
            sr[k * nch + j] = S[k, j].real
            si[k * nch + j] = S[k, j].imag
    if nthreads < 1:
        nthreads = 1
    with nogil:
        if nthreads == 1:
            # Serial path keeps the specialized sweeps inlinable.
            if nch == 2:
                for s in range(n):
                    _sweep(src, sr, si, ph, dd, dst, s, 2)
            elif nch == 4:
                for s in range(n):
                    _sweep(src, sr, si, ph, dd, dst, s, 4)
            elif nch == 6:
                for s in range(n):
                    _sweep(src, sr, si, ph, dd, dst, s, 6)
            else:
                for s in range(n):
                    _sweep(src, sr, si, ph, dd, dst, s, nch)
        elif nch == 2:
            for s in prange(n, schedule="static", num_threads=nthreads):
                _sweep(src, sr, si, ph, dd, dst, s, 2)
        elif nch == 4:
            for s in prange(n, schedule="static", num_threads=nthreads):
                _sweep(src, sr, si, ph, dd, dst, s, 4)
        elif nch == 6:
            for s in prange(n, schedule="static", num_threads=nthreads):
                _sweep(src, sr, si, ph, dd, dst, s, 6)
        else:
            for s in prange(n, schedule="static", num_threads=nthreads):
                _sweep(src, sr, si, ph, dd, dst, s, nch)
    return np.asarray(out)


def collide_site(const double complex[::1] c,
                 const double complex[:, ::1] T,
                 const unsigned char[::1] pat,
                 const unsigned char[::1] jpos,
                 const long long[:, ::1] contrib,
                 const long long[:, ::1] group,
                 const long long[::1] group_size,
                 double complex[::1] out,
                 int nthreads=1):
    """Apply the site matrix ``T`` at one site of a fixed-number sector."""
    cdef Py_ssize_t dim = c.shape[0]
    cdef Py_ssize_t i, g, base
    cdef int p, q, j
    cdef double complex acc
    if nthreads < 1:
        nthreads = 1
    with nogil:
        for i in prange(dim, schedule="static", num_threads=nthreads):
            p = pat[i]
            j = jpos[i]
            base = i - contrib[p, j]
            acc = 0
            for g in range(group_size[p]):
                q = <int> group[p, g]
                acc = acc + T[p, q] * c[base + contrib[q, j]]
            out[i] = acc
    return np.asarray(out)
