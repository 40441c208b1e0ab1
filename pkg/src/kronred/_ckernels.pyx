# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled right-hand-side kernels; see ``_pykernels`` for the array layout."""

from libc.math cimport fabs, INFINITY
from libc.stdint cimport int64_t
from libc.stdlib cimport malloc, free

import numpy as np


def monomials(const int64_t[::1] cptr, const int64_t[::1] csp, const int64_t[::1] ccoef,
              const double[::1] x, double[::1] out):
    _monomials(cptr, csp, ccoef, x, out)
    return np.asarray(out)


cdef void _monomials(const int64_t[::1] cptr, const int64_t[::1] csp, const int64_t[::1] ccoef,
                     const double[::1] x, double[::1] out) noexcept nogil:
    cdef Py_ssize_t k, t, p
    cdef Py_ssize_t c = cptr.shape[0] - 1
    cdef double prod, xi
    for k in range(c):
        prod = 1.0
        for t in range(cptr[k], cptr[k + 1]):
            xi = x[csp[t]]
            for p in range(ccoef[t]):
                prod *= xi
        out[k] = prod


def edge_weights(const double[::1] ek, const int64_t[::1] gptr, const int64_t[::1] tptr,
                 const int64_t[::1] tsp, const double[::1] tcoef, const double[::1] x, double[::1] out):
    _edge_weights(ek, gptr, tptr, tsp, tcoef, x, out)
    return np.asarray(out)


cdef void _edge_weights(const double[::1] ek, const int64_t[::1] gptr, const int64_t[::1] tptr,
                        const int64_t[::1] tsp, const double[::1] tcoef, const double[::1] x,
                        double[::1] out) noexcept nogil:
    cdef Py_ssize_t e, g, t
    cdef double prod, s
    for e in range(ek.shape[0]):
        prod = 1.0
        for g in range(gptr[e], gptr[e + 1]):
            s = 1.0
            for t in range(tptr[g], tptr[g + 1]):
                s += tcoef[t] * x[tsp[t]]
            prod *= s
        out[e] = ek[e] / prod


def assemble_laplacian(const int64_t[::1] tails, const int64_t[::1] heads, const double[::1] w,
                       double[:, ::1] L):
    _laplacian(tails, heads, w, L)
    return np.asarray(L)


cdef void _laplacian(const int64_t[::1] tails, const int64_t[::1] heads, const double[::1] w,
                     double[:, ::1] L) noexcept nogil:
    cdef Py_ssize_t i, j, e
    for i in range(L.shape[0]):
        for j in range(L.shape[1]):
            L[i, j] = 0.0
    for e in range(w.shape[0]):
        L[heads[e], tails[e]] -= w[e]
        L[tails[e], tails[e]] += w[e]


def boundary_fluxes(const int64_t[::1] bkind, const double[::1] bval, const int64_t[::1] bsp,
                    const double[::1] x, double[::1] out):
    _boundary(bkind, bval, bsp, x, out)
    return np.asarray(out)


cdef void _boundary(const int64_t[::1] bkind, const double[::1] bval, const int64_t[::1] bsp,
                    const double[::1] x, double[::1] out) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(bkind.shape[0]):
        if bkind[k] == 1:
            out[k] = bval[k]
        elif bkind[k] == 2:
            out[k] = bval[k] * x[bsp[k]]
        else:
            out[k] = 0.0


def full_rhs(const int64_t[::1] cptr, const int64_t[::1] csp, const int64_t[::1] ccoef,
             const int64_t[::1] tails, const int64_t[::1] heads, const double[::1] ek,
             const int64_t[::1] gptr, const int64_t[::1] tptr, const int64_t[::1] tsp,
             const double[::1] tcoef, const int64_t[::1] bkind, const double[::1] bval,
             const int64_t[::1] bsp, const double[::1] x, double[::1] out):
    cdef Py_ssize_t c = cptr.shape[0] - 1
    cdef double[::1] mono = np.empty(c)
    cdef double[::1] w = np.empty(ek.shape[0])
    cdef double[::1] vb = np.empty(c)
    cdef double[:, ::1] L = np.empty((c, c))
    cdef Py_ssize_t i, j, t
    cdef double acc
    with nogil:
        _monomials(cptr, csp, ccoef, x, mono)
        _edge_weights(ek, gptr, tptr, tsp, tcoef, x, w)
        _laplacian(tails, heads, w, L)
        _boundary(bkind, bval, bsp, x, vb)
        for i in range(out.shape[0]):
            out[i] = 0.0
        for i in range(c):
            acc = vb[i]
            for j in range(c):
                acc -= L[i, j] * mono[j]
            for t in range(cptr[i], cptr[i + 1]):
                out[csp[t]] += ccoef[t] * acc
    return np.asarray(out)


cdef int _lu(double* a, Py_ssize_t n, Py_ssize_t* piv) noexcept nogil:
    """In-place row-major LU with partial pivoting; returns 1 on a zero pivot."""
    cdef Py_ssize_t i, j, k, p
    cdef double big, tmp, f
    for k in range(n):
        p = k
        big = fabs(a[k * n + k])
        for i in range(k + 1, n):
            if fabs(a[i * n + k]) > big:
                big = fabs(a[i * n + k])
                p = i
        piv[k] = p
        if big == 0.0:
            return 1
        if p != k:
            for j in range(n):
                tmp = a[k * n + j]
                a[k * n + j] = a[p * n + j]
                a[p * n + j] = tmp
        for i in range(k + 1, n):
            f = a[i * n + k] / a[k * n + k]
            a[i * n + k] = f
            for j in range(k + 1, n):
                a[i * n + j] -= f * a[k * n + j]
    return 0


cdef void _lu_solve(const double* a, Py_ssize_t n, const Py_ssize_t* piv, double* b,
                    Py_ssize_t nrhs) noexcept nogil:
    """Solve in place for ``nrhs`` right-hand sides stored row-major as n x nrhs."""
    cdef Py_ssize_t i, j, k
    cdef double tmp
    for k in range(n):
        if piv[k] != k:
            for j in range(nrhs):
                tmp = b[k * nrhs + j]
                b[k * nrhs + j] = b[piv[k] * nrhs + j]
                b[piv[k] * nrhs + j] = tmp
    for i in range(n):
        for k in range(i):
            for j in range(nrhs):
                b[i * nrhs + j] -= a[i * n + k] * b[k * nrhs + j]
    for i in range(n - 1, -1, -1):
        for k in range(i + 1, n):
            for j in range(nrhs):
                b[i * nrhs + j] -= a[i * n + k] * b[k * nrhs + j]
        for j in range(nrhs):
            b[i * nrhs + j] /= a[i * n + i]


cdef double _schur(const double[:, ::1] L, const int64_t[::1] kept, const int64_t[::1] removed,
                   const double[::1] vb, double[:, ::1] Lhat, double[::1] pvb) noexcept nogil:
    cdef Py_ssize_t nk = kept.shape[0]
    cdef Py_ssize_t nr = removed.shape[0]
    cdef Py_ssize_t i, j, k, width = nk + 1 + nr
    cdef double* a
    cdef double* rhs
    cdef Py_ssize_t* piv
    cdef double norm_a, norm_inv, col, cond
    for i in range(nk):
        for j in range(nk):
            Lhat[i, j] = L[kept[i], kept[j]]
        pvb[i] = vb[kept[i]]
    if nr == 0:
        return 1.0
    a = <double*> malloc(nr * nr * sizeof(double))
    rhs = <double*> malloc(nr * width * sizeof(double))
    piv = <Py_ssize_t*> malloc(nr * sizeof(Py_ssize_t))
    norm_a = 0.0
    for j in range(nr):
        col = 0.0
        for i in range(nr):
            a[i * nr + j] = L[removed[i], removed[j]]
            col += fabs(a[i * nr + j])
        if col > norm_a:
            norm_a = col
    # right-hand sides: [L21 | vb2 | I]
    for i in range(nr):
        for j in range(nk):
            rhs[i * width + j] = L[removed[i], kept[j]]
        rhs[i * width + nk] = vb[removed[i]]
        for j in range(nr):
            rhs[i * width + nk + 1 + j] = 1.0 if i == j else 0.0
    if _lu(a, nr, piv):
        free(a)
        free(rhs)
        free(piv)
        return INFINITY
    _lu_solve(a, nr, piv, rhs, width)
    norm_inv = 0.0
    for j in range(nr):
        col = 0.0
        for i in range(nr):
            col += fabs(rhs[i * width + nk + 1 + j])
        if col > norm_inv:
            norm_inv = col
    cond = norm_a * norm_inv
    for i in range(nk):
        for j in range(nk):
            for k in range(nr):
                Lhat[i, j] -= L[kept[i], removed[k]] * rhs[k * width + j]
        for k in range(nr):
            pvb[i] -= L[kept[i], removed[k]] * rhs[k * width + nk]
    free(a)
    free(rhs)
    free(piv)
    return cond


def schur(const double[:, ::1] L, const int64_t[::1] kept, const int64_t[::1] removed,
          const double[::1] vb, double[:, ::1] Lhat, double[::1] pvb):
    cdef double cond
    with nogil:
        cond = _schur(L, kept, removed, vb, Lhat, pvb)
    return cond


def reduced_rhs(const int64_t[::1] cptr, const int64_t[::1] csp, const int64_t[::1] ccoef,
                const int64_t[::1] tails, const int64_t[::1] heads, const double[::1] ek,
                const int64_t[::1] gptr, const int64_t[::1] tptr, const int64_t[::1] tsp,
                const double[::1] tcoef, const int64_t[::1] bkind, const double[::1] bval,
                const int64_t[::1] bsp, const int64_t[::1] kept, const int64_t[::1] removed,
                const double[::1] x, double[::1] out):
    cdef Py_ssize_t c = cptr.shape[0] - 1
    cdef Py_ssize_t nk = kept.shape[0]
    cdef double[::1] mono = np.empty(c)
    cdef double[::1] w = np.empty(ek.shape[0])
    cdef double[::1] vb = np.empty(c)
    cdef double[:, ::1] L = np.empty((c, c))
    cdef double[:, ::1] Lhat = np.empty((nk, nk))
    cdef double[::1] pvb = np.empty(nk)
    cdef Py_ssize_t i, j, t, k
    cdef double acc, cond
    with nogil:
        _monomials(cptr, csp, ccoef, x, mono)
        _edge_weights(ek, gptr, tptr, tsp, tcoef, x, w)
        _laplacian(tails, heads, w, L)
        _boundary(bkind, bval, bsp, x, vb)
        cond = _schur(L, kept, removed, vb, Lhat, pvb)
        if cond != INFINITY:
            for i in range(out.shape[0]):
                out[i] = 0.0
            for i in range(nk):
                acc = pvb[i]
                for j in range(nk):
                    acc -= Lhat[i, j] * mono[kept[j]]
                k = kept[i]
                for t in range(cptr[k], cptr[k + 1]):
                    out[csp[t]] += ccoef[t] * acc
    return cond
