"""Pure numpy implementation of the right-hand-side kernels.

Mirrors ``_ckernels.pyx`` function for function; used when the compiled
extension is unavailable or ``KRONRED_PURE_PYTHON=1`` is set.

Flat model layout (all int arrays int64):

* complexes in CSR form: ``cptr`` (c+1), ``csp`` species, ``ccoef`` coefficients
* edges: ``tails``, ``heads``, ``ek`` rate constants
* denominators: ``gptr`` (r+1) indexes groups per edge, ``tptr`` (G+1) indexes
  terms per group, ``tsp``/``tcoef`` the term species and coefficients
* boundary per complex: ``bkind`` (0 none, 1 constant, 2 linear), ``bval``, ``bsp``
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg


def monomials(cptr, csp, ccoef, x, out):
    c = len(cptr) - 1
    for k in range(c):
        prod = 1.0
        for t in range(cptr[k], cptr[k + 1]):
            xi = x[csp[t]]
            for _ in range(ccoef[t]):
                prod *= xi
        out[k] = prod
    return out


def edge_weights(ek, gptr, tptr, tsp, tcoef, x, out):
    r = len(ek)
    if len(tsp):
        vals = 1.0 + np.add.reduceat(tcoef * x[tsp], tptr[:-1]) if len(tptr) > 1 else np.empty(0)
    else:
        vals = np.empty(0)
    for e in range(r):
        prod = 1.0
        for g in range(gptr[e], gptr[e + 1]):
            prod *= vals[g]
        out[e] = ek[e] / prod
    return out


def assemble_laplacian(tails, heads, w, L):
    L[:] = 0.0
    np.add.at(L, (heads, tails), -w)
    np.add.at(L, (tails, tails), w)
    return L


def boundary_fluxes(bkind, bval, bsp, x, out):
    out[:] = np.where(bkind == 1, bval, 0.0)
    lin = bkind == 2
    out[lin] = bval[lin] * x[bsp[lin]]
    return out


def _species_product(cptr, csp, ccoef, complexes, y, m):
    out = np.zeros(m)
    for pos, k in enumerate(complexes):
        for t in range(cptr[k], cptr[k + 1]):
            out[csp[t]] += ccoef[t] * y[pos]
    return out


def full_rhs(cptr, csp, ccoef, tails, heads, ek, gptr, tptr, tsp, tcoef, bkind, bval, bsp, x, out):
    c = len(cptr) - 1
    mono = monomials(cptr, csp, ccoef, x, np.empty(c))
    w = edge_weights(ek, gptr, tptr, tsp, tcoef, x, np.empty(len(ek)))
    L = assemble_laplacian(tails, heads, w, np.empty((c, c)))
    vb = boundary_fluxes(bkind, bval, bsp, x, np.empty(c))
    y = vb - L @ mono
    out[:] = _species_product(cptr, csp, ccoef, range(c), y, len(out))
    return out


def schur(L, kept, removed, vb, Lhat, pvb):
    """Kron-reduce ``L`` onto ``kept``; returns the 1-norm condition of L22.

    Returns ``inf`` (leaving outputs untouched) when L22 is exactly singular.
    """
    L11 = L[np.ix_(kept, kept)]
    if len(removed) == 0:
        Lhat[:] = L11
        pvb[:] = vb[kept]
        return 1.0
    L12 = L[np.ix_(kept, removed)]
    L21 = L[np.ix_(removed, kept)]
    L22 = L[np.ix_(removed, removed)]
    with warnings.catch_warnings():
        # an exactly zero pivot is reported through the return value
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(L22, check_finite=False)
    if np.any(np.diag(lu) == 0.0):
        return np.inf
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(len(removed)), check_finite=False)
    cond = np.abs(L22).sum(axis=0).max() * np.abs(inv).sum(axis=0).max()
    W = scipy.linalg.lu_solve((lu, piv), L21, check_finite=False)
    u = scipy.linalg.lu_solve((lu, piv), vb[removed], check_finite=False)
    Lhat[:] = L11 - L12 @ W
    pvb[:] = vb[kept] - L12 @ u
    return float(cond)


def reduced_rhs(cptr, csp, ccoef, tails, heads, ek, gptr, tptr, tsp, tcoef, bkind, bval, bsp, kept, removed, x, out):
    c = len(cptr) - 1
    nk = len(kept)
    mono = monomials(cptr, csp, ccoef, x, np.empty(c))
    w = edge_weights(ek, gptr, tptr, tsp, tcoef, x, np.empty(len(ek)))
    L = assemble_laplacian(tails, heads, w, np.empty((c, c)))
    vb = boundary_fluxes(bkind, bval, bsp, x, np.empty(c))
    Lhat = np.empty((nk, nk))
    pvb = np.empty(nk)
    cond = schur(L, kept, removed, vb, Lhat, pvb)
    if not np.isfinite(cond):
        return cond
    y = pvb - Lhat @ mono[kept]
    out[:] = _species_product(cptr, csp, ccoef, kept, y, len(out))
    return cond
