"""Active-set nonnegative least squares (Lawson-Hanson) with an optional linear penalty."""
from __future__ import annotations

import numpy as np
from scipy.linalg import qr, solve_triangular

__all__ = ["nnls"]


def _solve_passive(A_p, b, c_p):
    """Unconstrained minimizer of ``1/2 ||A_p z - b||^2 + c_p . z``."""
    if not np.any(c_p):
        return np.linalg.lstsq(A_p, b, rcond=None)[0]
    q, r = qr(A_p, mode="economic")
    y = solve_triangular(r, c_p, trans="T")
    return solve_triangular(r, q.T @ b - y)


def nnls(A, b, c=None, maxiter=None, tol=None):
    """Minimize ``1/2 ||A x - b||^2 + c . x`` subject to ``x >= 0``.

    Parameters
    ----------
    A : array_like, shape (m, n)
    b : array_like, shape (m,)
    c : array_like, shape (n,), optional
        Linear penalty (zero by default, giving plain NNLS).
    maxiter : int, optional
        Bound on inner iterations (default ``3 n``).
    tol : float, optional
        Dual feasibility tolerance.

    Returns
    -------
    x : ndarray, shape (n,)
        Solution; every component is exactly ``>= 0``.
    rnorm : float
        ``||A x - b||``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    c = np.zeros(n) if c is None else np.asarray(c, dtype=float)
    if maxiter is None:
        maxiter = 3 * n
    if tol is None:
        # roundoff in A^T r is about eps * |A_j| * |b|; a looser bound stops early on near-collinear columns
        tol = 64 * np.finfo(float).eps * np.linalg.norm(A, axis=0).max(initial=1.0) * max(1.0, np.linalg.norm(b))

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    blocked = np.zeros(n, dtype=bool)
    dual = A.T @ b - c
    it = 0
    bnorm = np.linalg.norm(b)
    while True:
        resid = b - A @ x
        if np.linalg.norm(resid) <= 4 * np.finfo(float).eps * bnorm * np.sqrt(m):
            break
        cand = np.where(passive | blocked, -np.inf, dual)
        j = int(np.argmax(cand))
        if cand[j] <= tol:
            break
        passive[j] = True
        moved = False
        while True:
            it += 1
            if it > maxiter:
                raise RuntimeError("nnls: iteration limit reached")
            idx = np.flatnonzero(passive)
            z = _solve_passive(A[:, idx], b, c[idx])
            if np.all(z > 0):
                x[:] = 0.0
                x[idx] = z
                moved = True
                break
            neg = z <= 0
            xi = x[idx]
            # step towards z only as far as the first passive variable hitting zero
            alpha = np.min(xi[neg] / (xi[neg] - z[neg]))
            if alpha > 0:
                moved = True
            xi = xi + alpha * (z - xi)
            xi[np.argmin(np.where(neg, xi, np.inf))] = 0.0
            xi[xi <= 10 * np.finfo(float).eps * np.abs(xi).max(initial=1.0)] = 0.0
            x[:] = 0.0
            x[idx] = xi
            passive[idx[xi == 0]] = False
            if not passive.any():
                break
        # a column that cannot enter without moving x is skipped until x changes
        if moved:
            blocked[:] = False
        else:
            blocked[j] = True
        dual = A.T @ (b - A @ x) - c
        if passive.sum() >= m and not np.any(c):
            # a full passive set with zero residual cannot improve further
            if np.linalg.norm(b - A @ x) <= 1e3 * np.finfo(float).eps * bnorm * np.sqrt(m):
                break
    return x, float(np.linalg.norm(A @ x - b))
