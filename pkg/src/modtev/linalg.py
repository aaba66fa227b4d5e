"""Dense complex linear algebra: pivoted LU, one-sided Jacobi SVD, Tikhonov.

The SVD is the Hestenes one-sided Jacobi method with a round-robin pair
ordering, so each round rotates ``n/2`` disjoint column pairs at once with
array operations.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SingularMatrix",
    "NoConvergence",
    "SvdFactors",
    "lu_factor",
    "lu_solve",
    "svd",
    "tikhonov_solve",
    "tikhonov_residual_norm",
]

PIVOT_TOL = 1e-300


class SingularMatrix(ArithmeticError):
    """Raised when an LU pivot vanishes."""


class NoConvergence(ArithmeticError):
    """Raised when the Jacobi SVD exhausts its sweep budget."""


def _as_matrix(A):
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise ValueError("expected a 2-d array")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def lu_factor(A):
    """Row-pivoted LU factorization ``P A = L U`` packed into one array.

    Returns ``(lu, perm)`` where ``perm[i]`` is the original row placed at
    position ``i``.
    """
    lu = _as_matrix(A).copy()
    n, m = lu.shape
    if n != m:
        raise ValueError("lu_factor needs a square matrix")
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) < PIVOT_TOL:
            raise SingularMatrix(f"zero pivot in column {k}")
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1 :, k] /= lu[k, k]
        lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return lu, perm


def lu_solve(A, b, factored=None):
    """Solve ``A x = b`` by Gaussian elimination with partial pivoting.

    ``b`` may be a vector or a matrix of right-hand sides.  Pass the output
    of :func:`lu_factor` as ``factored`` to reuse a factorization.
    """
    lu, perm = factored if factored is not None else lu_factor(A)
    b = np.asarray(b, dtype=complex)
    n = lu.shape[0]
    if b.shape[0] != n:
        raise ValueError(f"right-hand side has {b.shape[0]} rows, expected {n}")
    x = b[perm].copy()
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1 :] @ x[i + 1 :]) / lu[i, i]
    return x


@dataclass(frozen=True)
class SvdFactors:
    """``A = u @ diag(s) @ v.conj().T`` with ``s`` descending."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def shape(self):
        return (self.u.shape[0], self.v.shape[0])

    def reconstruct(self):
        return (self.u * self.s) @ self.v.conj().T


def _round_robin(n):
    """Pairings for a round-robin tournament on ``n`` (even) players."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        rounds.append((np.array(players[:half]), np.array(players[half:][::-1])))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _complete_basis(Q, k):
    """Fill columns ``k:`` of ``Q`` with an orthonormal completion."""
    m = Q.shape[0]
    col = k
    for e in range(m):
        if col >= Q.shape[1]:
            break
        v = np.zeros(m, dtype=complex)
        v[e] = 1.0
        for _ in range(2):
            v -= Q[:, :col] @ (Q[:, :col].conj().T @ v)
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            Q[:, col] = v / nv
            col += 1
    return Q


def _jacobi_svd(A, tol, max_sweeps):
    m, n = A.shape
    pad = n % 2
    W = np.zeros((m, n + pad), dtype=complex)
    W[:, :n] = A
    V = np.eye(n + pad, dtype=complex)
    rounds = _round_robin(n + pad)
    for sweep in range(max_sweeps):
        off = 0.0
        for P, Q in rounds:
            wp, wq = W[:, P], W[:, Q]
            alpha = np.einsum("ij,ij->j", wp.conj(), wp).real
            beta = np.einsum("ij,ij->j", wq.conj(), wq).real
            gamma = np.einsum("ij,ij->j", wp.conj(), wq)
            mag = np.abs(gamma)
            denom = np.sqrt(alpha * beta)
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = np.where(denom > 0, mag / denom, 0.0)
            off = max(off, float(rel.max(initial=0.0)))
            act = rel > tol
            if not act.any():
                continue
            P, Q = P[act], Q[act]
            alpha, beta, gamma, mag = alpha[act], beta[act], gamma[act], mag[act]
            phase = gamma / mag
            zeta = (beta - alpha) / (2.0 * mag)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for M in (W, V):
                mp = M[:, P]
                mq = M[:, Q] * phase.conj()
                M[:, P] = c * mp - s * mq
                M[:, Q] = s * mp + c * mq
        if off <= tol:
            break
    else:
        raise NoConvergence(f"Jacobi SVD not converged after {max_sweeps} sweeps")
    W = W[:, :n]
    V = V[:n, :n]
    sig = np.linalg.norm(W, axis=0)
    order = np.argsort(-sig, kind="stable")
    sig = sig[order]
    W = W[:, order]
    V = V[:, order]
    U = np.zeros((m, n), dtype=complex)
    scale = sig[0] if n and sig[0] > 0 else 1.0
    nz = sig > 1e-300 * scale
    nz &= sig > 0
    U[:, nz] = W[:, nz] / sig[nz]
    k = int(nz.sum())
    if k < n:
        U = _complete_basis(U, k)
    return U, sig, V


def svd(A, method="jacobi", tol=1e-15, max_sweeps=60):
    """Thin singular value decomposition.

    Parameters
    ----------
    A : (m, n) array_like
    method : {"jacobi", "lapack"}
        ``"jacobi"`` runs the one-sided Jacobi iteration implemented here;
        ``"lapack"`` delegates to :func:`numpy.linalg.svd`.
    tol : float
        Convergence threshold on the largest normalized column inner product.
    max_sweeps : int

    Raises
    ------
    NoConvergence
    """
    A = _as_matrix(A)
    if method == "lapack":
        u, s, vh = np.linalg.svd(A, full_matrices=False)
        return SvdFactors(u, s, vh.conj().T)
    if method != "jacobi":
        raise ValueError(f"unknown svd method {method!r}")
    m, n = A.shape
    if m >= n:
        U, s, V = _jacobi_svd(A, tol, max_sweeps)
        return SvdFactors(U, s, V)
    U, s, V = _jacobi_svd(A.conj().T, tol, max_sweeps)
    return SvdFactors(V, s, U)


def tikhonov_solve(F, b, alpha):
    """Minimizer of ``||A g - b||^2 + alpha ||g||^2`` from the SVD of ``A``.

    ``g = sum_i s_i / (s_i^2 + alpha) <u_i, b> v_i``.  ``b`` may hold several
    right-hand sides as columns.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != F.u.shape[0]:
        raise ValueError("right-hand side length does not match the operator")
    coef = F.u.conj().T @ b
    filt = F.s / (F.s**2 + alpha)
    if b.ndim == 1:
        return F.v @ (filt * coef)
    return F.v @ (filt[:, None] * coef)


def tikhonov_residual_norm(F, b, alpha):
    """``||A g_alpha - b||`` without forming ``g_alpha``."""
    b = np.asarray(b, dtype=complex)
    coef = F.u.conj().T @ b
    perp = max(float(np.linalg.norm(b) ** 2 - np.linalg.norm(coef) ** 2), 0.0)
    damp = alpha / (F.s**2 + alpha)
    return float(np.sqrt(np.sum(np.abs(damp * coef) ** 2) + perp))
