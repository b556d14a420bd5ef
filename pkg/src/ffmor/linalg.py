"""Dense kernels: Lyapunov and Stein solvers, PSD factorization, Hermitian eigenproblems."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NoConvergence, NotPsd, NotStable

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class LyapunovSolution:
    P: np.ndarray
    residual_norm: float


def _hermitian_part(M):
    return (M + M.conj().T) / 2


def _schur(A):
    T, Q = scipy.linalg.schur(np.asarray(A, dtype=complex), output="complex")
    return T, Q


def _bartels_stewart_continuous(T, W):
    # T X + X T^* = -W with T upper triangular, solved column by column from the right
    n = T.shape[0]
    X = np.zeros((n, n), dtype=complex)
    Tc = T.conj()
    for j in range(n - 1, -1, -1):
        rhs = -W[:, j]
        if j + 1 < n:
            rhs = rhs - X[:, j + 1:] @ Tc[j, j + 1:]
        M = T.copy()
        M[np.diag_indices(n)] += Tc[j, j]
        X[:, j] = scipy.linalg.solve_triangular(M, rhs, check_finite=False)
    return X


def _bartels_stewart_discrete(T, W):
    # T X T^* - X + W = 0 with T upper triangular
    n = T.shape[0]
    X = np.zeros((n, n), dtype=complex)
    Tc = T.conj()
    for j in range(n - 1, -1, -1):
        rhs = -W[:, j]
        if j + 1 < n:
            rhs = rhs - T @ (X[:, j + 1:] @ Tc[j, j + 1:])
        M = Tc[j, j] * T
        M[np.diag_indices(n)] -= 1.0
        X[:, j] = scipy.linalg.solve_triangular(M, rhs, check_finite=False)
    return X


def _lyap_residual(A, P, W, discrete):
    if discrete:
        R = A @ P @ A.conj().T - P + W
    else:
        R = A @ P + P @ A.conj().T + W
    return R


def _solve_lyapunov(A, W, discrete, rtol, refine):
    A = np.asarray(A)
    W = _hermitian_part(np.asarray(W))
    T, Q = _schur(A)
    lam = np.diag(T)
    if discrete:
        if np.max(np.abs(lam)) >= 1 - 1e-12:
            raise NotStable(f"spectral radius {np.max(np.abs(lam)):.6g} >= 1")
        kernel = _bartels_stewart_discrete
    else:
        if np.max(lam.real) >= -1e-12:
            raise NotStable(f"spectral abscissa {np.max(lam.real):.6g} >= 0")
        kernel = _bartels_stewart_continuous
    Qh = Q.conj().T
    P = Q @ kernel(T, Qh @ W @ Q) @ Qh
    P = _hermitian_part(P)
    real_input = not (np.iscomplexobj(A) or np.iscomplexobj(W))
    if real_input:
        P = P.real
    R = _lyap_residual(A, P, W, discrete)
    res = np.linalg.norm(R)
    # backward-error scale: the stated target max(1,|W|) alone is unreachable once |P| is large
    normA = np.linalg.norm(A)
    scale = max(1.0, np.linalg.norm(W), (normA ** 2 if discrete else normA) * np.linalg.norm(P))
    for _ in range(refine):
        if res <= rtol * max(1.0, np.linalg.norm(W)):
            break
        dP = Q @ kernel(T, Qh @ _hermitian_part(R) @ Q) @ Qh
        dP = _hermitian_part(dP)
        Pn = P + (dP.real if real_input else dP)
        Rn = _lyap_residual(A, Pn, W, discrete)
        if np.linalg.norm(Rn) >= res:
            break
        P, R, res = Pn, Rn, np.linalg.norm(Rn)
    if not res <= rtol * scale:
        raise NoConvergence(f"Lyapunov residual {res:.3e} exceeds {rtol:.1e} * {scale:.3e}")
    return LyapunovSolution(P, float(res))


def solve_lyapunov_continuous(A, W, rtol: float = 1e-10, refine: int = 2) -> LyapunovSolution:
    """Solve ``A P + P A^* + W = 0`` by complex-Schur Bartels-Stewart.

    Up to ``refine`` steps of iterative refinement are applied while the
    residual exceeds ``rtol * max(1, ||W||_F)``. Raises :class:`NotStable`
    unless every eigenvalue has real part below ``-1e-12``.
    """
    return _solve_lyapunov(A, W, False, rtol, refine)


def solve_lyapunov_discrete(A, W, rtol: float = 1e-10, refine: int = 2) -> LyapunovSolution:
    """Solve the Stein equation ``A P A^* - P + W = 0``; requires spectral radius below one."""
    return _solve_lyapunov(A, W, True, rtol, refine)


def eig_hermitian(M):
    """Eigenvalues in descending order and orthonormal eigenvectors of a Hermitian matrix."""
    M = _hermitian_part(np.asarray(M))
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from None
    return w[::-1].copy(), V[:, ::-1].copy()


def cholesky_psd(P, clip: float = 1e-10, reject: float = 1e-8):
    """Factor ``U`` with ``P = U U^*`` for a Hermitian positive semidefinite ``P``.

    A plain Cholesky factor is returned when ``P`` is numerically definite.
    Otherwise eigenvalues above ``-clip*||P||`` are clipped to zero and an
    eigen-based factor of the same rank is returned. Raises :class:`NotPsd`
    when the smallest eigenvalue is below ``-reject*||P||``.
    """
    P = _hermitian_part(np.asarray(P))
    normP = np.linalg.norm(P, 2)
    w, V = eig_hermitian(P)
    if w.size and w[-1] < -reject * normP:
        raise NotPsd(f"smallest eigenvalue {w[-1]:.3e} < -{reject:g} * ||P||")
    if w.size and w[-1] > clip * normP:
        try:
            return np.linalg.cholesky(P)
        except np.linalg.LinAlgError:
            pass
    w = np.where(w > 0, w, 0.0)
    return V * np.sqrt(w)


def eigenvalues_general(A) -> np.ndarray:
    try:
        return np.linalg.eigvals(np.asarray(A))
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from None


def kronecker_lyapunov(A, W, discrete: bool = False) -> np.ndarray:
    """Dense Kronecker-product solution of the Lyapunov/Stein equation.

    O(n^6); meant as a test oracle for small ``n``.
    """
    A = np.asarray(A, dtype=complex)
    W = np.asarray(W, dtype=complex)
    n = A.shape[0]
    I = np.eye(n)
    # column-major vec: vec(A X B) = (B^T kron A) vec(X)
    if discrete:
        K = np.kron(A.conj(), A) - np.eye(n * n)
    else:
        K = np.kron(I, A) + np.kron(A.conj(), I)
    x = np.linalg.solve(K, -W.reshape(-1, order="F"))
    return x.reshape(n, n, order="F")
