"""Lyapunov balanced truncation and singular perturbation approximation."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import BadOrder, NearlyNonMinimal, NotStable, SingularResidualization
from .linalg import (cholesky_psd, solve_lyapunov_continuous,
                     solve_lyapunov_discrete)
from .model import FrequencyRange, StateSpaceModel

_EPS = np.finfo(float).eps
NONMINIMAL_RATIO = 1e-13


@dataclass(frozen=True, eq=False)
class BalancedRealization:
    """Balanced model with ``P_c = P_o = diag(hankel_sv)``.

    ``T`` and ``Tinv`` map between the source coordinates and the balanced
    ones, ``model = (Tinv A T, Tinv B, C T, D)``.
    """

    model: StateSpaceModel
    hankel_sv: np.ndarray
    T: np.ndarray
    Tinv: np.ndarray
    source: StateSpaceModel
    controllability_factor: np.ndarray
    eigvecs: np.ndarray

    @property
    def n(self):
        return self.source.n


@dataclass(frozen=True, eq=False)
class ReductionResult:
    """Reduced model together with its a priori error bound and provenance.

    ``bound == 2 * scale * sum(tail_sv)``; ``scale`` is 1 for entire-range
    bounds and ``(rho^2 + w^2)^{1/2}`` for finite-frequency ones.
    """

    reduced: StateSpaceModel
    tail_sv: np.ndarray
    bound: float
    bound_kind: str
    method: str
    band: FrequencyRange
    scale: float = 1.0
    rho: Optional[float] = None
    routing: Optional[str] = None
    hankel_sv: Optional[np.ndarray] = None
    mapped: Optional[StateSpaceModel] = None
    mapped_reduced: Optional[StateSpaceModel] = None
    kind: Optional[object] = None

    @property
    def order(self) -> int:
        return self.reduced.n

    @property
    def reduced_stable(self) -> bool:
        return self.reduced.is_stable()


def gramians(model: StateSpaceModel):
    """Controllability and observability Gramians as :class:`LyapunovSolution` objects."""
    A, B, C = model.A, model.B, model.C
    solve = solve_lyapunov_continuous if model.is_continuous else solve_lyapunov_discrete
    try:
        Pc = solve(A, B @ B.conj().T)
        Po = solve(A.conj().T, C.conj().T @ C)
    except NotStable as exc:
        raise NotStable(f"balancing needs a stable model: {exc}") from None
    return Pc, Po


def hankel_singular_values(model: StateSpaceModel) -> np.ndarray:
    return balance(model).hankel_sv


def balance(model: StateSpaceModel) -> BalancedRealization:
    """Square-root balancing.

    With ``P_c = U U^*``, ``P_o = L L^*`` and the SVD ``L^* U = W S V^*``
    (so ``U^* P_o U = V S^2 V^*``), the transform is ``T = U V S^{-1/2}``,
    ``T^{-1} = S^{-1/2} W^* L^*``. Working on the factor product keeps the
    small Hankel singular values accurate relative to ``sigma_1`` rather than
    ``sigma_1^2``.
    """
    Pc, Po = gramians(model)
    U = cholesky_psd(Pc.P)
    L = cholesky_psd(Po.P)
    W, hsv, Vh = scipy.linalg.svd(L.conj().T @ U, lapack_driver="gesvd")
    V = Vh.conj().T
    if hsv[0] == 0:
        raise NotStable("all Hankel singular values vanish (zero transfer function?)")
    if hsv[-1] < NONMINIMAL_RATIO * hsv[0]:
        warnings.warn(f"Hankel singular values span {hsv[0]:.3e}..{hsv[-1]:.3e}; "
                      "balancing transform is ill-conditioned", NearlyNonMinimal, stacklevel=2)
    floor = np.maximum(hsv, hsv[0] * _EPS)
    w = 1.0 / np.sqrt(floor)
    T = (U @ V) * w
    Tinv = (w[:, None] * W.conj().T) @ L.conj().T
    A, B, C, D = model.A, model.B, model.C, model.D
    bal = StateSpaceModel(Tinv @ A @ T, Tinv @ B, C @ T, D, model.time_domain)
    return BalancedRealization(bal, hsv, T, Tinv, model, U, V)


def _check_order(r, n):
    if not isinstance(r, (int, np.integer)) or not 1 <= r < n:
        raise BadOrder(f"reduced order must satisfy 1 <= r < n={n}, got {r!r}")


def _projection(bal: BalancedRealization, r: int):
    return bal.T[:, :r], bal.Tinv[:r, :]


def truncate(bal: BalancedRealization, r: int) -> ReductionResult:
    """Keep the ``r`` leading balanced states; entire-range bound ``2 * sum(sigma_{r+1..n})``."""
    _check_order(r, bal.n)
    src = bal.source
    Tr, Wr = _projection(bal, r)
    reduced = StateSpaceModel(Wr @ src.A @ Tr, Wr @ src.B, src.C @ Tr, src.D, src.time_domain)
    tail = bal.hankel_sv[r:].copy()
    return ReductionResult(reduced, tail, 2.0 * 1.0 * float(np.sum(tail)), "EF", "LyaBT",
                           FrequencyRange.ef(), hankel_sv=bal.hankel_sv)


def _rcond(M):
    if M.size == 0:
        return 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, _ = scipy.linalg.lu_factor(M, check_finite=False)
    func = scipy.linalg.lapack.zgecon if np.iscomplexobj(lu) else scipy.linalg.lapack.dgecon
    return func(lu, np.linalg.norm(M, 1), norm="1")[0]


def spa(bal: BalancedRealization, r: int) -> ReductionResult:
    """Singular perturbation approximation: residualize the states ``r+1..n``.

    The continuous-time result matches the steady-state gain ``G(0)``; the
    discrete-time one matches ``G(1)``.
    """
    _check_order(r, bal.n)
    src = bal.source
    Tr, Wr = _projection(bal, r)
    # complement spanned by unscaled balancing directions; residualization is
    # invariant to the basis of the discarded block, so the tiny trailing
    # Hankel singular values never get divided by
    S = np.hstack([Tr, bal.controllability_factor @ bal.eigvecs[:, r:]])
    if _rcond(S) < _EPS:
        raise SingularResidualization("controllability Gramian is singular; no complement basis")
    A = np.linalg.solve(S, src.A @ S)
    B = np.linalg.solve(S, src.B)
    C = src.C @ S
    A11, A12, A21, A22 = A[:r, :r], A[:r, r:], A[r:, :r], A[r:, r:]
    B1, B2 = B[:r], B[r:]
    C1, C2 = C[:, :r], C[:, r:]
    k = bal.n - r
    M = -A22 if src.is_continuous else np.eye(k) - A22
    if _rcond(M) < _EPS:
        raise SingularResidualization("trailing block cannot be residualized (singular)")
    X = np.linalg.solve(M, np.hstack([A21, B2]))
    XA, XB = X[:, :r], X[:, r:]
    reduced = StateSpaceModel(A11 + A12 @ XA, B1 + A12 @ XB, C1 + C2 @ XA, src.D + C2 @ XB,
                              src.time_domain)
    tail = bal.hankel_sv[r:].copy()
    return ReductionResult(reduced, tail, 2.0 * 1.0 * float(np.sum(tail)), "EF", "SPA",
                           FrequencyRange.ef(), hankel_sv=bal.hankel_sv)


def lyabt(model: StateSpaceModel, r: int) -> ReductionResult:
    return truncate(balance(model), r)


def ef_bounds(hankel_sv) -> np.ndarray:
    """Entire-range bound for every order: entry ``r-1`` is ``2 * sum(sigma_{r+1..n})``."""
    s = np.asarray(hankel_sv, dtype=float)
    tails = np.cumsum(s[::-1])[::-1]
    return 2.0 * np.append(tails[1:], 0.0)
