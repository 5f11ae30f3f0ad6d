"""Dense matrix kernel: ordered real Schur forms and Riccati solvers.

Every Riccati solve in the package goes through one route: balance the
Hamiltonian, compute an ordered real Schur form and read the stabilizing
solution off the stable invariant subspace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.linalg as la

__all__ = [
    "NumericConfig",
    "DEFAULT_CONFIG",
    "RiccatiError",
    "ImaginaryAxisError",
    "SchurConvergenceError",
    "SchurResult",
    "as_matrix",
    "schur_ordered",
    "hamiltonian_has_imaginary_eig",
    "stabilizing_solution",
    "care",
    "care_residual",
]


@dataclass(frozen=True)
class NumericConfig:
    """Tolerances shared by the solvers.

    Attributes
    ----------
    imag_axis_tol
        Relative distance from the imaginary axis below which a Hamiltonian
        eigenvalue counts as lying on it.
    care_residual_rtol
        Accepted Riccati residual relative to ``max(1, ||Q||_F)``.
    symmetry_tol
        Accepted asymmetry of a Riccati solution, relative to its norm.
    psd_tol
        Accepted negative eigenvalue of a PSD solution, relative to its norm.
    subspace_cond_max
        Largest accepted condition number of the ``U1`` block of the
        stable invariant subspace basis.
    """

    imag_axis_tol: float = 1e-12
    care_residual_rtol: float = 1e-8
    symmetry_tol: float = 1e-10
    psd_tol: float = 1e-8
    subspace_cond_max: float = 1e12


DEFAULT_CONFIG = NumericConfig()


class RiccatiError(ArithmeticError):
    """A Riccati equation has no stabilizing solution (or it was not found)."""


class ImaginaryAxisError(RiccatiError):
    """The Hamiltonian has eigenvalues on the imaginary axis."""


class SchurConvergenceError(RiccatiError):
    """The QR iteration behind the Schur form did not converge."""


@dataclass(frozen=True)
class SchurResult:
    """Ordered real Schur decomposition ``M = Q T Q^T``.

    ``sdim`` counts the leading eigenvalues that satisfied the selection.
    """

    Q: np.ndarray
    T: np.ndarray
    eig: np.ndarray
    sdim: int


Selector = Union[str, Callable[[complex], bool]]

_SELECTORS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "lhp": lambda lam: lam.real < 0.0,
    "rhp": lambda lam: lam.real > 0.0,
    "iuc": lambda lam: np.abs(lam) < 1.0,
    "ouc": lambda lam: np.abs(lam) > 1.0,
}


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Return ``x`` as a finite 2-D float array.

    Scalars become 1x1 and vectors become a single row.
    """
    arr = np.array(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ValueError(f"{name} must be at most 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _square(M: np.ndarray, name: str) -> np.ndarray:
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return M


def _quasi_triangular_eigs(T: np.ndarray) -> np.ndarray:
    """Eigenvalues of a real quasi-triangular matrix in diagonal order."""
    n = T.shape[0]
    out = np.empty(n, dtype=complex)
    k = 0
    while k < n:
        if k + 1 < n and T[k + 1, k] != 0.0:
            out[k : k + 2] = np.linalg.eigvals(T[k : k + 2, k : k + 2])
            out[k : k + 2] = sorted(out[k : k + 2], key=lambda z: -z.imag)
            k += 2
        else:
            out[k] = T[k, k]
            k += 1
    return out


def schur_ordered(M, select: Selector = "lhp") -> SchurResult:
    """Real Schur form with the selected eigenvalues moved to the leading block.

    Parameters
    ----------
    M
        Square real matrix.
    select
        ``"lhp"``, ``"rhp"``, ``"iuc"``, ``"ouc"`` or a callable taking a
        complex eigenvalue and returning whether it belongs in front.

    Raises
    ------
    SchurConvergenceError
        If LAPACK reports that the QR iteration failed.
    """
    M = _square(M, "M")
    if isinstance(select, str):
        try:
            vec = _SELECTORS[select]
        except KeyError:
            raise ValueError(f"unknown selector {select!r}") from None
        sort = lambda re, im: vec(np.asarray(re) + 1j * np.asarray(im))  # noqa: E731
    else:
        sort = lambda re, im: bool(select(complex(re, im)))  # noqa: E731
    if M.shape[0] == 0:
        return SchurResult(np.zeros((0, 0)), np.zeros((0, 0)), np.zeros(0, complex), 0)
    try:
        T, Q, sdim = la.schur(M, output="real", sort=sort)
    except (la.LinAlgError, ValueError) as exc:
        raise SchurConvergenceError(str(exc)) from exc
    return SchurResult(Q=Q, T=T, eig=_quasi_triangular_eigs(T), sdim=int(sdim))


def hamiltonian_has_imaginary_eig(H, tol: float = DEFAULT_CONFIG.imag_axis_tol) -> bool:
    """True iff some eigenvalue of ``H`` has ``|Re| <= tol * max(1, ||H||_F)``."""
    H = _square(H, "H")
    if H.shape[0] % 2:
        raise ValueError("Hamiltonian must have even dimension")
    if H.shape[0] == 0:
        return False
    lam = np.linalg.eigvals(H)
    return bool(np.any(np.abs(lam.real) <= tol * max(1.0, np.linalg.norm(H))))


def stabilizing_solution(H, config: NumericConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Stabilizing solution ``X = U2 U1^{-1}`` of the Riccati equation behind ``H``.

    ``H`` is a ``2n x 2n`` Hamiltonian. It is diagonally balanced first; the
    imaginary-axis test is done on the balanced matrix so that badly scaled
    physical units do not swamp the tolerance.

    Raises
    ------
    ImaginaryAxisError
        Eigenvalues on the imaginary axis (no stabilizing solution).
    RiccatiError
        The stable subspace is not a graph (``U1`` singular) or has the
        wrong dimension.
    """
    H = _square(H, "H")
    n2 = H.shape[0]
    if n2 % 2:
        raise ValueError("Hamiltonian must have even dimension")
    n = n2 // 2
    if n == 0:
        return np.zeros((0, 0))
    Hb, (scale, _) = la.matrix_balance(H, permute=False, separate=True)
    if hamiltonian_has_imaginary_eig(Hb, config.imag_axis_tol):
        raise ImaginaryAxisError("Hamiltonian has eigenvalues on the imaginary axis")
    res = schur_ordered(Hb, "lhp")
    if res.sdim != n:
        raise RiccatiError(f"stable subspace has dimension {res.sdim}, expected {n}")
    U = scale[:, None] * res.Q[:, :n]
    U1, U2 = U[:n], U[n:]
    # Column scaling of U does not change X but keeps cond(U1) meaningful.
    U1n = U1 / np.linalg.norm(U, axis=0)
    if np.linalg.cond(U1n) > config.subspace_cond_max:
        raise RiccatiError("stable invariant subspace is not a graph (U1 singular)")
    X = np.linalg.solve(U1.T, U2.T).T
    return 0.5 * (X + X.T)


def care_residual(A, B, Q, R, X) -> np.ndarray:
    """``A^T X + X A - X B R^{-1} B^T X + Q``."""
    A, B, Q, R, X = (as_matrix(m) for m in (A, B, Q, R, X))
    return A.T @ X + X @ A - X @ B @ np.linalg.solve(R, B.T @ X) + Q


def care(A, B, Q, R, config: NumericConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Stabilizing solution of ``A^T X + X A - X B R^{-1} B^T X + Q = 0``.

    Parameters
    ----------
    A : (n, n) array
    B : (n, m) array
    Q : (n, n) symmetric positive semidefinite array
    R : (m, m) symmetric positive definite array

    Returns
    -------
    X : (n, n) array
        Symmetric, with ``A - B R^{-1} B^T X`` Hurwitz.

    Raises
    ------
    ValueError
        Shape errors or ``R`` not positive definite.
    ImaginaryAxisError
        The Hamiltonian has imaginary-axis eigenvalues.
    RiccatiError
        Any other failure to extract a stabilizing solution.
    """
    A = _square(A, "A")
    n = A.shape[0]
    B = as_matrix(B, "B")
    if B.shape[0] != n:
        raise ValueError(f"B must have {n} rows, got {B.shape}")
    m = B.shape[1]
    Q = _square(Q, "Q")
    R = _square(R, "R")
    if Q.shape != (n, n) or R.shape != (m, m):
        raise ValueError("Q must be n x n and R must be m x m")
    if not np.allclose(R, R.T, rtol=0, atol=1e-12 * max(1.0, np.abs(R).max())):
        raise ValueError("R must be symmetric")
    try:
        np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        raise ValueError("R must be positive definite") from None
    Q = 0.5 * (Q + Q.T)
    G = B @ np.linalg.solve(R, B.T)
    H = np.block([[A, -G], [-Q, -A.T]])
    X = stabilizing_solution(H, config)
    if n and np.max(np.linalg.eigvals(A - G @ X).real) >= 0.0:
        raise RiccatiError("solution is not stabilizing")
    return X
