"""Small dense linear-algebra helpers shared by all modules."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import BranchError

# scipy's expm is scaling-and-squaring with Pade approximants,
# which is accurate to roughly machine precision for the matrix sizes used here.
expm = sla.expm


def dexp_series(A: np.ndarray, tol: float = 1e-16, max_terms: int = 200) -> np.ndarray:
    """Sum_{n>=0} A^n / (n+1)!, truncated once a term drops below ``tol``."""
    A = np.asarray(A)
    n = A.shape[0]
    out = np.eye(n, dtype=np.result_type(A, float))
    term = np.eye(n, dtype=out.dtype)
    for k in range(1, max_terms):
        term = term @ A / (k + 1)
        out = out + term
        if np.abs(term).max() < tol:
            break
    return out


def dexp_eig(A: np.ndarray, cond_max: float = 1e8) -> np.ndarray | None:
    """(e^A - 1)/A through an eigendecomposition; None if A looks defective."""
    lam, V = np.linalg.eig(A)
    if np.linalg.cond(V) > cond_max:
        return None
    small = np.abs(lam) < 1e-8
    f = np.empty_like(lam, dtype=complex)
    lam_s = lam[small]
    f[small] = 1 + lam_s / 2 + lam_s**2 / 6
    f[~small] = np.expm1(lam[~small]) / lam[~small]
    return (V * f) @ np.linalg.inv(V)


def dexp_block(A: np.ndarray) -> np.ndarray:
    """(e^A - 1)/A as the upper-right block of expm([[A, 1], [0, 0]])."""
    n = A.shape[0]
    big = np.zeros((2 * n, 2 * n), dtype=np.result_type(A, float))
    big[:n, :n] = A
    big[:n, n:] = np.eye(n)
    return expm(big)[:n, n:]


def dexp_factor(A: np.ndarray) -> np.ndarray:
    """The map A^{-1}(e^A - 1), well defined for singular A.

    Power series below unit norm, eigendecomposition above it, and the
    block-exponential identity when the eigenbasis is ill-conditioned.
    """
    A = np.asarray(A)
    if np.linalg.norm(A, 2) < 1.0:
        return dexp_series(A)
    out = dexp_eig(A)
    if out is None:
        return dexp_block(A)
    if np.isrealobj(A):
        out = out.real
    return out


def _check_branch(M: np.ndarray, what: str, tol: float) -> None:
    lam = np.linalg.eigvals(M)
    bad = (np.abs(lam.imag) < tol) & (lam.real <= tol)
    if np.any(bad):
        raise BranchError(f"{what}: eigenvalue on the negative real axis ({lam[bad][0]:.3g})")


def principal_logm(M: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Principal matrix logarithm (Schur based); refuses eigenvalues on (-inf, 0]."""
    _check_branch(M, "logm", tol)
    out = sla.logm(M)
    if np.isrealobj(M):
        out = np.real_if_close(out, tol=1e6)
    return out


def principal_sqrtm(M: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    _check_branch(M, "sqrtm", tol)
    out = sla.sqrtm(M)
    if np.isrealobj(M):
        out = np.real_if_close(out, tol=1e6)
    return np.asarray(out)


def sqrtm_normal(M: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Principal square root of a normal matrix (e.g. orthogonal) via complex Schur."""
    Tm, Z = sla.schur(M, output="complex")
    lam = np.diag(Tm)
    if np.abs(Tm - np.diag(lam)).max() > 1e-8 * max(1.0, np.abs(lam).max()):
        return principal_sqrtm(M, tol)
    if np.any((np.abs(lam.imag) < tol) & (lam.real <= tol)):
        raise BranchError("sqrtm: eigenvalue on the negative real axis")
    out = (Z * np.sqrt(lam)) @ Z.conj().T
    return out.real if np.isrealobj(M) else out


def sqrtm_psd(M: np.ndarray) -> np.ndarray:
    """Square root of a symmetric positive-definite matrix via eigh."""
    M = 0.5 * (M + M.T.conj())
    lam, V = np.linalg.eigh(M)
    if lam.min() <= 0:
        raise BranchError(f"sqrtm_psd: non-positive eigenvalue {lam.min():.3g}")
    return (V * np.sqrt(lam)) @ V.T.conj()


def omega(n: int) -> np.ndarray:
    """The 2n x 2n matrix [[0, 1], [-1, 0]] in (q..., p...) ordering."""
    z = np.zeros((n, n))
    e = np.eye(n)
    return np.block([[z, e], [-e, z]])


def block_diag_2x2(blocks: np.ndarray) -> np.ndarray:
    """Stack (N, 2, 2) blocks into a 2N x 2N block-diagonal matrix."""
    return sla.block_diag(*blocks)
