"""Bosonic Gaussian family: Sp(2N, R) acting on N modes by squeezing.

Carrier ``x = (q_1..q_N, p_1..p_N)``, ``a_k = (q_k + i p_k)/sqrt 2``, vacuum
reference with ``H_k = i(n_k + 1/2)`` and ``mu_k = +1/2``.
"""

from __future__ import annotations

import numpy as np

from ..errors import BranchError, InputError
from ..linalg import sqrtm_psd
from .gaussian import (
    GaussianFamily,
    GaussianSplit,
    a_plus_from_tanh,
    a_zero_from_a_plus,
    omega_log_trace,
    r_matrix_gaussian,
)


class BosonFamily(GaussianFamily):
    kind = "boson"
    fermionic = False
    op_names = ("q", "p", "a", "adag", "n")

    @property
    def algebra_name(self) -> str:
        return f"sp({2 * self.n},R)"

    @property
    def mu(self) -> np.ndarray:
        return 0.5 * np.ones(self.n)

    def basis_quadratics(self):
        N = self.n
        out = []

        def E(i, j):
            m = np.zeros((2 * N, 2 * N), complex)
            m[i, j] = 1
            return m

        for k in range(N):
            out.append((f"A[{k},{k}]", 0.5j * (E(k, k) + E(N + k, N + k))))
        for k in range(N):
            for l in range(k + 1, N):
                out.append((f"A[{k},{l}]", 0.5j * (E(k, l) + E(N + k, N + l))))
                out.append((f"D[{k},{l}]", 0.5j * (E(k, N + l) - E(N + k, l))))
        for k in range(N):
            for l in range(k, N):
                out.append((f"B[{k},{l}]", 0.5j * (E(k, l) - E(N + k, N + l))))
                out.append((f"C[{k},{l}]", 0.5j * (E(k, N + l) + E(N + k, l))))
        return out

    def cartan_coefficients(self) -> np.ndarray:
        H = np.zeros((self.n, self.algebra_dim))
        H[:, : self.n] = np.eye(self.n)
        return H

    @property
    def algebra_dim(self) -> int:
        return self.n * (2 * self.n + 1)

    def root_quadratics(self):
        N = self.n
        e = np.eye(N)
        ad = [self.creation(k) for k in range(N)]
        an = [self.annihilation(k) for k in range(N)]
        out = []
        for k in range(N):
            for l in range(k, N):
                out.append((e[k] + e[l], 1j * np.outer(ad[k], ad[l]), 1j * np.outer(an[k], an[l])))
        for k in range(N):
            for l in range(k + 1, N):
                out.append((e[k] - e[l], np.outer(ad[k], an[l]), np.outer(an[k], ad[l])))
        return out

    def group_residual(self, g: np.ndarray) -> float:
        W = self.omega
        return float(np.abs(g.T @ W @ g - W).max())

    def split(self, g: np.ndarray) -> GaussianSplit:
        return gaussian_split_boson(g)

    def theta(self, g: np.ndarray) -> float:
        return cartan_decompose(g)[2]

    def theta_batch(self, gs: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        N = self.n
        lam, V = np.linalg.eigh(np.swapaxes(gs, 1, 2) @ gs)
        T = (V * np.sqrt(np.clip(lam, 1e-300, None))[:, None, :]) @ np.swapaxes(V, 1, 2)
        u = T @ np.linalg.inv(gs)
        ang = np.angle(np.linalg.eigvals(u[:, :N, :N] + 1j * u[:, :N, N:]))
        th = -0.5 * ang.sum(axis=1)
        th[np.any(np.pi - np.abs(ang) < tol, axis=1) | (lam.min(axis=1) <= 0)] = np.nan
        return th

    def tanh_batch(self, gs: np.ndarray) -> np.ndarray:
        StS = np.swapaxes(gs, 1, 2) @ gs
        one = np.eye(gs.shape[1])
        return np.linalg.solve(np.swapaxes(StS + one, 1, 2), np.swapaxes(StS - one, 1, 2)).swapaxes(1, 2)

    def op_forms(self, name: str, k: int):
        if name == "q":
            return [(1.0, [self.unit(k)])]
        if name == "p":
            return [(1.0, [self.unit(self.n + k)])]
        return self._ladder_op(name, k)


def cartan_decompose(S: np.ndarray, method: str = "eig") -> tuple[np.ndarray, np.ndarray, float]:
    """``S = u^{-1} T`` with ``T = sqrt(S^T S)`` and ``theta = tr(Omega log u)/4``.

    Raises
    ------
    InputError
        If ``S^T S`` is not positive definite.
    BranchError
        If ``u`` has an eigenvalue at -1 (the phase is then ambiguous).
    """
    S = np.asarray(S, float)
    try:
        T = sqrtm_psd(S.T @ S)
    except BranchError as exc:
        raise InputError(str(exc)) from exc
    u = T @ np.linalg.inv(S)
    theta = 0.25 * omega_log_trace(u, method)
    return T, u, theta


def a_plus_from_S(S: np.ndarray) -> tuple[np.ndarray, np.ndarray, complex]:
    """``(A+, A0, r0)`` for the normal-ordered splitting of ``U(S)``."""
    s = gaussian_split_boson(S)
    return s.A_plus, s.A_zero, s.r0


def gaussian_split_boson(S: np.ndarray) -> GaussianSplit:
    S = np.asarray(S, float)
    T, u, theta = cartan_decompose(S)
    StS = S.T @ S
    one = np.eye(S.shape[0])
    X = (StS - one) @ np.linalg.inv(StS + one)
    A = a_plus_from_tanh(X)
    A0, det = a_zero_from_a_plus(A)
    r0 = np.exp(-1j * theta) * det**0.25
    return GaussianSplit(A, A0, complex(r0), theta, T, u)


r_matrix_boson = r_matrix_gaussian
