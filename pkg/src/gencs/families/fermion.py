"""Fermionic Gaussian family: O(2N, R) acting on N modes.

Carrier ``x = (gamma_1..gamma_N, gammabar_1..gammabar_N)`` with
``gamma = (c^dag + c)/sqrt 2`` and ``gammabar = i(c^dag - c)/sqrt 2``; vacuum
reference with ``H_k = i(n_k - 1/2)`` and ``mu_k = -1/2``.
"""

from __future__ import annotations

import numpy as np

from ..errors import InputError
from ..linalg import omega, sqrtm_normal
from .gaussian import (
    GaussianFamily,
    GaussianSplit,
    a_plus_from_tanh,
    a_zero_from_a_plus,
    omega_log_trace,
    r_matrix_gaussian,
)


class FermionFamily(GaussianFamily):
    kind = "fermion"
    fermionic = True
    op_names = ("c", "cdag", "gamma", "gammabar", "nf")

    @property
    def algebra_name(self) -> str:
        return f"so({2 * self.n},R)"

    @property
    def mu(self) -> np.ndarray:
        return -0.5 * np.ones(self.n)

    def basis_quadratics(self):
        N = self.n
        out = []

        def E(i, j):
            m = np.zeros((2 * N, 2 * N), complex)
            m[i, j] = 1
            return m

        for k in range(N):
            out.append((f"D[{k},{k}]", 0.5 * (E(k, N + k) - E(N + k, k))))
        for k in range(N):
            for l in range(k + 1, N):
                out.append((f"D[{k},{l}]", 0.5 * (E(k, N + l) - E(N + k, l))))
                out.append((f"A[{k},{l}]", 0.5 * (E(k, l) + E(N + k, N + l))))
                out.append((f"B[{k},{l}]", 0.5 * (E(k, l) - E(N + k, N + l))))
                out.append((f"C[{k},{l}]", 0.5 * (E(k, N + l) + E(N + k, l))))
        return out

    @property
    def algebra_dim(self) -> int:
        return self.n * (2 * self.n - 1)

    def cartan_coefficients(self) -> np.ndarray:
        # (gamma gammabar - gammabar gamma)/2 = -i(n - 1/2)
        H = np.zeros((self.n, self.algebra_dim))
        H[:, : self.n] = -np.eye(self.n)
        return H

    def root_quadratics(self):
        N = self.n
        e = np.eye(N)
        cd = [self.creation(k) for k in range(N)]
        c = [self.annihilation(k) for k in range(N)]
        out = []
        for k in range(N):
            for l in range(k + 1, N):
                out.append((e[k] + e[l], np.outer(cd[k], cd[l]), np.outer(c[k], c[l])))
                out.append((e[k] - e[l], np.outer(cd[k], c[l]), np.outer(c[k], cd[l])))
        return out

    def group_residual(self, g: np.ndarray) -> float:
        return float(np.abs(g.T @ g - np.eye(g.shape[0])).max())

    def split(self, g: np.ndarray) -> GaussianSplit:
        return gaussian_split_fermion(g)

    def theta(self, g: np.ndarray) -> float:
        return cartan_decompose_f(g)[2]

    def theta_batch(self, gs: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        N = self.n
        W = omega(N)
        lam, V = np.linalg.eig(-W @ np.swapaxes(gs, 1, 2) @ W @ gs)
        bad = np.any((np.abs(lam.imag) < tol) & (lam.real <= tol), axis=1)
        T = ((V * np.sqrt(lam)[:, None, :]) @ np.linalg.inv(V)).real
        u = T @ np.swapaxes(gs, 1, 2)
        ang = np.angle(np.linalg.eigvals(u[:, :N, :N] + 1j * u[:, :N, N:]))
        th = 0.5 * ang.sum(axis=1)
        th[bad | np.any(np.pi - np.abs(ang) < tol, axis=1)] = np.nan
        return th

    det_power = -0.25
    theta_sign = -1

    def tanh_batch(self, gs: np.ndarray) -> np.ndarray:
        W = omega(self.n)
        P = W @ np.swapaxes(gs, 1, 2) @ W @ gs
        one = np.eye(gs.shape[1])
        try:
            return np.linalg.solve(np.swapaxes(P - one, 1, 2), np.swapaxes(P + one, 1, 2)).swapaxes(1, 2)
        except np.linalg.LinAlgError as exc:
            raise InputError("Omega G^T Omega G - 1 is singular") from exc

    def op_forms(self, name: str, k: int):
        if name == "gamma":
            return [(1.0, [self.unit(k)])]
        if name == "gammabar":
            return [(1.0, [self.unit(self.n + k)])]
        return self._ladder_op(name, k)


def cartan_decompose_f(G: np.ndarray, method: str = "eig") -> tuple[np.ndarray, np.ndarray, float]:
    """``G = u^{-1} T`` with ``T = sqrt(-Omega G^T Omega G)``, ``theta = -tr(Omega log u)/4``.

    Raises
    ------
    BranchError
        If ``-Omega G^T Omega G`` has spectrum on the negative axis, or ``u``
        has an eigenvalue at -1.
    """
    G = np.asarray(G, float)
    W = omega(G.shape[0] // 2)
    T = np.real(sqrtm_normal(-W @ G.T @ W @ G))
    u = T @ G.T
    theta = -0.25 * omega_log_trace(u, method)
    return T, u, theta


def a_plus_from_G(G: np.ndarray) -> tuple[np.ndarray, np.ndarray, complex]:
    """``(A+, A0, r0)`` for the normal-ordered splitting of ``U(G)``."""
    s = gaussian_split_fermion(G)
    return s.A_plus, s.A_zero, s.r0


def gaussian_split_fermion(G: np.ndarray) -> GaussianSplit:
    G = np.asarray(G, float)
    T, u, theta = cartan_decompose_f(G)
    W = omega(G.shape[0] // 2)
    P = W @ G.T @ W @ G
    one = np.eye(G.shape[0])
    try:
        X = (P + one) @ np.linalg.inv(P - one)
    except np.linalg.LinAlgError as exc:
        raise InputError("Omega G^T Omega G - 1 is singular") from exc
    A = a_plus_from_tanh(X)
    A0, det = a_zero_from_a_plus(A)
    r0 = np.exp(-1j * theta) * det**-0.25
    return GaussianSplit(A, A0, complex(r0), theta, T, u)


r_matrix_fermion = r_matrix_gaussian
