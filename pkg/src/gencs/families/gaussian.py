"""Shared machinery for the bosonic and fermionic Gaussian families.

Both carry ``x = (x_1..x_N, x_{N+1}..x_{2N})`` (quadratures or Majoranas),
the symplectic form ``Omega = [[0, 1], [-1, 0]]`` and vacuum two-point
function ``<0|x_i x_j|0> = (delta_ij + i Omega_ij) / 2``.  A group element is
a real ``2N x 2N`` matrix ``S`` with ``U(S)^dag x U(S) = S x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import BranchError, InputError
from ..lie import AlgebraSpec
from ..linalg import expm, omega, principal_logm
from .base import Family, quadratic_terms, wick

SQ2 = np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class GaussianSplit:
    """Normal-ordered data of a Gaussian unitary.

    ``<0| U(S) prod x |0> = r0 * <0| prod (R x) |0>``, with ``r0`` combining the
    phase ``e^{-i theta}`` of the compact part and the vacuum amplitude.
    """

    A_plus: np.ndarray
    A_zero: np.ndarray
    r0: complex
    theta: float
    T: np.ndarray
    u: np.ndarray

    @property
    def R(self) -> np.ndarray:
        return r_matrix_gaussian(self.A_plus)


def r_matrix_gaussian(A_plus: np.ndarray) -> np.ndarray:
    """``[[1 - A*, -i A*], [-i A*, 1 + A*]]`` (same block shape for both statistics)."""
    Ac = np.conj(np.asarray(A_plus, complex))
    one = np.eye(Ac.shape[0])
    return np.block([[one - Ac, -1j * Ac], [-1j * Ac, one + Ac]])


def a_plus_from_tanh(X: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Read ``A+`` off ``2 [[Re A, Im A], [Im A, -Re A]] = X``."""
    N = X.shape[0] // 2
    a, b, c, d = X[:N, :N], X[:N, N:], X[N:, :N], X[N:, N:]
    scale = max(1.0, np.abs(X).max())
    if max(np.abs(d + a).max(), np.abs(c - b).max()) > tol * scale:
        raise InputError("tanh block does not have the required structure")
    return 0.5 * (a + 1j * b)


def a_zero_from_a_plus(A: np.ndarray) -> tuple[np.ndarray, float]:
    """``(1/4) log(1 - 4 A A*)`` and ``det(1 - 4 A A*)`` (Hermitian matrix)."""
    M = np.eye(A.shape[0]) - 4 * A @ A.conj()
    M = 0.5 * (M + M.conj().T)
    lam, V = np.linalg.eigh(M)
    if lam.min() <= 0:
        raise InputError("1 - 4 A+ A+* is not positive definite")
    return 0.25 * (V * np.log(lam)) @ V.conj().T, float(np.prod(lam))


def omega_log_trace(u: np.ndarray, method: str = "eig", tol: float = 1e-9) -> float:
    """``tr(Omega log u)`` on the principal branch for ``u`` commuting with Omega.

    Such ``u = [[X, Y], [-Y, X]]`` corresponds to the unitary ``X + iY`` and
    ``tr(Omega log u) = -2 sum_j arg(lambda_j(X + iY))``.  ``method="logm"``
    uses the Schur-based matrix logarithm instead (slower, same branch).
    """
    N = u.shape[0] // 2
    if method == "logm":
        return float(np.trace(omega(N) @ principal_logm(u)).real)
    lam = np.linalg.eigvals(u[:N, :N] + 1j * u[:N, N:])
    ang = np.angle(lam)
    if np.any(np.pi - np.abs(ang) < tol):
        raise BranchError("u has an eigenvalue at -1; the phase is ambiguous")
    return float(-2.0 * ang.sum())


def quadratic_defining(c: np.ndarray, fermionic: bool) -> np.ndarray:
    """Defining matrix K of the operator ``sum_ij c_ij x_i x_j`` (c-numbers dropped)."""
    if fermionic:
        return c - c.T
    n = c.shape[0] // 2
    return 1j * omega(n) @ (c + c.T)


class GaussianFamily(Family):
    fermionic: bool = False
    double_cover = True
    _dtype = float

    @cached_property
    def omega(self) -> np.ndarray:
        return omega(self.n)

    @property
    def carrier_dim(self) -> int:
        return 2 * self.n

    # forms of the ladder operators: a^dag = (x_k - i x_{N+k}) / sqrt 2
    def creation(self, k: int) -> np.ndarray:
        return (self.unit(k) - 1j * self.unit(self.n + k)) / SQ2

    def annihilation(self, k: int) -> np.ndarray:
        return (self.unit(k) + 1j * self.unit(self.n + k)) / SQ2

    @cached_property
    def weight_basis(self) -> np.ndarray:
        rows = [self.creation(k) for k in range(self.n)]
        rows += [self.annihilation(k) for k in range(self.n)]
        return np.array(rows)

    @cached_property
    def carrier_weights(self) -> np.ndarray:
        e = np.eye(self.n)
        return np.vstack([e, -e])

    @cached_property
    def triangular_basis(self) -> np.ndarray:
        """Ladder basis ordered by increasing weight: ``E+`` strictly upper triangular."""
        rho = np.arange(self.n, 0, -1.0)
        return self.weight_basis[np.argsort(self.carrier_weights @ rho, kind="stable")]

    @cached_property
    def two_point(self) -> np.ndarray:
        return 0.5 * (np.eye(2 * self.n) + 1j * self.omega)

    # -- algebra -----------------------------------------------------------
    def basis_quadratics(self) -> list[tuple[str, np.ndarray]]:
        raise NotImplementedError

    def cartan_coefficients(self) -> np.ndarray:
        raise NotImplementedError

    def root_quadratics(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        raise NotImplementedError

    @cached_property
    def _quadratics(self):
        return self.basis_quadratics()

    def _build_algebra(self) -> AlgebraSpec:
        Z = np.array([quadratic_defining(c, self.fermionic) for _, c in self._quadratics])
        pairs = [
            (eta, quadratic_defining(cp, self.fermionic), quadratic_defining(cm, self.fermionic))
            for eta, cp, cm in self.root_quadratics()
        ]
        labels = [name for name, _ in self._quadratics]
        return AlgebraSpec.from_rep(
            Z, self.cartan_coefficients(), pairs, name=self.algebra_name, labels=labels
        )

    def algebra_poly(self, i: int):
        return quadratic_terms(self._quadratics[i][1])

    # -- group -------------------------------------------------------------
    def carrier_action(self, g: np.ndarray) -> np.ndarray:
        return g

    def split(self, g: np.ndarray) -> GaussianSplit:
        raise NotImplementedError

    def prefactor_and_R(self, g: np.ndarray) -> tuple[complex, np.ndarray]:
        s = self.split(g)
        return s.r0, s.R

    def theta(self, g: np.ndarray) -> float:
        """Principal-branch phase of the compact factor of ``g``."""
        raise NotImplementedError

    def a_plus_triangular(self, g: np.ndarray) -> np.ndarray:
        """``A+`` read off the unit-lower factor of the triangular splitting.

        Independent of the tanh route: with ``L`` the unit-lower factor in the
        ladder basis, ``A+ = conj(J L22^-1 L21) / 2`` where ``J`` reverses the
        mode order of the annihilator block.
        """
        from ..bch import _udl

        P = self.triangular_basis
        _, _, L = _udl(P @ np.asarray(g, complex) @ np.linalg.inv(P), 1e-13)
        N = self.n
        return 0.5 * np.conj(np.linalg.solve(L[N:, N:], L[N:, :N])[::-1])

    def lift_sign(self, generator: np.ndarray, steps: int | None = None) -> int:
        """Sign relating ``exp(Q(L))`` to the principal-branch prefactor of ``exp(L)``.

        The phase ``theta`` jumps by pi where an eigenphase of ``u`` crosses
        pi; following ``exp(t L)`` from the identity and removing those jumps
        gives the phase of the actual operator ``exp(Q(L))``.
        """
        return int(self.lift_signs(np.asarray(generator)[None], steps)[0])

    def lift_signs(self, generators: np.ndarray, steps: int | None = None) -> np.ndarray:
        """:meth:`lift_sign` for a stack of generators, sampled together."""
        gens = np.asarray(generators)
        if len(gens) == 0:
            return np.ones(0, int)
        if steps is None:
            norms = np.linalg.norm(gens, 2, axis=(1, 2))
            counts = np.maximum(8, np.ceil(16 * norms)).astype(int)
        else:
            counts = np.full(len(gens), steps)
        owner = np.repeat(np.arange(len(gens)), counts)
        start = np.concatenate([[0], np.cumsum(counts)[:-1]])
        ts = (np.arange(counts.sum()) - start[owner] + 1) / counts[owner]
        lam, V = np.linalg.eig(gens.astype(complex))
        Vi = np.linalg.inv(V)
        gs = ((V[owner] * np.exp(ts[:, None] * lam[owner])[:, None, :]) @ Vi[owner]).real
        # samples only need theta mod pi, which is cheap; the endpoint needs the principal value
        ths = self.theta_mod_pi(gs)
        ends = np.cumsum(counts) - 1
        th_end = self.theta_batch(gs[ends])
        out = np.ones(len(gens), int)
        for k, th in enumerate(np.split(ths, ends[:-1] + 1)):
            if not np.isfinite(th_end[k]):
                self.theta(expm(gens[k]))  # raises the branch error
            th = np.concatenate([[0.0], th[np.isfinite(th)]])
            un = np.unwrap(th, period=np.pi)
            out[k] = 1 if int(np.round((un[-1] - th_end[k]) / np.pi)) % 2 == 0 else -1
        return out

    # 2 theta = theta_sign * arg det of the creation block, modulo 2 pi
    theta_sign: int = 1

    def theta_mod_pi(self, gs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """``theta`` modulo pi from the ladder-basis block ``(B g B^-1)[:N, :N]``.

        With ``g = u^-1 T`` that block is the unitary part of ``u^-1`` times a
        positive-definite block of ``T``, so its determinant carries the phase
        of ``u`` without any eigendecomposition.  NaN where the block is singular.
        """
        B = self.weight_basis
        N = self.n
        blk = (B[:N] @ gs) @ np.linalg.inv(B)[:, :N]
        det = np.linalg.det(blk)
        out = 0.5 * self.theta_sign * np.angle(det)
        out[np.abs(det) < tol] = np.nan
        return out

    def theta_batch(self, gs: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """``theta`` for a stack of group elements; NaN where the branch is ambiguous."""
        raise NotImplementedError

    # exponent of det(1 - 4 A A*) in r0 and the tanh matrix of a stack of elements
    det_power: float = 0.25

    def tanh_batch(self, gs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def prefactors_and_Rs(self, groups: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Batched ``(r0, R)``; same values as :meth:`prefactor_and_R` per element."""
        gs = np.asarray(groups, float)
        if len(gs) == 0:
            d = 2 * self.n
            return np.zeros(0, complex), np.zeros((0, d, d), complex)
        th = self.theta_batch(gs)
        for k in np.flatnonzero(~np.isfinite(th)):
            th[k] = self.split(gs[k]).theta  # raises on a genuine branch point
        X = self.tanh_batch(gs)
        N = self.n
        a, b, c, d = X[:, :N, :N], X[:, :N, N:], X[:, N:, :N], X[:, N:, N:]
        scale = np.maximum(1.0, np.abs(X).max(axis=(1, 2)))
        off = np.maximum(np.abs(d + a).max(axis=(1, 2)), np.abs(c - b).max(axis=(1, 2)))
        if np.any(off > 1e-10 * scale):
            raise InputError("tanh block does not have the required structure")
        A = 0.5 * (a + 1j * b)
        Mm = np.eye(N) - 4 * A @ A.conj()
        lam = np.linalg.eigvalsh(0.5 * (Mm + np.swapaxes(Mm, 1, 2).conj()))
        if lam.min() <= 0:
            raise InputError("1 - 4 A+ A+* is not positive definite")
        r0 = np.exp(-1j * th) * np.prod(lam, axis=1) ** self.det_power
        Ac = A.conj()
        one = np.broadcast_to(np.eye(N), Ac.shape)
        R = np.block([[one - Ac, -1j * Ac], [-1j * Ac, one + Ac]])
        return r0, R

    def base_moments(self, F: np.ndarray) -> np.ndarray:
        return wick(F, self.two_point, self.fermionic)

    def _ladder_op(self, name: str, k: int):
        if name in ("a", "c"):
            return [(1.0, [self.annihilation(k)])]
        if name in ("adag", "cdag"):
            return [(1.0, [self.creation(k)])]
        if name in ("n", "nf"):
            return [(1.0, [self.creation(k), self.annihilation(k)])]
        raise InputError(name)
