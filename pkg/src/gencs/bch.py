"""Normal-ordered (Gauss) splitting ``exp(K) = T+ T0 T-`` and term evaluation.

``T+ = exp(A+ . E+)``, ``T0 = exp(A0 . H)`` and ``T- = exp(A- . E-)``.  The
generic splitting integrates the coefficients along ``U(t) = exp(K(t))``:
writing ``xi = U^-1 dU/dt`` and ``d = (d-, d0, d+)`` with ``d+ = T+^-1 dT+/dt``
(and likewise for the other factors),

    xi = Conj(T-) Conj(T0) d+ + Conj(T-) d0 + d-,    Conj(g) X = g^-1 X g,

which is linear in ``d`` with a matrix ``Mmat`` that depends on ``A0`` and
``A-`` only.  The coefficient velocities follow from
``d+ = Psi(A+) dA+/dt`` with ``Psi(Y) = (1 - e^{-ad Y}) / ad Y`` (the same for
``A-``) and ``dA0/dt = d0``.  Everything is done in the ``{H, E+, E-}``
coordinates of the algebra and reconstructed in the defining representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DecompositionBreakdown, IntegrationError, InputError
from .lie import AlgebraSpec
from .linalg import dexp_factor, expm

_COND_MAX = 1e12


@dataclass(eq=False)
class BchFactors:
    """Coefficients of ``T+ T0 T-`` (``A_minus`` multiplies ``E_{-eta}``)."""

    A_plus: np.ndarray
    A_zero: np.ndarray
    A_minus: np.ndarray
    info: dict = field(default_factory=dict)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.A_minus, self.A_zero, self.A_plus])

    @classmethod
    def zero(cls, spec: AlgebraSpec) -> "BchFactors":
        p = len(spec.positive_roots)
        return cls(np.zeros(p, complex), np.zeros(spec.rank, complex), np.zeros(p, complex))

    def matrices(self, spec: AlgebraSpec):
        """Defining-rep matrices ``(T+, T0, T-)``."""
        Er, ell, p = spec.he_rep, spec.rank, len(spec.positive_roots)
        Tp = expm(np.einsum("a,ajk->jk", self.A_plus, Er[ell : ell + p]))
        T0 = expm(np.einsum("a,ajk->jk", self.A_zero, Er[:ell]))
        Tm = expm(np.einsum("a,ajk->jk", self.A_minus, Er[ell + p :]))
        return Tp, T0, Tm

    def reconstruct(self, spec: AlgebraSpec) -> np.ndarray:
        Tp, T0, Tm = self.matrices(spec)
        return Tp @ T0 @ Tm

    def residual(self, spec: AlgebraSpec, K) -> float:
        """Max-abs difference between ``T+ T0 T-`` and ``exp(K^i Z_i)``."""
        return float(np.abs(self.reconstruct(spec) - expm(spec.element(K))).max())

    def to_dict(self) -> dict:
        enc = lambda a: [[float(z.real), float(z.imag)] for z in np.asarray(a, complex)]
        return {"A_plus": enc(self.A_plus), "A_zero": enc(self.A_zero), "A_minus": enc(self.A_minus)}


@dataclass(eq=False)
class RMatrix:
    """``T- Z_i = R[i, j] Z_j T-`` on the algebra basis."""

    R: np.ndarray

    @classmethod
    def from_factors(cls, spec: AlgebraSpec, factors: BchFactors) -> "RMatrix":
        ell, p = spec.rank, len(spec.positive_roots)
        X = factors.A_minus @ spec.basis_change[ell + p :]
        # T- Z T-^-1 = Ad(T-^-1) Z and Ad(exp(-X)) = expm(ad X)
        ad = np.einsum("k,kij->ij", X, spec.structure_constants)
        return cls(expm(ad))


class _HEData:
    """Structure constants and index blocks in the ``{H, E+, E-}`` basis."""

    def __init__(self, spec: AlgebraSpec):
        P, Pi = spec.basis_change, spec.basis_change_inv
        c = np.einsum("ka,ib,abm,mj->kij", P, P, spec.structure_constants, Pi, optimize=True)
        self.c = c
        self._c_flat = np.ascontiguousarray(c.reshape(c.shape[0], -1))
        ell, p = spec.rank, len(spec.positive_roots)
        self.h = np.arange(ell)
        self.ep = np.arange(ell, ell + p)
        self.em = np.arange(ell + p, ell + 2 * p)
        self.order = np.concatenate([self.em, self.h, self.ep])  # (d-, d0, d+)
        self.dim = spec.dim
        self.ell, self.p = ell, p

    def ad(self, Y):
        """Matrix of ``X -> [Y, X]`` on HE coordinates."""
        n = self.dim
        return (np.asarray(Y, complex) @ self._c_flat).reshape(n, n).T

    def embed(self, idx, coeffs):
        v = np.zeros(self.dim, complex)
        v[idx] = coeffs
        return v


@lru_cache(maxsize=32)
def _he_data(spec_id, spec):
    return _HEData(spec)


def he_data(spec: AlgebraSpec) -> _HEData:
    return _he_data(id(spec), spec)


def to_he(spec: AlgebraSpec, K) -> np.ndarray:
    """HE-basis coefficients of ``K^i Z_i``."""
    return np.asarray(K, complex) @ spec.basis_change_inv


def from_he(spec: AlgebraSpec, k_he) -> np.ndarray:
    return np.asarray(k_he, complex) @ spec.basis_change


def _nilpotent_series(A, weights):
    """``sum_n weights(n) A^n`` for nilpotent ``A`` (terminates exactly)."""
    out = np.eye(A.shape[0], dtype=complex)
    term = np.eye(A.shape[0], dtype=complex)
    for n in range(1, A.shape[0] + 1):
        term = term @ A
        if not np.any(np.abs(term) > 1e-300):
            break
        out = out + weights(n) * term
    return out


_FACT = [1.0]
for _n in range(1, 200):
    _FACT.append(_FACT[-1] * _n)


def _psi_inv(data: _HEData, A, idx):
    """Inverse of ``(1 - e^{-ad A}) / ad A`` restricted to a nilpotent block."""
    blk = -data.ad(data.embed(idx, A))[np.ix_(idx, idx)]
    return np.linalg.inv(_nilpotent_series(blk, lambda n: 1.0 / _FACT[n + 1]))


def coefficient_rates(spec: AlgebraSpec, y: np.ndarray, xi_he: np.ndarray) -> np.ndarray:
    """``d/dt (A-, A0, A+)`` given the right velocity ``xi = U^-1 dU/dt`` (HE coords)."""
    data = he_data(spec)
    ell, p = data.ell, data.p
    Am, A0, Ap = y[:p], y[p : p + ell], y[p + ell :]
    conj_m = _nilpotent_series(-data.ad(data.embed(data.em, Am)), lambda n: 1.0 / _FACT[n])
    conj_0 = np.exp(-1j * spec.he_weights @ A0)  # Conj(T0) E_eta = e^{-i eta.A0} E_eta
    Mmat = np.zeros((data.dim, data.dim), complex)
    Mmat[:, :p] = np.eye(data.dim)[:, data.em]
    Mmat[:, p : p + ell] = conj_m[:, data.h]
    Mmat[:, p + ell :] = conj_m[:, data.ep] * conj_0[data.ep]
    if np.linalg.cond(Mmat) > _COND_MAX:
        raise DecompositionBreakdown("Gauss splitting matrix is singular along the path")
    d = np.linalg.solve(Mmat, xi_he)
    dm, d0, dp = d[:p], d[p : p + ell], d[p + ell :]
    rate_m = _psi_inv(data, Am, data.em) @ dm if p else dm
    rate_p = _psi_inv(data, Ap, data.ep) @ dp if p else dp
    return np.concatenate([rate_m, d0, rate_p])


def right_velocity(spec: AlgebraSpec, K_he, dK_he) -> np.ndarray:
    """``xi = exp(-K) d/dt exp(K) = Psi(K) dK`` in HE coordinates."""
    data = he_data(spec)
    return dexp_factor(-data.ad(np.asarray(K_he, complex))) @ np.asarray(dK_he, complex)


def data_ad_apply(spec, Y_he, X_he):
    """``[Y, X]`` in HE coordinates."""
    return he_data(spec).ad(np.asarray(Y_he, complex)) @ np.asarray(X_he, complex)


def _factors_from_vec(spec, y, info=None) -> BchFactors:
    p, ell = len(spec.positive_roots), spec.rank
    return BchFactors(y[p + ell :].copy(), y[p : p + ell].copy(), y[:p].copy(), info or {})


def bch_step(spec: AlgebraSpec, factors: BchFactors, K, dK, dt: float) -> BchFactors:
    """One RK4 step along ``K(t + s) = K + s dK`` (Z-basis coordinates, complex allowed)."""
    K_he, dK_he = to_he(spec, K), to_he(spec, dK)
    y = factors.as_vector()
    # along a ray through the origin the right velocity is constant
    on_ray = np.abs(data_ad_apply(spec, K_he, dK_he)).max() < 1e-14 * (1 + np.abs(dK_he).max())

    def f(s, y):
        if on_ray:
            xi = dK_he
        else:
            xi = right_velocity(spec, K_he + s * dK_he, dK_he)
        return coefficient_rates(spec, y, xi)

    k1 = f(0.0, y)
    k2 = f(dt / 2, y + dt / 2 * k1)
    k3 = f(dt / 2, y + dt / 2 * k2)
    k4 = f(dt, y + dt * k3)
    return _factors_from_vec(spec, y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4))


def integrate_linear(spec: AlgebraSpec, K, steps: int) -> BchFactors:
    """Integrate the splitting along ``exp(t K)``, ``t in [0, 1]`` with fixed steps."""
    K = np.asarray(K, complex)
    f = BchFactors.zero(spec)
    dt = 1.0 / steps
    for n in range(steps):
        f = bch_step(spec, f, n * dt * K, K, dt)
    return f


def bch_split_generic(
    spec: AlgebraSpec, K, tol: float = 1e-11, steps: int = 16, max_steps: int = 4096
) -> BchFactors:
    """Gauss splitting of ``exp(K^i Z_i)`` by integrating the coefficient ODE.

    The step count grows (by the fourth-order error model, at least doubling)
    until the reconstruction residual drops below ``tol``.

    Raises
    ------
    DecompositionBreakdown
        If the linear system becomes singular along the path, or the
        coefficients diverge under refinement.
    IntegrationError
        If ``max_steps`` is reached without meeting ``tol``.
    """
    K = np.asarray(K, complex)
    if K.shape != (spec.dim,):
        raise InputError(f"K must have length {spec.dim}")
    target = expm(spec.element(K))
    sizes = []
    while True:
        f = integrate_linear(spec, K, steps)
        res = float(np.abs(f.reconstruct(spec) - target).max())
        if res < tol:
            f.info = {"steps": steps, "residual": res}
            return f
        sizes.append(np.abs(f.as_vector()).max())
        if steps >= max_steps:
            break
        # fourth-order error model, rounded up to a power of two
        grow = max(2.0, 1.25 * (res / tol) ** 0.25)
        steps = min(max_steps, steps * 2 ** int(np.ceil(np.log2(grow))))
    # coefficients that keep growing under refinement run into a pole
    if len(sizes) > 1 and sizes[-1] > 1e2 and sizes[-1] > 2 * sizes[-2]:
        raise DecompositionBreakdown("coefficients diverge along the path")
    raise IntegrationError(f"no convergence up to {max_steps} steps (residual {res:.2e})")


def _udl(A, tol):
    """``A = U D L`` with unit upper ``U``, diagonal ``D``, unit lower ``L`` (no pivoting)."""
    J = np.eye(A.shape[0])[::-1]
    B = J @ A @ J
    n = B.shape[0]
    Lo = np.eye(n, dtype=complex)
    Up = np.array(B, complex)
    scale = max(1.0, np.abs(A).max())
    for k in range(n):
        if abs(Up[k, k]) < tol * scale:
            raise DecompositionBreakdown("leading minor vanishes; no Gauss splitting")
        f = Up[k + 1 :, k] / Up[k, k]
        Lo[k + 1 :, k] = f
        Up[k + 1 :] -= np.outer(f, Up[k])
    d = np.diag(Up).copy()
    Uu = Up / d[:, None]
    return J @ Lo @ J, np.diag(d[::-1]), J @ Uu @ J


def _nilpotent_log(T):
    """``log T`` for unipotent ``T`` (exact finite series)."""
    N = T - np.eye(T.shape[0])
    return _nilpotent_series(N, lambda n: (-1.0) ** (n + 1) / n) - np.eye(T.shape[0])


def triangular_split(spec: AlgebraSpec, g, basis, tol: float = 1e-13) -> BchFactors:
    """Gauss splitting of a group element by LU factorization.

    ``basis`` (rows) makes every ``E+`` strictly upper and every ``E-``
    strictly lower triangular, so ``T+ T0 T-`` is the unique unit-upper,
    diagonal, unit-lower factorization of ``basis g basis^-1``.  ``A0`` uses the
    principal log of the diagonal.

    Raises
    ------
    DecompositionBreakdown
        If a leading minor vanishes.
    """
    P = np.asarray(basis, complex)
    Pi = np.linalg.inv(P)
    Up, D, Lo = _udl(P @ np.asarray(g, complex) @ Pi, tol)
    ell, p = spec.rank, len(spec.positive_roots)
    Er = spec.he_rep

    def coords(X, idx):
        A = Er[idx].reshape(len(idx), -1).T
        c, *_ = np.linalg.lstsq(A, X.ravel(), rcond=None)
        return c

    Xp = Pi @ _nilpotent_log(Up) @ P
    Xm = Pi @ _nilpotent_log(Lo) @ P
    X0 = Pi @ np.diag(np.log(np.diag(D))) @ P
    f = BchFactors(
        coords(Xp, np.arange(ell, ell + p)),
        coords(X0, np.arange(ell)),
        coords(Xm, np.arange(ell + p, ell + 2 * p)),
    )
    f.info = {"residual": float(np.abs(f.reconstruct(spec) - g).max())}
    return f


def evaluate_standard_term(term, family) -> complex:
    """``coeff * r(g) * <mu| prod (R^T w) . x |mu>`` for one standard term."""
    from .standard_form import continuous_prefactor

    if term.generator is not None:
        r, R = continuous_prefactor(family, term.generator, term.group)
    else:
        r, R = family.prefactor_and_R(term.group)
    F = (term.forms @ R)[None]
    return complex(term.coeff * r * family.base_moments(F)[0])


def generic_vacuum_amplitude(family, K) -> complex:
    """``<mu| exp(K^i Z_i) |mu> = e^{i A0 . mu}`` from the generic splitting."""
    f = bch_split_generic(family.algebra, K)
    return complex(np.exp(1j * f.A_zero @ family.mu))
