"""N spin-1/2 sites: su(2)^N with ``Z_{3k+i} = i sigma_i^k``.

The carrier is the list of Pauli operators ``x_{3k+i} = sigma_i^k``; the
reference state is ``|down ... down>`` with ``mu_a = -1/2``.  Root operators
use the normalization ``sigma_pm = (sigma_1 +- i sigma_2) / (2 sqrt 2)``.
"""

from __future__ import annotations

import itertools
from functools import cached_property

import numpy as np

from ..errors import DecompositionBreakdown, InputError
from ..lie import AlgebraSpec
from ..linalg import block_diag_2x2
from .base import Family

PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]],
    dtype=complex,
)
SQ2 = np.sqrt(2.0)
# root operators in the internal normalization
SIGMA_PLUS = (PAULI[0] + 1j * PAULI[1]) / (2 * SQ2)
SIGMA_MINUS = (PAULI[0] - 1j * PAULI[1]) / (2 * SQ2)
_BREAKDOWN_TOL = 1e-12


class SpinFamily(Family):
    kind = "spin"
    op_names = ("sx", "sy", "sz", "sp", "sm")
    _dtype = complex

    def _build_algebra(self) -> AlgebraSpec:
        N = self.n
        Z = np.zeros((3 * N, 2 * N, 2 * N), complex)
        for k in range(N):
            for i in range(3):
                Z[3 * k + i, 2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = 1j * PAULI[i]
        H = np.zeros((N, 3 * N))
        for k in range(N):
            H[k, 3 * k + 2] = 0.5
        pairs = []
        for k in range(N):
            Ep = np.zeros((2 * N, 2 * N), complex)
            Em = np.zeros((2 * N, 2 * N), complex)
            Ep[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = SIGMA_PLUS
            Em[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = SIGMA_MINUS
            pairs.append((np.eye(N)[k], Ep, Em))
        labels = [f"i{s}[{k}]" for k in range(N) for s in ("sx", "sy", "sz")]
        return AlgebraSpec.from_rep(Z, H, pairs, name=f"su2^{N}", labels=labels)

    @property
    def mu(self) -> np.ndarray:
        return -0.5 * np.ones(self.n)

    @property
    def carrier_dim(self) -> int:
        return 3 * self.n

    @cached_property
    def triangular_basis(self) -> np.ndarray:
        return np.eye(2 * self.n)

    @cached_property
    def weight_basis(self) -> np.ndarray:
        blk = np.array([[0.5, 0.5j, 0], [0, 0, 1], [0.5, -0.5j, 0]])
        return np.kron(np.eye(self.n), blk)

    @cached_property
    def carrier_weights(self) -> np.ndarray:
        w = np.zeros((3 * self.n, self.n))
        for k in range(self.n):
            w[3 * k, k] = 1
            w[3 * k + 2, k] = -1
        return w

    def blocks(self, g: np.ndarray) -> np.ndarray:
        """Per-site 2x2 blocks of a defining-rep group element."""
        return np.array([g[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] for k in range(self.n)])

    def from_blocks(self, u: np.ndarray) -> np.ndarray:
        return block_diag_2x2(u)

    def group_residual(self, g: np.ndarray) -> float:
        off = g.copy()
        for k in range(self.n):
            off[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = 0
        u = self.blocks(g)
        unit = np.abs(np.einsum("kji,kjl->kil", u.conj(), u) - np.eye(2)).max()
        det = np.abs(np.linalg.det(u) - 1).max()
        return float(max(unit, det, np.abs(off).max()))

    def carrier_action(self, g: np.ndarray) -> np.ndarray:
        u = self.blocks(g)
        ui = np.linalg.inv(u)
        # Ad[i, j] = Tr(u^-1 s_i u s_j) / 2
        ad = 0.5 * np.einsum("kab,ibc,kcd,jda->kij", ui, PAULI, u, PAULI)
        return block_diag_2x2(ad) if self.n > 1 else ad[0]

    def prefactor_and_R(self, g: np.ndarray) -> tuple[complex, np.ndarray]:
        pref = 1.0 + 0j
        Rs = []
        for u in self.blocks(g):
            Ap, A0, Am = gauss_split_2x2(u)
            pref *= np.exp(-0.5 * A0)
            Rs.append(r_matrix_su2(Am))
        return pref, block_diag_2x2(Rs) if self.n > 1 else Rs[0]

    def base_moments(self, F: np.ndarray) -> np.ndarray:
        return spin_moments(F, self.n)

    def op_forms(self, name: str, k: int):
        e = [self.unit(3 * k + i) for i in range(3)]
        if name == "sx":
            return [(1.0, [e[0]])]
        if name == "sy":
            return [(1.0, [e[1]])]
        if name == "sz":
            return [(1.0, [e[2]])]
        if name == "sp":
            return [(1.0, [0.5 * e[0] + 0.5j * e[1]])]
        if name == "sm":
            return [(1.0, [0.5 * e[0] - 0.5j * e[1]])]
        raise InputError(name)

    def algebra_poly(self, i: int):
        return [(1j, self.unit(i)[None, :])]


def spin_moments(F: np.ndarray, n_sites: int) -> np.ndarray:
    """``<down...down| prod_k (F[b, k] . sigma) |down...down>`` for a batch."""
    B, n, d = F.shape
    Fs = F.reshape(B, n, n_sites, 3)
    mats = np.einsum("bksi,iac->bksac", Fs, PAULI)
    support = [np.flatnonzero(np.abs(Fs[:, k]).max(axis=(0, 2)) > 0) for k in range(n)]
    out = np.zeros(B, complex)
    for assign in itertools.product(*support):
        val = np.ones(B, complex)
        for s in set(assign):
            ks = [k for k in range(n) if assign[k] == s]
            m = mats[:, ks[0], s]
            for k in ks[1:]:
                m = m @ mats[:, k, s]
            val = val * m[:, 1, 1]
        out += val
    return out


def gauss_split_2x2(u: np.ndarray) -> tuple[complex, complex, complex]:
    """Coefficients with ``u = e^{A+ s+} e^{(A0/2) s3} e^{A- s-}`` (det u = 1)."""
    d = u[1, 1]
    if abs(d) < _BREAKDOWN_TOL:
        raise DecompositionBreakdown("lower-right entry vanishes: no Gauss splitting")
    A0 = -2.0 * np.log(d)
    return SQ2 * u[0, 1] / d, A0, SQ2 * u[1, 0] / d


def bch_split_su2(K0: complex, K_plus: complex) -> tuple[complex, complex, complex]:
    """Analytic splitting of ``exp(K+ s+ + i (K0/2) s3 - conj(K+) s-)``.

    Returns ``(A+, A0, A-)`` with
    ``e^{A+ s+} e^{(A0/2) s3} e^{A- s-}`` equal to that exponential, where
    ``s_pm = (sigma_1 +- i sigma_2) / (2 sqrt 2)``.  The log is the principal
    branch.

    Raises
    ------
    DecompositionBreakdown
        At the antipodal points where ``cos(phi) - i (K0/2) sin(phi)/phi = 0``.
    """
    phi = np.sqrt(abs(K_plus) ** 2 / 2 + K0**2 / 4 + 0j)
    sinc = np.sinc(phi / np.pi) if abs(phi) > 0 else 1.0
    D = np.cos(phi) - 0.5j * K0 * sinc
    if abs(D) < _BREAKDOWN_TOL:
        raise DecompositionBreakdown("su(2) splitting denominator vanishes")
    A0 = -2.0 * np.log(D)
    return K_plus * sinc / D, A0, -np.conj(K_plus) * sinc / D


def su2_element(K0: complex, K_plus: complex) -> np.ndarray:
    """The 2x2 matrix ``K+ s+ + i (K0/2) s3 - conj(K+) s-``."""
    return K_plus * SIGMA_PLUS + 0.5j * K0 * PAULI[2] - np.conj(K_plus) * SIGMA_MINUS


def su2_factors(Ap, A0, Am) -> np.ndarray:
    """2x2 product ``e^{A+ s+} e^{(A0/2) s3} e^{A- s-}``."""
    Tp = np.eye(2) + Ap * SIGMA_PLUS
    Tm = np.eye(2) + Am * SIGMA_MINUS
    T0 = np.diag([np.exp(A0 / 2), np.exp(-A0 / 2)])
    return Tp @ T0 @ Tm


def r_matrix_su2(A_minus: complex) -> np.ndarray:
    """``R`` with ``e^{A- s-} sigma_i = R[i, j] sigma_j e^{A- s-}``.

    Quadratic in ``A-`` because the generator is nilpotent.
    """
    a = A_minus
    a2 = a * a / 4
    r = a / SQ2
    return np.array(
        [
            [1 - a2, 1j * a2, -r],
            [1j * a2, 1 + a2, 1j * r],
            [r, -1j * r, 1],
        ],
        dtype=complex,
    )
