"""Interface every concrete family implements.

A family fixes three things:

* the Lie algebra (an :class:`~gencs.lie.AlgebraSpec` with its defining
  representation, Cartan generators and roots);
* a *carrier*: a finite set of Hermitian operators ``x_alpha`` (Pauli
  matrices, quadratures or Majoranas) that observables are polynomials in,
  and which transform linearly, ``U(g)^dag x U(g) = D(g) x``;
* the lowest-weight evaluation
  ``<mu| U(g) prod_k (v_k . x) |mu> = r(g) <mu| prod_k ((R(g)^T v_k) . x) |mu>``.

Monomials are stored as arrays of linear forms ``F[k, alpha]`` meaning
``prod_k (sum_alpha F[k, alpha] x_alpha)``.
"""

from __future__ import annotations

import itertools
import re
from functools import cached_property, lru_cache

import numpy as np

from ..errors import InputError
from ..lie import AlgebraSpec
from ..linalg import expm

_OP_RE = re.compile(r"^([A-Za-z_]+)\[(\d+)\]$")


class Family:
    kind: str = ""
    double_cover: bool = False
    op_names: tuple[str, ...] = ()

    def __init__(self, n: int):
        if n < 1:
            raise InputError("need at least one site/mode")
        self.n = int(n)

    # -- algebra -----------------------------------------------------------
    @cached_property
    def algebra(self) -> AlgebraSpec:
        return self._build_algebra()

    def _build_algebra(self) -> AlgebraSpec:
        raise NotImplementedError

    @property
    def rank(self) -> int:
        return self.algebra.rank

    @property
    def mu(self) -> np.ndarray:
        raise NotImplementedError

    def group(self, K) -> np.ndarray:
        """Defining-rep matrix of ``exp(K^i Z_i)`` for real coordinates ``K``."""
        K = np.asarray(K, dtype=float)
        if K.shape != (self.algebra.dim,):
            raise InputError(f"group parameters must have length {self.algebra.dim}")
        return self._real(expm(self.algebra.element(K)))

    def cartan_generator(self, c) -> np.ndarray:
        H = np.asarray(c, float) @ self.algebra.cartan_coeffs
        return self._real(self.algebra.element(H))

    def cartan_group(self, c) -> np.ndarray:
        return self._real(expm(self.cartan_generator(c)))

    def identity(self) -> np.ndarray:
        return np.eye(self.algebra.fundamental_rep.shape[1], dtype=self._dtype)

    _dtype = float

    def _real(self, m):
        if self._dtype is float:
            return np.ascontiguousarray(m.real)
        return m

    # -- carrier -----------------------------------------------------------
    @property
    def carrier_dim(self) -> int:
        raise NotImplementedError

    @property
    def weight_basis(self) -> np.ndarray:
        """Rows give weight operators ``y_w = B[w] . x``."""
        raise NotImplementedError

    @property
    def carrier_weights(self) -> np.ndarray:
        """Weight vector of every row of :attr:`weight_basis`."""
        raise NotImplementedError

    @cached_property
    def weight_projectors(self) -> tuple[np.ndarray, np.ndarray]:
        """(distinct weights (m, l), projectors (m, d, d)) acting on form vectors."""
        B = self.weight_basis
        Binv = np.linalg.inv(B)
        w = np.round(self.carrier_weights, 12)
        distinct = sorted({tuple(r) for r in w})
        projs = []
        for dw in distinct:
            rows = [i for i in range(len(w)) if tuple(w[i]) == dw]
            P = sum(np.outer(B[i], Binv[:, i]) for i in rows)
            projs.append(P)
        return np.array(distinct, dtype=float), np.array(projs)

    def carrier_action(self, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def prefactor_and_R(self, g: np.ndarray) -> tuple[complex, np.ndarray]:
        raise NotImplementedError

    def prefactors_and_Rs(self, groups: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """:meth:`prefactor_and_R` for a stack of group elements."""
        out = [self.prefactor_and_R(g) for g in groups]
        return np.array([r for r, _ in out], complex), np.array([R for _, R in out], complex)

    def lift_sign(self, generator: np.ndarray) -> int:
        """Sign of ``exp(Q(generator))`` relative to :meth:`prefactor_and_R` (double covers)."""
        return 1

    def analytic_factors(self, g: np.ndarray):
        """Closed-form Gauss splitting of ``g`` (LU in :attr:`triangular_basis`)."""
        from ..bch import triangular_split

        return triangular_split(self.algebra, g, self.triangular_basis)

    def lift_signs(self, generators: np.ndarray) -> np.ndarray:
        return np.ones(len(generators), int)

    def base_moments(self, F: np.ndarray) -> np.ndarray:
        """``<mu| prod_k (F[b, k] . x) |mu>`` for a batch ``F`` of shape (B, n, d)."""
        raise NotImplementedError

    def group_residual(self, g: np.ndarray) -> float:
        raise NotImplementedError

    # -- observables -------------------------------------------------------
    def op_forms(self, name: str, index: int) -> list[tuple[complex, list[np.ndarray]]]:
        """Expansion of a named operator as a sum of products of linear forms."""
        raise NotImplementedError

    def parse_op(self, token: str):
        m = _OP_RE.match(token.strip())
        if not m:
            raise InputError(f"cannot parse operator {token!r}")
        name, idx = m.group(1), int(m.group(2))
        if name not in self.op_names:
            raise InputError(f"unknown operator {name!r} for {self.kind} family")
        if not 0 <= idx < self.n:
            raise InputError(f"index {idx} out of range in {token!r}")
        return self.op_forms(name, idx)

    def unit(self, i: int) -> np.ndarray:
        e = np.zeros(self.carrier_dim, complex)
        e[i] = 1.0
        return e

    def algebra_poly(self, i: int) -> list[tuple[complex, np.ndarray]]:
        """``Z_i`` as a polynomial in the carrier: list of (coeff, forms (n, d))."""
        raise NotImplementedError

    def cartan_poly(self, a: int) -> list[tuple[complex, np.ndarray]]:
        out = []
        for i, h in enumerate(self.algebra.cartan_coeffs[a]):
            if h != 0:
                out += [(h * c, F) for c, F in self.algebra_poly(i)]
        return out


@lru_cache(maxsize=None)
def pairings(n: int) -> tuple[tuple[tuple[tuple[int, int], ...], int], ...]:
    """All perfect matchings of ``range(n)`` with their crossing-parity sign."""
    if n % 2:
        return ()

    def rec(items):
        if not items:
            yield (), 1
            return
        first, rest = items[0], items[1:]
        for j, other in enumerate(rest):
            remaining = rest[:j] + rest[j + 1 :]
            for sub, s in rec(remaining):
                yield ((first, other),) + sub, s * (-1) ** j

    return tuple(rec(tuple(range(n))))


def wick(F: np.ndarray, C: np.ndarray, fermionic: bool) -> np.ndarray:
    """Vacuum moments of products of linear forms from the two-point matrix C."""
    B, n, _ = F.shape
    if n == 0:
        return np.ones(B, complex)
    if n % 2:
        return np.zeros(B, complex)
    G = (F @ C) @ np.swapaxes(F, 1, 2)
    out = np.zeros(B, complex)
    for pairs, sign in pairings(n):
        term = np.ones(B, complex)
        for k, l in pairs:
            term = term * G[:, k, l]
        out += (sign if fermionic else 1) * term
    return out


def quadratic_terms(c: np.ndarray) -> list[tuple[complex, np.ndarray]]:
    """``sum_ij c_ij x_i x_j`` as a list of (coeff, two unit forms)."""
    d = c.shape[0]
    out = []
    for i, j in itertools.product(range(d), repeat=2):
        if c[i, j] != 0:
            F = np.zeros((2, d), complex)
            F[0, i] = 1
            F[1, j] = 1
            out.append((complex(c[i, j]), F))
    return out
