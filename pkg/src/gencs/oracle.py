"""Dense Hilbert-space oracle for small systems.

Builds the carrier operators as sparse matrices (Pauli strings, truncated
ladder operators, Jordan-Wigner fermions), prepares
``U(g1) V(M) U(g2) |mu>`` by sparse exponential actions with ``V(M)``
applied exactly as a diagonal matrix, and evaluates observables literally.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import CutoffError, InputError
from .families import make_family
from .families.base import Family
from .operators import OperatorExpr

DEFAULT_CAP = 4096
TAIL_TOL = 1e-8


def _kron_all(ops):
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), ops)


@dataclass(eq=False)
class DenseSystem:
    """Dense representation of a family on ``n`` sites/modes.

    ``cutoff`` is the maximal boson occupation per mode (ignored otherwise).
    """

    kind: str
    n: int
    cutoff: int | None = None
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.kind == "boson":
            if self.cutoff is None or self.cutoff < 1:
                raise InputError("boson oracle needs a positive cutoff")
            self.local = self.cutoff + 1
        else:
            self.local = 2
        if self.local**self.n > self.cap:
            raise InputError(f"dense dimension {self.local ** self.n} exceeds cap {self.cap}")

    @property
    def dim(self) -> int:
        return self.local**self.n

    @cached_property
    def family(self) -> Family:
        return make_family(self.kind, self.n)

    def _site(self, op, k):
        eye = sp.identity(self.local, format="csr")
        return _kron_all([op if j == k else eye for j in range(self.n)])

    @cached_property
    def carrier(self) -> list[sp.csr_matrix]:
        """Sparse matrices of the carrier operators ``x_alpha``."""
        if self.kind == "spin":
            pauli = [
                sp.csr_matrix(np.array([[0, 1], [1, 0]], complex)),
                sp.csr_matrix(np.array([[0, -1j], [1j, 0]])),
                sp.csr_matrix(np.array([[1, 0], [0, -1]], complex)),
            ]
            return [self._site(pauli[i], k) for k in range(self.n) for i in range(3)]
        ann = self.annihilators
        cre = [a.conj().T.tocsr() for a in ann]
        s = np.sqrt(2.0)
        first = [(c + a) / s for a, c in zip(ann, cre)]
        second = [1j * (c - a) / s for a, c in zip(ann, cre)]
        return first + second

    @cached_property
    def annihilators(self) -> list[sp.csr_matrix]:
        if self.kind == "boson":
            a = sp.diags(np.sqrt(np.arange(1, self.local)), 1, format="csr", dtype=complex)
            return [self._site(a, k) for k in range(self.n)]
        if self.kind == "fermion":
            c = sp.csr_matrix(np.array([[0, 1], [0, 0]], complex))
            z = sp.csr_matrix(np.diag([1.0, -1.0]).astype(complex))
            eye = sp.identity(2, format="csr", dtype=complex)
            return [
                _kron_all([z] * k + [c] + [eye] * (self.n - k - 1)) for k in range(self.n)
            ]
        raise InputError("spins have no ladder operators")

    @cached_property
    def occupations(self) -> np.ndarray:
        """(n, D) occupation numbers (spins: 1 for up, 0 for down)."""
        idx = np.arange(self.dim)
        occ = np.empty((self.n, self.dim))
        for k in range(self.n):
            digit = (idx // self.local ** (self.n - 1 - k)) % self.local
            occ[k] = (1 - digit) if self.kind == "spin" else digit
        return occ

    @cached_property
    def cartan_diagonal(self) -> np.ndarray:
        """(l, D) diagonal entries of the Cartan operators ``H_a``."""
        occ = self.occupations
        if self.kind == "spin":
            return 0.5j * (2 * occ - 1)
        if self.kind == "boson":
            return 1j * (occ + 0.5)
        return 1j * (occ - 0.5)

    @cached_property
    def reference(self) -> np.ndarray:
        v = np.zeros(self.dim, complex)
        v[self.dim - 1 if self.kind == "spin" else 0] = 1.0
        return v

    def form_op(self, v) -> sp.csr_matrix:
        return reduce(lambda a, b: a + b, [c * X for c, X in zip(v, self.carrier) if c != 0],
                      sp.csr_matrix((self.dim, self.dim), dtype=complex))

    def algebra_op(self, K) -> sp.csr_matrix:
        """Sparse ``K^i Z_i``."""
        fam = self.family
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for i, k in enumerate(np.asarray(K, float)):
            if k == 0:
                continue
            for c, F in fam.algebra_poly(i):
                term = reduce(lambda a, b: a @ b, [self.form_op(f) for f in F])
                out = out + (k * c) * term
        return out.tocsr()

    def apply_group(self, K, psi) -> np.ndarray:
        K = np.asarray(K, float)
        if not np.any(K):
            return psi.copy()
        return expm_multiply(self.algebra_op(K), psi)

    def apply_V(self, M, psi) -> np.ndarray:
        h = self.cartan_diagonal
        M = 0.5 * (np.asarray(M, float) + np.asarray(M, float).T)
        return np.exp(0.5j * np.einsum("ab,ax,bx->x", M, h, h)) * psi

    def tail_weight(self, psi) -> float:
        """Probability on the two highest occupations of any mode (bosons)."""
        if self.kind != "boson":
            return 0.0
        top = np.any(self.occupations >= self.cutoff - 1, axis=0)
        return float(np.sum(np.abs(psi[top]) ** 2))

    def build_state(self, state, check_tail: bool = True) -> np.ndarray:
        """``U(g1) V(M) U(g2) |mu>`` as a dense vector.

        Raises
        ------
        CutoffError
            If more than 1e-8 of the weight sits near the boson cutoff.
        """
        if state.K1 is None or state.K2 is None:
            raise InputError("dense oracle needs algebra coordinates K1, K2")
        psi = self.apply_group(state.K2, self.reference)
        psi = self.apply_V(state.M, psi)
        psi = self.apply_group(state.K1, psi)
        if check_tail:
            tail = self.tail_weight(psi)
            if tail > TAIL_TOL:
                raise CutoffError(
                    f"tail weight {tail:.2e} above {TAIL_TOL:g} at cutoff {self.cutoff}; "
                    f"try cutoff {2 * self.cutoff}"
                )
        return psi

    def apply_monomial(self, forms, psi) -> np.ndarray:
        for f in forms[::-1]:
            psi = self.form_op(f) @ psi
        return psi

    def expect_dense(self, psi, obs: OperatorExpr) -> complex:
        total = 0j
        for c, F in obs.terms:
            total += c * np.vdot(psi, self.apply_monomial(F, psi))
        return complex(total)

    def hamiltonian(self, obs: OperatorExpr) -> sp.csr_matrix:
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for c, F in obs.terms:
            op = sp.identity(self.dim, format="csr", dtype=complex)
            for f in F:
                op = op @ self.form_op(f)
            out = out + c * op
        return out.tocsr()

    def ground_energy(self, obs: OperatorExpr) -> float:
        H = self.hamiltonian(obs).toarray()
        return float(np.linalg.eigvalsh(0.5 * (H + H.conj().T))[0])


def converged_expectations(kind, n, state, observables, cutoff=16, tol=1e-8, max_cutoff=128):
    """Boson oracle values that are stable under doubling the cutoff.

    Starts at ``cutoff`` and doubles until every expectation changes by less
    than ``tol`` (and the tail weight is acceptable).  Returns
    ``(values, cutoff_used)``.
    """
    prev = None
    while cutoff <= max_cutoff:
        try:
            sysd = DenseSystem(kind, n, cutoff, cap=max(DEFAULT_CAP, (cutoff + 1) ** n))
            psi = sysd.build_state(state)
        except CutoffError:
            cutoff *= 2
            continue
        vals = np.array([sysd.expect_dense(psi, o) for o in observables])
        if prev is not None and np.abs(vals - prev).max() < tol:
            return vals, cutoff
        prev = vals
        cutoff *= 2
    raise CutoffError(f"oracle did not converge up to cutoff {max_cutoff}")
