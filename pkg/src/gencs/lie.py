"""Abstract Lie-algebra data shared by every concrete family.

An :class:`AlgebraSpec` is built from a faithful matrix representation of a
real basis ``Z_i`` of anti-Hermitian generators, a choice of Cartan
generators ``H_a = H_a^i Z_i`` and the root-space operators ``E_eta``.
Structure constants, the trace inner product and the change of basis to the
complexified ``{H_a, E_eta}`` basis are derived from that data.

Conventions
-----------
``c[i, j, k]`` is defined by ``[Z_i, Z_j] = c[i, j, k] Z_k`` and
``ad(K)[i, j] = K^k c[k, i, j]``.  For ``g = exp(K^i Z_i)`` the adjoint
matrix with ``g^{-1} Z_i g = Ad(g)[i, j] Z_j`` equals ``expm(-ad(K))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, InputError
from .linalg import expm

_COND_MAX = 1e12


@dataclass(frozen=True, eq=False)
class Root:
    vector: np.ndarray
    sign: str  # "positive" | "negative"
    e_coeffs: np.ndarray  # E_eta = e_coeffs[i] Z_i


@dataclass(frozen=True, eq=False)
class ReferenceWeights:
    """``H_a |mu> = i mu_a |mu>`` for the lowest-weight reference state."""

    mu: np.ndarray


@dataclass(frozen=True, eq=False)
class AlgebraSpec:
    fundamental_rep: np.ndarray  # (dim, n, n)
    cartan_coeffs: np.ndarray  # (rank, dim), real
    roots: tuple[Root, ...]
    name: str = ""
    labels: tuple[str, ...] = field(default=())

    @classmethod
    def from_rep(cls, Z, cartan_coeffs, root_pairs, name="", labels=()):
        """Build a spec from generator matrices and positive-root operators.

        ``root_pairs`` is a list of ``(eta, E_plus, E_minus)`` with ``E_plus``
        and ``E_minus`` given as matrices in the same representation as ``Z``.
        """
        Z = np.asarray(Z, dtype=complex)
        kappa = np.einsum("iab,jab->ij", Z, Z.conj())
        _check_kappa(kappa)
        roots_pos, roots_neg = [], []
        for eta, Ep, Em in root_pairs:
            eta = np.asarray(eta, dtype=float)
            roots_pos.append(Root(eta, "positive", _coords(Z, kappa, Ep)))
            roots_neg.append(Root(-eta, "negative", _coords(Z, kappa, Em)))
        return cls(
            fundamental_rep=Z,
            cartan_coeffs=np.asarray(cartan_coeffs, dtype=float),
            roots=tuple(roots_pos + roots_neg),
            name=name,
            labels=tuple(labels),
        )

    @property
    def dim(self) -> int:
        return self.fundamental_rep.shape[0]

    @property
    def rank(self) -> int:
        return self.cartan_coeffs.shape[0]

    @property
    def positive_roots(self) -> list[Root]:
        return [r for r in self.roots if r.sign == "positive"]

    @property
    def negative_roots(self) -> list[Root]:
        return [r for r in self.roots if r.sign == "negative"]

    @cached_property
    def kappa(self) -> np.ndarray:
        Z = self.fundamental_rep
        return np.einsum("iab,jab->ij", Z, Z.conj())

    @cached_property
    def kappa_inv(self) -> np.ndarray:
        _check_kappa(self.kappa)
        return np.linalg.inv(self.kappa)

    @cached_property
    def structure_constants(self) -> np.ndarray:
        Z = self.fundamental_rep
        comm = np.einsum("iab,jbc->ijac", Z, Z) - np.einsum("jab,ibc->ijac", Z, Z)
        t = np.einsum("ijab,kab->ijk", comm, Z.conj())
        c = t @ self.kappa_inv
        return np.real_if_close(c, tol=1e6).real

    @cached_property
    def basis_change(self) -> np.ndarray:
        """Rows express ``[H_1..H_l, E_+..., E_-...]`` in the ``Z`` basis."""
        rows = [self.cartan_coeffs.astype(complex)]
        rows += [r.e_coeffs[None, :] for r in self.positive_roots]
        rows += [r.e_coeffs[None, :] for r in self.negative_roots]
        B = np.vstack(rows)
        if B.shape != (self.dim, self.dim):
            raise ConfigurationError("Cartan + roots do not span the algebra")
        return B

    @cached_property
    def basis_change_inv(self) -> np.ndarray:
        return np.linalg.inv(self.basis_change)

    @cached_property
    def he_weights(self) -> np.ndarray:
        """Root vector of every element of the {H, E+, E-} basis (0 for H)."""
        w = [np.zeros(self.rank) for _ in range(self.rank)]
        w += [r.vector for r in self.positive_roots]
        w += [r.vector for r in self.negative_roots]
        return np.array(w)

    @cached_property
    def he_rep(self) -> np.ndarray:
        """Fundamental-rep matrices of the {H, E+, E-} basis elements."""
        return np.einsum("ai,ijk->ajk", self.basis_change, self.fundamental_rep)

    def coords(self, X: np.ndarray) -> np.ndarray:
        """Coefficients x with ``X = x^i Z_i`` (X must lie in the complexified span)."""
        return _coords(self.fundamental_rep, self.kappa, X)

    def element(self, K) -> np.ndarray:
        """Fundamental-rep matrix of ``K^i Z_i``."""
        return np.einsum("i,ijk->jk", np.asarray(K), self.fundamental_rep)

    def group_element(self, K) -> np.ndarray:
        return expm(self.element(K))

    def validate(self, tol: float = 1e-12) -> dict[str, float]:
        """Residuals of every structural invariant (all must be below ``tol``)."""
        c = self.structure_constants
        Z = self.fundamental_rep
        res = {}
        res["antisymmetry"] = np.abs(c + c.transpose(1, 0, 2)).max()
        jac = (
            np.einsum("ijm,mkn->ijkn", c, c)
            + np.einsum("jkm,min->ijkn", c, c)
            + np.einsum("kim,mjn->ijkn", c, c)
        )
        res["jacobi"] = np.abs(jac).max()
        comm = np.einsum("iab,jbc->ijac", Z, Z) - np.einsum("jab,ibc->ijac", Z, Z)
        res["rep_brackets"] = np.abs(comm - np.einsum("ijk,kab->ijab", c, Z)).max()
        H = self.cartan_coeffs
        res["cartan_commute"] = np.abs(np.einsum("ai,bj,ijk->abk", H, H, c)).max()
        Hm = np.einsum("ai,ijk->ajk", H, Z)
        worst = 0.0
        for r in self.roots:
            E = np.einsum("i,ijk->jk", r.e_coeffs, Z)
            for a in range(self.rank):
                br = Hm[a] @ E - E @ Hm[a]
                worst = max(worst, np.abs(br - 1j * r.vector[a] * E).max())
        res["root_brackets"] = worst
        pos = sorted(tuple(np.round(r.vector, 12)) for r in self.positive_roots)
        neg = sorted(tuple(np.round(-r.vector, 12)) for r in self.negative_roots)
        res["root_pairs"] = 0.0 if pos == neg else 1.0
        B = self.basis_change
        res["basis_change"] = np.abs(B @ self.basis_change_inv - np.eye(self.dim)).max()
        return {k: float(v) for k, v in res.items()}

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "labels": list(self.labels),
            "fundamental_rep": _cenc(self.fundamental_rep),
            "cartan_coeffs": self.cartan_coeffs.tolist(),
            "roots": [
                {"vector": r.vector.tolist(), "sign": r.sign, "e_coeffs": _cenc(r.e_coeffs)}
                for r in self.roots
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AlgebraSpec":
        roots = tuple(
            Root(np.array(r["vector"], float), r["sign"], _cdec(r["e_coeffs"])) for r in d["roots"]
        )
        return cls(
            fundamental_rep=_cdec(d["fundamental_rep"]),
            cartan_coeffs=np.array(d["cartan_coeffs"], float),
            roots=roots,
            name=d.get("name", ""),
            labels=tuple(d.get("labels", ())),
        )


def _check_kappa(kappa):
    if np.linalg.cond(kappa) > _COND_MAX:
        raise ConfigurationError("basis is not linearly independent (kappa singular)")


def _coords(Z, kappa, X):
    t = np.einsum("ab,kab->k", np.asarray(X), Z.conj())
    return np.linalg.solve(kappa.T, t)


def _cenc(a):
    a = np.asarray(a, complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _cdec(x):
    a = np.asarray(x, float)
    return a[..., 0] + 1j * a[..., 1]


def ad_matrix(spec: AlgebraSpec, K) -> np.ndarray:
    """``ad(K)[i, j] = K^k c[k, i, j]``."""
    K = np.asarray(K)
    if K.shape != (spec.dim,):
        raise InputError(f"K must have length {spec.dim}, got shape {K.shape}")
    return np.einsum("k,kij->ij", K, spec.structure_constants)


def adjoint_from_group(spec: AlgebraSpec, g: np.ndarray) -> np.ndarray:
    """Ad(g) by trace extraction: ``Tr(g^-1 Z_i g Z_k^dag) (kappa^-1)^{kj}``."""
    Z = spec.fundamental_rep
    gi = np.linalg.inv(g)
    conj = np.einsum("ab,ibc,cd->iad", gi, Z, g)
    t = np.einsum("iab,kab->ik", conj, Z.conj())
    return t @ spec.kappa_inv


def adjoint_action(spec: AlgebraSpec, K, method: str = "expm") -> np.ndarray:
    """Adjoint matrix of ``g = exp(K^i Z_i)``.

    ``method`` is ``"expm"`` (exponential of -ad(K)), ``"trace"`` (trace
    extraction in the fundamental rep) or ``"both"``, which computes the two
    and raises if they differ by more than 1e-10.
    """
    K = np.asarray(K)
    if method == "expm":
        return expm(-ad_matrix(spec, K))
    if method == "trace":
        Ad = adjoint_from_group(spec, spec.group_element(K))
        return Ad.real if np.isrealobj(K) else Ad
    if method == "both":
        a = adjoint_action(spec, K, "expm")
        b = adjoint_action(spec, K, "trace")
        err = np.abs(a - b).max()
        if err > 1e-10:
            raise ArithmeticError(f"adjoint methods disagree by {err:.3g}")
        return a
    raise InputError(f"unknown method {method!r}")


def complexified_ad(spec: AlgebraSpec, cartan_K) -> np.ndarray:
    """Multipliers of ``X -> e^{K.H} X e^{-K.H}`` on the {H, E+, E-} basis."""
    cartan_K = np.asarray(cartan_K, dtype=float)
    if cartan_K.shape != (spec.rank,):
        raise InputError(f"cartan_K must have length {spec.rank}")
    return np.exp(1j * spec.he_weights @ cartan_K)
