"""Polynomial observables in the carrier operators of a family.

An :class:`OperatorExpr` is a sum of ``coeff * prod_k (F[k] . x)`` where every
factor is a linear form in the carrier ``x``.  Text format, one term per line::

    re im : op op op ...

with ``op`` a family operator such as ``sx[0]``, ``adag[1]`` or ``gamma[2]``.
An empty right-hand side is the identity.  ``#`` starts a comment.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .families.base import Family


@dataclass(eq=False)
class OperatorExpr:
    family: Family
    terms: list[tuple[complex, np.ndarray]] = field(default_factory=list)

    @classmethod
    def identity(cls, family: Family, coeff: complex = 1.0) -> "OperatorExpr":
        return cls(family, [(complex(coeff), np.zeros((0, family.carrier_dim), complex))])

    @classmethod
    def from_tokens(cls, family: Family, spec) -> "OperatorExpr":
        """Build from ``[(coeff, ["sx[0]", "sz[1]"]), ...]``."""
        out = cls(family)
        for coeff, tokens in spec:
            factors = [family.parse_op(t) for t in tokens]
            out.terms += _expand(complex(coeff), factors, family.carrier_dim)
        return out

    @classmethod
    def parse(cls, family: Family, text: str) -> "OperatorExpr":
        spec = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if ":" not in line:
                raise InputError(f"line {lineno}: expected 're im : ops', got {raw!r}")
            lhs, rhs = line.split(":", 1)
            parts = lhs.split()
            if len(parts) != 2:
                raise InputError(f"line {lineno}: coefficient must be 're im'")
            try:
                c = complex(float(parts[0]), float(parts[1]))
            except ValueError:
                raise InputError(f"line {lineno}: bad coefficient {lhs.strip()!r}") from None
            try:
                spec.append((c, rhs.split()))
                cls.from_tokens(family, [spec[-1]])
            except InputError as exc:
                raise InputError(f"line {lineno}: {exc}") from None
        if not spec:
            raise InputError("observable has no terms")
        return cls.from_tokens(family, spec)

    @classmethod
    def from_algebra(cls, family: Family, spec, basis: str = "Z") -> "OperatorExpr":
        """Monomials in algebra operators: ``[(coeff, [i1, i2, ...]), ...]``.

        ``basis="Z"`` indexes the real basis ``Z_i``; ``basis="HE"`` indexes the
        ordered ``[H_1..H_l, E_+..., E_-...]`` basis.
        """
        alg = family.algebra
        if basis not in ("Z", "HE"):
            raise InputError(f"unknown basis {basis!r}")
        polys = [family.algebra_poly(i) for i in range(alg.dim)]
        out = cls(family)
        for coeff, idx in spec:
            factors = []
            for i in idx:
                if not 0 <= i < alg.dim:
                    raise InputError(f"algebra index {i} out of range")
                if basis == "Z":
                    factors.append([(c, list(F)) for c, F in polys[i]])
                else:
                    row = alg.basis_change[i]
                    factors.append(
                        [(r * c, list(F)) for j, r in enumerate(row) if r != 0 for c, F in polys[j]]
                    )
            out.terms += _expand(complex(coeff), factors, family.carrier_dim)
        return out

    @property
    def degree(self) -> int:
        return max((F.shape[0] for _, F in self.terms), default=0)

    def __add__(self, other: "OperatorExpr") -> "OperatorExpr":
        self._check(other)
        return OperatorExpr(self.family, self.terms + other.terms)

    def __sub__(self, other: "OperatorExpr") -> "OperatorExpr":
        return self + (-1.0) * other

    def __rmul__(self, s) -> "OperatorExpr":
        return OperatorExpr(self.family, [(s * c, F) for c, F in self.terms])

    def __matmul__(self, other: "OperatorExpr") -> "OperatorExpr":
        """Operator product."""
        self._check(other)
        return OperatorExpr(
            self.family,
            [(a * b, np.vstack([F, G])) for a, F in self.terms for b, G in other.terms],
        )

    def adjoint(self) -> "OperatorExpr":
        """Hermitian conjugate (carrier operators are Hermitian)."""
        return OperatorExpr(self.family, [(np.conj(c), F[::-1].conj()) for c, F in self.terms])

    def by_degree(self) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        groups = defaultdict(list)
        for c, F in self.terms:
            groups[F.shape[0]].append((c, F))
        d = self.family.carrier_dim
        return {
            n: (
                np.array([c for c, _ in g], complex),
                np.array([F for _, F in g], complex).reshape(len(g), n, d),
            )
            for n, g in sorted(groups.items())
        }

    def _check(self, other):
        if other.family is not self.family:
            raise InputError("operator expressions belong to different families")


def _expand(coeff, factors, d):
    """Multiply out a product of sums of products of linear forms."""
    out = []
    for combo in itertools.product(*factors):
        c = coeff
        forms = []
        for ci, fs in combo:
            c *= ci
            forms += list(fs)
        F = np.array(forms, complex).reshape(len(forms), d)
        out.append((complex(c), F))
    return out
