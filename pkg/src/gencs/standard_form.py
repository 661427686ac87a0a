"""Reduction of expectation values on generalized states to standard terms.

For ``|psi> = U(g1) V(M) U(g2) |mu>`` with ``V(M) = exp(i/2 M^{ab} H_a H_b)``
an observable monomial ``prod_k (v_k . x)`` is rewritten as a sum of terms
``coeff * <mu| U(g) prod_k (w_k . x) |mu>``:

1. conjugation by ``U(g1)`` maps every form ``v -> D(g1)^T v``;
2. each form is split into weight components ``y_w`` (eigen-operators of the
   Cartan generators); for a product of total weight ``W`` one has
   ``V^dag Y V = exp(-i/2 W.M.W) U(exp((M W).H)) Y``;
3. conjugation by ``U(g2)`` turns the Cartan factor into
   ``g = g2^-1 exp((M W).H) g2`` and the forms into ``D(g2)^T w``.

Terms sharing the same ``W`` share their group element, so the table stores
one group per distinct ``W`` and integer weight indices per term.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .families.base import Family
from .linalg import expm
from .operators import OperatorExpr

MAX_DEGREE = 6
PRUNE = 1e-14
_CHUNK = 1 << 16


@dataclass(eq=False)
class GenState:
    """Parameters ``(g1, M, g2)`` of a generalized coherent state.

    ``g1`` and ``g2`` are defining-representation matrices.  The algebra
    coordinates ``K1``, ``K2`` (with ``g = exp(K^i Z_i)``) are kept when known;
    the dense oracle needs them to build the Hilbert-space unitaries.
    """

    family: Family
    g1: np.ndarray
    M: np.ndarray
    g2: np.ndarray
    K1: np.ndarray | None = None
    K2: np.ndarray | None = None

    def __post_init__(self):
        ell = self.family.rank
        M = np.asarray(self.M, float)
        if M.shape != (ell, ell):
            raise InputError(f"M must be {ell}x{ell}, got {M.shape}")
        if not np.all(np.isfinite(M)):
            raise InputError("M must be finite")
        self.M = 0.5 * (M + M.T)
        for name in ("g1", "g2"):
            g = np.asarray(getattr(self, name))
            if not np.all(np.isfinite(g)):
                raise InputError(f"{name} must be finite")
            setattr(self, name, g)

    @classmethod
    def from_params(cls, family: Family, K1=None, M=None, K2=None) -> "GenState":
        dim, ell = family.algebra.dim, family.rank
        K1 = np.zeros(dim) if K1 is None else np.asarray(K1, float)
        K2 = np.zeros(dim) if K2 is None else np.asarray(K2, float)
        M = np.zeros((ell, ell)) if M is None else np.asarray(M, float)
        return cls(family, family.group(K1), M, family.group(K2), K1, K2)

    @classmethod
    def random(cls, family: Family, rng, k_norm: float = 1.0, m_scale: float = 1.0) -> "GenState":
        """Random ``K1, K2`` with ``|K| <= k_norm`` and ``M`` entries in ``[-m_scale, m_scale]``."""
        dim, ell = family.algebra.dim, family.rank
        Ks = []
        for _ in range(2):
            K = rng.normal(size=dim)
            Ks.append(K / np.linalg.norm(K) * k_norm * rng.uniform() ** (1 / dim))
        M = rng.uniform(-m_scale, m_scale, size=(ell, ell))
        return cls.from_params(family, Ks[0], 0.5 * (M + M.T), Ks[1])

    @property
    def mu(self) -> np.ndarray:
        return self.family.mu


@dataclass(eq=False)
class StandardTerm:
    """``coeff * <mu| U(group) prod_k (forms[k] . x) |mu>``.

    ``generator`` (optional) is a defining-rep matrix with
    ``U(group) = exp(Q(generator))`` exactly, which fixes the sign of ``U`` for
    double-cover families.
    """

    coeff: complex
    group: np.ndarray
    forms: np.ndarray
    generator: np.ndarray | None = None

    @property
    def degree(self) -> int:
        return self.forms.shape[0]


def push_group(term: StandardTerm, h: np.ndarray, family: Family) -> StandardTerm:
    """Conjugate a term by ``U(h)``: ``U(h)^dag [U(g) prod] U(h)``."""
    hi = np.linalg.inv(h)
    D = family.carrier_action(h)
    gen = None if term.generator is None else hi @ term.generator @ h
    return StandardTerm(term.coeff, hi @ term.group @ h, term.forms @ D, gen)


def push_V(term: StandardTerm, M: np.ndarray, family: Family) -> list[StandardTerm]:
    """Conjugate a group-free term by ``V(M)``.

    Each form is expanded into weight operators; every product of total
    weight ``W`` picks up the phase ``exp(-i/2 W.M.W)`` and the Cartan group
    factor ``exp((M W).H)`` on its left.
    """
    if np.abs(term.group - family.identity()).max() > 1e-12:
        raise InputError("push_V expects a term without a group factor")
    M = 0.5 * (np.asarray(M, float) + np.asarray(M, float).T)
    coeffs, widx = _weight_expand(family, np.array([term.coeff]), term.forms[None])
    B = family.weight_basis
    out = []
    for c, w in zip(coeffs, widx):
        W = family.carrier_weights[w].sum(axis=0) if len(w) else np.zeros(family.rank)
        c = c * np.exp(-0.5j * W @ M @ W)
        L = family.cartan_generator(M @ W)
        out.append(StandardTerm(complex(c), expm(L), B[w], L))
    return out


def _weight_expand(family: Family, coeffs: np.ndarray, forms: np.ndarray, with_parent=False):
    """Split every factor into weight-basis components.

    Returns new coefficients (m,) and weight-row indices (m, n) (and the
    source term of each output row if ``with_parent``); component ``w`` of a
    form ``v`` is ``(v . Binv[:, w]) * B[w]``.
    """
    n_terms, n, d = forms.shape
    a = forms @ np.linalg.inv(family.weight_basis)
    parent = np.arange(n_terms)
    coef = coeffs.astype(complex)
    widx = np.zeros((n_terms, 0), dtype=np.int64)
    for k in range(n):
        ak = a[parent, k, :]
        rows, ws = np.nonzero(ak)
        coef = coef[rows] * ak[rows, ws]
        widx = np.hstack([widx[rows], ws[:, None]])
        parent = parent[rows]
    if with_parent:
        return coef, widx, parent
    return coef, widx


def continuous_prefactor(family: Family, generator: np.ndarray, group=None):
    """``r`` and ``R`` of ``exp(generator)`` with the sign of the actual operator.

    For double-cover families the analytic prefactor is only defined up to
    sign; the family fixes it by following ``exp(t L)``, ``t in [0, 1]``.
    """
    g = expm(generator) if group is None else group
    r, R = family.prefactor_and_R(g)
    if family.double_cover:
        r = r * family.lift_sign(generator)
    return r, R


@dataclass(eq=False)
class Sandwich:
    """One item ``<mu| L U2^dag V^dag [mid] V U2 R |mu>`` of a batched reduction.

    ``mid`` holds (coeff, forms) products already conjugated by ``U(g1)``;
    ``left`` and ``right`` are (coeff, forms) sums acting directly on the
    reference state.  Empty ``left`` / ``right`` mean the identity.
    """

    mid: list
    left: list | None = None
    right: list | None = None


class TermTable(Sequence):
    """Standard terms of one reduction, grouped by total Cartan weight.

    Behaves as a read-only sequence of :class:`StandardTerm`; :meth:`evaluate`
    sums all of them without materializing individual objects.  A block is
    ``(coeffs, widx, rows, left, right, item)``: weight index and weight-basis
    rows per term, optional outer forms ``left`` (B, nL, d) and ``right``
    (B, nR, d), and the item each term contributes to.
    """

    def __init__(self, family, weights, groups, generators, blocks, forms_basis, n_items=None):
        self.family = family
        self.weights = weights  # (nW, l)
        self.groups = groups  # (nW, m, m)
        self.generators = generators  # (nW, m, m)
        self.blocks = blocks
        self.forms_basis = forms_basis  # (d, d): row w = form of y_w after U(g2)
        self.n_items = n_items
        self._offsets = np.cumsum([0] + [len(b[0]) for b in blocks])
        self._pref = None

    def __len__(self) -> int:
        return int(self._offsets[-1])

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        b = int(np.searchsorted(self._offsets, i, side="right") - 1)
        j = i - self._offsets[b]
        coeffs, widx, rows, left, right, _ = self.blocks[b]
        k = widx[j]
        parts = [self.forms_basis[rows[j]]]
        if left is not None:
            parts.insert(0, left[j] @ self.family.carrier_action(self.groups[k]))
        if right is not None:
            parts.append(right[j])
        return StandardTerm(complex(coeffs[j]), self.groups[k], np.vstack(parts), self.generators[k])

    def prefactors(self):
        if self._pref is None:
            rs, Rs = self.family.prefactors_and_Rs(np.asarray(self.groups))
            if self.family.double_cover:
                rs = rs * self.family.lift_signs(self.generators)
            self._pref = rs, Rs
        return self._pref

    def evaluate(self):
        """Sum of all terms (one value per item for batched reductions)."""
        n_out = 1 if self.n_items is None else self.n_items
        total = np.zeros(n_out, complex)
        if self.blocks and len(self.groups):
            r, R = self.prefactors()
            Zw = np.einsum("wd,ade->awe", self.forms_basis, R)  # (nW, d, d)
            DR = None
            for coeffs, widx, rows, left, right, item in self.blocks:
                if left is not None and DR is None:
                    D = np.array([self.family.carrier_action(g) for g in self.groups])
                    DR = D @ R
                for s in range(0, len(coeffs), _CHUNK):
                    sl = slice(s, s + _CHUNK)
                    w = widx[sl]
                    F = Zw[w[:, None], rows[sl]]
                    if left is not None:
                        F = np.concatenate([left[sl] @ DR[w], F], axis=1)
                    if right is not None:
                        F = np.concatenate([F, right[sl] @ R[w]], axis=1)
                    vals = coeffs[sl] * r[w] * self.family.base_moments(F)
                    if item is None:
                        total[0] += vals.sum()
                    else:
                        total += np.bincount(item[sl], vals.real, n_out)
                        total += 1j * np.bincount(item[sl], vals.imag, n_out)
        return complex(total[0]) if self.n_items is None else total


def _stack_terms(terms, d):
    """(coeffs, forms) arrays from a list of (coeff, forms); identity if None."""
    if not terms:
        return np.ones(1, complex), np.zeros((1, 0, d), complex)
    return (
        np.array([c for c, _ in terms], complex),
        np.array([np.asarray(f, complex).reshape(-1, d) for _, f in terms]),
    )


def reduce_items(state: GenState, items: list, max_degree: int | None = None) -> TermTable:
    """Batched reduction of :class:`Sandwich` items; ``evaluate()`` gives one value per item."""
    fam = state.family
    d, ell = fam.carrier_dim, fam.rank
    D2 = fam.carrier_action(state.g2)
    cw = fam.carrier_weights

    # group (item, left, mid, right) products by the factor counts
    groups = {}
    for it, sw in enumerate(items):
        lc, lf = _stack_terms(sw.left, d)
        rc, rf = _stack_terms(sw.right, d)
        for c, fm in sw.mid:
            fm = np.zeros((0, d), complex) if fm is None else np.asarray(fm, complex).reshape(-1, d)
            if max_degree is not None and len(fm) + lf.shape[1] + rf.shape[1] > max_degree:
                raise InputError(f"term degree exceeds max degree {max_degree}")
            for a in range(len(lc)):
                for b in range(len(rc)):
                    key = (len(fm), lf.shape[1], rf.shape[1])
                    groups.setdefault(key, []).append((c * lc[a] * rc[b], fm, lf[a], rf[b], it))

    raw = []
    for (nm, nl, nr), rows in groups.items():
        coeffs = np.array([t[0] for t in rows], complex)
        FM = np.array([t[1] for t in rows]).reshape(len(rows), nm, d)
        coef, widx, parent = _weight_expand(fam, coeffs, FM, with_parent=True)
        W = cw[widx].sum(axis=1) if nm else np.zeros((len(coef), ell))
        FL = np.array([t[2] for t in rows])[parent] if nl else None
        FR = np.array([t[3] for t in rows])[parent] if nr else None
        item = np.array([t[4] for t in rows])[parent]
        raw.append((coef, widx, np.round(W).astype(np.int64), FL, FR, item))
    return _assemble(state, raw, D2, len(items))


def _assemble(state, raw, D2, n_items):
    fam = state.family
    ell = fam.rank
    if not raw or sum(len(r[0]) for r in raw) == 0:
        return TermTable(fam, np.zeros((0, ell)), [], [], [], fam.weight_basis @ D2, n_items)
    allW = np.vstack([r[2] for r in raw])
    uniq, inv = np.unique(allW, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    uniq_f = uniq.astype(float)
    phase = np.exp(-0.5j * np.einsum("wa,ab,wb->w", uniq_f, state.M, uniq_f))
    g2i = np.linalg.inv(state.g2)
    gens = np.array([g2i @ fam.cartan_generator(state.M @ w) @ state.g2 for w in uniq_f])
    groups = np.array([expm(L) for L in gens])
    if fam._dtype is float:
        gens, groups = gens.real, groups.real

    blocks = []
    pos = 0
    for coef, rows, _, FL, FR, item in raw:
        widx = inv[pos : pos + len(coef)]
        pos += len(coef)
        c = coef * phase[widx]
        keep = np.abs(c) >= PRUNE
        sel = lambda a: None if a is None else a[keep]
        blocks.append((c[keep], widx[keep], rows[keep], sel(FL), sel(FR), sel(item)))
    return TermTable(fam, uniq_f, groups, gens, blocks, fam.weight_basis @ D2, n_items)


def reduce(state: GenState, obs: OperatorExpr, max_degree: int = MAX_DEGREE) -> TermTable:
    """Standard-form terms whose sum is ``<psi|obs|psi>``."""
    fam = state.family
    if obs.family is not fam and obs.family.kind != fam.kind:
        raise InputError("observable and state belong to different families")
    if obs.degree > max_degree:
        raise InputError(f"observable degree {obs.degree} exceeds max degree {max_degree}")
    D1 = fam.carrier_action(state.g1)
    D2 = fam.carrier_action(state.g2)
    cw = fam.carrier_weights
    ell = fam.rank
    raw = []
    for n, (coeffs, forms) in obs.by_degree().items():
        coef, rows = _weight_expand(fam, coeffs, forms @ D1)
        W = cw[rows].sum(axis=1) if n else np.zeros((len(coef), ell))
        raw.append((coef, rows, np.round(W).astype(np.int64), None, None, None))
    return _assemble(state, raw, D2, None)


def expectations(state: GenState, observables, max_degree: int = MAX_DEGREE) -> np.ndarray:
    """``<psi|O_k|psi>`` for several observables sharing one reduction."""
    fam = state.family
    D1 = fam.carrier_action(state.g1)
    items = []
    for obs in observables:
        if obs.degree > max_degree:
            raise InputError(f"observable degree {obs.degree} exceeds max degree {max_degree}")
        items.append(Sandwich([(c, np.asarray(f) @ D1) for c, f in obs.terms]))
    return reduce_items(state, items).evaluate()


def evaluate_terms(terms, family: Family) -> complex:
    """Sum of standard terms evaluated one by one (reference path)."""
    from .bch import evaluate_standard_term

    return complex(sum(evaluate_standard_term(t, family) for t in terms))


def expectation(state: GenState, obs: OperatorExpr, max_degree: int = MAX_DEGREE) -> complex:
    """``<psi|obs|psi>`` through standard-form reduction."""
    return reduce(state, obs, max_degree).evaluate()


def coherent_expectation(family: Family, g: np.ndarray, obs: OperatorExpr) -> complex:
    """``<mu| U(g)^dag obs U(g) |mu>`` for an ordinary coherent state."""
    D = family.carrier_action(g)
    total = 0j
    for _, (coeffs, forms) in obs.by_degree().items():
        total += np.sum(coeffs * family.base_moments(forms @ D))
    return complex(total)
