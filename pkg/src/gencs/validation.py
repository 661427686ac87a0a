"""Pipeline-versus-oracle sweeps over products of carrier operators.

A *word* is a tuple of carrier indices ``(i_1, ..., i_k)`` standing for the
ordered product ``x_{i_1} ... x_{i_k}`` (Pauli matrices, quadratures or
Majoranas).
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import CutoffError, InputError
from .families import make_family
from .oracle import DEFAULT_CAP, DenseSystem
from .standard_form import GenState, Sandwich, reduce_items

DEFAULT_TOL = {"spin": 1e-10, "fermion": 1e-10, "boson": 1e-6}


def all_words(d: int, max_degree: int) -> list[tuple[int, ...]]:
    """Every ordered word of length ``0..max_degree`` over ``range(d)``."""
    out = []
    for k in range(max_degree + 1):
        out += list(itertools.product(range(d), repeat=k))
    return out


def sorted_words(d: int, max_degree: int) -> list[tuple[int, ...]]:
    """Strictly increasing words; a spanning set for Clifford (Majorana) products."""
    out = []
    for k in range(max_degree + 1):
        out += list(itertools.combinations(range(d), k))
    return out


def pipeline_words(state: GenState, words) -> np.ndarray:
    """``<psi| x_w |psi>`` for every word.

    Each conjugated carrier ``U(g1)^dag x_i U(g1) = sum_w A[i, w] y_w`` is a
    combination of weight operators, so every word is a contraction of the
    weight-word table ``<psi_0| y_w1 ... y_wk |psi_0>`` with ``A``; the table
    itself is one batched standard-form reduction with a single term per item.
    """
    fam = state.family
    d = fam.carrier_dim
    A = fam.carrier_action(state.g1) @ np.linalg.inv(fam.weight_basis)
    words = [tuple(w) for w in words]
    degrees = sorted({len(w) for w in words})
    wwords = [ww for k in degrees for ww in itertools.product(range(d), repeat=k)]
    B = fam.weight_basis
    table = reduce_items(state, [Sandwich([(1.0, B[list(ww)])]) for ww in wwords]).evaluate()
    tensors, pos = {}, 0
    for k in degrees:
        T = table[pos : pos + d**k].reshape((d,) * k)
        pos += d**k
        for _ in range(k):
            # contract the leading weight axis, append the carrier axis at the end
            T = np.tensordot(T, A, axes=([0], [1]))
        tensors[k] = T
    return np.array([tensors[len(w)][w] if w else tensors[0] for w in words], complex)


def dense_words(system: DenseSystem, psi: np.ndarray, words) -> np.ndarray:
    """Dense ``<psi| x_w |psi>``, splitting each word into a left and a right half."""
    X = system.carrier
    right, left = {(): psi}, {(): psi}

    def r(w):  # x_w psi
        if w not in right:
            right[w] = X[w[0]] @ r(w[1:])
        return right[w]

    def l(w):  # (x_w)^dag psi = x_wk ... x_w1 psi (Hermitian carriers)
        if w not in left:
            left[w] = X[w[-1]] @ l(w[:-1])
        return left[w]

    out = np.empty(len(words), complex)
    for k, w in enumerate(words):
        h = len(w) // 2
        out[k] = np.vdot(l(w[:h]), r(w[h:]))
    return out


def converged_dense_words(n: int, state: GenState, words, cutoff: int = 16, tol: float = 1e-9,
                          max_cutoff: int = 128):
    """Boson oracle word values stable under doubling the cutoff: ``(values, cutoff)``."""
    prev = None
    while cutoff <= max_cutoff:
        try:
            ds = DenseSystem("boson", n, cutoff, cap=max(DEFAULT_CAP, (cutoff + 1) ** n))
            vals = dense_words(ds, ds.build_state(state), words)
        except CutoffError:
            cutoff *= 2
            continue
        if prev is not None and np.abs(vals - prev).max() < tol * max(1.0, np.abs(vals).max()):
            return vals, cutoff
        prev = vals
        cutoff *= 2
    raise CutoffError(f"oracle did not converge up to cutoff {max_cutoff}")


def deviation(a, b, relative: bool) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if relative:
        return float((np.abs(a - b) / np.maximum(1.0, np.abs(b))).max())
    return float(np.abs(a - b).max())


def validate(
    kind: str,
    n: int,
    fixtures: int = 5,
    max_degree: int = 3,
    seed: int = 0,
    k_norm: float = 1.0,
    m_scale: float = 1.0,
    words: str = "all",
):
    """Compare pipeline and oracle on random fixtures; returns a summary dict.

    Boson values use the converged oracle and the relative deviation
    ``|a - b| / max(1, |b|)``; spins and fermions use the absolute deviation.
    """
    fam = make_family(kind, n)
    if words == "all":
        ws = all_words(fam.carrier_dim, max_degree)
    elif words == "sorted":
        ws = sorted_words(fam.carrier_dim, max_degree)
    else:
        raise InputError(f"unknown word set {words!r}")
    rng = np.random.default_rng(seed)
    ds = None if kind == "boson" else DenseSystem(kind, n)
    worst, per_fixture = 0.0, []
    for _ in range(fixtures):
        st = GenState.random(fam, rng, k_norm, m_scale)
        a = pipeline_words(st, ws)
        if kind == "boson":
            b, _ = converged_dense_words(n, st, ws)
        else:
            b = dense_words(ds, ds.build_state(st), ws)
        dev = deviation(a, b, relative=kind == "boson")
        per_fixture.append(dev)
        worst = max(worst, dev)
    return {
        "kind": kind,
        "n": n,
        "fixtures": fixtures,
        "words": len(ws),
        "max_degree": max_degree,
        "max_deviation": worst,
        "per_fixture": per_fixture,
    }
