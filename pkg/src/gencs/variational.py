"""Variational dynamics on the manifold of generalized coherent states.

Parameters live in local charts around the current point:
``g1 -> g1 exp(d1 . Z)``, ``g2 -> g2 exp(d2 . Z)`` and ``M -> M + m`` (upper
triangle of ``m``).  At the chart origin the tangent vectors are

    V1_i = U(g1) Z_i V U(g2) |mu>,
    V2_i = U(g1) V U(g2) Z_i |mu>,
    V3_ab = U(g1) V (i s_ab H_a H_b) U(g2) |mu>,   s_ab = 1 (a < b), 1/2 (a = b),

and every overlap ``<V|V>``, ``<V|H|psi>`` is a batched standard-form
reduction (:func:`gencs.standard_form.reduce_items`).  ``V3`` is evaluated by
moving ``H_a H_b`` through ``U(g2)``, so it acts directly on ``|mu>``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, StalledManifold
from .linalg import dexp_factor, expm
from .lie import ad_matrix
from .operators import OperatorExpr
from .standard_form import GenState, Sandwich, reduce_items

PINV_CUTOFF = 1e-10
IMAG_TOL = 1e-9


def _adjoint(poly):
    return [(np.conj(c), np.asarray(F)[::-1].conj()) for c, F in poly]


def _product(*polys):
    out = [(1.0 + 0j, None)]
    for poly in polys:
        if poly is None:
            continue
        out = [
            (a * b, G if F is None else np.vstack([F, G]))
            for a, F in out
            for b, G in poly
        ]
    return out


def n_params(family) -> int:
    ell = family.rank
    return 2 * family.algebra.dim + ell * (ell + 1) // 2


def split_params(family, x):
    """``(d1, d2, m)`` with ``m`` the symmetric matrix built from its upper triangle."""
    dim, ell = family.algebra.dim, family.rank
    x = np.asarray(x, float)
    if x.shape != (n_params(family),):
        raise InputError(f"parameter vector must have length {n_params(family)}")
    m = np.zeros((ell, ell))
    m[np.triu_indices(ell)] = x[2 * dim :]
    return x[:dim], x[dim : 2 * dim], m + np.triu(m, 1).T


def apply_chart(state: GenState, x) -> GenState:
    """The state at chart coordinates ``x`` around ``state``."""
    fam = state.family
    d1, d2, m = split_params(fam, x)
    g1 = state.g1 @ fam._real(expm(fam.algebra.element(d1)))
    g2 = state.g2 @ fam._real(expm(fam.algebra.element(d2)))
    return GenState(fam, g1, state.M + m, g2)


def tangents(state: GenState):
    """Tangent vectors at the chart origin as ``(mid, right)`` polynomial pairs.

    ``mid`` is inserted right after ``U(g1)``, ``right`` acts on ``|mu>``;
    either may be ``None``.
    """
    fam = state.family
    dim, ell = fam.algebra.dim, fam.rank
    out = [(fam.algebra_poly(i), None) for i in range(dim)]
    out += [(None, fam.algebra_poly(i)) for i in range(dim)]
    D2 = fam.carrier_action(state.g2)
    H2 = [[(c, np.asarray(F) @ D2) for c, F in fam.cartan_poly(a)] for a in range(ell)]
    for a in range(ell):
        for b in range(a, ell):
            s = 0.5 if a == b else 1.0
            out.append((None, [(1j * s * c, F) for c, F in _product(H2[a], H2[b])]))
    return out


@dataclass(eq=False)
class TangentData:
    """Overlaps of the state and its tangent vectors.

    ``S[a, b] = <chi_a|chi_b>`` and ``h[a] = <chi_a|H|psi>`` with
    ``chi_0 = psi`` and ``chi_{1+mu} = V_mu``.
    """

    S: np.ndarray
    h: np.ndarray

    @property
    def norm(self) -> float:
        return float(self.S[0, 0].real)

    @property
    def energy(self) -> float:
        return float(self.h[0].real)

    @property
    def gram(self) -> np.ndarray:
        """Projected Gram ``<V|V> - <V|psi><psi|V>`` (Hermitian)."""
        return self.S[1:, 1:] - np.outer(self.S[1:, 0], self.S[0, 1:])

    @property
    def grad(self) -> np.ndarray:
        """``<V_mu|H|psi>``; the energy derivative is ``2 Re grad``."""
        return self.h[1:]

    @property
    def energy_gradient(self) -> np.ndarray:
        return 2.0 * self.grad.real

    @property
    def projected_grad(self) -> np.ndarray:
        """``<V_mu|(H - E)|psi>``."""
        return self.h[1:] - self.energy * self.S[1:, 0]


def tangent_data(state: GenState, H: OperatorExpr, with_tangents: bool = True) -> TangentData:
    fam = state.family
    D1 = fam.carrier_action(state.g1)
    Hp = [(c, np.asarray(F) @ D1) for c, F in H.terms]
    vecs = [(None, None)] + (tangents(state) if with_tangents else [])
    n = len(vecs)
    items, index = [], []
    for a in range(n):
        ma, ra = vecs[a]
        for b in range(a, n):
            mb, rb = vecs[b]
            mid = _product(None if ma is None else _adjoint(ma), mb)
            items.append(Sandwich(mid, None if ra is None else _adjoint(ra), rb))
            index.append(("S", a, b))
        mid = _product(None if ma is None else _adjoint(ma), Hp)
        items.append(Sandwich(mid, None if ra is None else _adjoint(ra), None))
        index.append(("h", a, 0))
    vals = reduce_items(state, items).evaluate()
    S = np.zeros((n, n), complex)
    h = np.zeros(n, complex)
    for (kind, a, b), v in zip(index, vals):
        if kind == "S":
            S[a, b] = v
            S[b, a] = np.conj(v)
        else:
            h[a] = v
    return TangentData(S, h)


def energy(state: GenState, H: OperatorExpr) -> float:
    """``<psi|H|psi>`` for Hermitian ``H``.

    Raises
    ------
    InputError
        If the result has an imaginary part above 1e-9 (``H`` not Hermitian).
    """
    e = tangent_data(state, H, with_tangents=False).h[0]
    if abs(e.imag) > IMAG_TOL * max(1.0, abs(e.real)):
        raise InputError(f"energy has imaginary part {e.imag:.3g}; is H Hermitian?")
    return float(e.real)


def gram_and_gradient(state: GenState, H: OperatorExpr):
    """Projected Gram matrix and ``<V_mu|H|psi>`` at the chart origin."""
    td = tangent_data(state, H)
    return td.gram, td.grad


def _pinv_solve(A, b, cutoff):
    """Least-squares solution with singular values below ``cutoff * max`` dropped."""
    U, s, Vh = np.linalg.svd(A)
    if s.size == 0 or s[0] <= 0:
        raise StalledManifold("Gram matrix vanishes; no direction to move in")
    keep = s > cutoff * s[0]
    return Vh[keep].T @ ((U[:, keep].T @ b) / s[keep]), float(s[0] / s[keep][-1])


def velocity(
    state: GenState,
    H: OperatorExpr,
    mode: str = "imaginary",
    real_form: str = "mclachlan",
    cutoff: float = PINV_CUTOFF,
):
    """Chart velocity ``dx/dt`` and diagnostics ``(xdot, TangentData, cond)``.

    Imaginary time solves ``Re G xdot = -Re <V|(H - E)|psi>``.  Real time uses
    ``Re G xdot = Im <V|(H - E)|psi>`` (McLachlan) or
    ``Im G xdot = -Re <V|(H - E)|psi>`` (Lagrangian, energy-conserving).
    """
    td = tangent_data(state, H)
    G, hc = td.gram, td.projected_grad
    if mode == "imaginary":
        A, b = G.real, -hc.real
    elif mode == "real" and real_form == "mclachlan":
        A, b = G.real, hc.imag
    elif mode == "real" and real_form == "lagrangian":
        A, b = G.imag, -hc.real
    else:
        raise InputError(f"unknown evolution mode {mode!r} / {real_form!r}")
    xdot, cond = _pinv_solve(A, b, cutoff)
    return xdot, td, cond


def _chart_rates(family, y, v):
    """Convert a velocity at the chart point ``y`` (its own origin chart) to ``dy/dt``."""
    dim = family.algebra.dim
    out = np.array(v, float)
    spec = family.algebra
    for sl in (slice(0, dim), slice(dim, 2 * dim)):
        ad = ad_matrix(spec, y[sl]).T
        P = dexp_factor(-ad)
        out[sl] = np.linalg.solve(P, v[sl]).real
    return out


@dataclass(eq=False)
class VarState:
    """A point of a trajectory."""

    state: GenState
    time: float
    energy: float
    norm: float = 1.0
    gram_cond: float = float("nan")

    @property
    def params(self) -> np.ndarray:
        """Flattened ``g1``, ``g2`` (real, then imaginary parts if complex) and the triangle of ``M``."""
        st = self.state
        parts = []
        for g in (st.g1, st.g2):
            parts.append(g.real.ravel())
            if np.iscomplexobj(g):
                parts.append(g.imag.ravel())
        parts.append(st.M[np.triu_indices(st.M.shape[0])])
        return np.concatenate(parts)


@dataclass(eq=False)
class Trajectory:
    records: list = field(default_factory=list)

    @property
    def times(self):
        return np.array([r.time for r in self.records])

    @property
    def energies(self):
        return np.array([r.energy for r in self.records])

    @property
    def final(self) -> VarState:
        return self.records[-1]

    def to_rows(self):
        return [
            {
                "time": r.time,
                "energy": r.energy,
                "norm": r.norm,
                "gram_cond": r.gram_cond,
                "params": [float(p) for p in r.params],
            }
            for r in self.records
        ]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            n = len(self.records[0].params) if self.records else 0
            w.writerow(["time", "energy", "norm", "gram_cond"] + [f"x{i}" for i in range(n)])
            for row in self.to_rows():
                w.writerow(
                    [repr(row["time"]), repr(row["energy"]), repr(row["norm"]), repr(row["gram_cond"])]
                    + [repr(p) for p in row["params"]]
                )

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_rows(), fh)


def evolve(
    state: GenState,
    H: OperatorExpr,
    mode: str = "imaginary",
    dt: float = 0.05,
    steps: int = 100,
    real_form: str = "mclachlan",
    cutoff: float = PINV_CUTOFF,
    freeze_M: bool = False,
) -> Trajectory:
    """RK4 integration of the projected flow, re-centring the chart after each step.

    ``freeze_M`` keeps ``M`` fixed (ordinary coherent states when ``M = 0``).

    Raises
    ------
    StalledManifold
        If the Gram matrix vanishes.
    """
    if not dt > 0:
        raise InputError("dt must be positive")
    if mode not in ("imaginary", "real"):
        raise InputError(f"unknown evolution mode {mode!r}")
    fam = state.family
    dim = fam.algebra.dim

    def rate(y):
        st = apply_chart(state_c, y)
        v, td, cond = velocity(st, H, mode, real_form, cutoff)
        if freeze_M:
            v[2 * dim :] = 0.0
        return _chart_rates(fam, y, v), td, cond

    td0 = tangent_data(state, H, with_tangents=False)
    traj = Trajectory([VarState(state, 0.0, td0.energy, td0.norm)])
    state_c = state
    for n in range(steps):
        y0 = np.zeros(n_params(fam))
        k1, _, cond = rate(y0)
        k2, _, _ = rate(y0 + 0.5 * dt * k1)
        k3, _, _ = rate(y0 + 0.5 * dt * k2)
        k4, _, _ = rate(y0 + dt * k3)
        state_c = apply_chart(state_c, dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
        td = tangent_data(state_c, H, with_tangents=False)
        traj.records.append(VarState(state_c, (n + 1) * dt, td.energy, td.norm, cond))
    return traj
