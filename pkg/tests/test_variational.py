import json

import numpy as np
import pytest
from scipy.optimize import minimize

from gencs.errors import InputError, StalledManifold
from gencs.families import make_family
from gencs.operators import OperatorExpr
from gencs.oracle import DenseSystem
from gencs.standard_form import GenState
from gencs.variational import (
    _pinv_solve,
    apply_chart,
    energy,
    evolve,
    gram_and_gradient,
    n_params,
    split_params,
    tangent_data,
    velocity,
)

ISING = "-1 0 : sz[0] sz[1]\n-0.7 0 : sx[0]\n-0.7 0 : sx[1]"


@pytest.fixture
def spins():
    fam = make_family("spin", 2)
    return fam, OperatorExpr.parse(fam, ISING), DenseSystem("spin", 2)


def dense_state(ds, st):
    """Dense vector built from the defining-rep matrices (no algebra coordinates needed)."""
    fam = ds.family
    U = lambda g: np.kron(*fam.blocks(g))
    return U(st.g1) @ ds.apply_V(st.M, U(st.g2) @ ds.reference)


def product_state_energy(ds, H):
    """Lowest energy over product states, from the dense oracle."""
    Hd = ds.hamiltonian(H).toarray()

    def f(a):
        v = [np.array([np.cos(a[2 * k] / 2), np.exp(1j * a[2 * k + 1]) * np.sin(a[2 * k] / 2)]) for k in range(2)]
        psi = np.kron(*v)
        return np.vdot(psi, Hd @ psi).real

    return min(minimize(f, x0).fun for x0 in np.random.default_rng(0).uniform(0, 3, size=(8, 4)))


def test_trivial_energies():
    fam = make_family("spin", 1)
    st = GenState.from_params(fam)
    assert abs(energy(st, OperatorExpr.identity(fam)) - 1) < 1e-15
    assert abs(energy(st, OperatorExpr.from_tokens(fam, [(1, ["sz[0]"])])) + 1) < 1e-15


def test_energy_matches_dense(spins, rng):
    fam, H, ds = spins
    st = GenState.random(fam, rng)
    assert abs(energy(st, H) - ds.expect_dense(ds.build_state(st), H).real) < 1e-10


def test_non_hermitian_rejected():
    fam = make_family("spin", 1)
    st = GenState.from_params(fam, [0.3, 0.2, 0.1])
    with pytest.raises(InputError):
        energy(st, OperatorExpr.from_tokens(fam, [(1, ["sx[0]", "sy[0]"])]))


def test_dense_state_helper(spins, rng):
    fam, _, ds = spins
    st = GenState.random(fam, rng)
    assert np.abs(dense_state(ds, st) - ds.build_state(st)).max() < 1e-12


@pytest.mark.parametrize("kind,n", [("spin", 2), ("boson", 1), ("fermion", 2)])
def test_gradient_matches_finite_differences(kind, n, rng):
    fam = make_family(kind, n)
    H = OperatorExpr.from_tokens(fam, [(1.0, [f"{o}[0]", f"{o}[0]"]) for o in fam.op_names[:2]])
    H = H + OperatorExpr.from_tokens(fam, [(0.4, [f"{fam.op_names[0]}[{n - 1}]"])])
    st = GenState.random(fam, rng, 0.5, 0.8)
    grad = tangent_data(st, H).energy_gradient
    eps = 1e-5
    fd = np.array([
        (energy(apply_chart(st, eps * e), H) - energy(apply_chart(st, -eps * e), H)) / (2 * eps)
        for e in np.eye(n_params(fam))
    ])
    assert np.abs(grad - fd).max() < 1e-5 * max(1.0, np.abs(fd).max())


def test_gram_matches_dense_overlaps(spins, rng):
    fam, H, ds = spins
    st = GenState.random(fam, rng)
    G, _ = gram_and_gradient(st, H)
    assert np.abs(G - G.conj().T).max() < 1e-12
    assert np.linalg.eigvalsh(G).min() > -1e-9
    eps = 1e-5
    psi = dense_state(ds, st)
    V = np.array([
        (dense_state(ds, apply_chart(st, eps * e)) - dense_state(ds, apply_chart(st, -eps * e))) / (2 * eps)
        for e in np.eye(n_params(fam))
    ])
    ov = V.conj() @ psi
    G_fd = V.conj() @ V.T - np.outer(ov, ov.conj())
    assert np.abs(G - G_fd).max() < 1e-6


def test_cartan_directions_of_g2_are_stationary():
    fam = make_family("spin", 2)
    H = OperatorExpr.parse(fam, "1 0 : sz[0]\n0.5 0 : sz[0] sz[1]")
    st = GenState.from_params(fam, M=np.array([[0.3, 0.1], [0.1, -0.2]]))
    grad = tangent_data(st, H).energy_gradient
    dim = fam.algebra.dim
    assert np.abs(grad[dim + 2 : 2 * dim : 3]).max() < 1e-14


def test_fixed_point():
    fam = make_family("spin", 2)
    H = OperatorExpr.parse(fam, "1 0 : sz[0]\n1 0 : sz[1]")
    v, _, _ = velocity(GenState.from_params(fam), H)
    assert np.abs(v).max() < 1e-12


def test_imaginary_time_is_monotone_and_bounded(spins, rng):
    fam, H, ds = spins
    st = GenState.random(fam, rng, 0.5, 0.5)
    tr = evolve(st, H, dt=0.1, steps=60)
    assert np.diff(tr.energies).max() < 1e-9
    e_exact = ds.ground_energy(H)
    e_mf = product_state_energy(ds, H)
    assert e_exact - 1e-9 <= tr.final.energy <= e_mf


def test_frozen_M_stays_a_product_state(spins, rng):
    fam, H, _ = spins
    st = GenState.from_params(fam, rng.normal(size=6) * 0.5)
    tr = evolve(st, H, dt=0.1, steps=10, freeze_M=True)
    assert np.abs(tr.final.state.M).max() == 0


def test_real_time_conserves_energy_and_norm(spins, rng):
    fam, H, _ = spins
    st = GenState.random(fam, rng, 0.5, 0.5)
    tr = evolve(st, H, mode="real", dt=0.02, steps=100)
    assert np.abs(tr.energies - tr.energies[0]).max() < 1e-6
    assert max(abs(r.norm - 1) for r in tr.records) < 1e-6


def test_pinv_of_zero_gram_stalls():
    with pytest.raises(StalledManifold):
        _pinv_solve(np.zeros((3, 3)), np.ones(3), 1e-10)


def test_bad_arguments(spins):
    fam, H, _ = spins
    st = GenState.from_params(fam)
    with pytest.raises(InputError):
        evolve(st, H, dt=0.0)
    with pytest.raises(InputError):
        evolve(st, H, mode="sideways")
    with pytest.raises(InputError):
        split_params(fam, np.zeros(3))


def test_trajectory_output(spins, tmp_path, rng):
    fam, H, _ = spins
    tr = evolve(GenState.random(fam, rng), H, dt=0.05, steps=3)
    tr.write_csv(tmp_path / "t.csv")
    tr.write_json(tmp_path / "t.json")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0].startswith("time,energy,norm,gram_cond,x0")
    assert len(lines) == 5
    rows = json.loads((tmp_path / "t.json").read_text())
    assert [r["time"] for r in rows] == pytest.approx([0, 0.05, 0.1, 0.15])
    assert len(rows[0]["params"]) == len(tr.final.params)
