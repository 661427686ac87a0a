import numpy as np
import pytest

from gencs.bch import triangular_split
from gencs.families import make_family
from gencs.families.fermion import a_plus_from_G, cartan_decompose_f
from gencs.families.gaussian import r_matrix_gaussian
from gencs.linalg import expm, omega
from gencs.oracle import DenseSystem


def test_cartan_identity():
    T, u, theta = cartan_decompose_f(np.eye(4))
    assert np.allclose(T, np.eye(4)) and np.allclose(u, np.eye(4)) and abs(theta) < 1e-15


def test_cartan_small_pairing_element(rng):
    N = 2
    A = rng.normal(size=(N, N)) * 1e-3
    B = rng.normal(size=(N, N)) * 1e-3
    A, B = A - A.T, B - B.T
    K = np.block([[A, B], [B, -A]])
    G = expm(K)
    T, u, _ = cartan_decompose_f(G)
    assert np.abs(T - G).max() < 1e-5
    assert np.abs(u - np.eye(2 * N)).max() < 1e-5


@pytest.mark.parametrize("seed", range(3))
def test_cartan_random_invariants(seed):
    rng = np.random.default_rng(seed)
    fam = make_family("fermion", 4)
    G = fam.group(rng.normal(size=fam.algebra.dim) * 0.3)
    W = omega(4)
    T, u, _ = cartan_decompose_f(G)
    assert np.abs(np.linalg.inv(u) @ T - G).max() < 1e-10
    assert np.abs(W @ T - np.linalg.inv(T) @ W).max() < 1e-10
    assert np.abs(u @ W @ u.T - W).max() < 1e-10


def test_identity_split():
    A, _, r0 = a_plus_from_G(np.eye(4))
    assert np.abs(A).max() < 1e-15 and abs(r0 - 1) < 1e-15


@pytest.mark.parametrize("n", [2, 4])
def test_vacuum_amplitude_matches_dense(n, rng):
    fam = make_family("fermion", n)
    K = rng.normal(size=fam.algebra.dim) * 0.3
    G = fam.group(K)
    ds = DenseSystem("fermion", n)
    amp = ds.apply_group(K, ds.reference)[0]
    r0, _ = fam.prefactor_and_R(G)
    assert abs(r0 * fam.lift_sign(fam.algebra.element(K).real) - amp) < 1e-10


def test_pairing_amplitude_is_antisymmetric(rng):
    fam = make_family("fermion", 2)
    K = rng.normal(size=fam.algebra.dim) * 0.3
    A, _, _ = a_plus_from_G(fam.group(K))
    assert np.abs(A + A.T).max() < 1e-12


def test_triangular_split_vacuum_amplitude(rng):
    # the Cartan factor of the LU split fixes <0|U|0> up to the double-cover sign
    fam = make_family("fermion", 3)
    K = rng.normal(size=fam.algebra.dim) * 0.4
    f = triangular_split(fam.algebra, fam.group(K), fam.triangular_basis)
    ds = DenseSystem("fermion", 3)
    amp = ds.apply_group(K, ds.reference)[0]
    assert abs(np.exp(1j * f.A_zero @ fam.mu) ** 2 - amp**2) < 1e-10


def test_r_matrix_on_fock_space():
    ds = DenseSystem("fermion", 2)
    fam = ds.family
    A = np.array([[0, 0.3 + 0.2j], [-0.3 - 0.2j, 0]])
    c = [ds.form_op(fam.annihilation(k)).toarray() for k in range(2)]
    # the fermionic lowering factor carries the opposite sign of the bosonic one
    T = expm(sum(np.conj(A[k, l]) * c[k] @ c[l] for k in range(2) for l in range(2)))
    R = r_matrix_gaussian(A)
    X = [x.toarray() for x in ds.carrier]
    for i in range(4):
        rhs = sum(R[i, j] * X[j] for j in range(4)) @ T
        assert np.abs(T @ X[i] - rhs).max() < 1e-14


def test_wick_moments():
    fam = make_family("fermion", 2)
    e = np.eye(4)
    assert np.allclose(fam.base_moments(np.array([[e[0]]])), [0])
    assert np.allclose(fam.base_moments(np.array([[e[0], e[2]]])), [0.5j])


def test_degree_four_moment_matches_dense(rng):
    ds = DenseSystem("fermion", 2)
    fam = ds.family
    F = rng.normal(size=(1, 4, 4))
    psi = ds.reference
    dense = np.vdot(psi, ds.apply_monomial(F[0], psi))
    assert abs(fam.base_moments(F)[0] - dense) < 1e-12


def test_theta_mod_pi_matches_principal_theta(rng):
    fam = make_family("fermion", 3)
    gs = np.array([fam.group(rng.normal(size=fam.algebra.dim) * 0.8) for _ in range(10)])
    d = (fam.theta_batch(gs) - fam.theta_mod_pi(gs)) / np.pi
    assert np.abs(d - np.round(d)).max() < 1e-10


def test_batched_prefactors_match_single(rng):
    fam = make_family("fermion", 3)
    gs = np.array([fam.group(rng.normal(size=fam.algebra.dim) * 0.5) for _ in range(5)])
    r, R = fam.prefactors_and_Rs(gs)
    for k, g in enumerate(gs):
        r1, R1 = fam.prefactor_and_R(g)
        assert abs(r[k] - r1) < 1e-13 and np.abs(R[k] - R1).max() < 1e-13
