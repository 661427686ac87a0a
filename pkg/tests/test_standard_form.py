import numpy as np
import pytest

from gencs.errors import InputError
from gencs.families import make_family
from gencs.families.spin import PAULI
from gencs.linalg import expm
from gencs.operators import OperatorExpr
from gencs.oracle import DenseSystem, converged_expectations
from gencs.standard_form import (
    GenState,
    StandardTerm,
    coherent_expectation,
    evaluate_terms,
    expectation,
    expectations,
    push_V,
    push_group,
    reduce,
)


def ops(fam, *tokens, coeff=1.0):
    return OperatorExpr.from_tokens(fam, [(coeff, list(tokens))])


def dense_sandwich(ds, K, M, forms):
    """``<mu| U(h)^dag V^dag prod V U(h) |mu>`` with ``h = exp(K.Z)``."""
    psi = ds.apply_V(M, ds.apply_group(K, ds.reference))
    return np.vdot(psi, ds.apply_monomial(forms, psi))


def test_identity_observable(rng):
    fam = make_family("spin", 2)
    one = OperatorExpr.identity(fam)
    assert abs(expectation(GenState.from_params(fam), one) - 1) < 1e-15
    assert abs(expectation(GenState.random(fam, rng), one) - 1) < 1e-12


def test_spin_pair_correlator_matches_dense(rng):
    fam = make_family("spin", 2)
    ds = DenseSystem("spin", 2)
    obs = ops(fam, "sx[0]", "sx[1]")
    for _ in range(5):
        st = GenState.random(fam, rng)
        assert abs(expectation(st, obs) - ds.expect_dense(ds.build_state(st), obs)) < 1e-10


def test_boson_quadrature_product_matches_converged_oracle(rng):
    fam = make_family("boson", 2)
    st = GenState.random(fam, rng, 0.3, 0.5)
    obs = ops(fam, "q[0]", "p[1]")
    ref, _ = converged_expectations("boson", 2, st, [obs])
    assert abs(expectation(st, obs) - ref[0]) < 1e-6


def test_term_table_matches_reference_path(rng, family):
    st = GenState.random(family, rng, 0.5, 1.0)
    names = [f"{o}[0]" for o in family.op_names[:3]]
    obs = ops(family, *names[:2]) + ops(family, names[2], coeff=0.3j)
    table = reduce(st, obs)
    assert abs(table.evaluate() - evaluate_terms(list(table), family)) < 1e-10


def test_degree_is_preserved(rng, family):
    st = GenState.random(family, rng, 0.5)
    obs = ops(family, *[f"{family.op_names[0]}[0]"] * 3)
    assert all(t.degree == 3 for t in reduce(st, obs))


def test_push_group_matches_dense(rng):
    fam = make_family("spin", 1)
    g, h = fam.group(rng.normal(size=3)), fam.group(rng.normal(size=3))
    F = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    t = push_group(StandardTerm(1.0, g, F), h, fam)
    sig = lambda f: np.einsum("i,iab->ab", f, PAULI)
    mu = np.array([0, 1.0])
    dense = mu @ np.linalg.inv(h) @ g @ sig(F[0]) @ sig(F[1]) @ h @ mu
    assert abs(evaluate_terms([t], fam) - dense) < 1e-12


@pytest.mark.parametrize("kind,n", [("spin", 2), ("fermion", 2), ("boson", 1)])
def test_push_V_then_group_matches_dense(kind, n, rng):
    fam = make_family(kind, n)
    ds = DenseSystem(kind, n, 40 if kind == "boson" else None)
    K = rng.normal(size=fam.algebra.dim) * 0.3
    M = rng.uniform(-1, 1, size=(n, n))
    M = M + M.T
    F = rng.normal(size=(2, fam.carrier_dim)) + 0j
    terms = push_V(StandardTerm(1.0, fam.identity(), F), M, fam)
    terms = [push_group(t, fam.group(K), fam) for t in terms]
    assert abs(evaluate_terms(terms, fam) - dense_sandwich(ds, K, M, F)) < 1e-9


def test_sigma_plus_through_V(rng):
    # sigma+_k V = V e^{-(i/2) M_kk} e^{(i/2) sum_l M_kl sigma3_l} sigma+_k
    ds = DenseSystem("spin", 2)
    fam = ds.family
    M = rng.uniform(-1, 1, size=(2, 2))
    M = M + M.T
    V = np.diag(ds.apply_V(M, np.ones(ds.dim)))
    sp = ds.hamiltonian(ops(fam, "sp[0]")).toarray()
    s3 = [ds.hamiltonian(ops(fam, f"sz[{l}]")).toarray() for l in range(2)]
    rhs = V @ expm(-0.5j * M[0, 0] * np.eye(4) + 0.5j * (M[0, 0] * s3[0] + M[0, 1] * s3[1])) @ sp
    assert np.abs(sp @ V - rhs).max() < 1e-13


def test_boson_pair_through_V(rng):
    # a_k a_l V = V e^{-(i/2) W.M.W} e^{i (M W).n} a_k a_l, W = -(e_k + e_l)
    ds = DenseSystem("boson", 2, 8)
    fam = ds.family
    M = rng.uniform(-1, 1, size=(2, 2))
    M = M + M.T
    V = np.diag(ds.apply_V(M, np.ones(ds.dim)))
    aa = ds.hamiltonian(ops(fam, "a[0]", "a[1]")).toarray()
    W = -np.ones(2)
    n = [np.diag(ds.hamiltonian(ops(fam, f"n[{k}]")).toarray()) for k in range(2)]
    cart = np.exp(1j * sum((M @ W)[k] * (n[k] + 0.5) for k in range(2)))
    rhs = np.exp(-0.5j * W @ M @ W) * V @ np.diag(cart) @ aa
    assert np.abs(aa @ V - rhs).max() < 1e-12


def test_hermitian_observable_is_real(rng, family):
    st = GenState.random(family, rng, 0.5)
    a = ops(family, f"{family.op_names[0]}[0]", f"{family.op_names[1]}[0]")
    val = expectation(st, a + a.adjoint())
    assert abs(val.imag) < 1e-10


def test_linearity(rng, family):
    st = GenState.random(family, rng, 0.5)
    A = ops(family, f"{family.op_names[0]}[0]", f"{family.op_names[1]}[0]")
    B = ops(family, f"{family.op_names[1]}[0]")
    alpha, beta = 0.3 - 0.2j, 1.7
    lhs = expectation(st, alpha * A + beta * B)
    assert abs(lhs - alpha * expectation(st, A) - beta * expectation(st, B)) < 1e-12


def test_only_symmetric_part_of_M_matters(rng):
    fam = make_family("spin", 3)
    K1, K2 = rng.normal(size=9), rng.normal(size=9)
    M = rng.uniform(-1, 1, size=(3, 3))
    M = M + M.T
    Asym = np.triu(rng.normal(size=(3, 3)), 1)
    Asym = Asym - Asym.T
    obs = ops(fam, "sx[0]", "sy[1]", "sx[2]")
    a = expectation(GenState.from_params(fam, K1, M, K2), obs)
    b = expectation(GenState.from_params(fam, K1, M + Asym, K2), obs)
    assert abs(a - b) < 1e-12


def test_coherent_limit(rng, family):
    K = rng.normal(size=family.algebra.dim) * 0.5
    st = GenState.from_params(family, K)
    obs = ops(family, f"{family.op_names[0]}[0]", f"{family.op_names[1]}[0]")
    assert abs(expectation(st, obs) - coherent_expectation(family, st.g1, obs)) < 1e-12


def test_batched_expectations(rng, family):
    st = GenState.random(family, rng, 0.5)
    obs = [ops(family, f"{o}[0]") for o in family.op_names] + [OperatorExpr.identity(family)]
    batch = expectations(st, obs)
    assert np.abs(batch - [expectation(st, o) for o in obs]).max() < 1e-12


def test_degree_cap():
    fam = make_family("spin", 1)
    with pytest.raises(InputError):
        expectation(GenState.from_params(fam), ops(fam, *["sx[0]"] * 7))


def test_bad_M_shape():
    fam = make_family("spin", 2)
    with pytest.raises(InputError):
        GenState(fam, fam.identity(), np.zeros((3, 3)), fam.identity())
