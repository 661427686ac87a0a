import numpy as np
import pytest

from gencs.errors import InputError
from gencs.families import make_family
from gencs.operators import OperatorExpr
from gencs.oracle import DenseSystem


def dense(ds, obs):
    return ds.hamiltonian(obs).toarray()


def test_parse_matches_tokens():
    fam = make_family("spin", 2)
    a = OperatorExpr.parse(fam, "1 0 : sx[0] sz[1]\n0 0.5 : sy[1]  # comment\n")
    b = OperatorExpr.from_tokens(fam, [(1, ["sx[0]", "sz[1]"]), (0.5j, ["sy[1]"])])
    ds = DenseSystem("spin", 2)
    assert np.allclose(dense(ds, a), dense(ds, b))
    assert a.degree == 2


@pytest.mark.parametrize(
    "text",
    ["1 0 sx[0]", "1 : sx[0]", "a b : sx[0]", "1 0 : sw[0]", "1 0 : sx[5]", ""],
)
def test_parse_errors(text):
    with pytest.raises(InputError):
        OperatorExpr.parse(make_family("spin", 2), text)


def test_ladder_operators_dense():
    ds = DenseSystem("boson", 1, 10)
    fam = ds.family
    a = dense(ds, OperatorExpr.from_tokens(fam, [(1, ["a[0]"])]))
    ad = dense(ds, OperatorExpr.from_tokens(fam, [(1, ["adag[0]"])]))
    n = dense(ds, OperatorExpr.from_tokens(fam, [(1, ["n[0]"])]))
    assert np.allclose(a, np.diag(np.sqrt(np.arange(1, 11)), 1))
    assert np.allclose(ad, a.conj().T)
    assert np.allclose(n, np.diag(np.arange(11.0)))


def test_fermion_operators_dense():
    ds = DenseSystem("fermion", 2)
    fam = ds.family
    c0 = dense(ds, OperatorExpr.from_tokens(fam, [(1, ["c[0]"])]))
    c1 = dense(ds, OperatorExpr.from_tokens(fam, [(1, ["c[1]"])]))
    assert np.allclose(c0 @ c1 + c1 @ c0, 0)
    assert np.allclose(c0 @ c0.conj().T + c0.conj().T @ c0, np.eye(4))
    nf = dense(ds, OperatorExpr.from_tokens(fam, [(1, ["nf[1]"])]))
    assert np.allclose(nf, c1.conj().T @ c1)


def test_spin_ladder_dense():
    ds = DenseSystem("spin", 1)
    fam = ds.family
    sp = dense(ds, OperatorExpr.from_tokens(fam, [(1, ["sp[0]"])]))
    sx = dense(ds, OperatorExpr.from_tokens(fam, [(1, ["sx[0]"])]))
    sy = dense(ds, OperatorExpr.from_tokens(fam, [(1, ["sy[0]"])]))
    assert np.allclose(sp, 0.5 * (sx + 1j * sy))


def test_algebra_bases_agree():
    fam = make_family("boson", 2)
    ds = DenseSystem("boson", 2, 6)
    alg = fam.algebra
    for i in range(alg.dim):
        he = dense(ds, OperatorExpr.from_algebra(fam, [(1, [i])], "HE"))
        z = sum(
            alg.basis_change[i, j] * dense(ds, OperatorExpr.from_algebra(fam, [(1, [j])]))
            for j in range(alg.dim)
        )
        assert np.abs(he - z).max() < 1e-12


def test_algebra_operator_matches_oracle():
    ds = DenseSystem("fermion", 2)
    fam = ds.family
    K = np.linspace(-0.5, 0.7, fam.algebra.dim)
    obs = OperatorExpr.from_algebra(fam, [(k, [i]) for i, k in enumerate(K)])
    assert np.abs(dense(ds, obs) - ds.algebra_op(K).toarray()).max() < 1e-12


def test_arithmetic_and_adjoint():
    ds = DenseSystem("spin", 2)
    fam = ds.family
    a = OperatorExpr.from_tokens(fam, [(1 + 2j, ["sx[0]", "sy[1]"])])
    b = OperatorExpr.from_tokens(fam, [(0.5, ["sz[0]"])])
    A, B = dense(ds, a), dense(ds, b)
    assert np.allclose(dense(ds, a + b), A + B)
    assert np.allclose(dense(ds, a - b), A - B)
    assert np.allclose(dense(ds, 3 * a), 3 * A)
    assert np.allclose(dense(ds, a @ b), A @ B)
    assert np.allclose(dense(ds, a.adjoint()), A.conj().T)


def test_identity():
    ds = DenseSystem("spin", 1)
    assert np.allclose(dense(ds, OperatorExpr.identity(ds.family, 2.0)), 2 * np.eye(2))


def test_mixed_families_rejected():
    a = OperatorExpr.identity(make_family("spin", 1))
    b = OperatorExpr.identity(make_family("boson", 1))
    with pytest.raises(InputError):
        a + b
