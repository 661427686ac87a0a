import numpy as np
import pytest

from gencs.errors import CutoffError, InputError
from gencs.families import make_family
from gencs.operators import OperatorExpr
from gencs.oracle import DenseSystem, converged_expectations
from gencs.standard_form import GenState


def ops(fam, *tokens):
    return OperatorExpr.from_tokens(fam, [(1.0, list(tokens))])


def test_trivial_spin_state_is_all_down():
    ds = DenseSystem("spin", 2)
    psi = ds.build_state(GenState.from_params(ds.family))
    assert np.allclose(psi, [0, 0, 0, 1])
    assert abs(ds.expect_dense(psi, ops(ds.family, "sz[0]")) + 1) < 1e-15
    assert abs(ds.expect_dense(psi, OperatorExpr.identity(ds.family)) - 1) < 1e-15


@pytest.mark.parametrize("kind,n,cut", [("spin", 3, None), ("fermion", 3, None), ("boson", 2, 30)])
def test_states_are_normalized(kind, n, cut, rng):
    ds = DenseSystem(kind, n, cut)
    st = GenState.random(ds.family, rng, 0.3)
    assert abs(np.linalg.norm(ds.build_state(st)) - 1) < 1e-10


def test_dimensions():
    assert DenseSystem("spin", 3).dim == 8
    assert DenseSystem("fermion", 4).dim == 16
    assert DenseSystem("boson", 2, 9).dim == 100
    with pytest.raises(InputError):
        DenseSystem("boson", 4, 20)
    with pytest.raises(InputError):
        DenseSystem("boson", 1)


def test_cutoff_error_on_heavy_tail():
    ds = DenseSystem("boson", 1, 4)
    st = GenState.from_params(ds.family, [0.0, 0.0, 1.5])
    with pytest.raises(CutoffError):
        ds.build_state(st)


def test_hermitian_expectations_real(rng):
    ds = DenseSystem("fermion", 2)
    psi = ds.build_state(GenState.random(ds.family, rng))
    a = ops(ds.family, "gamma[0]", "gammabar[1]")
    assert abs(ds.expect_dense(psi, a + a.adjoint()).imag) < 1e-12


def test_converged_expectations_stable(rng):
    fam = make_family("boson", 1)
    st = GenState.random(fam, rng, 0.3)
    obs = [ops(fam, "n[0]"), ops(fam, "q[0]", "q[0]")]
    vals, cut = converged_expectations("boson", 1, st, obs)
    finer = DenseSystem("boson", 1, 2 * cut)
    psi = finer.build_state(st)
    assert np.abs(vals - [finer.expect_dense(psi, o) for o in obs]).max() < 1e-8


def test_M_entangles_two_spins():
    ds = DenseSystem("spin", 2)
    fam = ds.family
    # exp(i (pi/4) sigma_y) rotates |down> to +x
    K = np.array([0.0, np.pi / 4, 0.0] * 2)
    x0, x1 = ops(fam, "sx[0]"), ops(fam, "sx[1]")
    psi0 = ds.build_state(GenState.from_params(fam, K2=K))
    assert abs(ds.expect_dense(psi0, x0) - 1) < 1e-12
    M = np.array([[0, np.pi / 2], [np.pi / 2, 0]])
    psi = ds.build_state(GenState.from_params(fam, M=M, K2=K))
    conn = ds.expect_dense(psi, x0 @ x1) - ds.expect_dense(psi, x0) * ds.expect_dense(psi, x1)
    assert abs(conn) > 0.1


def test_ground_energy_single_spin():
    ds = DenseSystem("spin", 1)
    assert abs(ds.ground_energy(ops(ds.family, "sx[0]")) + 1) < 1e-14
