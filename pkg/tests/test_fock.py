import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsync.fock import (
    DensityMatrix, FockSpace, create, destroy, fock_dm, identity, maximally_mixed, number,
    partial_trace, unvec, vec, spre, spost, sprepost,
)

from conftest import random_dm


def test_destroy_two_level():
    assert np.array_equal(destroy(FockSpace(2)).full(), [[0, 1], [0, 0]])


def test_destroy_matrix_element_sqrt2():
    assert destroy(FockSpace(3)).full()[1, 2] == pytest.approx(1.41421356, abs=1e-8)


def test_destroy_kronecker_placement():
    a = destroy(FockSpace(2, 2), 1).full()
    assert np.array_equal(a, np.kron(np.eye(2), [[0, 1], [0, 0]]))


def test_destroy_index_out_of_range():
    with pytest.raises(IndexError):
        destroy(FockSpace(3), 1)


@pytest.mark.parametrize("N", [2, 3, 7, 12])
def test_ladder_elements_sqrt_n(N):
    a = destroy(FockSpace(N)).full()
    expected = np.diag(np.sqrt(np.arange(1, N)), 1)
    assert np.array_equal(a, expected)
    comm = (a @ a.conj().T - a.conj().T @ a)
    assert np.allclose(np.diag(comm)[:-1], 1.0, atol=0)


def test_number_operator_and_square():
    s = FockSpace(3)
    a = destroy(s)
    assert np.allclose((a.dag() @ a).full(), np.diag([0, 1, 2]))
    a2 = (a @ a).full()
    assert np.count_nonzero(a2) == 1 and a2[0, 2] == pytest.approx(np.sqrt(2))
    assert (a + a.dag()).is_hermitian(atol=0)
    assert number(s).allclose(a.dag() @ a)
    assert create(s).allclose(a.dag())


def test_space_mismatch_rejected():
    with pytest.raises(ValueError):
        destroy(FockSpace(3)) + destroy(FockSpace(4))


def test_space_invariants():
    s = FockSpace(3, 4)
    assert s.dim == 12 and s.nmodes == 2
    with pytest.raises(ValueError):
        FockSpace(1)


@given(st.integers(0, 10_000))
def test_adjoint_rules(seed):
    rng = np.random.default_rng(seed)
    s = FockSpace(3, 2)
    a, b = destroy(s, 0), destroy(s, 1)
    A = complex(rng.normal(), rng.normal()) * (a @ b.dag()) + rng.normal() * (a ** 2)
    B = b + complex(rng.normal(), 1.0) * a.dag() @ a
    assert A.dag().dag().allclose(A, atol=1e-14)
    assert (A @ B).dag().allclose(B.dag() @ A.dag(), atol=1e-12)


def test_partial_trace_examples():
    s = FockSpace(2, 2)
    rho = fock_dm(s, (0, 1))
    assert np.allclose(partial_trace(rho, 0).data, [[1, 0], [0, 0]])
    assert np.allclose(partial_trace(maximally_mixed(s), 1).data, np.eye(2) / 2)
    psi = np.zeros(4)
    psi[0] = psi[3] = 1 / np.sqrt(2)
    bell = DensityMatrix(s, np.outer(psi, psi))
    assert np.allclose(partial_trace(bell, 0).data, np.diag([0.5, 0.5]))


def test_partial_trace_single_factor_rejected():
    with pytest.raises(ValueError):
        partial_trace(maximally_mixed(FockSpace(3)), 0)


@given(st.integers(0, 10_000), st.integers(0, 1))
def test_partial_trace_preserves_trace_and_positivity(seed, keep):
    rho = random_dm(FockSpace(3, 4), seed)
    red = partial_trace(rho, keep)
    assert abs(red.trace - 1) < 1e-12
    assert red.min_eigenvalue() > -1e-12


def test_density_matrix_invariants():
    s = FockSpace(2)
    with pytest.raises(ValueError):
        DensityMatrix(s, np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        DensityMatrix(s, np.diag([0.6, 0.6]))
    with pytest.raises(ValueError):
        DensityMatrix(s, np.diag([1.5, -0.5]))


@given(st.integers(0, 10_000))
def test_superoperator_vectorization(seed):
    rng = np.random.default_rng(seed)
    s = FockSpace(4)
    A = destroy(s) + 0.3 * identity(s)
    B = destroy(s).dag() @ destroy(s)
    X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    Am, Bm = A.full(), B.full()
    assert np.allclose(unvec(spre(A) @ vec(X)), Am @ X)
    assert np.allclose(unvec(spost(B) @ vec(X)), X @ Bm)
    assert np.allclose(unvec(sprepost(A, B) @ vec(X)), Am @ X @ Bm)
