import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slpassive import qcore
from slpassive.errors import DimensionMismatch, NonHermitian, NonSquare, NotNormalized


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a + a.conj().T


def test_eig_reconstructs_and_sorts():
    rng = np.random.default_rng(1)
    m = random_hermitian(rng, 6)
    h = qcore.eig_hermitian(m)
    assert np.all(np.diff(h.eigenvalues) >= 0)
    u = h.eigenvectors
    assert np.allclose((u * h.eigenvalues) @ u.conj().T, m, atol=1e-12)
    assert np.allclose(u.conj().T @ u, np.eye(6), atol=1e-12)


def test_eig_phase_convention():
    rng = np.random.default_rng(2)
    h = qcore.eig_hermitian(random_hermitian(rng, 5))
    for v in h.eigenvectors.T:
        pivot = v[np.argmax(np.abs(v))]
        assert abs(pivot.imag) < 1e-14 and pivot.real > 0


def test_eig_keeps_real_input_real():
    h = qcore.eig_hermitian(np.array([[1.0, 2.0], [2.0, -1.0]]))
    assert h.eigenvectors.dtype == np.float64
    assert np.allclose(h.eigenvalues, [-np.sqrt(5), np.sqrt(5)])


def test_eig_arrays_are_read_only():
    h = qcore.eig_hermitian(np.eye(2))
    with pytest.raises(ValueError):
        h.eigenvalues[0] = 3.0


def test_eig_rejects_bad_input():
    with pytest.raises(NonHermitian):
        qcore.eig_hermitian(np.array([[0, 1], [0, 0]]))
    with pytest.raises(NonSquare):
        qcore.eig_hermitian(np.ones((2, 3)))


def test_tiny_asymmetry_is_symmetrized():
    m = np.array([[1.0, 1e-13], [0.0, 2.0]])
    h = qcore.eig_hermitian(m)
    assert np.allclose(h.matrix, h.matrix.T)


def test_clusters_and_projector():
    h = qcore.eig_hermitian(np.diag([1.0, 1.0, 2.0]))
    assert h.clusters() == [[0, 1], [2]]
    p = h.projector(2)
    assert np.allclose(p, np.diag([0, 0, 1]))


def test_kron_many():
    a, b, c = qcore.PAULI_X, qcore.PAULI_Z, qcore.IDENTITY_2
    assert np.allclose(qcore.kron(a, b, c), np.kron(np.kron(a, b), c))


def test_partial_trace_of_product():
    rng = np.random.default_rng(3)
    a = random_hermitian(rng, 2)
    b = random_hermitian(rng, 3)
    m = np.kron(a, b)
    assert np.allclose(qcore.partial_trace(m, (2, 3), keep=0), a * np.trace(b))
    assert np.allclose(qcore.partial_trace(m, (2, 3), keep=1), b * np.trace(a))
    with pytest.raises(DimensionMismatch):
        qcore.partial_trace(m, (3, 3))
    with pytest.raises(ValueError):
        qcore.partial_trace(m, (2, 3), keep=2)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31))
def test_partial_traces_preserve_trace(dc, dr, seed):
    rng = np.random.default_rng(seed)
    m = random_hermitian(rng, dc * dr)
    for keep in (0, 1):
        red = qcore.partial_trace(m, (dc, dr), keep)
        assert abs(np.trace(red) - np.trace(m)) < 1e-10


def test_schmidt_bell_and_product():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    form = qcore.schmidt(bell, (2, 2))
    assert np.allclose(form.coefficients, [0.5, 0.5])
    assert form.rank == 2
    assert np.allclose(form.reconstruct(), bell)
    prod = np.kron([1, 0], [0.6, 0.8])
    assert qcore.schmidt(prod, (2, 2)).rank == 1


def test_schmidt_errors():
    with pytest.raises(NotNormalized):
        qcore.schmidt(np.array([1.0, 1.0, 0, 0]), (2, 2))
    with pytest.raises(DimensionMismatch):
        qcore.schmidt(np.array([1.0, 0, 0]), (2, 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_schmidt_roundtrip_random(seed):
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    psi /= np.linalg.norm(psi)
    form = qcore.schmidt(psi, (2, 3))
    assert abs(form.coefficients.sum() - 1) < 1e-12
    assert np.allclose(form.reconstruct(), psi, atol=1e-12)


def test_ground_state_classify_singlet_like():
    # sigma.sigma coupling: singlet ground state, degenerate triplet above
    h = sum(np.kron(p, p) for p in (qcore.PAULI_X, qcore.PAULI_Y, qcore.PAULI_Z))
    op = qcore.eig_hermitian(h)
    g = qcore.ground_state_classify(op, (2, 2))
    assert g["nondegenerate"] and g["fully_entangled"]
    assert g["gap"] == pytest.approx(4.0)
    top = qcore.ground_state_classify(op, (2, 2), level=3)
    assert not top["nondegenerate"]
