import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slpassive import channels as ch
from slpassive.errors import DimensionMismatch, NotIsometry


def random_density(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_kraus_promotes_single_operator():
    ks = ch.KrausSet(np.eye(2))
    assert ks.ops.shape == (1, 2, 2) and ks.count == 1 and ks.dim == 2
    with pytest.raises(DimensionMismatch):
        ch.KrausSet(np.ones((2, 2, 3)))


def test_validate_reports():
    ident = ch.validate(ch.identity_channel())
    assert ident["valid"] and ident["trivial"] and ident["element_violation"] < 1e-15
    reset = ch.validate(ch.reset_channel())
    assert reset["valid"] and not reset["trivial"]
    bad = ch.validate(ch.KrausSet(2 * np.eye(2)))
    assert not bad["valid"] and bad["violation"] == pytest.approx(3.0)


def test_element_view():
    ks = ch.reset_channel()
    assert np.allclose(ks.s, [1, 0]) and np.allclose(ks.t, [0, 1])
    assert np.allclose(ks.u, [0, 0]) and np.allclose(ks.v, [0, 0])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 9), st.integers(0, 2**31))
def test_random_channel_is_valid(dc, nk, seed):
    nk = min(nk, dc * dc)
    ks = ch.random_channel(dc, nk, seed)
    assert ch.completeness_violation(ks) < 1e-12


def test_random_channel_is_seeded():
    a = ch.random_channel(2, 4, 7)
    b = ch.random_channel(2, 4, 7)
    c = ch.random_channel(2, 4, 8)
    assert np.array_equal(a.ops, b.ops) and not np.allclose(a.ops, c.ops)
    with pytest.raises(ValueError):
        ch.random_channel(2, 5, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4))
def test_apply_local_matches_kron(seed, nk):
    rng = np.random.default_rng(seed)
    ks = ch.random_channel(2, nk, seed)
    rho = random_density(rng, 6)
    direct = sum(np.kron(k, np.eye(3)) @ rho @ np.kron(k, np.eye(3)).conj().T for k in ks.ops)
    out = ch.apply_local(ks, rho, (2, 3))
    assert np.allclose(out, direct, atol=1e-13)
    assert abs(np.trace(out) - 1) < 1e-12
    assert np.linalg.eigvalsh(out)[0] > -1e-12


def test_apply_local_dimension_check():
    with pytest.raises(DimensionMismatch):
        ch.apply_local(ch.identity_channel(), np.eye(6) / 6, (3, 2))


def test_stiefel_roundtrip():
    ks = ch.random_channel(2, 3, 1)
    v = ch.to_stiefel(ks)
    assert v.shape == (6, 2)
    assert np.allclose(v.conj().T @ v, np.eye(2), atol=1e-13)
    assert np.array_equal(ch.from_stiefel(v).ops, ks.ops)
    with pytest.raises(NotIsometry):
        ch.from_stiefel(2 * v)
    with pytest.raises(DimensionMismatch):
        ch.from_stiefel(np.ones((5, 2)))


def test_qr_isometry_positive_diagonal():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((3, 8, 2)) + 1j * rng.standard_normal((3, 8, 2))
    q = ch.qr_isometry(a)
    r = np.swapaxes(q.conj(), 1, 2) @ a
    d = np.diagonal(r, axis1=1, axis2=2)
    assert np.all(d.real > 0) and np.allclose(d.imag, 0, atol=1e-12)


def test_unitary_y():
    u = ch.unitary_y(0.3).ops[0]
    assert np.allclose(u.conj().T @ u, np.eye(2))
    expected = np.cos(0.3) * np.eye(2) - 1j * np.sin(0.3) * np.array([[0, -1j], [1j, 0]])
    assert np.allclose(u, expected)


def test_json_roundtrip():
    ks = ch.random_channel(2, 2, 3)
    back = ch.KrausSet.from_json(ks.to_json())
    assert np.array_equal(back.ops, ks.ops)
