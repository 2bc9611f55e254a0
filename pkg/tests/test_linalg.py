import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hqmm.errors import DimensionError, SizeLimitError, ValidationError
from hqmm.linalg import (
    as_hermitian,
    canonical_phase,
    fubini_study_distance,
    hermitian_eig,
    partial_trace,
    tensor_product,
    top_eigenprojector,
    top_eigenvector,
)

from conftest import random_density, random_hermitian, random_ket

seeds = st.integers(0, 2**32 - 1)


def charpoly_roots(a):
    """Eigenvalue oracle: Faddeev-LeVerrier coefficients, then polynomial roots."""
    n = a.shape[0]
    coeffs = [1.0 + 0j]
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(a @ m) / k)
    return np.sort(np.roots(coeffs).real)[::-1]


def test_tensor_product_examples():
    a = np.array([[1, 2], [3, 4]])
    b = np.eye(2)
    expected = np.array([[1, 0, 2, 0], [0, 1, 0, 2], [3, 0, 4, 0], [0, 3, 0, 4]])
    assert np.array_equal(tensor_product(a, b), expected)
    assert tensor_product(np.eye(2), np.eye(3)).shape == (6, 6)


def test_tensor_product_entrywise_oracle(rng):
    a = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    b = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    t = tensor_product(a, b)
    for i in range(2):
        for j in range(3):
            for k in range(3):
                for l in range(2):
                    assert t[i * 3 + k, j * 2 + l] == pytest.approx(a[i, j] * b[k, l], abs=1e-14)


def test_tensor_product_size_limit():
    with pytest.raises(SizeLimitError):
        tensor_product(np.eye(100), np.eye(100))


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_tensor_product_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_hermitian(rng, 2) for _ in range(3))
    left = tensor_product(tensor_product(a, b), c)
    right = tensor_product(a, tensor_product(b, c))
    assert np.allclose(left, right, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_trace_multiplicative_and_linear(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_hermitian(rng, 3) for _ in range(3))
    s, t = rng.normal(size=2)
    assert np.trace(tensor_product(a, b)) == pytest.approx(np.trace(a) * np.trace(b), abs=1e-10)
    lhs = np.trace(tensor_product(s * a + t * c, b))
    rhs = s * np.trace(tensor_product(a, b)) + t * np.trace(tensor_product(c, b))
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_partial_trace_of_product(rng):
    a, b = random_density(rng, 2), random_density(rng, 3)
    x = tensor_product(a, b)
    assert np.allclose(partial_trace(x, (2, 3), keep=0), a, atol=1e-14)
    assert np.allclose(partial_trace(x, (2, 3), keep=1), b, atol=1e-14)


def test_eig_examples():
    spec = hermitian_eig(np.diag([0.25, 1.0, 0.5]))
    assert np.allclose(spec.eigenvalues, [1.0, 0.5, 0.25])
    a = np.array([[3, np.sqrt(3)], [np.sqrt(3), 1]]) / 8
    spec = hermitian_eig(a)
    assert spec.eigenvalues == pytest.approx([0.5, 0.0], abs=1e-15)
    assert np.allclose(spec.eigenvectors[:, 0], [np.sqrt(3) / 2, 0.5], atol=1e-15)


def test_eig_matches_characteristic_polynomial(rng):
    for dim in (2, 3, 4):
        a = random_hermitian(rng, dim)
        assert np.allclose(hermitian_eig(a).eigenvalues, charpoly_roots(a), atol=1e-8)


def test_eig_properties_on_random_matrices(rng):
    for k in range(1000):
        dim = 2 + k % 7
        a = random_hermitian(rng, dim)
        w, v = hermitian_eig(a)
        assert np.all(np.diff(w) <= 0)
        assert np.allclose(v.conj().T @ v, np.eye(dim), atol=1e-10)
        assert np.allclose(v @ np.diag(w) @ v.conj().T, a, atol=1e-10)


def test_eig_large_dimension_fallback(rng):
    a = random_hermitian(rng, 20)
    w, v = hermitian_eig(a)
    assert np.allclose(v @ np.diag(w) @ v.conj().T, a, atol=1e-10)


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        hermitian_eig(np.array([[0, 1], [0, 0]]))
    with pytest.raises(DimensionError):
        hermitian_eig(np.ones((2, 3)))


def test_top_eigenprojector_dominates_random_states(rng):
    a = random_hermitian(rng, 3)
    p, lam = top_eigenprojector(a)
    assert np.trace(a @ p).real == pytest.approx(lam, abs=1e-12)
    kets = rng.normal(size=(10_000, 3)) + 1j * rng.normal(size=(10_000, 3))
    kets /= np.linalg.norm(kets, axis=1, keepdims=True)
    values = np.einsum("ki,ij,kj->k", kets.conj(), a, kets).real
    assert values.max() <= lam + 1e-12


def test_top_eigenvector_is_deterministic():
    a = np.array([[1.0, 0.0], [0.0, 1.0 + 1e-16]])
    v1, _ = top_eigenvector(a)
    v2, _ = top_eigenvector(a.copy())
    assert np.array_equal(v1, v2)


def test_canonical_phase_first_component_real_positive(rng):
    v = random_ket(rng, 3)
    c = canonical_phase(v * np.exp(0.7j))
    assert c[0].imag == 0 and c[0].real > 0
    assert np.allclose(c, canonical_phase(v))


def test_fubini_study_examples():
    assert fubini_study_distance([1, 0], [0, 1]) == pytest.approx(np.pi / 2)
    assert fubini_study_distance([1, 0], [1, 1]) == pytest.approx(np.pi / 4)
    assert fubini_study_distance([1, 1j], [1j, -1]) == pytest.approx(0.0, abs=1e-15)


def test_fubini_study_matches_arccos(rng):
    for _ in range(100):
        a, b = random_ket(rng, 2), random_ket(rng, 2)
        overlap = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
        assert fubini_study_distance(a, b) == pytest.approx(np.arccos(min(overlap, 1.0)), abs=1e-8)


def test_as_hermitian_symmetrizes_small_defects():
    a = np.array([[1.0, 0.5 + 1e-13], [0.5, 2.0]])
    h = as_hermitian(a)
    assert np.array_equal(h, h.conj().T)


def test_tensor_basis_projector_product():
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    t = tensor_product(p0, p1)
    expected = np.zeros((4, 4))
    expected[1, 1] = 1
    assert np.array_equal(t, expected)
    sx = np.array([[0, 1], [1, 0]])
    twice = tensor_product(sx, sx) @ tensor_product(sx, sx)
    assert np.array_equal(twice, tensor_product(sx @ sx, sx @ sx))
    assert np.array_equal(twice, np.eye(4))


def test_top_eigenprojector_examples():
    p, lam = top_eigenprojector(np.eye(2))
    assert lam == pytest.approx(1.0)
    assert np.allclose(p, np.diag([1.0, 0.0]))
    p, lam = top_eigenprojector(np.diag([0.1, 0.9]))
    assert lam == pytest.approx(0.9)
    assert np.allclose(p, np.diag([0.0, 1.0]))
    a = np.array([[3, np.sqrt(3)], [np.sqrt(3), 1]]) / 8
    p, lam = top_eigenprojector(a)
    v = np.array([np.sqrt(3) / 2, 0.5])
    assert lam == pytest.approx(0.5, abs=1e-15)
    assert np.allclose(p, np.outer(v, v), atol=1e-15)
