import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qemsim.errors import DimensionError, NonHermitianError
from qemsim.opalg import (
    HilbertLayout,
    QuantumOperator,
    Superoperator,
    annihilation,
    commutator_norm,
    devectorize,
    dissipator,
    embed,
    expectation,
    hamiltonian_part,
    spost,
    spre,
    vectorize,
)


def random_matrix(rng, d, hermitian=False):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return m + m.conj().T if hermitian else m


def random_density(rng, d):
    m = random_matrix(rng, d)
    rho = m @ m.conj().T
    return rho / np.trace(rho)


small_layouts = st.lists(st.integers(2, 4), min_size=1, max_size=3).map(
    lambda dims: HilbertLayout(tuple(dims), tuple(f"s{i}" for i in range(len(dims))))
)


def test_annihilation_matrix_elements():
    a = annihilation(4)
    assert a[0, 1] == 1.0
    assert np.isclose(a[2, 3], np.sqrt(3))
    n = a.conj().T @ a
    assert np.allclose(np.diag(n), [0, 1, 2, 3])


def test_truncated_commutator_is_identity_except_top_level():
    a = annihilation(5)
    c = a @ a.conj().T - a.conj().T @ a
    assert np.allclose(np.diag(c)[:-1], 1.0)
    assert np.isclose(c[-1, -1], -4.0)


def test_annihilation_rejects_single_level():
    with pytest.raises(DimensionError):
        annihilation(1)


def test_embed_matches_explicit_kron():
    layout = HilbertLayout((3, 4, 5))
    a = annihilation(4)
    expected = np.kron(np.kron(np.eye(3), a), np.eye(5))
    assert np.array_equal(embed(a, "cavity", layout).matrix, expected)


def test_embed_wrong_shape():
    with pytest.raises(DimensionError):
        embed(np.eye(3), "cavity", HilbertLayout((3, 4, 5)))


def test_layout_mismatch_raises():
    a = QuantumOperator(np.eye(6), HilbertLayout((2, 3), ("x", "y")))
    b = QuantumOperator(np.eye(6), HilbertLayout((3, 2), ("x", "y")))
    with pytest.raises(DimensionError):
        a @ b


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_vectorization_identity(d, seed):
    rng = np.random.default_rng(seed)
    A, B, rho = (random_matrix(rng, d) for _ in range(3))
    lhs = vectorize(A @ rho @ B)
    rhs = np.kron(B.T, A) @ vectorize(rho)
    assert np.allclose(lhs, rhs, atol=1e-10)
    assert np.allclose((spre(A) @ spost(B)).toarray() @ vectorize(rho), lhs, atol=1e-10)
    assert np.allclose(devectorize(vectorize(rho)), rho)


@settings(max_examples=30, deadline=None)
@given(small_layouts, st.integers(0, 2**32 - 1))
def test_dissipator_is_trace_preserving_and_hermiticity_preserving(layout, seed):
    rng = np.random.default_rng(seed)
    d = layout.total
    c = QuantumOperator(random_matrix(rng, d), layout)
    L = dissipator(c)
    rho = random_density(rng, d)
    out = L.apply(rho).matrix
    scale = np.abs(L.matrix.data).max()
    assert abs(np.trace(out)) <= 1e-12 * scale
    assert np.allclose(out, out.conj().T, atol=1e-12 * scale)
    assert L.trace_defect() <= 1e-12 * scale


@settings(max_examples=30, deadline=None)
@given(small_layouts, st.integers(0, 2**32 - 1))
def test_hamiltonian_part_is_commutator(layout, seed):
    rng = np.random.default_rng(seed)
    d = layout.total
    h = random_matrix(rng, d, hermitian=True)
    rho = random_density(rng, d)
    out = hamiltonian_part(QuantumOperator(h, layout)).apply(rho).matrix
    assert np.allclose(out, -1j * (h @ rho - rho @ h), atol=1e-10)


def test_hamiltonian_part_rejects_non_hermitian():
    layout = HilbertLayout((2,), ("q",))
    with pytest.raises(NonHermitianError):
        hamiltonian_part(QuantumOperator(np.array([[0, 1], [0, 0]]), layout))


def test_expectation_is_trace():
    rng = np.random.default_rng(1)
    rho, a = random_density(rng, 5), random_matrix(rng, 5)
    assert np.isclose(expectation(rho, a), np.trace(rho @ a))


def test_commutator_norm_number_and_lowering():
    a = annihilation(4)
    n = a.conj().T @ a
    # [n, a] = -a
    assert np.isclose(commutator_norm(n, a), np.linalg.norm(a))


def test_superoperator_shape_checked():
    with pytest.raises(DimensionError):
        Superoperator(np.eye(5), HilbertLayout((2,), ("q",)))


def test_devectorize_rejects_non_square_length():
    with pytest.raises(DimensionError):
        devectorize(np.zeros(5))
