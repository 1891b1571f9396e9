import numpy as np
import pytest

from symspectra.blockspace import BlockDims, canonical_structure_matrix, projectors

DIMS = [BlockDims(1, 0), BlockDims(1, 1), BlockDims(2, 1), BlockDims(3, 2),
        BlockDims(2, 0)]


def test_structure_matrix_hamiltonian_case():
    j = canonical_structure_matrix(BlockDims(1, 0))
    assert np.array_equal(j, np.array([[0, -1], [1, 0]], dtype=complex))


def test_structure_matrix_with_middle_block():
    j = canonical_structure_matrix(BlockDims(1, 1))
    expected = np.array([[0, 0, -1], [0, 1j, 0], [1, 0, 0]], dtype=complex)
    assert np.array_equal(j, expected)


@pytest.mark.parametrize("dims", DIMS, ids=str)
def test_structure_matrix_invariants(dims):
    j = canonical_structure_matrix(dims)
    n = dims.dim_total
    assert j.shape == (n, n)
    assert np.max(np.abs(j + j.conj().T)) == 0.0          # skew-Hermitian
    assert np.max(np.abs(j.conj().T @ j - np.eye(n))) == 0.0
    # the middle block squares to -I as well, so J J = -I for every dims;
    # realness (J = conj(J)) is what distinguishes a trivial middle block
    assert np.max(np.abs(j @ j + np.eye(n))) == 0.0
    is_real = np.max(np.abs(j.imag)) == 0.0
    assert is_real == (dims.dim_hhat == 0)


@pytest.mark.parametrize("dims", DIMS, ids=str)
def test_projector_completeness_and_orthogonality(dims):
    pr = projectors(dims)
    n = dims.dim_total
    assert np.array_equal(pr.p0 + pr.phat + pr.p1, np.eye(n, dtype=complex))
    for a in (pr.p0, pr.phat, pr.p1):
        assert np.max(np.abs(a @ a - a)) == 0.0
        assert np.max(np.abs(a - a.conj().T)) == 0.0
    for a, b in ((pr.p0, pr.phat), (pr.p0, pr.p1), (pr.phat, pr.p1)):
        assert np.max(np.abs(a @ b)) == 0.0


@pytest.mark.parametrize("dims", DIMS, ids=str)
def test_extraction_and_embedding_roundtrip(dims):
    pr = projectors(dims)
    h, hh = dims.dim_h, dims.dim_hhat
    assert np.array_equal(pr.e_top @ pr.e_top.conj().T, np.eye(h, dtype=complex))
    if hh:
        assert np.array_equal(pr.e_hat @ pr.e_hat.conj().T,
                              np.eye(hh, dtype=complex))
    assert np.array_equal(pr.p_h0_h @ pr.i_h_h0, np.eye(h, dtype=complex))
    # re-embedding reproduces each block
    vec = np.arange(1, dims.dim_total + 1, dtype=complex)
    rebuilt = (pr.e_top.conj().T @ (pr.e_top @ vec)
               + pr.e_hat.conj().T @ (pr.e_hat @ vec)
               + pr.e_bot.conj().T @ (pr.e_bot @ vec))
    assert np.array_equal(rebuilt, vec)


def test_projector_examples():
    pr0 = projectors(BlockDims(1, 0))
    assert np.array_equal(pr0.p0, np.diag([1, 0]).astype(complex))
    assert np.array_equal(pr0.p1, np.diag([0, 1]).astype(complex))
    assert np.max(np.abs(pr0.phat)) == 0.0
    pr1 = projectors(BlockDims(1, 1))
    assert np.array_equal(pr1.phat, np.diag([0, 1, 0]).astype(complex))


def test_dims_validation():
    with pytest.raises(ValueError):
        BlockDims(0, 1)
    with pytest.raises(ValueError):
        BlockDims(1, -1)
    d = BlockDims(2, 1)
    assert d.dim_h0 == 3
    assert d.dim_total == 5
