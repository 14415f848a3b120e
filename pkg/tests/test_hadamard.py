import itertools
import numpy as np
import pytest
import torch
import pyura

def test_order_two():
    codebook = pyura.build_codebook(1)
    assert codebook.order == 2
    torch.testing.assert_close(codebook.matrix, torch.tensor([[1.0, 1.0], [1.0, -1.0]], dtype = torch.float64))

def test_kronecker_rows():
    codebook = pyura.build_codebook(2)
    b2 = torch.tensor([[1.0, 1.0], [1.0, -1.0]], dtype = torch.float64)
    torch.testing.assert_close(codebook.matrix, torch.kron(b2, b2))
    assert codebook.row(1).tolist() == [1.0, -1.0, 1.0, -1.0]

@pytest.mark.parametrize('num_bits', [1, 2, 3, 5, 8])
def test_orthogonality(num_bits):
    codebook = pyura.build_codebook(num_bits)
    B = codebook.matrix
    n_p = codebook.order
    assert torch.equal(B @ B.T, n_p * torch.eye(n_p, dtype = torch.float64))
    assert torch.all(B[0] == 1.0)
    assert torch.all(torch.abs(B) == 1.0)

def test_rows_match_matrix():
    codebook = pyura.build_codebook(6)
    for i in [0, 1, 17, 42, 63]:
        assert torch.equal(codebook.row(i), codebook.matrix[i])
    assert torch.equal(codebook.rows([3, 5]), codebook.matrix[[3, 5]])
    assert codebook.rows([]).shape == (0, 64)

def test_pilot_row_mapping():
    codebook = pyura.build_codebook(2)
    index, row = codebook.pilot_row(np.array([0, 0], dtype = np.uint8))
    assert index == 0 and torch.all(row == 1.0)
    index, row = codebook.pilot_row(np.array([0, 1], dtype = np.uint8))
    assert index == 1
    assert torch.equal(row, codebook.matrix[1])

def test_pilot_row_bijection():
    codebook = pyura.build_codebook(4)
    seen = set()
    for bits in itertools.product([0, 1], repeat = 4):
        bits = np.array(bits, dtype = np.uint8)
        index, _ = codebook.pilot_row(bits)
        seen.add(index)
        np.testing.assert_array_equal(codebook.row_bits(index), bits)
    assert seen == set(range(16))

def test_invalid_sizes():
    with pytest.raises(ValueError):
        pyura.build_codebook(0)
    with pytest.raises(ValueError):
        pyura.build_codebook(17)
    codebook = pyura.build_codebook(3)
    with pytest.raises(ValueError):
        codebook.pilot_row(np.zeros(4, dtype = np.uint8))
    with pytest.raises(ValueError):
        codebook.row(8)
    with pytest.raises(ValueError):
        codebook.row_index(np.array([0, 2, 0]))
    with pytest.raises(ValueError):
        codebook.pilot_row(np.array([1, 0, 255], dtype = np.uint8))
    assert codebook.row_index(np.array([1, 1, 0], dtype = np.uint8)) == 6

def test_correlate():
    codebook = pyura.build_codebook(3)
    Y = pyura.sample_complex_gaussian(4, 8, 1.0, pyura.Rng(0))
    expected = Y @ codebook.matrix.to(torch.complex128).T
    torch.testing.assert_close(codebook.correlate(Y), expected, rtol = 0, atol = 1e-12)
    with pytest.raises(ValueError):
        codebook.correlate(torch.zeros(4, 16, dtype = torch.complex128))

def test_large_codebook_without_dense_matrix():
    codebook = pyura.build_codebook(16)
    row = codebook.row(0xabcd)
    assert row.shape == (65536,)
    assert float(row @ codebook.row(0x1234)) == 0.0
    assert float(row @ row) == 65536.0

def test_state_dict():
    codebook = pyura.HadamardCodebook.load_state_dict(pyura.build_codebook(5).state_dict())
    assert codebook.order == 32
