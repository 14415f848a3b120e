import numpy as np
import torch
import pyura
from typing import Tuple

# Largest pilot segment we construct; 2^16 rows
max_pilot_bits = 16

class HadamardCodebook:
    """
        The n_p x n_p Sylvester-Hadamard pilot codebook, n_p = 2^B_p, built by
        the Kronecker recursion B_{2^i} = B_2 (x) B_{2^{i-1}} with
        B_2 = [[1, 1], [1, -1]]. Entry (i, t) equals (-1)^popcount(i & t), so
        rows are produced on demand and the dense matrix is only materialized
        when asked for.

        A pilot bit segment maps to the row whose index is the big-endian
        integer value of the segment, so the all-zero segment picks the
        all-ones row 0.

        Args
        ====
        num_bits: int
            B_p, number of pilot bits per stage, 1 <= B_p <= 16
    """
    def __init__(self, num_bits: int):
        if not (1 <= num_bits <= max_pilot_bits):
            raise ValueError('Hadamard codebook supports 1 <= B_p <= {}, got {}'.format(\
                max_pilot_bits, num_bits))
        self.num_bits = int(num_bits)
        self.order = 1 << self.num_bits
        self._matrix = None

    @property
    def matrix(self):
        """
            Dense codebook, float64 tensor with size n_p x n_p.
        """
        if self._matrix is None:
            b2 = torch.tensor([[1.0, 1.0], [1.0, -1.0]], dtype = torch.float64)
            m = b2
            for _ in range(1, self.num_bits):
                m = torch.kron(b2, m)
            self._matrix = m.to(pyura.get_device())
        return self._matrix

    def row(self, index: int):
        """
            The +-1 sequence of row index, float64 tensor with size n_p.
        """
        if not (0 <= index < self.order):
            raise ValueError('row index {} outside codebook of order {}'.format(index, self.order))
        t = np.arange(self.order, dtype = np.int64)
        parity = np.zeros(self.order, dtype = np.int64)
        masked = t & index
        while masked.any():
            parity ^= masked & 1
            masked >>= 1
        return pyura.to_device(torch.from_numpy(1.0 - 2.0 * parity))

    def rows(self, indices):
        """
            Stack of rows, float64 tensor with size len(indices) x n_p.
        """
        if len(indices) == 0:
            return torch.zeros(0, self.order, dtype = torch.float64, device = pyura.get_device())
        return torch.stack([self.row(int(i)) for i in indices])

    def row_index(self, bits: np.ndarray):
        """
            Big-endian integer value of a B_p-bit segment.
        """
        bits = np.asarray(bits)
        if bits.shape != (self.num_bits,):
            raise ValueError('pilot segment must have {} bits, got shape {}'.format(\
                self.num_bits, bits.shape))
        if np.any((bits != 0) & (bits != 1)):
            raise ValueError('pilot bits must be 0 or 1, got {}'.format(bits.tolist()))
        index = 0
        for b in bits:
            index = (index << 1) | int(b)
        return index

    def pilot_row(self, bits: np.ndarray) -> Tuple[int, torch.Tensor]:
        """
            Map a pilot bit segment to its codebook row.

            Args
            ====
            bits: np.ndarray
                B_p bits

            Returns
            =======
            int
                row index
            torch.Tensor
                the +-1 row b_ji, float64 tensor with size n_p
        """
        index = self.row_index(bits)
        return index, self.row(index)

    def row_bits(self, index: int):
        """
            Inverse of pilot_row: the B_p-bit segment selecting row index.
        """
        if not (0 <= index < self.order):
            raise ValueError('row index {} outside codebook of order {}'.format(index, self.order))
        shifts = np.arange(self.num_bits - 1, -1, -1)
        return ((index >> shifts) & 1).astype(np.uint8)

    def correlate(self, Y: torch.Tensor):
        """
            Correlate every row of Y with every codebook row: Y B^T, computed
            with the fast Walsh-Hadamard transform.

            Args
            ====
            Y: torch.Tensor
                tensor with size [..., n_p]

            Returns
            =======
            torch.Tensor
                tensor with size [..., n_p], entry i is <y, b_i>
        """
        if Y.shape[-1] != self.order:
            raise ValueError('expected last dimension {}, got shape {}'.format(\
                self.order, tuple(Y.shape)))
        return pyura.fwht(Y)

    def state_dict(self):
        return {
            'num_bits': self.num_bits
        }

    @classmethod
    def load_state_dict(cls, state_dict):
        return cls(state_dict['num_bits'])

def build_codebook(num_bits: int):
    """
        Construct the Hadamard pilot codebook of order 2^num_bits.
    """
    return HadamardCodebook(num_bits)

__all__ = ['HadamardCodebook', 'build_codebook', 'max_pilot_bits']
