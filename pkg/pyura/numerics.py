import hashlib
import math
import numpy as np
import scipy.special
import torch
import pyura
from typing import Union

complex_dtype = torch.complex128
real_dtype = torch.float64

# Gram matrices with a larger 2-norm condition number are treated as singular
max_gram_condition = 1e12

class DomainError(ValueError):
    """
        Raised when a special function is evaluated outside its domain.
    """
    pass

class SingularGramError(ValueError):
    """
        Raised by ls_solve when X X^H is numerically singular.
        The receiver reacts by keeping its previous residual.
    """
    def __init__(self, condition: float):
        super().__init__('Gram matrix is numerically singular (condition estimate {:.3e})'.format(condition))
        self.condition = condition

def _check_dof(k):
    if k < 1 or int(k) != k:
        raise DomainError('degrees of freedom must be a positive integer, got {}'.format(k))

def chi2_cdf(x: Union[float, np.ndarray], k: int):
    """
        Cumulative distribution function of the chi-squared distribution,
        evaluated through the regularized lower incomplete gamma function
        P(k/2, x/2).

        Args
        ====
        x: Union[float, np.ndarray]
            nonnegative argument(s)
        k: int
            degrees of freedom, >= 1

        Returns
        =======
        Union[float, np.ndarray]
            probabilities in [0, 1], a float when x is a scalar
    """
    _check_dof(k)
    x_arr = np.asarray(x, dtype = np.float64)
    if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
        raise DomainError('chi2_cdf is defined for x >= 0')
    result = scipy.special.gammainc(0.5 * k, 0.5 * x_arr)
    return float(result) if result.ndim == 0 else result

def chi2_sf(x: Union[float, np.ndarray], k: int):
    """
        Survival function 1 - chi2_cdf(x, k), computed without cancellation.
    """
    _check_dof(k)
    x_arr = np.asarray(x, dtype = np.float64)
    if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
        raise DomainError('chi2_sf is defined for x >= 0')
    result = scipy.special.gammaincc(0.5 * k, 0.5 * x_arr)
    return float(result) if result.ndim == 0 else result

def _chi2_log_pdf(x, k):
    return (0.5 * k - 1.0) * math.log(x) - 0.5 * x - 0.5 * k * math.log(2.0) - scipy.special.gammaln(0.5 * k)

def chi2_inv_cdf(p: float, k: int, tol: float = 1e-13, max_steps: int = 50):
    """
        Inverse of chi2_cdf. The starting point comes from scipy's inverse
        incomplete gamma function and is polished by Newton steps on
        chi2_cdf(x) - p, falling back to bisection whenever a step leaves
        the current bracket.

        Args
        ====
        p: float
            probability in [0, 1)
        k: int
            degrees of freedom, >= 1

        Returns
        =======
        float
            x >= 0 with chi2_cdf(x, k) = p
    """
    _check_dof(k)
    if not (0.0 <= p < 1.0):
        raise DomainError('chi2_inv_cdf is defined for p in [0, 1), got {}'.format(p))
    if p == 0.0:
        return 0.0
    x = 2.0 * float(scipy.special.gammaincinv(0.5 * k, p))
    # Bracket the root
    lo, hi = 0.0, max(2.0 * x, 1.0)
    while chi2_cdf(hi, k) < p:
        lo = hi
        hi *= 2.0
    if not (lo < x < hi):
        x = 0.5 * (lo + hi)
    for _ in range(max_steps):
        err = chi2_cdf(x, k) - p
        if abs(err) <= tol:
            break
        if err > 0:
            hi = x
        else:
            lo = x
        step = err / math.exp(_chi2_log_pdf(x, k))
        candidate = x - step
        if not (lo < candidate < hi) or not math.isfinite(candidate):
            candidate = 0.5 * (lo + hi)
        if candidate == x:
            break
        x = candidate
    return x

class Rng:
    """
        A seeded pseudo-random stream backed by a torch.Generator.
        Identical seeds give identical streams. Independent child streams
        for trials and slots are derived with spawn, never by sharing one
        generator between concurrent tasks.

        Args
        ====
        seed: int
            64-bit seed, reduced to 63 bits (torch.Generator.manual_seed accepts
            nonnegative values)
    """
    def __init__(self, seed: int):
        self.seed = int(seed) & 0x7fffffffffffffff
        self.generator = torch.Generator(device = pyura.generator_device)
        self.generator.manual_seed(self.seed)

    def spawn(self, *keys):
        """
            Derive a child stream whose seed is sub_seed(self.seed, *keys).
        """
        return Rng(sub_seed(self.seed, *keys))

    def bits(self, n: int):
        """
            n uniform random bits as a uint8 numpy array.
        """
        return torch.randint(0, 2, (n,), generator = self.generator).numpy().astype(np.uint8)

    def randint(self, high: int, size: int):
        """
            size uniform integers in [0, high) as an int64 numpy array.
        """
        return torch.randint(0, high, (size,), generator = self.generator).numpy()

def sub_seed(master_seed: int, *keys):
    """
        Deterministic sub-seeding: hash(master_seed, *keys) truncated to 63 bits.
        Trial t uses sub_seed(master, t), slot l of trial t uses
        sub_seed(sub_seed(master, t), 'slot', l).
    """
    h = hashlib.blake2b(digest_size = 8)
    h.update(repr((int(master_seed),) + tuple(keys)).encode('utf-8'))
    return int.from_bytes(h.digest(), 'little') & 0x7fffffffffffffff

def complex_matrix(data):
    """
        Convert data to a complex128 matrix on the current device and check
        that every entry is finite.
    """
    m = torch.as_tensor(data).to(dtype = complex_dtype, device = pyura.get_device())
    if m.dim() != 2:
        raise ValueError('a complex matrix needs 2 dimensions, got shape {}'.format(tuple(m.shape)))
    if not torch.isfinite(torch.view_as_real(m)).all():
        raise ValueError('complex matrix has non-finite entries')
    return m

def sample_complex_gaussian(rows: int,
                            cols: int,
                            variance: float,
                            rng: Rng):
    """
        Draw a rows x cols matrix of i.i.d. circularly symmetric complex
        Gaussian entries CN(0, variance): independent real and imaginary
        parts, each with variance variance / 2.

        Args
        ====
        rows: int
        cols: int
        variance: float
            per-entry power, >= 0
        rng: Rng

        Returns
        =======
        torch.Tensor
            complex128 tensor with size rows x cols
    """
    if variance < 0:
        raise ValueError('variance must be nonnegative, got {}'.format(variance))
    parts = torch.randn(rows, cols, 2, generator = rng.generator, dtype = real_dtype)
    parts = parts * math.sqrt(variance / 2.0)
    return pyura.to_device(torch.view_as_complex(parts.contiguous()))

def ls_solve(Y: torch.Tensor,
             X: torch.Tensor):
    """
        Least squares fit of Y ~ H X, i.e. H = Y X^H (X X^H)^{-1}, through a
        Cholesky factorization of the Hermitian Gram matrix.

        Args
        ====
        Y: torch.Tensor
            complex matrix with size M x L
        X: torch.Tensor
            complex matrix with size K x L and full row rank

        Returns
        =======
        torch.Tensor
            complex matrix with size M x K

        Raises
        ======
        SingularGramError
            when the condition estimate of X X^H exceeds max_gram_condition
    """
    if Y.dim() != 2 or X.dim() != 2 or Y.shape[1] != X.shape[1]:
        raise ValueError('ls_solve needs Y (M x L) and X (K x L), got {} and {}'.format(\
            tuple(Y.shape), tuple(X.shape)))
    X = X.to(dtype = complex_dtype)
    Y = Y.to(dtype = complex_dtype)
    if X.shape[0] == 0:
        return torch.zeros(Y.shape[0], 0, dtype = complex_dtype, device = Y.device)
    if X.shape[0] > X.shape[1]:
        raise SingularGramError(float('inf'))
    gram = X @ X.conj().T
    condition = float(torch.linalg.cond(gram))
    if not math.isfinite(condition) or condition > max_gram_condition:
        raise SingularGramError(condition)
    chol = torch.linalg.cholesky(gram)
    rhs = Y @ X.conj().T
    # H G = rhs with G Hermitian  <=>  G H^H = rhs^H
    return torch.cholesky_solve(rhs.conj().T.contiguous(), chol).conj().T

def fwht(x: torch.Tensor):
    """
        Fast Walsh-Hadamard transform along the last axis in natural
        (Sylvester) order: output[..., i] = sum_t (-1)^popcount(i & t) x[..., t],
        which equals x @ B^T for the Kronecker-built Hadamard matrix B.
        The last axis must have a power-of-two length.
    """
    n = x.shape[-1]
    assert(n > 0 and (n & (n - 1)) == 0)
    lead = x.shape[:-1]
    y = x
    h = 1
    while h < n:
        y = y.reshape(*lead, n // (2 * h), 2, h)
        a = y[..., 0, :]
        b = y[..., 1, :]
        y = torch.stack([a + b, a - b], dim = -2)
        h *= 2
    return y.reshape(*lead, n)

__all__ = ['DomainError', 'SingularGramError', 'chi2_cdf', 'chi2_sf', 'chi2_inv_cdf',
           'Rng', 'sub_seed', 'complex_matrix', 'sample_complex_gaussian', 'ls_solve',
           'fwht', 'complex_dtype', 'real_dtype', 'max_gram_condition']
