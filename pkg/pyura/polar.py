import functools
import math
import numpy as np
from typing import List, Optional

# x^11 + x^10 + x^9 + x^5 + 1, leading term included
crc11_polynomial = 0b111000100001
default_crc_width = 11
default_design_snr_db = 2.0
# Bhattacharyya parameter of a BI-AWGN channel at the design SNR, exp(-Es/N0)
default_design_erasure = math.exp(-10.0 ** (default_design_snr_db / 10.0))
# Channel LLR magnitudes are clipped here so min-sum updates stay finite
llr_clip = 1e12

class PolarSpec:
    """
        A CRC-aided polar code: block length N = 2^n, K = B + r information
        positions (message plus CRC) and N - K frozen positions that always
        carry 0. Codewords are u F^{(x)n} with F = [[1, 0], [1, 1]] in
        natural (not bit-reversed) order.

        Args
        ====
        block_length: int
            N, a power of two
        info_length: int
            K = B + r
        frozen_positions: np.ndarray
            sorted indices of the N - K frozen synthetic channels
        crc_width: int
            r, number of CRC bits at the end of the payload
        crc_polynomial: int
            generator polynomial with its x^r term, e.g. 0b111000100001
    """
    def __init__(self,
                 block_length: int,
                 info_length: int,
                 frozen_positions: np.ndarray,
                 crc_width: int = default_crc_width,
                 crc_polynomial: int = crc11_polynomial):
        if block_length < 1 or (block_length & (block_length - 1)) != 0:
            raise ValueError('polar block length must be a power of two, got {}'.format(block_length))
        if not (0 <= info_length <= block_length):
            raise ValueError('need 0 <= K <= N, got K={} N={}'.format(info_length, block_length))
        frozen_positions = np.unique(np.asarray(frozen_positions, dtype = np.int64))
        if len(frozen_positions) + info_length != block_length:
            raise ValueError('{} frozen positions do not leave K={} information positions'.format(\
                len(frozen_positions), info_length))
        if len(frozen_positions) > 0 and \
                (frozen_positions[0] < 0 or frozen_positions[-1] >= block_length):
            raise ValueError('frozen positions must lie in [0, N)')
        if crc_width < 0 or crc_width > info_length:
            raise ValueError('CRC width {} does not fit in K={}'.format(crc_width, info_length))
        if crc_width > 0 and (crc_polynomial >> crc_width) != 1:
            raise ValueError('CRC polynomial must have degree {}'.format(crc_width))
        self.block_length = int(block_length)
        self.info_length = int(info_length)
        self.frozen_positions = frozen_positions
        self.frozen_mask = np.zeros(block_length, dtype = bool)
        self.frozen_mask[frozen_positions] = True
        self.info_positions = np.nonzero(~self.frozen_mask)[0]
        self.crc_width = int(crc_width)
        self.crc_polynomial = int(crc_polynomial)

    @property
    def message_length(self):
        """
            B, the number of message bits in front of the CRC.
        """
        return self.info_length - self.crc_width

    def with_crc_polynomial(self, crc_polynomial: int):
        """
            Same code, different CRC polynomial.
        """
        return PolarSpec(self.block_length, self.info_length, self.frozen_positions,
                         self.crc_width, crc_polynomial)

    def state_dict(self):
        return {
            'block_length': self.block_length,
            'info_length': self.info_length,
            'frozen_positions': self.frozen_positions.tolist(),
            'crc_width': self.crc_width,
            'crc_polynomial': self.crc_polynomial
        }

    @classmethod
    def load_state_dict(cls, state_dict):
        return cls(state_dict['block_length'],
                   state_dict['info_length'],
                   np.asarray(state_dict['frozen_positions']),
                   state_dict['crc_width'],
                   state_dict['crc_polynomial'])

class DecodeCandidate:
    """
        One surviving path of the list decoder.

        Args
        ====
        info_bits: np.ndarray
            the B message bits
        payload: np.ndarray
            the B + r information bits (message then CRC)
        crc_ok: bool
            whether the trailing r bits match the CRC of info_bits
        path_metric: float
            accumulated penalty, lower is better
    """
    def __init__(self,
                 info_bits: np.ndarray,
                 payload: np.ndarray,
                 crc_ok: bool,
                 path_metric: float):
        self.info_bits = info_bits
        self.payload = payload
        self.crc_ok = crc_ok
        self.path_metric = path_metric

    def __repr__(self):
        return 'DecodeCandidate(crc_ok={}, path_metric={:.4g})'.format(self.crc_ok, self.path_metric)

def bhattacharyya_parameters(block_length: int, design_erasure: float):
    """
        Log Bhattacharyya parameters of the N synthetic channels, starting
        from a channel with parameter design_erasure and applying
        z -> 2z - z^2 (bit 0) or z -> z^2 (bit 1) from the most significant
        index bit down, which matches the natural-order encoder.
    """
    if not (0.0 < design_erasure <= 1.0):
        raise ValueError('design erasure must be in (0, 1], got {}'.format(design_erasure))
    n = int(round(math.log2(block_length)))
    log_z = np.array([math.log(design_erasure)])
    for _ in range(n):
        worse = log_z + np.log(2.0 - np.exp(log_z))
        better = 2.0 * log_z
        log_z = np.stack([worse, better], axis = -1).reshape(-1)
    return log_z

def construct(block_length: int,
              info_length: int,
              design_param: float = default_design_erasure,
              crc_width: int = default_crc_width,
              crc_polynomial: int = crc11_polynomial):
    """
        Build a polar code by freezing the N - K synthetic channels with the
        largest Bhattacharyya parameter at the design erasure probability.

        Args
        ====
        block_length: int
            N, a power of two
        info_length: int
            K <= N, message plus CRC bits
        design_param: float
            Bhattacharyya parameter of the design channel, in (0, 1]
            (the default corresponds to a 2 dB design SNR)

        Returns
        =======
        PolarSpec
    """
    if block_length < 1 or (block_length & (block_length - 1)) != 0:
        raise ValueError('polar block length must be a power of two, got {}'.format(block_length))
    if not (0 <= info_length <= block_length):
        raise ValueError('need 0 <= K <= N, got K={} N={}'.format(info_length, block_length))
    log_z = bhattacharyya_parameters(block_length, design_param)
    # Least reliable first; ties keep the lower index first
    order = np.argsort(-log_z, kind = 'stable')
    frozen = np.sort(order[:block_length - info_length])
    return PolarSpec(block_length, info_length, frozen, crc_width, crc_polynomial)

def _crc_register(bits, width, polynomial):
    mask = (1 << width) - 1
    reg = 0
    for b in bits:
        feedback = ((reg >> (width - 1)) & 1) ^ int(b)
        reg = (reg << 1) & mask
        if feedback:
            reg ^= polynomial & mask
    return [(reg >> (width - 1 - i)) & 1 for i in range(width)]

@functools.lru_cache(maxsize = 32)
def _crc_generator(length: int, width: int, polynomial: int):
    # The CRC is linear with a zero initial register: row i is the CRC of e_i
    g = np.zeros((length, width), dtype = np.int64)
    for i in range(length):
        e = np.zeros(length, dtype = np.uint8)
        e[i] = 1
        g[i] = _crc_register(e, width, polynomial)
    g.setflags(write = False)
    return g

def crc_remainder(bits: np.ndarray,
                  crc_width: int = default_crc_width,
                  crc_polynomial: int = crc11_polynomial):
    """
        r-bit CRC (message x^r mod g, MSB first) of the last axis of bits.
    """
    bits = np.asarray(bits, dtype = np.int64)
    g = _crc_generator(bits.shape[-1], crc_width, crc_polynomial)
    return ((bits @ g) % 2).astype(np.uint8)

def crc_append(info: np.ndarray,
               crc_width: int = default_crc_width,
               crc_polynomial: int = crc11_polynomial):
    """
        Append the r-bit CRC of info.

        Args
        ====
        info: np.ndarray
            B message bits

        Returns
        =======
        np.ndarray
            B + r bits, uint8
    """
    info = np.asarray(info, dtype = np.uint8)
    if crc_width == 0:
        return info.copy()
    return np.concatenate([info, crc_remainder(info, crc_width, crc_polynomial)], axis = -1)

def crc_check(payload: np.ndarray,
              crc_width: int = default_crc_width,
              crc_polynomial: int = crc11_polynomial):
    """
        Whether the trailing r bits of payload are the CRC of the leading
        bits. Works on the last axis, so a 2-D payload gives one boolean per row.
    """
    payload = np.asarray(payload, dtype = np.uint8)
    if crc_width == 0:
        return np.ones(payload.shape[:-1], dtype = bool) if payload.ndim > 1 else True
    info = payload[..., :-crc_width]
    expected = crc_remainder(info, crc_width, crc_polynomial)
    ok = np.all(expected == payload[..., -crc_width:], axis = -1)
    return bool(ok) if ok.ndim == 0 else ok

def polar_transform(u: np.ndarray):
    """
        x = u F^{(x)n} over GF(2) along the last axis. The transform is its
        own inverse.
    """
    x = np.array(u, dtype = np.uint8, copy = True)
    n = x.shape[-1]
    lead = x.shape[:-1]
    h = 1
    while h < n:
        v = x.reshape(*lead, n // (2 * h), 2, h)
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x

def encode(payload: np.ndarray, spec: PolarSpec):
    """
        Polar-encode B + r payload bits: payload on the information
        positions, zeros on the frozen ones, then the polar transform.

        Returns
        =======
        np.ndarray
            N codeword bits, uint8
    """
    payload = np.asarray(payload, dtype = np.uint8)
    if payload.shape != (spec.info_length,):
        raise ValueError('payload must have {} bits, got shape {}'.format(spec.info_length, payload.shape))
    u = np.zeros(spec.block_length, dtype = np.uint8)
    u[spec.info_positions] = payload
    return polar_transform(u)

class _ListDecoder:
    """
        Recursive successive-cancellation list decoding with min-sum
        updates, vectorized over the list. Every node returns the partial
        codeword of its subtree for each surviving path and the parent path
        index of each survivor, so callers re-gather their own state.
        All-frozen subtrees are settled in one step: the path metric grows by
        the sum of |alpha| over negative alpha, which is what the leaf-by-leaf
        recursion gives under min-sum.
    """
    def __init__(self, frozen_mask: np.ndarray, list_size: int):
        self.frozen_mask = frozen_mask
        self.list_size = list_size
        self.metrics = np.zeros(1)

    def decode(self, llrs: np.ndarray):
        codewords, _ = self._node(llrs[None, :], 0)
        return codewords, self.metrics

    def _node(self, alpha, offset):
        paths, size = alpha.shape
        if self.frozen_mask[offset:offset + size].all():
            self.metrics = self.metrics + np.sum(np.where(alpha < 0, -alpha, 0.0), axis = 1)
            return np.zeros((paths, size), dtype = np.uint8), np.arange(paths)
        if size == 1:
            return self._info_leaf(alpha[:, 0])
        half = size // 2
        a = alpha[:, :half]
        b = alpha[:, half:]
        left = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
        beta_left, parents_left = self._node(left, offset)
        a = a[parents_left]
        b = b[parents_left]
        right = b + (1.0 - 2.0 * beta_left) * a
        beta_right, parents_right = self._node(right, offset + half)
        beta_left = beta_left[parents_right]
        beta = np.concatenate([beta_left ^ beta_right, beta_right], axis = 1)
        return beta, parents_left[parents_right]

    def _info_leaf(self, llr):
        paths = llr.shape[0]
        penalty = np.abs(llr)
        metric_zero = self.metrics + np.where(llr < 0, penalty, 0.0)
        metric_one = self.metrics + np.where(llr >= 0, penalty, 0.0)
        candidates = np.concatenate([metric_zero, metric_one])
        keep = min(self.list_size, 2 * paths)
        chosen = np.argsort(candidates, kind = 'stable')[:keep]
        self.metrics = candidates[chosen]
        bits = (chosen >= paths).astype(np.uint8)
        return bits[:, None], chosen % paths

def scl_decode(llrs: np.ndarray,
               spec: PolarSpec,
               list_size: int,
               crc_polynomial: Optional[int] = None) -> List[DecodeCandidate]:
    """
        CRC-aided successive-cancellation list decoding.
        LLR convention: positive means bit 0 is more likely.

        Args
        ====
        llrs: np.ndarray
            N channel LLRs in codeword order
        spec: PolarSpec
        list_size: int
            maximum number of surviving paths
        crc_polynomial: Optional[int]
            check candidates against this polynomial instead of spec.crc_polynomial

        Returns
        =======
        List[DecodeCandidate]
            up to list_size candidates sorted by nondecreasing path metric.
            Use select_candidate to pick the best one passing the CRC.
    """
    llrs = np.asarray(llrs, dtype = np.float64)
    if llrs.shape != (spec.block_length,):
        raise ValueError('expected {} LLRs, got shape {}'.format(spec.block_length, llrs.shape))
    if list_size < 1:
        raise ValueError('list size must be >= 1, got {}'.format(list_size))
    llrs = np.clip(np.nan_to_num(llrs), -llr_clip, llr_clip)
    decoder = _ListDecoder(spec.frozen_mask, list_size)
    codewords, metrics = decoder.decode(llrs)
    order = np.argsort(metrics, kind = 'stable')
    codewords = codewords[order]
    metrics = metrics[order]
    payloads = polar_transform(codewords)[:, spec.info_positions]
    if crc_polynomial is None:
        crc_polynomial = spec.crc_polynomial
    crc_ok = np.atleast_1d(crc_check(payloads, spec.crc_width, crc_polynomial))
    candidates = []
    for payload, ok, metric in zip(payloads, crc_ok, metrics):
        candidates.append(DecodeCandidate(payload[:spec.message_length].copy(),
                                          payload.copy(),
                                          bool(ok),
                                          float(metric)))
    return candidates

def sc_decode(llrs: np.ndarray, spec: PolarSpec):
    """
        Plain successive-cancellation decoding (list size 1).
    """
    return scl_decode(llrs, spec, 1)[0]

def select_candidate(candidates: List[DecodeCandidate]) -> Optional[DecodeCandidate]:
    """
        The lowest-metric candidate that passes the CRC, or None.
    """
    for c in candidates:
        if c.crc_ok:
            return c
    return None

__all__ = ['PolarSpec', 'DecodeCandidate', 'bhattacharyya_parameters', 'construct',
           'crc_remainder', 'crc_append', 'crc_check', 'polar_transform', 'encode',
           'scl_decode', 'sc_decode', 'select_candidate', 'crc11_polynomial',
           'default_crc_width', 'default_design_erasure', 'default_design_snr_db']
