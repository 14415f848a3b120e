import functools
import math
import numpy as np
import torch
import pyura
from typing import List, Optional, Sequence, Tuple

class ConfigError(ValueError):
    """
        Raised when a SystemConfig (or a config file) violates one of the
        scheme invariants. field names the offending parameter.
    """
    def __init__(self, field: str, message: str):
        super().__init__('{}: {}'.format(field, message))
        self.field = field

class SystemConfig:
    """
        All parameters of the multi-stage orthogonal-pilot scheme.
        Every transmission carries B message bits: J pilot segments of B_p
        bits each (one Hadamard row of length n_p = 2^B_p per stage), then
        B_c = B - J B_p data bits. The whole message plus an r-bit CRC is
        polar coded to 2 n_c bits and QPSK modulated to n_c symbols, so a
        slot spans L = J n_p + n_c channel uses and the frame n = S L.

        Args
        ====
        message_bits: int
            B
        pilot_bits: int
            B_p, pilot bits per stage (ignored when num_stages is 0)
        num_stages: int
            J
        coded_symbols: int
            n_c, a power of two so that the polar block length 2 n_c is one
        num_slots: int
            S
        num_antennas: int
            M
        num_active: int
            K_a, active users per frame
        pilot_power: float
            P_p, pilot power per channel use
        coded_power: float
            P_c, coded power per channel use
        gamma: float
            Neyman-Pearson false-alarm level per codebook row, in (0, 1)
        crc_bits: int
            r
        crc_polynomial: int
            CRC generator with its x^r term
        list_size: int
            SCL list size
        noise_variance: float
            per-entry noise power (1 in every physical scenario)
        max_iterations: int
            cap on outer receiver iterations per slot
        design_erasure: float
            Bhattacharyya parameter used for the polar construction
    """
    def __init__(self,
                 message_bits: int = 100,
                 pilot_bits: int = 5,
                 num_stages: int = 2,
                 coded_symbols: int = 256,
                 num_slots: int = 10,
                 num_antennas: int = 100,
                 num_active: int = 100,
                 pilot_power: float = 1.0,
                 coded_power: float = 1.0,
                 gamma: float = 1e-3,
                 crc_bits: int = pyura.default_crc_width,
                 crc_polynomial: int = pyura.crc11_polynomial,
                 list_size: int = 64,
                 noise_variance: float = 1.0,
                 max_iterations: int = 20,
                 design_erasure: float = pyura.default_design_erasure):
        self.message_bits = int(message_bits)
        self.pilot_bits = int(pilot_bits)
        self.num_stages = int(num_stages)
        self.coded_symbols = int(coded_symbols)
        self.num_slots = int(num_slots)
        self.num_antennas = int(num_antennas)
        self.num_active = int(num_active)
        self.pilot_power = float(pilot_power)
        self.coded_power = float(coded_power)
        self.gamma = float(gamma)
        self.crc_bits = int(crc_bits)
        self.crc_polynomial = int(crc_polynomial)
        self.list_size = int(list_size)
        self.noise_variance = float(noise_variance)
        self.max_iterations = int(max_iterations)
        self.design_erasure = float(design_erasure)
        self._validate()

    def _validate(self):
        if self.message_bits < 1:
            raise ConfigError('message_bits', 'must be >= 1, got {}'.format(self.message_bits))
        if self.num_stages < 0:
            raise ConfigError('num_stages', 'must be >= 0, got {}'.format(self.num_stages))
        if self.num_stages > 0 and not (1 <= self.pilot_bits <= pyura.max_pilot_bits):
            raise ConfigError('pilot_bits', 'must be in [1, {}], got {}'.format(\
                pyura.max_pilot_bits, self.pilot_bits))
        if self.data_bits < 0:
            raise ConfigError('pilot_bits', 'J * B_p = {} exceeds B = {}'.format(\
                self.num_stages * self.pilot_bits, self.message_bits))
        n_c = self.coded_symbols
        if n_c < 1 or (n_c & (n_c - 1)) != 0:
            raise ConfigError('coded_symbols', 'must be a power of two, got {}'.format(n_c))
        if self.crc_bits < 0:
            raise ConfigError('crc_bits', 'must be >= 0, got {}'.format(self.crc_bits))
        if self.crc_bits > 0 and (self.crc_polynomial >> self.crc_bits) != 1:
            raise ConfigError('crc_polynomial', 'degree does not match crc_bits = {}'.format(self.crc_bits))
        if self.polar_info_length > self.polar_block_length:
            raise ConfigError('coded_symbols', 'B + r = {} does not fit in 2 n_c = {} code bits'.format(\
                self.polar_info_length, self.polar_block_length))
        if self.num_slots < 1:
            raise ConfigError('num_slots', 'must be >= 1, got {}'.format(self.num_slots))
        if self.num_antennas < 1:
            raise ConfigError('num_antennas', 'must be >= 1, got {}'.format(self.num_antennas))
        if self.num_active < 0:
            raise ConfigError('num_active', 'must be >= 0, got {}'.format(self.num_active))
        if self.message_bits < 63 and self.num_active > (1 << self.message_bits):
            raise ConfigError('num_active', 'more users than distinct {}-bit messages'.format(\
                self.message_bits))
        for field in ['pilot_power', 'coded_power', 'noise_variance']:
            value = getattr(self, field)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(field, 'must be finite and >= 0, got {}'.format(value))
        if not (0.0 < self.gamma < 1.0):
            raise ConfigError('gamma', 'must be in (0, 1), got {}'.format(self.gamma))
        if self.list_size < 1:
            raise ConfigError('list_size', 'must be >= 1, got {}'.format(self.list_size))
        if self.max_iterations < 1:
            raise ConfigError('max_iterations', 'must be >= 1, got {}'.format(self.max_iterations))
        if not (0.0 < self.design_erasure <= 1.0):
            raise ConfigError('design_erasure', 'must be in (0, 1], got {}'.format(self.design_erasure))

    @property
    def pilot_length(self):
        """ n_p = 2^B_p """
        return 1 << self.pilot_bits if self.num_stages > 0 else 0

    @property
    def data_bits(self):
        """ B_c = B - J B_p """
        return self.message_bits - self.num_stages * self.pilot_bits

    @property
    def slot_length(self):
        """ L = J n_p + n_c """
        return self.num_stages * self.pilot_length + self.coded_symbols

    @property
    def frame_length(self):
        """ n = S L """
        return self.num_slots * self.slot_length

    @property
    def polar_block_length(self):
        return 2 * self.coded_symbols

    @property
    def polar_info_length(self):
        return self.message_bits + self.crc_bits

    def replace(self, **changes):
        """
            A validated copy with some fields changed.
        """
        args = self.state_dict()
        for key in changes:
            if key not in args:
                raise ConfigError(key, 'unknown configuration field')
        args.update(changes)
        return SystemConfig(**args)

    def state_dict(self):
        return {
            'message_bits': self.message_bits,
            'pilot_bits': self.pilot_bits,
            'num_stages': self.num_stages,
            'coded_symbols': self.coded_symbols,
            'num_slots': self.num_slots,
            'num_antennas': self.num_antennas,
            'num_active': self.num_active,
            'pilot_power': self.pilot_power,
            'coded_power': self.coded_power,
            'gamma': self.gamma,
            'crc_bits': self.crc_bits,
            'crc_polynomial': self.crc_polynomial,
            'list_size': self.list_size,
            'noise_variance': self.noise_variance,
            'max_iterations': self.max_iterations,
            'design_erasure': self.design_erasure
        }

    @classmethod
    def load_state_dict(cls, state_dict):
        return cls(**state_dict)

    def __eq__(self, other):
        return isinstance(other, SystemConfig) and self.state_dict() == other.state_dict()

    def __repr__(self):
        return 'SystemConfig({})'.format(', '.join(\
            '{}={}'.format(k, v) for k, v in self.state_dict().items()))

class UserMessage:
    """
        A B-bit message split into its J pilot segments and the data segment,
        in the transmitted order [w_p1, ..., w_pJ, w_c].
    """
    def __init__(self,
                 bits: np.ndarray,
                 pilot_segments: List[np.ndarray],
                 data_segment: np.ndarray):
        self.bits = bits
        self.pilot_segments = pilot_segments
        self.data_segment = data_segment

    def key(self):
        """
            Hashable identity of the message, used for exact bit matching.
        """
        return self.bits.tobytes()

class TxSignal:
    """
        The length-L baseband signal of one user.

        Args
        ====
        samples: torch.Tensor
            complex128 tensor with size L, laid out as
            [sqrt(P_p) b_1, ..., sqrt(P_p) b_J, v]
        pilot_rows: List[int]
            codebook row used in every stage
        codeword: np.ndarray
            the 2 n_c polar code bits behind the QPSK segment
        message: UserMessage
    """
    def __init__(self,
                 samples: torch.Tensor,
                 pilot_rows: List[int],
                 codeword: np.ndarray,
                 message: UserMessage):
        self.samples = samples
        self.pilot_rows = pilot_rows
        self.codeword = codeword
        self.message = message

class SlotGroundTruth:
    """
        What the channel did in one slot: the users that transmitted, their
        channel matrix H (M x K_l), their pilot rows (K_l x J) and the collision
        counts m_ij (n_p x J), m_ij = number of users whose stage-j pilot is row i.
    """
    def __init__(self,
                 messages: List[UserMessage],
                 channel: torch.Tensor,
                 pilot_rows: np.ndarray,
                 collision_counts: np.ndarray):
        self.messages = messages
        self.channel = channel
        self.pilot_rows = pilot_rows
        self.collision_counts = collision_counts

@functools.lru_cache(maxsize = 16)
def _codebook(pilot_bits: int):
    return pyura.build_codebook(pilot_bits)

@functools.lru_cache(maxsize = 16)
def _polar_spec(block_length, info_length, design_erasure, crc_bits, crc_polynomial):
    return pyura.construct(block_length, info_length, design_erasure, crc_bits, crc_polynomial)

def codebook_for(config: SystemConfig):
    """
        The (shared, cached) Hadamard codebook of a configuration, or None
        when the scheme has no pilot stages.
    """
    if config.num_stages == 0:
        return None
    return _codebook(config.pilot_bits)

def polar_spec_for(config: SystemConfig):
    """
        The (shared, cached) polar code of a configuration.
    """
    return _polar_spec(config.polar_block_length, config.polar_info_length,
                       config.design_erasure, config.crc_bits, config.crc_polynomial)

def split_message(bits: np.ndarray, config: SystemConfig):
    """
        Split B message bits into [w_p1, ..., w_pJ, w_c].
    """
    bits = np.asarray(bits, dtype = np.uint8)
    if bits.shape != (config.message_bits,):
        raise ValueError('message must have {} bits, got shape {}'.format(config.message_bits, bits.shape))
    b_p = config.pilot_bits
    pilots = [bits[j * b_p:(j + 1) * b_p] for j in range(config.num_stages)]
    data = bits[config.num_stages * b_p:]
    return UserMessage(bits, pilots, data)

def qpsk_modulate(code_bits: np.ndarray, coded_power: float):
    """
        Gray QPSK: symbol t = sqrt(P_c / 2) (s(bit 2t) + j s(bit 2t+1))
        with s(0) = +1, s(1) = -1.

        Returns
        =======
        torch.Tensor
            complex128 tensor with size len(code_bits) / 2
    """
    code_bits = np.asarray(code_bits, dtype = np.uint8)
    if code_bits.ndim != 1 or code_bits.shape[0] % 2 != 0:
        raise ValueError('QPSK needs an even number of bits, got shape {}'.format(code_bits.shape))
    signs = torch.from_numpy(1.0 - 2.0 * code_bits.astype(np.float64)).reshape(-1, 2)
    symbols = torch.complex(signs[:, 0], signs[:, 1]) * math.sqrt(coded_power / 2.0)
    return pyura.to_device(symbols)

def assemble_signal(msg: UserMessage,
                    config: SystemConfig,
                    codebook: Optional[pyura.HadamardCodebook] = None,
                    polar_spec: Optional[pyura.PolarSpec] = None):
    """
        Build x = [sqrt(P_p) b_1, ..., sqrt(P_p) b_J, v] where b_j is the
        codebook row picked by w_pj and v is the QPSK image of the polar
        codeword of the whole message with its CRC.

        Args
        ====
        msg: UserMessage
        config: SystemConfig
        codebook: Optional[pyura.HadamardCodebook]
            defaults to codebook_for(config)
        polar_spec: Optional[pyura.PolarSpec]
            defaults to polar_spec_for(config)

        Returns
        =======
        TxSignal
    """
    if codebook is None:
        codebook = codebook_for(config)
    if polar_spec is None:
        polar_spec = polar_spec_for(config)
    segments = []
    pilot_rows = []
    amplitude = math.sqrt(config.pilot_power)
    for w in msg.pilot_segments:
        index, row = codebook.pilot_row(w)
        pilot_rows.append(index)
        segments.append((amplitude * row).to(pyura.complex_dtype))
    payload = pyura.crc_append(msg.bits, polar_spec.crc_width, polar_spec.crc_polynomial)
    codeword = pyura.encode(payload, polar_spec)
    segments.append(qpsk_modulate(codeword, config.coded_power))
    samples = torch.cat(segments)
    assert(samples.shape[0] == config.slot_length)
    return TxSignal(samples, pilot_rows, codeword, msg)

def signal_matrix(signals: Sequence[TxSignal], slot_length: Optional[int] = None):
    """
        Stack user signals into X, complex128 tensor with size K x L.
    """
    if len(signals) == 0:
        assert(slot_length is not None)
        return torch.zeros(0, slot_length, dtype = pyura.complex_dtype, device = pyura.get_device())
    return torch.stack([s.samples for s in signals])

def collision_counts(pilot_rows: np.ndarray, num_stages: int, pilot_length: int):
    """
        m_ij for a K x J array of pilot rows, as an n_p x J integer array.
    """
    counts = np.zeros((pilot_length, num_stages), dtype = np.int64)
    if num_stages == 0:
        return counts
    pilot_rows = np.asarray(pilot_rows, dtype = np.int64).reshape(-1, num_stages)
    for j in range(num_stages):
        counts[:, j] = np.bincount(pilot_rows[:, j], minlength = pilot_length)
    return counts

def simulate_slot(messages: List[UserMessage],
                  config: SystemConfig,
                  rng: pyura.Rng,
                  codebook: Optional[pyura.HadamardCodebook] = None,
                  polar_spec: Optional[pyura.PolarSpec] = None,
                  channel: Optional[torch.Tensor] = None) -> Tuple[torch.Tensor, SlotGroundTruth]:
    """
        Received signal of one slot, Y = H X + Z, with H (M x K_l) and Z
        (M x L) i.i.d. CN(0, 1) and CN(0, noise_variance). The columns of Y
        split into the J pilot blocks of n_p columns and the n_c coded
        columns. H is drawn from rng before Z.

        Args
        ====
        messages: List[UserMessage]
            the K_l users of the slot
        config: SystemConfig
        rng: pyura.Rng
        channel: Optional[torch.Tensor]
            fixed M x K_l channel matrix instead of a random one

        Returns
        =======
        torch.Tensor
            Y, complex128 tensor with size M x L
        SlotGroundTruth
    """
    if codebook is None:
        codebook = codebook_for(config)
    if polar_spec is None:
        polar_spec = polar_spec_for(config)
    signals = [assemble_signal(m, config, codebook, polar_spec) for m in messages]
    X = signal_matrix(signals, config.slot_length)
    M = config.num_antennas
    if channel is None:
        channel = pyura.sample_complex_gaussian(M, len(messages), 1.0, rng)
    else:
        channel = pyura.complex_matrix(channel)
        if tuple(channel.shape) != (M, len(messages)):
            raise ValueError('channel must be {} x {}, got {}'.format(M, len(messages), tuple(channel.shape)))
    Z = pyura.sample_complex_gaussian(M, config.slot_length, config.noise_variance, rng)
    Y = channel @ X + Z
    pilot_rows = np.array([s.pilot_rows for s in signals], dtype = np.int64)
    pilot_rows = pilot_rows.reshape(len(signals), config.num_stages)
    counts = collision_counts(pilot_rows, config.num_stages, config.pilot_length)
    return Y, SlotGroundTruth(messages, channel, pilot_rows, counts)

def db_to_linear(value_db):
    return 10.0 ** (value_db / 10.0)

def linear_to_db(value):
    return 10.0 * math.log10(value)

def powers_from_ebn0(ebn0: float, power_ratio: float, config: SystemConfig):
    """
        Pilot and coded powers with P_c = power_ratio P_p that give the
        energy per bit E_b/N0 = L P / B = (J n_p P_p + n_c P_c) / B.

        Args
        ====
        ebn0: float
            linear E_b/N0, > 0
        power_ratio: float
            P_c / P_p, > 0

        Returns
        =======
        Tuple[float, float]
            (P_p, P_c)
    """
    if ebn0 <= 0 or power_ratio <= 0:
        raise ValueError('need E_b/N0 > 0 and P_c/P_p > 0, got {} and {}'.format(ebn0, power_ratio))
    pilot_uses = config.num_stages * config.pilot_length
    pilot_power = config.message_bits * ebn0 / (pilot_uses + config.coded_symbols * power_ratio)
    return pilot_power, power_ratio * pilot_power

def ebn0_from_powers(pilot_power: float, coded_power: float, config: SystemConfig):
    """
        Linear E_b/N0 of a power allocation.
    """
    energy = config.num_stages * config.pilot_length * pilot_power + config.coded_symbols * coded_power
    return energy / config.message_bits

def draw_messages(num_messages: int, message_bits: int, rng: pyura.Rng):
    """
        num_messages uniform random B-bit messages, resampled until pairwise
        distinct.
    """
    if message_bits < 63 and num_messages > (1 << message_bits):
        raise ValueError('cannot draw {} distinct {}-bit messages'.format(num_messages, message_bits))
    messages = []
    seen = set()
    while len(messages) < num_messages:
        bits = rng.bits(message_bits)
        key = bits.tobytes()
        if key in seen:
            continue
        seen.add(key)
        messages.append(bits)
    return messages

def assign_slots(num_users: int, num_slots: int, rng: pyura.Rng):
    """
        Each user picks one of num_slots slots uniformly at random.
    """
    if num_users == 0:
        return np.zeros(0, dtype = np.int64)
    return rng.randint(num_slots, num_users)

__all__ = ['ConfigError', 'SystemConfig', 'UserMessage', 'TxSignal', 'SlotGroundTruth',
           'codebook_for', 'polar_spec_for', 'split_message', 'qpsk_modulate', 'assemble_signal',
           'signal_matrix', 'collision_counts', 'simulate_slot', 'db_to_linear', 'linear_to_db',
           'powers_from_ebn0', 'ebn0_from_powers', 'draw_messages', 'assign_slots']
