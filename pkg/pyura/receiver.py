import math
import numpy as np
import torch
import pyura
from typing import List, Optional, Tuple

class DegenerateLLRError(ValueError):
    """
        Raised by compute_llrs when the noise plus interference power is zero.
    """
    pass

class UserEstimate:
    """
        Per-row quantities of one decode attempt.

        Args
        ====
        stage: int
            pilot stage j (0-based)
        row: int
            detected codebook row
        channel: torch.Tensor
            channel estimate h, complex128 tensor with size M
        combined: torch.Tensor
            MRC output h^H Y'_c, complex128 tensor with size n_c
        signal_power: float
            P_c |h|^4
        interference_power: float
            P_c sum_k |h^H h_k|^2 over the other detected rows of the stage
        noise_power: float
            |h|^2
    """
    def __init__(self,
                 stage: int,
                 row: int,
                 channel: torch.Tensor,
                 combined: torch.Tensor,
                 signal_power: float,
                 interference_power: float,
                 noise_power: float):
        self.stage = stage
        self.row = row
        self.channel = channel
        self.combined = combined
        self.signal_power = signal_power
        self.interference_power = interference_power
        self.noise_power = noise_power

class DecodedList:
    """
        Messages recovered from one slot plus decoder bookkeeping.

        Args
        ====
        messages: List[np.ndarray]
            validated B-bit messages in acceptance order, no duplicates
        iterations: int
            outer iterations run
        sic_updates: int
            successful SIC re-estimations
        singular_events: int
            SIC steps skipped because the Gram matrix was singular
        decode_attempts: int
            SCL decoder calls
    """
    def __init__(self,
                 messages: List[np.ndarray],
                 iterations: int = 0,
                 sic_updates: int = 0,
                 singular_events: int = 0,
                 decode_attempts: int = 0):
        self.messages = messages
        self.iterations = iterations
        self.sic_updates = sic_updates
        self.singular_events = singular_events
        self.decode_attempts = decode_attempts

    def __len__(self):
        return len(self.messages)

    def __iter__(self):
        return iter(self.messages)

    def __contains__(self, bits):
        key = np.asarray(bits, dtype = np.uint8).tobytes()
        return any(m.tobytes() == key for m in self.messages)

class SlotDecoderState:
    """
        Receiver state of one slot. Y is the received matrix and is never
        modified; residual always equals Y - H_S X_S for the decoded set S
        of the last successful SIC update.
    """
    def __init__(self, Y: torch.Tensor, config: pyura.SystemConfig):
        self.Y = Y
        self.residual = Y.clone()
        self.config = config
        self.decoded = []
        self.signals = []
        self.keys = set()
        self.channel_estimates = torch.zeros(Y.shape[0], 0, dtype = pyura.complex_dtype, device = Y.device)
        self.iteration = 0
        self.no_progress = 0
        self.sic_version = 0
        self.sic_updates = 0
        self.singular_events = 0
        self.decode_attempts = 0

    def pilot_segment(self, stage: int):
        n_p = self.config.pilot_length
        return self.residual[:, stage * n_p:(stage + 1) * n_p]

    def coded_segment(self):
        return self.residual[:, self.config.num_stages * self.config.pilot_length:]

    def decoded_rows(self, stage: int):
        """
            Stage-j pilot rows of the messages decoded so far.
        """
        return set(s.pilot_rows[stage] for s in self.signals)

    def add(self, signal: pyura.TxSignal):
        """
            Add a validated message; False when it was already decoded.
        """
        key = signal.message.key()
        if key in self.keys:
            return False
        self.keys.add(key)
        self.decoded.append(signal.message.bits)
        self.signals.append(signal)
        return True

    def apply_sic(self):
        """
            Re-estimate the channels of every decoded user from the original Y
            and cancel them. A singular Gram matrix keeps the previous residual.
        """
        X = pyura.signal_matrix(self.signals, self.config.slot_length)
        try:
            residual, estimates = sic_update(self.Y, X)
        except pyura.SingularGramError:
            self.singular_events += 1
            return False
        self.residual = residual
        self.channel_estimates = estimates
        self.sic_version += 1
        self.sic_updates += 1
        return True

    def result(self):
        return DecodedList(list(self.decoded),
                           iterations = self.iteration,
                           sic_updates = self.sic_updates,
                           singular_events = self.singular_events,
                           decode_attempts = self.decode_attempts)

def estimate_channel(Y_p: torch.Tensor,
                     pilot_row: torch.Tensor,
                     pilot_power: float):
    """
        h = Y_p b / (n_p sqrt(P_p)) for a +-1 pilot row b.

        Returns
        =======
        torch.Tensor
            complex128 tensor with size M
    """
    return estimate_channels(Y_p, pilot_row[None, :], pilot_power)[:, 0]

def estimate_channels(Y_p: torch.Tensor,
                      pilot_rows: torch.Tensor,
                      pilot_power: float):
    """
        estimate_channel for K rows at once: Y_p B_K^T / (n_p sqrt(P_p)).

        Args
        ====
        Y_p: torch.Tensor
            complex matrix with size M x n_p
        pilot_rows: torch.Tensor
            +-1 rows with size K x n_p

        Returns
        =======
        torch.Tensor
            complex matrix with size M x K
    """
    if Y_p.dim() != 2 or pilot_rows.dim() != 2 or Y_p.shape[1] != pilot_rows.shape[1]:
        raise ValueError('pilot segment {} and rows {} do not agree'.format(\
            tuple(Y_p.shape), tuple(pilot_rows.shape)))
    if pilot_power <= 0:
        raise ValueError('channel estimation needs a positive pilot power, got {}'.format(pilot_power))
    n_p = Y_p.shape[1]
    B = pilot_rows.to(dtype = pyura.complex_dtype, device = Y_p.device)
    return (Y_p @ B.T) / (n_p * math.sqrt(pilot_power))

def mrc_combine(h: torch.Tensor, Y_c: torch.Tensor):
    """
        Maximum-ratio combining h^H Y_c. h with size M gives a vector with
        size n_c; a matrix of K estimates (M x K) gives K x n_c.
    """
    if h.shape[0] != Y_c.shape[0]:
        raise ValueError('channel estimate {} does not match coded block {}'.format(\
            tuple(h.shape), tuple(Y_c.shape)))
    if h.dim() == 1:
        return h.conj() @ Y_c
    return h.conj().T @ Y_c

def power_terms(h_self: torch.Tensor,
                h_others: Optional[torch.Tensor],
                coded_power: float) -> Tuple[float, float, float]:
    """
        Signal, interference and noise power of the MRC output:
        P_c |h|^4, P_c sum_k |h^H h_k|^2 and |h|^2.

        Args
        ====
        h_self: torch.Tensor
            estimate with size M
        h_others: Optional[torch.Tensor]
            estimates of the other detected rows, M x K' (or None)
        coded_power: float
    """
    norm_sq = float(torch.sum(h_self.real ** 2 + h_self.imag ** 2))
    interference = 0.0
    if h_others is not None and h_others.shape[1] > 0:
        inner = h_self.conj() @ h_others
        interference = coded_power * float(torch.sum(inner.real ** 2 + inner.imag ** 2))
    return coded_power * norm_sq ** 2, interference, norm_sq

def batched_power_terms(H: torch.Tensor, coded_power: float):
    """
        power_terms for every column of H against all other columns.

        Returns
        =======
        Tuple[np.ndarray, np.ndarray, np.ndarray]
            signal, interference and noise power, each with size K
    """
    gram = H.conj().T @ H
    magnitude = (gram.real ** 2 + gram.imag ** 2).cpu().numpy()
    norm_sq = np.real(np.diag(gram.cpu().numpy()))
    interference = coded_power * (magnitude.sum(axis = 1) - np.diag(magnitude))
    # rounding can leave tiny negatives when the sum is dominated by the diagonal
    interference = np.maximum(interference, 0.0)
    return coded_power * norm_sq ** 2, interference, norm_sq

def compute_llrs(v: torch.Tensor,
                 signal_power: float,
                 interference_power: float,
                 noise_power: float):
    """
        beta = 2 sqrt(sigma_s^2) / (sigma_n^2 + sigma_I^2) v, emitted per
        symbol as [Im(beta_t), Re(beta_t)]. Positive LLR means bit 0.
        Use deinterleave_llrs to reach codeword order.

        Returns
        =======
        np.ndarray
            2 n_c float64 LLRs
    """
    denominator = noise_power + interference_power
    if not denominator > 0:
        raise DegenerateLLRError('noise plus interference power is {}'.format(denominator))
    beta = (2.0 * math.sqrt(max(signal_power, 0.0)) / denominator) * v
    beta = beta.cpu()
    return torch.stack([beta.imag, beta.real], dim = -1).reshape(-1).numpy()

def deinterleave_llrs(llrs: np.ndarray):
    """
        Swap every [Im, Re] pair to the codeword bit order [Re, Im] used by
        qpsk_modulate.
    """
    llrs = np.asarray(llrs)
    if llrs.shape[-1] % 2 != 0:
        raise ValueError('LLRs come in pairs, got {}'.format(llrs.shape[-1]))
    return llrs.reshape(*llrs.shape[:-1], -1, 2)[..., ::-1].reshape(llrs.shape).copy()

def validate(candidate: Optional[pyura.DecodeCandidate],
             stage: int,
             expected_row: int,
             codebook: pyura.HadamardCodebook):
    """
        A decoded candidate is accepted when its CRC holds and its stage-j
        pilot bits select the row it was decoded on.
    """
    if candidate is None or not candidate.crc_ok:
        return False
    b_p = codebook.num_bits
    segment = candidate.info_bits[stage * b_p:(stage + 1) * b_p]
    return codebook.row_index(segment) == expected_row

def sic_update(Y: torch.Tensor, X: torch.Tensor):
    """
        Least-squares re-estimation of the channels of the decoded users from
        the original received matrix, H_S = ls_solve(Y, X_S), and the residual
        Y' = Y - H_S X_S.

        Returns
        =======
        torch.Tensor
            residual, M x L
        torch.Tensor
            H_S, M x K

        Raises
        ======
        pyura.SingularGramError
    """
    if X.shape[0] == 0:
        return Y.clone(), torch.zeros(Y.shape[0], 0, dtype = pyura.complex_dtype, device = Y.device)
    H = pyura.ls_solve(Y, X)
    return Y - H @ X, H

def decode_stage(state: SlotDecoderState,
                 stage: int,
                 codebook: pyura.HadamardCodebook,
                 polar_spec: pyura.PolarSpec,
                 threshold: float,
                 failed: set):
    """
        One stage of the receiver: detect, then estimate, combine and decode
        every new detected row, strongest first. Returns the newly accepted
        signals; the caller applies SIC. Without pilot power no channel can
        be estimated, so nothing is decodable.
    """
    config = state.config
    if config.pilot_power <= 0:
        return []
    detection = pyura.detect(state.pilot_segment(stage), codebook, threshold)
    rows = detection.ordered_rows()
    if len(rows) == 0:
        return []
    H = estimate_channels(state.pilot_segment(stage), codebook.rows(rows), config.pilot_power)
    V = mrc_combine(H, state.coded_segment())
    signal, interference, noise = batched_power_terms(H, config.coded_power)
    taken = state.decoded_rows(stage)
    accepted = []
    for k, row in enumerate(rows):
        row = int(row)
        attempt = (stage, row, state.sic_version)
        if row in taken or attempt in failed:
            continue
        estimate = UserEstimate(stage, row, H[:, k], V[k],
                                float(signal[k]), float(interference[k]), float(noise[k]))
        try:
            llrs = compute_llrs(estimate.combined,
                                estimate.signal_power,
                                estimate.interference_power,
                                estimate.noise_power)
        except DegenerateLLRError:
            failed.add(attempt)
            continue
        state.decode_attempts += 1
        candidates = pyura.scl_decode(deinterleave_llrs(llrs), polar_spec, config.list_size)
        best = pyura.select_candidate(candidates)
        if not validate(best, stage, row, codebook):
            failed.add(attempt)
            continue
        message = pyura.split_message(best.info_bits, config)
        signal_k = pyura.assemble_signal(message, config, codebook, polar_spec)
        if state.add(signal_k):
            accepted.append(signal_k)
    return accepted

def decode_slot(Y: torch.Tensor,
                config: pyura.SystemConfig,
                codebook: Optional[pyura.HadamardCodebook] = None,
                polar_spec: Optional[pyura.PolarSpec] = None):
    """
        Iterative multi-stage decoding of one slot. Every outer iteration
        sweeps the J pilot stages; each stage detects active rows on the
        residual, decodes them and cancels the batch of accepted users with a
        least-squares SIC update from the original Y. Decoding stops after a
        sweep without new messages or after config.max_iterations sweeps.
        A (stage, row) pair that failed on the current residual is not tried
        again until the residual changes.

        Args
        ====
        Y: torch.Tensor
            received matrix, complex128 with size M x L
        config: pyura.SystemConfig
        codebook: Optional[pyura.HadamardCodebook]
        polar_spec: Optional[pyura.PolarSpec]

        Returns
        =======
        DecodedList
    """
    if tuple(Y.shape) != (config.num_antennas, config.slot_length):
        raise ValueError('received matrix must be {} x {}, got {}'.format(\
            config.num_antennas, config.slot_length, tuple(Y.shape)))
    if codebook is None:
        codebook = pyura.codebook_for(config)
    if polar_spec is None:
        polar_spec = pyura.polar_spec_for(config)
    state = SlotDecoderState(Y, config)
    threshold = pyura.np_threshold(config.gamma, config.num_antennas)
    failed = set()
    while state.iteration < config.max_iterations:
        state.iteration += 1
        progress = False
        for stage in range(config.num_stages):
            accepted = decode_stage(state, stage, codebook, polar_spec, threshold, failed)
            if len(accepted) > 0:
                progress = True
                state.no_progress = 0
                state.apply_sic()
            else:
                state.no_progress += 1
        if not progress:
            break
    return state.result()

__all__ = ['DegenerateLLRError', 'UserEstimate', 'DecodedList', 'SlotDecoderState',
           'estimate_channel', 'estimate_channels', 'mrc_combine', 'power_terms',
           'batched_power_terms', 'compute_llrs', 'deinterleave_llrs', 'validate',
           'sic_update', 'decode_stage', 'decode_slot']
