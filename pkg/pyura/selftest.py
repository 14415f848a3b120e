import sys
import numpy as np
import torch
import pyura
from typing import List, Optional

class SelfTestCheck:
    """
        One self-test measurement: the check passes when value <= tolerance.
    """
    def __init__(self, name: str, value: float, tolerance: float):
        self.name = name
        self.value = value
        self.tolerance = tolerance

    @property
    def passed(self):
        return self.value <= self.tolerance

    def __str__(self):
        return '{:<28s} value {:.3e}  tolerance {:.3e}  {}'.format(\
            self.name, self.value, self.tolerance, 'PASS' if self.passed else 'FAIL')

def check_polar_round_trip(rng: pyura.Rng,
                           crc_polynomial: Optional[int] = None,
                           round_trips: int = 20):
    """
        Noiseless encode / SCL decode at N = 512, K = 111, list 64. The value
        is the number of payloads not recovered. crc_polynomial replaces the
        polynomial on the decoder side only (a negative control).
    """
    spec = pyura.construct(512, 111)
    failures = 0
    for _ in range(round_trips):
        info = rng.bits(spec.message_length)
        payload = pyura.crc_append(info, spec.crc_width, spec.crc_polynomial)
        codeword = pyura.encode(payload, spec)
        llrs = 20.0 * (1.0 - 2.0 * codeword.astype(np.float64))
        best = pyura.select_candidate(pyura.scl_decode(llrs, spec, 64, crc_polynomial = crc_polynomial))
        if best is None or not np.array_equal(best.info_bits, info):
            failures += 1
    return SelfTestCheck('polar round trip', failures, 0)

def check_hadamard_orthogonality(max_bits: int = 8):
    """
        max |B B^T - n_p I| over codebooks of order 2 .. 2^max_bits.
    """
    worst = 0.0
    for b in range(1, max_bits + 1):
        B = pyura.build_codebook(b).matrix
        gram = B @ B.T
        worst = max(worst, float(torch.max(torch.abs(gram - B.shape[0] * torch.eye(B.shape[0],
            dtype = B.dtype, device = B.device)))))
    return SelfTestCheck('hadamard orthogonality', worst, 0.0)

def check_residual_consistency(rng: pyura.Rng, cases: int = 20):
    """
        max |Y - Y' - H_S X_S|_F / |Y|_F over random SIC updates.
    """
    worst = 0.0
    for _ in range(cases):
        k = int(rng.randint(8, 1)[0]) + 1
        Y = pyura.sample_complex_gaussian(16, 64, 1.0, rng)
        X = pyura.sample_complex_gaussian(k, 64, 1.0, rng)
        residual, H = pyura.sic_update(Y, X)
        error = torch.linalg.norm(Y - residual - H @ X) / torch.linalg.norm(Y)
        worst = max(worst, float(error))
    return SelfTestCheck('SIC residual consistency', worst, 1e-8)

def check_false_alarm_calibration():
    """
        max |analytic_pf(M, np_threshold(gamma, M)) - gamma|.
    """
    worst = 0.0
    for gamma in [1e-3, 1e-2, 0.1]:
        for M in [1, 4, 50, 100]:
            pf = pyura.analytic_pf(M, pyura.np_threshold(gamma, M))
            worst = max(worst, abs(pf - gamma))
    return SelfTestCheck('analytic false alarm', worst, 1e-9)

def check_noiseless_slot(rng: pyura.Rng, num_users: int = 4):
    """
        Noiseless slot with users on distinct stage-1 rows; the value is the
        number of messages decode_slot misses.
    """
    config = pyura.SystemConfig(message_bits = 100, pilot_bits = 5, num_stages = 2,
                                coded_symbols = 256, num_slots = 1, num_antennas = 50,
                                num_active = num_users, pilot_power = 1.0, coded_power = 1.0,
                                noise_variance = 0.0)
    codebook = pyura.codebook_for(config)
    messages = []
    rows = set()
    while len(messages) < num_users:
        bits = rng.bits(config.message_bits)
        row = codebook.row_index(bits[:config.pilot_bits])
        if row in rows:
            continue
        rows.add(row)
        messages.append(pyura.split_message(bits, config))
    Y, _ = pyura.simulate_slot(messages, config, rng)
    decoded = pyura.decode_slot(Y, config)
    missed = sum(1 for m in messages if m.bits not in decoded)
    return SelfTestCheck('noiseless slot decode', missed, 0)

def run_selftest(seed: int = 0,
                 crc_polynomial: Optional[int] = None,
                 out = sys.stdout) -> List[SelfTestCheck]:
    """
        Run the self-check battery and print one report line per check.

        Args
        ====
        seed: int
        crc_polynomial: Optional[int]
            decoder-side CRC polynomial for the polar round trip, used to
            check that a corrupted CRC is caught

        Returns
        =======
        List[SelfTestCheck]
    """
    rng = pyura.Rng(seed)
    checks = [check_polar_round_trip(rng.spawn('polar'), crc_polynomial),
              check_hadamard_orthogonality(),
              check_residual_consistency(rng.spawn('sic')),
              check_false_alarm_calibration(),
              check_noiseless_slot(rng.spawn('slot'))]
    for c in checks:
        print(str(c), file = out)
    return checks

__all__ = ['SelfTestCheck', 'run_selftest']
