import math
import numpy as np
import torch
import pyura
from typing import Optional

class DetectionResult:
    """
        Outcome of the energy test on one pilot segment.

        Args
        ====
        detected_rows: np.ndarray
            codebook rows whose statistic reaches the threshold, ascending
        statistics: np.ndarray
            u^H u for every codebook row, float64 array with size n_p
        threshold: float
    """
    def __init__(self,
                 detected_rows: np.ndarray,
                 statistics: np.ndarray,
                 threshold: float):
        self.detected_rows = detected_rows
        self.statistics = statistics
        self.threshold = threshold

    def ordered_rows(self):
        """
            Detected rows by decreasing statistic (ties by row index).
        """
        order = np.argsort(-self.statistics[self.detected_rows], kind = 'stable')
        return self.detected_rows[order]

    def __len__(self):
        return len(self.detected_rows)

class DetectorAnalytics:
    """
        Closed-form behaviour of the per-row energy test. Under the null
        hypothesis u ~ CN(0, I_M) and u^H u ~ chi2_{2M} / 2; with m users on
        the row u ~ CN(0, sigma_1^2 I_M), sigma_1^2 = 1 + m n_p P_p.

        Args
        ====
        gamma: float
            false-alarm level per row
        num_antennas: int
            M
        pilot_length: int
            n_p
        pilot_power: float
            P_p
    """
    def __init__(self,
                 gamma: float,
                 num_antennas: int,
                 pilot_length: int,
                 pilot_power: float):
        self.gamma = gamma
        self.num_antennas = num_antennas
        self.pilot_length = pilot_length
        self.pilot_power = pilot_power
        self.threshold = np_threshold(gamma, num_antennas)

    def sigma_1(self, collisions: int = 1):
        return math.sqrt(1.0 + collisions * self.pilot_length * self.pilot_power)

    def sigma_0_sq(self, collisions: int = 1):
        """
            2 (1 + m n_p P_p) / (m n_p P_p), infinite when P_p = 0.
        """
        snr = collisions * self.pilot_length * self.pilot_power
        if snr == 0:
            return math.inf
        return 2.0 * (1.0 + snr) / snr

    def false_alarm(self):
        return analytic_pf(self.num_antennas, self.threshold)

    def detection(self, collisions: int = 1):
        return analytic_pd(self.gamma, self.num_antennas, self.pilot_length, self.pilot_power, collisions)

    def log_likelihood_ratio(self, statistic, collisions: int = 1):
        """
            log p(s | m users) - log p(s | idle) for the statistic s = u^H u:
            2 s / sigma_0^2 - M log sigma_1^2.
        """
        return 2.0 * np.asarray(statistic) / self.sigma_0_sq(collisions) - \
            self.num_antennas * math.log(self.sigma_1(collisions) ** 2)

def np_threshold(gamma: float, num_antennas: int):
    """
        Neyman-Pearson threshold of the energy test at per-row false-alarm
        level gamma: 0.5 chi2_inv_cdf(1 - gamma, 2M).
    """
    if not (0.0 < gamma < 1.0):
        raise pyura.DomainError('gamma must be in (0, 1), got {}'.format(gamma))
    if num_antennas < 1:
        raise pyura.DomainError('need at least one antenna, got {}'.format(num_antennas))
    return 0.5 * pyura.chi2_inv_cdf(1.0 - gamma, 2 * num_antennas)

def row_statistics(Y_p: torch.Tensor, codebook: pyura.HadamardCodebook):
    """
        u^H u with u = Y_p b_i / sqrt(n_p) for every codebook row i.
        Per-antenna terms are summed in sorted order, so the statistics do
        not depend on the order of the antennas.
    """
    u = codebook.correlate(Y_p) / math.sqrt(codebook.order)
    energy = u.real ** 2 + u.imag ** 2
    energy, _ = torch.sort(energy, dim = -2)
    return energy.sum(dim = -2)

def detect(Y_p: torch.Tensor,
           codebook: pyura.HadamardCodebook,
           threshold: float):
    """
        Energy test of every codebook row on one pilot segment.

        Args
        ====
        Y_p: torch.Tensor
            complex matrix with size M x n_p
        codebook: pyura.HadamardCodebook
        threshold: float
            usually np_threshold(gamma, M)

        Returns
        =======
        DetectionResult
    """
    if Y_p.dim() != 2 or Y_p.shape[1] != codebook.order:
        raise ValueError('pilot segment must be M x {}, got {}'.format(codebook.order, tuple(Y_p.shape)))
    statistics = row_statistics(Y_p, codebook).cpu().numpy()
    detected = np.nonzero(statistics >= threshold)[0]
    return DetectionResult(detected, statistics, threshold)

def analytic_pd(gamma: float,
                num_antennas: int,
                pilot_length: int,
                pilot_power: float,
                collisions: int = 1):
    """
        Detection probability of a row used by m users:
        1 - chi2_cdf(chi2_inv_cdf(1 - gamma, 2M) / (1 + m n_p P_p), 2M).
    """
    if collisions < 1:
        raise pyura.DomainError('collision count must be >= 1, got {}'.format(collisions))
    if pilot_power < 0:
        raise pyura.DomainError('pilot power must be >= 0, got {}'.format(pilot_power))
    k = 2 * num_antennas
    scaled = pyura.chi2_inv_cdf(1.0 - gamma, k) / (1.0 + collisions * pilot_length * pilot_power)
    return pyura.chi2_sf(scaled, k)

def analytic_pf(num_antennas: int, threshold: float):
    """
        False-alarm probability of one idle row, 1 - chi2_cdf(2 threshold, 2M).
    """
    if threshold < 0:
        raise pyura.DomainError('threshold must be >= 0, got {}'.format(threshold))
    return pyura.chi2_sf(2.0 * threshold, 2 * num_antennas)

def simulate_detector(num_antennas: int,
                      pilot_bits: int,
                      pilot_power: float,
                      gamma: float,
                      trials: int,
                      rng: pyura.Rng,
                      batch_size: int = 64,
                      noise_variance: float = 1.0):
    """
        Monte-Carlo estimate of the detector on one pilot segment with a
        single active user on a uniformly drawn row and every other row idle.

        Args
        ====
        num_antennas: int
            M
        pilot_bits: int
            B_p, the codebook has n_p = 2^B_p rows
        pilot_power: float
            P_p
        gamma: float
            false-alarm level per row
        trials: int
            number of independent segments
        rng: pyura.Rng
        batch_size: int
            segments simulated together

        Returns
        =======
        float
            fraction of trials where the active row was detected
        float
            fraction of idle (trial, row) pairs that were detected
    """
    if trials < 1:
        raise ValueError('need at least one trial, got {}'.format(trials))
    codebook = pyura.build_codebook(pilot_bits)
    n_p = codebook.order
    threshold = np_threshold(gamma, num_antennas)
    hits = 0
    false_alarms = 0
    done = 0
    while done < trials:
        batch = min(batch_size, trials - done)
        active = rng.randint(n_p, batch)
        h = pyura.sample_complex_gaussian(batch, num_antennas, 1.0, rng)
        noise = pyura.sample_complex_gaussian(batch * num_antennas, n_p, noise_variance, rng)
        rows = codebook.rows(active).to(pyura.complex_dtype)
        Y = math.sqrt(pilot_power) * h[:, :, None] * rows[:, None, :] + \
            noise.reshape(batch, num_antennas, n_p)
        detected = (row_statistics(Y, codebook) >= threshold).cpu().numpy()
        on_active = detected[np.arange(batch), active]
        hits += int(on_active.sum())
        false_alarms += int(detected.sum()) - int(on_active.sum())
        done += batch
    return hits / trials, false_alarms / (trials * (n_p - 1))

__all__ = ['DetectionResult', 'DetectorAnalytics', 'np_threshold', 'row_statistics', 'detect',
           'analytic_pd', 'analytic_pf', 'simulate_detector']
