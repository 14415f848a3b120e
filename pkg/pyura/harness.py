import concurrent.futures
import math
import time
import numpy as np
import scipy.stats
import pyura
from tqdm import tqdm
from typing import Callable, List, Optional, Sequence, Tuple

print_timing = False
def set_print_timing(v: bool):
    """
        Set whether to print time measurements or not.
    """
    global print_timing
    print_timing = v

def get_print_timing():
    """
        Get whether we print time measurements or not.
    """
    global print_timing
    return print_timing

class EbN0NotFoundError(RuntimeError):
    """
        Raised by find_min_ebn0 when even the upper search bound misses the
        target.
    """
    pass

class TrialOutcome:
    """
        Message-level accounting of one trial.

        Args
        ====
        n_missed: int
            transmitted messages missing from the decoded list
        n_fa: int
            decoded messages that were never transmitted
        n_decoded: int
            size of the decoded list |L_d|
        num_active: int
            K_a
    """
    def __init__(self,
                 n_missed: int,
                 n_fa: int,
                 n_decoded: int,
                 num_active: int):
        assert(0 <= n_missed <= num_active)
        assert(0 <= n_fa <= n_decoded)
        self.n_missed = n_missed
        self.n_fa = n_fa
        self.n_decoded = n_decoded
        self.num_active = num_active

    @property
    def p_md(self):
        return self.n_missed / self.num_active if self.num_active > 0 else 0.0

    @property
    def p_fa(self):
        return self.n_fa / self.n_decoded if self.n_decoded > 0 else 0.0

    def __eq__(self, other):
        return isinstance(other, TrialOutcome) and \
            (self.n_missed, self.n_fa, self.n_decoded, self.num_active) == \
            (other.n_missed, other.n_fa, other.n_decoded, other.num_active)

    def __repr__(self):
        return 'TrialOutcome(n_missed={}, n_fa={}, n_decoded={}, num_active={})'.format(\
            self.n_missed, self.n_fa, self.n_decoded, self.num_active)

class PupeEstimate:
    """
        Per-user probability of error P_e = p_md + p_fa with a Wilson score
        interval. The interval treats the T trials as T max(K_a, 1)
        Bernoulli observations of P_e.

        Args
        ====
        p_md: float
            mean missed-detection ratio
        p_fa: float
            mean false-alarm ratio
        trials: int
        num_active: int
            K_a
        confidence: float
            two-sided confidence level of the interval
        seconds: float
            wall time spent on the estimate
    """
    def __init__(self,
                 p_md: float,
                 p_fa: float,
                 trials: int,
                 num_active: int,
                 confidence: float = 0.95,
                 seconds: float = 0.0):
        self.p_md = p_md
        self.p_fa = p_fa
        self.pe = p_md + p_fa
        self.trials = trials
        self.num_active = num_active
        self.confidence = confidence
        self.seconds = seconds
        n = trials * max(num_active, 1)
        z = scipy.stats.norm.ppf(0.5 + 0.5 * confidence)
        p = min(max(self.pe, 0.0), 1.0)
        scale = 1.0 + z * z / n
        center = (p + z * z / (2.0 * n)) / scale
        self.half_width = z / scale * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n))
        self.lower = max(center - self.half_width, 0.0)
        self.upper = min(center + self.half_width, 1.0)

    def feasible(self, target: float, loose: bool = False):
        """
            Whether the estimate meets target: upper confidence bound <= target,
            or the point estimate in loose mode.
        """
        if loose:
            return self.pe <= target
        return self.upper <= target

    def __repr__(self):
        return 'PupeEstimate(pe={:.4g}, p_md={:.4g}, p_fa={:.4g}, +-{:.3g}, trials={})'.format(\
            self.pe, self.p_md, self.p_fa, self.half_width, self.trials)

class SweepResult:
    """
        One point of a PUPE sweep: K_a, E_b/N0 in dB and the estimate there.
        In search mode ebn0_db is the smallest feasible E_b/N0 found, or None.
    """
    def __init__(self,
                 num_active: int,
                 ebn0_db: Optional[float],
                 estimate: Optional[PupeEstimate],
                 seconds: float):
        self.num_active = num_active
        self.ebn0_db = ebn0_db
        self.estimate = estimate
        self.seconds = seconds

    @property
    def found(self):
        return self.estimate is not None

def with_ebn0(config: pyura.SystemConfig,
              ebn0_db: float,
              power_ratio: Optional[float] = None):
    """
        config with the pilot and coded powers set for ebn0_db. The power
        ratio P_c/P_p defaults to the one of config.
    """
    if power_ratio is None:
        if config.pilot_power <= 0:
            raise pyura.ConfigError('pilot_power', 'power ratio undefined for zero pilot power')
        power_ratio = config.coded_power / config.pilot_power
    pilot_power, coded_power = pyura.powers_from_ebn0(pyura.db_to_linear(ebn0_db), power_ratio, config)
    return config.replace(pilot_power = pilot_power, coded_power = coded_power)

def run_trial(config: pyura.SystemConfig,
              seed: int,
              codebook: Optional[pyura.HadamardCodebook] = None,
              polar_spec: Optional[pyura.PolarSpec] = None):
    """
        One frame: K_a distinct messages, uniform slot choice, every slot
        simulated with the stream rng.spawn('slot', l) and decoded, then the
        union of the decoded lists is matched against the transmitted set by
        exact bit equality.

        Returns
        =======
        TrialOutcome
    """
    if codebook is None:
        codebook = pyura.codebook_for(config)
    if polar_spec is None:
        polar_spec = pyura.polar_spec_for(config)
    rng = pyura.Rng(seed)
    bits = pyura.draw_messages(config.num_active, config.message_bits, rng)
    slots = pyura.assign_slots(config.num_active, config.num_slots, rng)
    decoded = set()
    for l in range(config.num_slots):
        slot_rng = rng.spawn('slot', l)
        messages = [pyura.split_message(bits[i], config) for i in np.nonzero(slots == l)[0]]
        Y, _ = pyura.simulate_slot(messages, config, slot_rng, codebook, polar_spec)
        for m in pyura.decode_slot(Y, config, codebook, polar_spec):
            decoded.add(m.tobytes())
    transmitted = set(b.tobytes() for b in bits)
    return TrialOutcome(n_missed = len(transmitted - decoded),
                        n_fa = len(decoded - transmitted),
                        n_decoded = len(decoded),
                        num_active = config.num_active)

def summarize_outcomes(outcomes: Sequence[TrialOutcome],
                       confidence: float = 0.95,
                       seconds: float = 0.0):
    """
        Average per-trial missed-detection and false-alarm ratios.
    """
    if len(outcomes) == 0:
        raise ValueError('no trial outcomes to summarize')
    p_md = float(np.mean([o.p_md for o in outcomes]))
    p_fa = float(np.mean([o.p_fa for o in outcomes]))
    return PupeEstimate(p_md, p_fa, len(outcomes), outcomes[0].num_active, confidence, seconds)

def run_trials(config: pyura.SystemConfig,
               trials: int,
               master_seed: int = 0,
               threads: int = 1,
               progress: bool = False):
    """
        Outcomes of trials 0..T-1, trial t seeded with sub_seed(master_seed, t).
        The order of the result does not depend on threads.
    """
    if trials < 1:
        raise ValueError('need at least one trial, got {}'.format(trials))
    codebook = pyura.codebook_for(config)
    polar_spec = pyura.polar_spec_for(config)
    seeds = [pyura.sub_seed(master_seed, t) for t in range(trials)]
    def trial(seed):
        return run_trial(config, seed, codebook, polar_spec)
    if threads <= 1:
        results = map(trial, seeds)
        return list(tqdm(results, total = trials, disable = not progress, leave = False))
    with concurrent.futures.ThreadPoolExecutor(max_workers = threads) as executor:
        results = executor.map(trial, seeds)
        return list(tqdm(results, total = trials, disable = not progress, leave = False))

def estimate_pupe(config: pyura.SystemConfig,
                  trials: int,
                  master_seed: int = 0,
                  threads: int = 1,
                  progress: bool = False,
                  confidence: float = 0.95):
    """
        Monte-Carlo estimate of the per-user probability of error.

        Args
        ====
        config: pyura.SystemConfig
        trials: int
            number of frames, >= 1
        master_seed: int
            trial t uses sub_seed(master_seed, t)
        threads: int
            worker threads; results do not depend on it
        progress: bool
            show a tqdm progress bar

        Returns
        =======
        PupeEstimate
    """
    start = time.time()
    outcomes = run_trials(config, trials, master_seed, threads, progress)
    time_elapsed = time.time() - start
    if get_print_timing():
        ebn0 = pyura.ebn0_from_powers(config.pilot_power, config.coded_power, config)
        ebn0_db = pyura.linear_to_db(ebn0) if ebn0 > 0 else -math.inf
        print('PUPE point K_a=%d Eb/N0=%.2f dB, time: %.5f s' % (config.num_active, ebn0_db, time_elapsed))
    return summarize_outcomes(outcomes, confidence, time_elapsed)

def find_min_ebn0(config: pyura.SystemConfig,
                  target_pe: float = 0.05,
                  power_ratio: Optional[float] = None,
                  bounds: Tuple[float, float] = (-5.0, 10.0),
                  trials: int = 200,
                  master_seed: int = 0,
                  threads: int = 1,
                  resolution: float = 0.25,
                  loose: bool = False,
                  progress: bool = False,
                  evaluate: Optional[Callable[[float], PupeEstimate]] = None):
    """
        Smallest E_b/N0 (dB) meeting target_pe, by bisection down to
        resolution. A point is feasible when the upper confidence bound of its
        estimate is <= target_pe (the point estimate in loose mode).

        Args
        ====
        evaluate: Optional[Callable[[float], PupeEstimate]]
            estimate at a given E_b/N0 in dB; defaults to estimate_pupe on
            with_ebn0(config, ebn0_db, power_ratio)

        Returns
        =======
        float
            E_b/N0 in dB, within resolution above the feasibility boundary

        Raises
        ======
        EbN0NotFoundError
            when the upper bound is infeasible
    """
    lo, hi = bounds
    if not lo < hi:
        raise ValueError('search bounds must satisfy lo < hi, got {}'.format(bounds))
    if evaluate is None:
        def evaluate(ebn0_db):
            return estimate_pupe(with_ebn0(config, ebn0_db, power_ratio), trials,
                                 master_seed, threads, progress)
    if target_pe >= 1.0:
        return lo
    if not evaluate(hi).feasible(target_pe, loose):
        raise EbN0NotFoundError('P_e <= {} not reached at {} dB'.format(target_pe, hi))
    if evaluate(lo).feasible(target_pe, loose):
        return lo
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if evaluate(mid).feasible(target_pe, loose):
            hi = mid
        else:
            lo = mid
    return hi

def sweep(config: pyura.SystemConfig,
          num_active: Sequence[int],
          ebn0_db: Optional[Sequence[float]] = None,
          trials: int = 200,
          master_seed: int = 0,
          threads: int = 1,
          power_ratio: Optional[float] = None,
          target_pe: Optional[float] = None,
          bounds: Tuple[float, float] = (-5.0, 10.0),
          resolution: float = 0.25,
          loose: bool = False,
          progress: bool = False) -> List[SweepResult]:
    """
        PUPE over a K_a x E_b/N0 grid, or, when target_pe is given, the
        smallest feasible E_b/N0 for every K_a (search mode, one row each).
        Every point reuses master_seed.
    """
    if (ebn0_db is None) == (target_pe is None):
        raise ValueError('give either an E_b/N0 grid or a target P_e')
    results = []
    for k_a in num_active:
        point_config = config.replace(num_active = k_a)
        if target_pe is None:
            for e in ebn0_db:
                start = time.time()
                estimate = estimate_pupe(with_ebn0(point_config, e, power_ratio), trials,
                                         master_seed, threads, progress)
                results.append(SweepResult(k_a, e, estimate, time.time() - start))
            continue
        start = time.time()
        cache = {}
        def evaluate(e):
            if e not in cache:
                cache[e] = estimate_pupe(with_ebn0(point_config, e, power_ratio), trials,
                                         master_seed, threads, progress)
            return cache[e]
        try:
            found = find_min_ebn0(point_config, target_pe, power_ratio, bounds, trials,
                                  master_seed, threads, resolution, loose, progress, evaluate)
            results.append(SweepResult(k_a, found, evaluate(found), time.time() - start))
        except EbN0NotFoundError:
            results.append(SweepResult(k_a, None, None, time.time() - start))
    return results

__all__ = ['set_print_timing', 'get_print_timing', 'EbN0NotFoundError', 'TrialOutcome',
           'PupeEstimate', 'SweepResult', 'with_ebn0', 'run_trial', 'summarize_outcomes',
           'run_trials', 'estimate_pupe', 'find_min_ebn0', 'sweep']
