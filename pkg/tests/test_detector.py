import math
import numpy as np
import pytest
import scipy.stats
import torch
import pyura

def test_np_threshold():
    assert pyura.np_threshold(0.5, 1) == pytest.approx(math.log(2.0), abs = 1e-12)
    assert pyura.np_threshold(0.001, 50) == pytest.approx(0.5 * pyura.chi2_inv_cdf(0.999, 100))
    thresholds = [pyura.np_threshold(g, 8) for g in [1e-4, 1e-3, 1e-2, 0.1, 0.5]]
    assert all(a > b for a, b in zip(thresholds, thresholds[1:]))
    with pytest.raises(pyura.DomainError):
        pyura.np_threshold(0.0, 4)
    with pytest.raises(pyura.DomainError):
        pyura.np_threshold(0.1, 0)

def test_detect_on_silence():
    codebook = pyura.build_codebook(5)
    result = pyura.detect(torch.zeros(4, 32, dtype = torch.complex128), codebook, pyura.np_threshold(1e-3, 4))
    assert len(result) == 0
    assert np.all(result.statistics == 0)

def test_detect_noiseless_single_user():
    codebook = pyura.build_codebook(5)
    h = pyura.sample_complex_gaussian(6, 1, 1.0, pyura.Rng(0))
    p_p = 0.3
    Y_p = math.sqrt(p_p) * h @ codebook.row(13)[None, :].to(torch.complex128)
    result = pyura.detect(Y_p, codebook, 1e-6)
    norm_sq = float(torch.sum(torch.abs(h) ** 2))
    assert result.statistics[13] == pytest.approx(32 * p_p * norm_sq, rel = 1e-12)
    others = np.delete(result.statistics, 13)
    assert np.max(others) <= 1e-20
    assert result.detected_rows.tolist() == [13]

def test_detect_dimension_mismatch():
    with pytest.raises(ValueError):
        pyura.detect(torch.zeros(4, 16, dtype = torch.complex128), pyura.build_codebook(5), 1.0)

def test_detect_ignores_antenna_order():
    codebook = pyura.build_codebook(6)
    Y_p = pyura.sample_complex_gaussian(9, 64, 1.0, pyura.Rng(1))
    permutation = torch.tensor([4, 0, 8, 2, 7, 1, 3, 6, 5])
    a = pyura.detect(Y_p, codebook, 5.0)
    b = pyura.detect(Y_p[permutation], codebook, 5.0)
    np.testing.assert_array_equal(a.statistics, b.statistics)
    np.testing.assert_array_equal(a.detected_rows, b.detected_rows)

def test_ordered_rows():
    result = pyura.DetectionResult(np.array([1, 2, 5]), np.array([0.0, 3.0, 9.0, 0.0, 0.0, 4.0]), 2.0)
    assert result.ordered_rows().tolist() == [2, 5, 1]

@pytest.mark.parametrize('num_antennas', [4, 50])
def test_null_statistic_distribution(num_antennas):
    codebook = pyura.build_codebook(5)
    rng = pyura.Rng(num_antennas)
    samples = []
    for _ in range(300):
        Y_p = pyura.sample_complex_gaussian(num_antennas, 32, 1.0, rng)
        samples.append(pyura.detect(Y_p, codebook, 0.0).statistics)
    samples = 2.0 * np.concatenate(samples)
    assert scipy.stats.kstest(samples, 'chi2', args = (2 * num_antennas,)).pvalue > 1e-3

def test_analytic_pf():
    assert pyura.analytic_pf(4, 0.0) == 1.0
    for gamma in [1e-3, 1e-2]:
        for M in [4, 50, 100]:
            assert pyura.analytic_pf(M, pyura.np_threshold(gamma, M)) == pytest.approx(gamma, abs = 1e-9)
    values = [pyura.analytic_pf(10, t) for t in [1.0, 5.0, 10.0, 20.0, 40.0]]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-6

def test_analytic_pd_without_pilot_power():
    for M in [1, 10, 100]:
        assert pyura.analytic_pd(1e-3, M, 32, 0.0) == pytest.approx(1e-3, abs = 1e-9)

def test_analytic_pd_knees():
    assert pyura.analytic_pd(1e-3, 50, 256, 0.005) >= 0.99
    assert pyura.analytic_pd(1e-3, 100, 32, 0.02) >= 0.95
    assert pyura.analytic_pd(1e-3, 100, 32, 0.03) >= 0.99

def test_analytic_pd_monotone():
    base = dict(gamma = 1e-3, num_antennas = 8, pilot_length = 32, pilot_power = 0.01, collisions = 1)
    reference = pyura.analytic_pd(**base)
    for key, value in [('num_antennas', 16), ('pilot_length', 64), ('pilot_power', 0.02), ('collisions', 2)]:
        changed = dict(base)
        changed[key] = value
        assert pyura.analytic_pd(**changed) > reference
    with pytest.raises(pyura.DomainError):
        pyura.analytic_pd(1e-3, 8, 32, 0.01, 0)

def test_detector_analytics():
    analytics = pyura.DetectorAnalytics(1e-3, 10, 32, 0.05)
    assert analytics.threshold == pytest.approx(pyura.np_threshold(1e-3, 10))
    assert analytics.false_alarm() <= 1e-3 + 1e-12
    assert analytics.sigma_1(2) == pytest.approx(math.sqrt(1 + 2 * 32 * 0.05))
    assert analytics.sigma_0_sq(1) == pytest.approx(2 * (1 + 1.6) / 1.6)
    assert analytics.detection(2) > analytics.detection(1)
    s = np.array([1.0, 10.0, 30.0])
    expected = scipy.stats.gamma.logpdf(s, 10, scale = 1 + 32 * 0.05) - scipy.stats.gamma.logpdf(s, 10)
    np.testing.assert_allclose(analytics.log_likelihood_ratio(s), expected, rtol = 1e-10)

def test_simulated_false_alarm_rate():
    for gamma, M in [(1e-2, 4), (1e-2, 50)]:
        _, pf = pyura.simulate_detector(M, 5, 0.0, gamma, 2000, pyura.Rng(M))
        trials = 2000 * 31
        assert pf <= gamma + 3 * math.sqrt(gamma * (1 - gamma) / trials)

@pytest.mark.parametrize('num_antennas, pilot_bits, pilot_power', [
    (50, 8, 0.002), (50, 8, 0.004), (100, 5, 0.01), (100, 5, 0.02)])
def test_simulated_detection_matches_analytics(num_antennas, pilot_bits, pilot_power):
    pd, _ = pyura.simulate_detector(num_antennas, pilot_bits, pilot_power, 1e-3, 2000,
                                    pyura.Rng(pyura.sub_seed(1, num_antennas, pilot_power)))
    expected = pyura.analytic_pd(1e-3, num_antennas, 1 << pilot_bits, pilot_power)
    assert abs(pd - expected) <= 0.05

@pytest.mark.slow
@pytest.mark.parametrize('num_antennas, pilot_bits, high', [(50, 8, 0.006), (100, 5, 0.03)])
def test_detection_curve(num_antennas, pilot_bits, high):
    for k, pilot_power in enumerate(np.linspace(high / 8, high, 8)):
        pd, _ = pyura.simulate_detector(num_antennas, pilot_bits, float(pilot_power), 1e-3, 10000,
                                        pyura.Rng(pyura.sub_seed(2, num_antennas, k)))
        expected = pyura.analytic_pd(1e-3, num_antennas, 1 << pilot_bits, float(pilot_power))
        assert abs(pd - expected) <= 0.02

@pytest.mark.slow
@pytest.mark.parametrize('gamma, num_antennas', [(1e-3, 4), (1e-3, 50), (1e-2, 4), (1e-2, 50)])
def test_false_alarm_calibration(gamma, num_antennas):
    _, pf = pyura.simulate_detector(num_antennas, 5, 0.0, gamma, 100000, pyura.Rng(3))
    trials = 100000 * 31
    assert pf <= gamma + 3 * math.sqrt(gamma * (1 - gamma) / trials)
