# The Python interface of the simulator is defined in the pyura package
import pyura
import torch
import numpy as np
import os
import csv

# Compare the pilot detector of the receiver with its analytic performance.
# We sweep the pilot power P_p, simulate the detector at every point and
# write analytic and simulated detection probabilities to a CSV file.

# All tensors of the simulator live on pyura.get_device().
# Double precision complex numbers are cheap enough on the CPU,
# so we only switch to the GPU when it is available.
pyura.set_use_gpu(torch.cuda.is_available())

# The detector sees M antennas and a pilot block of n_p = 2^pilot_bits
# symbols. gamma is the false-alarm probability per codebook row;
# the threshold of the energy detector is set so that an idle row
# crosses it with probability gamma.
num_antennas = 100
pilot_bits = 5
gamma = 1e-3
threshold = pyura.np_threshold(gamma, num_antennas)
print('threshold:', threshold)

# DetectorAnalytics bundles the closed-form quantities of the detector
# for one pilot power: threshold, false-alarm and detection probability,
# and the log likelihood ratio of the row statistic.
analytics = pyura.DetectorAnalytics(gamma, num_antennas, 1 << pilot_bits, 0.02)
print('P_F:', analytics.false_alarm())
print('P_D with one user:', analytics.detection(1))
print('P_D with two colliding users:', analytics.detection(2))

# Every point of the sweep gets its own random stream derived from a master
# seed, so the curve does not depend on the order we evaluate the points in.
master_seed = 1
trials = 2000
rows = []
for k, pilot_power in enumerate(np.linspace(0.0, 0.03, 7)):
    pilot_power = float(pilot_power)
    rng = pyura.Rng(pyura.sub_seed(master_seed, 'detector', k))
    # simulate_detector draws a Rayleigh channel and noise, sends one random
    # pilot row and runs the same detect() the receiver uses.
    # It returns the detection rate of the active row and the false-alarm
    # rate over the idle rows.
    pd, pf = pyura.simulate_detector(num_antennas, pilot_bits, pilot_power, gamma, trials, rng)
    analytic = pyura.analytic_pd(gamma, num_antennas, 1 << pilot_bits, pilot_power)
    print('P_p: %.4f, analytic P_D: %.4f, simulated P_D: %.4f, P_F: %.2e' % \
        (pilot_power, analytic, pd, pf))
    rows.append([pilot_power, analytic, pd, pf])

# Save the curve.
os.makedirs('results/detector_curve', exist_ok = True)
with open('results/detector_curve/curve.csv', 'w', newline = '') as f:
    writer = csv.writer(f)
    writer.writerow(['P_p', 'analytic_pd', 'simulated_pd', 'simulated_pf'])
    writer.writerows(rows)
