import pyura
import torch

# Estimate the per-user probability of error (PUPE) of a whole frame and
# search for the smallest Eb/N0 that reaches a target.

pyura.set_use_gpu(torch.cuda.is_available())
# Print the wall time of every Monte-Carlo point.
pyura.set_print_timing(True)

# A frame has num_slots slots; every active user picks one uniformly.
# PUPE counts messages that were sent but not decoded (missed detections)
# and decoded messages that were never sent (false alarms).
config = pyura.scenario('short-320').replace(num_active = 50)

# One point: trial t uses the seed sub_seed(master_seed, t), so results do
# not depend on the number of threads.
estimate = pyura.estimate_pupe(pyura.with_ebn0(config, 1.0), trials = 50,
                               master_seed = 3, threads = 4, progress = True)
print(estimate)
print('95%% interval: [%.4f, %.4f]' % (estimate.lower, estimate.upper))

# The search bisects Eb/N0 down to resolution dB. By default a point
# counts as feasible when the upper end of its confidence interval meets
# the target; loose = True uses the point estimate instead, which needs
# far fewer trials for a rough answer.
try:
    ebn0_db = pyura.find_min_ebn0(config, target_pe = 0.05, bounds = (-2.0, 6.0),
                                  trials = 50, master_seed = 3, threads = 4,
                                  loose = True, progress = True)
    print('minimum Eb/N0: %.2f dB' % ebn0_db)
except pyura.EbN0NotFoundError as e:
    print(e)

# sweep() does the same over several K_a at once and returns one SweepResult per row.
for r in pyura.sweep(config, [25, 50], ebn0_db = [0.0, 2.0], trials = 20, master_seed = 3, threads = 4):
    print(r.num_active, r.ebn0_db, r.estimate)
