import pyura
import torch
import numpy as np

# Walk through one slot of the link: build messages, transmit them over a
# many-antenna channel and run the iterative receiver.

pyura.set_use_gpu(torch.cuda.is_available())

# First, the system configuration. SystemConfig checks every field and
# raises pyura.ConfigError naming the offending one.
# We take one of the preset scenarios: 100-bit messages, two pilot stages
# of 32 symbols and 256 coded QPSK symbols, i.e. slots of 320 symbols.
config = pyura.scenario('short-320').replace(num_slots = 1, num_antennas = 50)
# Powers are usually set through Eb/N0 and the ratio P_c / P_p.
config = pyura.with_ebn0(config, 6.0, power_ratio = 0.5)
print(config)

# Messages are raw bit arrays. The first pilot_bits select the stage-1 pilot
# row, the next pilot_bits the stage-2 row, and everything (pilot bits
# included) is protected by the CRC and the polar code.
rng = pyura.Rng(7)
num_users = 6
bits = pyura.draw_messages(num_users, config.message_bits, rng)
messages = [pyura.split_message(b, config) for b in bits]

# assemble_signal builds the transmitted sequence of one user.
# The codebook and the polar code construction are cached per config.
codebook = pyura.codebook_for(config)
polar_spec = pyura.polar_spec_for(config)
for m in messages:
    signal = pyura.assemble_signal(m, config, codebook, polar_spec)
    print('pilot rows:', signal.pilot_rows, 'samples:', tuple(signal.samples.shape))

# simulate_slot draws the Rayleigh channel and the noise and returns the
# received M x L matrix together with the ground truth.
Y, truth = pyura.simulate_slot(messages, config, rng, codebook, polar_spec)
print('received:', tuple(Y.shape))
print('users per stage-1 row:', np.nonzero(truth.collision_counts[:, 0])[0])

# We can look at the detector directly on the first pilot block.
threshold = pyura.np_threshold(config.gamma, config.num_antennas)
detection = pyura.detect(Y[:, :config.pilot_length], codebook, threshold)
print('detected stage-1 rows:', detection.ordered_rows())

# decode_slot runs the whole receiver: detection, channel estimation,
# maximum-ratio combining, list decoding and interference cancellation,
# until a sweep over the stages finds nothing new.
decoded = pyura.decode_slot(Y, config, codebook, polar_spec)
print('decoded %d of %d messages in %d iterations' % (len(decoded), num_users, decoded.iterations))
print('SIC updates:', decoded.sic_updates, 'decoder calls:', decoded.decode_attempts)
for m in messages:
    print('found' if m.bits in decoded else 'missed', m.bits[:10])
