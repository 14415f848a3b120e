import math
import numpy as np
import pytest
import torch
import pyura

def test_derived_sizes():
    config = pyura.scenario('short-320')
    assert config.pilot_length == 32
    assert config.data_bits == 90
    assert config.slot_length == 320
    assert config.frame_length == 3200
    assert config.polar_block_length == 512
    assert config.polar_info_length == 111
    assert pyura.scenario('long-1024').slot_length == 1024
    assert pyura.scenario('short-192').frame_length == 3072

@pytest.mark.parametrize('changes, field', [
    ({'message_bits': 10, 'pilot_bits': 6}, 'pilot_bits'),
    ({'coded_symbols': 100}, 'coded_symbols'),
    ({'coded_symbols': 32}, 'coded_symbols'),
    ({'gamma': 1.0}, 'gamma'),
    ({'pilot_power': -1.0}, 'pilot_power'),
    ({'list_size': 0}, 'list_size'),
    ({'num_antennas': 0}, 'num_antennas'),
    ({'crc_polynomial': 0x1234}, 'crc_polynomial'),
    ({'unknown': 1}, 'unknown'),
])
def test_config_validation(changes, field):
    with pytest.raises(pyura.ConfigError) as e:
        pyura.SystemConfig().replace(**changes)
    assert e.value.field == field

def test_config_state_dict():
    config = pyura.SystemConfig(num_antennas = 7, gamma = 0.01)
    assert pyura.SystemConfig.load_state_dict(config.state_dict()) == config
    assert config.replace(num_active = 3).num_active == 3
    assert config.num_active == 100

def test_split_message():
    config = pyura.SystemConfig()
    bits = pyura.Rng(0).bits(100)
    msg = pyura.split_message(bits, config)
    np.testing.assert_array_equal(msg.pilot_segments[0], bits[0:5])
    np.testing.assert_array_equal(msg.pilot_segments[1], bits[5:10])
    np.testing.assert_array_equal(msg.data_segment, bits[10:])
    np.testing.assert_array_equal(np.concatenate(msg.pilot_segments + [msg.data_segment]), bits)
    with pytest.raises(ValueError):
        pyura.split_message(bits[:99], config)

def test_split_message_without_pilots():
    config = pyura.SystemConfig(num_stages = 0)
    bits = pyura.Rng(1).bits(100)
    msg = pyura.split_message(bits, config)
    assert msg.pilot_segments == []
    np.testing.assert_array_equal(msg.data_segment, bits)

def test_qpsk_mapping():
    a = math.sqrt(2.0 / 2.0)
    symbols = pyura.qpsk_modulate(np.array([0, 0, 1, 0, 0, 1, 1, 1], dtype = np.uint8), 2.0)
    expected = torch.tensor([a + 1j * a, -a + 1j * a, a - 1j * a, -a - 1j * a], dtype = torch.complex128)
    torch.testing.assert_close(symbols, expected)
    random = pyura.qpsk_modulate(pyura.Rng(2).bits(1000), 3.0)
    torch.testing.assert_close(torch.abs(random) ** 2, torch.full((500,), 3.0, dtype = torch.float64))
    with pytest.raises(ValueError):
        pyura.qpsk_modulate(np.zeros(3, dtype = np.uint8), 1.0)

def test_assemble_signal():
    config = pyura.SystemConfig(pilot_power = 0.3, coded_power = 0.7)
    rng = pyura.Rng(3)
    a = rng.bits(100)
    b = rng.bits(100)
    b[:5] = a[:5]
    b[5:10] = 1 - a[5:10]
    x_a = pyura.assemble_signal(pyura.split_message(a, config), config)
    x_b = pyura.assemble_signal(pyura.split_message(b, config), config)
    assert x_a.samples.shape == (config.slot_length,)
    assert torch.equal(x_a.samples[:32], x_b.samples[:32])
    assert not torch.equal(x_a.samples[32:64], x_b.samples[32:64])
    assert x_a.pilot_rows[0] == x_b.pilot_rows[0]
    energy = float(torch.sum(torch.abs(x_a.samples) ** 2))
    assert energy == pytest.approx(2 * 32 * 0.3 + 256 * 0.7, rel = 1e-12)
    codebook = pyura.codebook_for(config)
    torch.testing.assert_close(x_a.samples[:32].real, math.sqrt(0.3) * codebook.row(x_a.pilot_rows[0]))
    spec = pyura.polar_spec_for(config)
    np.testing.assert_array_equal(x_a.codeword, pyura.encode(pyura.crc_append(a), spec))

def test_simulate_slot_noiseless():
    config = pyura.SystemConfig(num_antennas = 1, noise_variance = 0.0)
    Y, truth = pyura.simulate_slot([], config, pyura.Rng(0))
    assert Y.shape == (1, config.slot_length)
    assert torch.count_nonzero(Y) == 0
    assert truth.collision_counts.sum() == 0
    rng = pyura.Rng(4)
    messages = [pyura.split_message(rng.bits(100), config) for _ in range(2)]
    H = torch.tensor([[0.5 - 1.0j, 2.0 + 0.25j]], dtype = torch.complex128)
    Y, truth = pyura.simulate_slot(messages, config, rng, channel = H)
    x = [pyura.assemble_signal(m, config).samples for m in messages]
    torch.testing.assert_close(Y[0], H[0, 0] * x[0] + H[0, 1] * x[1], rtol = 0, atol = 1e-12)

def test_simulate_slot_ground_truth():
    config = pyura.SystemConfig(pilot_bits = 2, num_antennas = 4)
    rng = pyura.Rng(5)
    messages = [pyura.split_message(rng.bits(100), config) for _ in range(9)]
    Y, truth = pyura.simulate_slot(messages, config, rng)
    assert truth.channel.shape == (4, 9)
    assert truth.pilot_rows.shape == (9, 2)
    assert truth.collision_counts.shape == (4, 2)
    np.testing.assert_array_equal(truth.collision_counts.sum(axis = 0), [9, 9])
    codebook = pyura.codebook_for(config)
    for k, m in enumerate(messages):
        for j in range(2):
            assert truth.pilot_rows[k, j] == codebook.row_index(m.pilot_segments[j])

def test_simulate_slot_is_deterministic():
    config = pyura.SystemConfig(num_antennas = 3)
    messages = [pyura.split_message(pyura.Rng(6).bits(100), config)]
    Y1, _ = pyura.simulate_slot(messages, config, pyura.Rng(7))
    Y2, _ = pyura.simulate_slot(messages, config, pyura.Rng(7))
    assert torch.equal(Y1, Y2)

def test_powers_from_ebn0():
    config = pyura.SystemConfig(pilot_bits = 7, num_stages = 2, coded_symbols = 256)
    p_p, p_c = pyura.powers_from_ebn0(2.0, 1.0, config)
    assert p_p == pytest.approx(100 * 2.0 / 512)
    assert p_c == pytest.approx(p_p)
    short = pyura.scenario('short-320')
    p_p, p_c = pyura.powers_from_ebn0(1.5, 0.5, short)
    assert p_p == pytest.approx(100 * 1.5 / (64 + 128))
    assert p_c == pytest.approx(0.5 * p_p)
    assert pyura.ebn0_from_powers(p_p, p_c, short) == pytest.approx(1.5, abs = 1e-12)
    with pytest.raises(ValueError):
        pyura.powers_from_ebn0(0.0, 1.0, short)

def test_energy_per_bit_definition():
    config = pyura.SystemConfig(pilot_power = 0.2, coded_power = 0.4)
    total_power = (2 * 32 * 0.2 + 256 * 0.4) / config.slot_length
    assert pyura.ebn0_from_powers(0.2, 0.4, config) == pytest.approx(config.slot_length * total_power / 100)

def test_db_conversions():
    assert pyura.db_to_linear(10.0) == pytest.approx(10.0)
    assert pyura.linear_to_db(100.0) == pytest.approx(20.0)

def test_draw_messages_distinct():
    messages = pyura.draw_messages(8, 3, pyura.Rng(8))
    assert len(set(m.tobytes() for m in messages)) == 8
    with pytest.raises(ValueError):
        pyura.draw_messages(9, 3, pyura.Rng(8))

def test_assign_slots():
    slots = pyura.assign_slots(1000, 10, pyura.Rng(9))
    assert slots.min() >= 0 and slots.max() <= 9
    assert np.all(np.bincount(slots, minlength = 10) > 50)
    assert len(pyura.assign_slots(0, 10, pyura.Rng(9))) == 0

def test_channel_statistics():
    config = pyura.SystemConfig(num_antennas = 1000, pilot_bits = 1, coded_symbols = 64,
                                message_bits = 40, num_active = 1000)
    rng = pyura.Rng(10)
    messages = [pyura.split_message(b, config) for b in pyura.draw_messages(1000, 40, rng)]
    _, truth = pyura.simulate_slot(messages, config, rng)
    h = truth.channel
    assert abs(float(torch.mean(torch.abs(h) ** 2)) - 1.0) <= 0.01
    assert abs(np.corrcoef(h.real.flatten().numpy(), h.imag.flatten().numpy())[0, 1]) <= 0.01
