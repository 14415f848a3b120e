import pytest
import pyura

def pytest_addoption(parser):
    parser.addoption('--runslow', action = 'store_true', default = False,
                     help = 'run the long Monte-Carlo checks')

def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long-running Monte-Carlo check')

def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason = 'needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)

@pytest.fixture(autouse = True)
def cpu_without_timing():
    # Keep every test on the CPU and quiet
    pyura.set_use_gpu(False)
    pyura.set_print_timing(False)
    yield

@pytest.fixture
def small_config():
    # N = 64, K = 41: fast enough for whole-pipeline tests
    return pyura.SystemConfig(message_bits = 30,
                              pilot_bits = 3,
                              num_stages = 2,
                              coded_symbols = 32,
                              num_slots = 2,
                              num_antennas = 16,
                              num_active = 3,
                              pilot_power = 4.0,
                              coded_power = 4.0,
                              list_size = 8)
