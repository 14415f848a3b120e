import math
import pyura
from typing import Dict, List, Optional

_int_fields = ['message_bits', 'pilot_bits', 'num_stages', 'coded_symbols', 'num_slots',
               'num_antennas', 'num_active', 'crc_bits', 'crc_polynomial', 'list_size',
               'max_iterations']
_float_fields = ['pilot_power', 'coded_power', 'gamma', 'noise_variance', 'design_erasure']
# Keys that are not SystemConfig fields but set one or two of them
_alias_fields = ['pilot_length', 'power_ratio', 'ebn0_db']

def _scenario(pilot_length, coded_symbols, num_antennas, power_ratio, num_slots):
    values = {
        'num_stages': 2,
        'pilot_length': pilot_length,
        'coded_symbols': coded_symbols,
        'num_antennas': num_antennas,
        'num_slots': num_slots,
        'num_active': 100,
        'message_bits': 100,
        'crc_bits': 11,
        'gamma': 1e-3,
        'list_size': 64,
        'power_ratio': power_ratio,
        'ebn0_db': 0.0
    }
    return apply_values(pyura.SystemConfig(), values)

def parse_value(key: str, text: str):
    """
        Convert the text of one config entry to the type of its field.
    """
    text = text.strip()
    try:
        if key in _int_fields or key == 'pilot_length':
            return int(text, 0)
        if key in _float_fields or key in _alias_fields:
            return float(text)
    except ValueError:
        raise pyura.ConfigError(key, 'cannot parse {!r}'.format(text))
    raise pyura.ConfigError(key, 'unknown configuration key')

def parse_config_text(text: str) -> Dict[str, object]:
    """
        Parse flat 'key = value' lines. '#' starts a comment, blank lines are
        ignored and a later key overrides an earlier one.
    """
    values = {}
    for number, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if len(line) == 0:
            continue
        if '=' not in line:
            raise pyura.ConfigError('line {}'.format(number), 'expected key = value, got {!r}'.format(line))
        key, value = line.split('=', 1)
        key = key.strip()
        values[key] = parse_value(key, value)
    return values

def parse_overrides(overrides: Optional[List[str]]) -> Dict[str, object]:
    """
        Parse command-line 'key=value' overrides.
    """
    values = {}
    for item in overrides or []:
        if '=' not in item:
            raise pyura.ConfigError(item, 'override must look like key=value')
        key, value = item.split('=', 1)
        key = key.strip()
        values[key] = parse_value(key, value)
    return values

def apply_values(base: pyura.SystemConfig, values: Dict[str, object]):
    """
        A new SystemConfig: base updated with plain fields first, then the
        aliases. pilot_length sets pilot_bits (it must be a power of two),
        power_ratio sets coded_power = power_ratio * pilot_power and ebn0_db
        sets both powers for the (possibly just updated) ratio.
    """
    fields = {k: v for k, v in values.items() if k not in _alias_fields}
    if 'pilot_length' in values:
        n_p = int(values['pilot_length'])
        if n_p < 2 or (n_p & (n_p - 1)) != 0:
            raise pyura.ConfigError('pilot_length', 'must be a power of two >= 2, got {}'.format(n_p))
        if 'pilot_bits' in fields and (1 << fields['pilot_bits']) != n_p:
            raise pyura.ConfigError('pilot_length', 'disagrees with pilot_bits = {}'.format(fields['pilot_bits']))
        fields['pilot_bits'] = int(round(math.log2(n_p)))
    config = base.replace(**fields)
    if 'power_ratio' in values:
        ratio = values['power_ratio']
        if not ratio > 0:
            raise pyura.ConfigError('power_ratio', 'must be > 0, got {}'.format(ratio))
        config = config.replace(coded_power = ratio * config.pilot_power)
    if 'ebn0_db' in values:
        ratio = values.get('power_ratio', None)
        if ratio is None:
            if config.pilot_power <= 0:
                raise pyura.ConfigError('ebn0_db', 'needs power_ratio when pilot_power is 0')
            ratio = config.coded_power / config.pilot_power
        if not ratio > 0:
            raise pyura.ConfigError('ebn0_db', 'needs a positive power ratio')
        pilot_power, coded_power = pyura.powers_from_ebn0(pyura.db_to_linear(values['ebn0_db']), ratio, config)
        config = config.replace(pilot_power = pilot_power, coded_power = coded_power)
    return config

def load_config(path: Optional[str] = None,
                overrides: Optional[List[str]] = None,
                base: Optional[pyura.SystemConfig] = None):
    """
        Build a SystemConfig from a config file and command-line overrides.

        Args
        ====
        path: Optional[str]
            flat key = value file
        overrides: Optional[List[str]]
            'key=value' strings applied after the file
        base: Optional[pyura.SystemConfig]
            starting point, e.g. a scenario; defaults to SystemConfig()

        Returns
        =======
        pyura.SystemConfig

        Raises
        ======
        pyura.ConfigError
            naming the offending field
    """
    values = {}
    if path is not None:
        try:
            with open(path, 'r') as f:
                values.update(parse_config_text(f.read()))
        except OSError as e:
            raise pyura.ConfigError('config', 'cannot read {}: {}'.format(path, e.strerror))
    values.update(parse_overrides(overrides))
    if base is None:
        base = pyura.SystemConfig()
    return apply_values(base, values)

def format_config(config: pyura.SystemConfig):
    """
        Config file text that load_config reads back to config.
    """
    lines = []
    for key, value in config.state_dict().items():
        if key == 'crc_polynomial':
            value = hex(value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append('{} = {}'.format(key, value))
    return '\n'.join(lines) + '\n'

SCENARIOS = {
    'short-320': _scenario(32, 256, 100, 0.5, 10),
    'short-192': _scenario(32, 128, 100, 1.0, 16),
    'long-1024': _scenario(256, 512, 50, 1.5, 3)
}

def scenario(name: str):
    """
        One of the preset configurations in SCENARIOS.
    """
    if name not in SCENARIOS:
        raise pyura.ConfigError('scenario', 'unknown scenario {!r}, choose from {}'.format(\
            name, ', '.join(sorted(SCENARIOS))))
    return SCENARIOS[name]

__all__ = ['SCENARIOS', 'scenario', 'load_config', 'parse_config_text', 'parse_overrides',
           'apply_values', 'format_config']
