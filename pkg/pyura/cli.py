import argparse
import concurrent.futures
import csv
import io
import json
import os
import sys
import time
import numpy as np
import pyura
from tqdm import tqdm
from typing import List, Optional

class UsageError(Exception):
    pass

class ArgumentParser(argparse.ArgumentParser):
    """
        argparse with exit code 1 for usage errors.
    """
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)

class RunManifest:
    """
        Everything needed to reproduce a result file. Written in front of
        every output: as '# key: value' lines in CSV, as the 'manifest'
        object in JSON.

        Args
        ====
        command: str
        config: Optional[pyura.SystemConfig]
        seed: int
        timestamp: str
            ISO 8601 UTC time of the run
        outputs: List[str]
            output paths ('-' for stdout)
        parameters: dict
            command-specific settings (sweep ranges, trials, ...)
    """
    def __init__(self,
                 command: str,
                 config: Optional[pyura.SystemConfig],
                 seed: int,
                 timestamp: str,
                 outputs: List[str],
                 parameters: dict):
        self.command = command
        self.config = config
        self.seed = seed
        self.version = pyura.__version__
        self.timestamp = timestamp
        self.outputs = outputs
        self.parameters = parameters

    def to_dict(self):
        return {
            'command': self.command,
            'version': self.version,
            'seed': self.seed,
            'timestamp': self.timestamp,
            'outputs': self.outputs,
            'parameters': self.parameters,
            'config': self.config.state_dict() if self.config is not None else None
        }

    def header_lines(self):
        lines = []
        for key, value in self.to_dict().items():
            if isinstance(value, dict):
                for k, v in value.items():
                    lines.append('# {}.{}: {}'.format(key, k, json.dumps(v)))
            else:
                lines.append('# {}: {}'.format(key, json.dumps(value)))
        return lines

def run_timestamp(reproducible: bool):
    """
        Current UTC time, or SOURCE_DATE_EPOCH (default 0) for reproducible runs.
    """
    if reproducible:
        t = int(os.environ.get('SOURCE_DATE_EPOCH', '0'))
    else:
        t = int(time.time())
    return time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime(t))

def format_number(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)

def write_csv(manifest: RunManifest, columns: List[str], rows: List[list], out):
    for line in manifest.header_lines():
        out.write(line + '\n')
    writer = csv.writer(out, lineterminator = '\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_number(v) for v in row])

def write_json(manifest: RunManifest, columns: List[str], rows: List[list], out):
    document = {
        'manifest': manifest.to_dict(),
        'rows': [dict(zip(columns, row)) for row in rows]
    }
    json.dump(document, out, indent = 2, sort_keys = False)
    out.write('\n')

def write_result(manifest: RunManifest, columns: List[str], rows: List[list], path: str, fmt: str):
    writer = write_json if fmt == 'json' else write_csv
    if path == '-':
        writer(manifest, columns, rows, sys.stdout)
        return
    buffer = io.StringIO()
    writer(manifest, columns, rows, buffer)
    with open(path, 'w', newline = '') as f:
        f.write(buffer.getvalue())

def base_config(args):
    base = pyura.scenario(args.scenario) if args.scenario is not None else None
    return pyura.load_config(args.config, args.param, base)

def cmd_detector_curve(args):
    """
        Analytic and simulated detection probability over a P_p sweep.
    """
    config = base_config(args)
    M = args.antennas if args.antennas is not None else config.num_antennas
    pilot_bits = config.pilot_bits
    if args.pilot_length is not None:
        pilot_bits = pyura.apply_values(config, {'pilot_length': args.pilot_length}).pilot_bits
    gamma = args.gamma if args.gamma is not None else config.gamma
    if M < 1:
        raise pyura.ConfigError('antennas', 'must be >= 1, got {}'.format(M))
    if not (0.0 < gamma < 1.0):
        raise pyura.ConfigError('gamma', 'must be in (0, 1), got {}'.format(gamma))
    lo, hi = args.pilot_power_range
    if lo < 0 or hi < lo or args.points < 1:
        raise pyura.ConfigError('pilot_power_range', 'need 0 <= start <= stop and points >= 1')
    trials = args.trials if args.trials is not None else 10000
    if trials < 0:
        raise pyura.ConfigError('trials', 'must be >= 0, got {}'.format(trials))
    powers = np.linspace(lo, hi, args.points).tolist() if args.points > 1 else [lo]
    n_p = 1 << pilot_bits

    def point(k):
        p_p = powers[k]
        pd = pyura.analytic_pd(gamma, M, n_p, p_p)
        if trials == 0:
            return [p_p, pd, None, None, 0]
        rng = pyura.Rng(pyura.sub_seed(args.seed, 'detector', k))
        sim_pd, sim_pf = pyura.simulate_detector(M, pilot_bits, p_p, gamma, trials, rng)
        return [p_p, pd, sim_pd, sim_pf, trials]

    with concurrent.futures.ThreadPoolExecutor(max_workers = max(args.threads, 1)) as executor:
        rows = list(tqdm(executor.map(point, range(len(powers))), total = len(powers),
                         disable = not args.progress, file = sys.stderr))
    manifest = RunManifest('detector-curve', config, args.seed, run_timestamp(args.reproducible),
                           [args.out], {
                               'num_antennas': M,
                               'pilot_length': n_p,
                               'gamma': gamma,
                               'pilot_power_range': [lo, hi],
                               'points': args.points,
                               'trials': trials
                           })
    columns = ['P_p', 'analytic_pd', 'simulated_pd', 'simulated_pf', 'trials']
    write_result(manifest, columns, rows, args.out, args.format)
    return 0

def cmd_pupe(args):
    """
        PUPE over a K_a x E_b/N0 grid or the minimum E_b/N0 per K_a.
    """
    config = base_config(args)
    num_active = args.num_active if args.num_active is not None else [config.num_active]
    if any(k < 0 for k in num_active):
        raise pyura.ConfigError('num_active', 'must be >= 0')
    for k in num_active:
        config.replace(num_active = k)
    if (args.ebn0_db is None) == (args.target_pe is None):
        raise UsageError('pupe needs exactly one of --ebn0-db and --target-pe')
    if args.target_pe is not None and not (0.0 <= args.target_pe <= 1.0):
        raise pyura.ConfigError('target_pe', 'must be in [0, 1], got {}'.format(args.target_pe))
    trials = args.trials if args.trials is not None else 200
    if trials < 1:
        raise pyura.ConfigError('trials', 'must be >= 1, got {}'.format(trials))
    if args.power_ratio is not None and not args.power_ratio > 0:
        raise pyura.ConfigError('power_ratio', 'must be > 0, got {}'.format(args.power_ratio))
    if args.power_ratio is None and config.pilot_power <= 0:
        raise pyura.ConfigError('power_ratio', 'needed when pilot_power is 0')
    results = pyura.sweep(config, num_active,
                          ebn0_db = args.ebn0_db,
                          trials = trials,
                          master_seed = args.seed,
                          threads = args.threads,
                          power_ratio = args.power_ratio,
                          target_pe = args.target_pe,
                          bounds = tuple(args.ebn0_range),
                          loose = args.loose,
                          progress = args.progress)
    rows = []
    for r in results:
        seconds = 0.0 if args.reproducible else r.seconds
        if r.found:
            e = r.estimate
            rows.append([r.num_active, r.ebn0_db, e.pe, e.p_md, e.p_fa, e.half_width, e.trials, seconds])
        else:
            print('K_a={}: target P_e not reached within {} dB'.format(r.num_active, args.ebn0_range),
                  file = sys.stderr)
            rows.append([r.num_active, None, None, None, None, None, trials, seconds])
    manifest = RunManifest('pupe', config, args.seed, run_timestamp(args.reproducible),
                           [args.out], {
                               'num_active': num_active,
                               'ebn0_db': args.ebn0_db,
                               'target_pe': args.target_pe,
                               'ebn0_range': args.ebn0_range,
                               'power_ratio': args.power_ratio,
                               'loose': args.loose,
                               'trials': trials
                           })
    columns = ['K_a', 'ebn0_db', 'pe', 'p_md', 'p_fa', 'ci_half_width', 'trials', 'seconds']
    write_result(manifest, columns, rows, args.out, args.format)
    return 0

def cmd_selftest(args):
    """
        Run the self-check battery; exit code 3 when any check fails.
        The report goes to --out ('-' for stdout).
    """
    crc_polynomial = int(args.crc_polynomial, 0) if args.crc_polynomial is not None else None
    if args.out == '-':
        checks = pyura.run_selftest(args.seed, crc_polynomial, out = sys.stdout)
    else:
        with open(args.out, 'w') as f:
            checks = pyura.run_selftest(args.seed, crc_polynomial, out = f)
    failed = [c.name for c in checks if not c.passed]
    if len(failed) > 0:
        print('selftest failed: {}'.format(', '.join(failed)), file = sys.stderr)
        return 3
    print('selftest passed')
    return 0

def _add_common(parser):
    parser.add_argument('--config', help = 'flat key = value config file')
    parser.add_argument('--scenario', choices = sorted(pyura.SCENARIOS), help = 'preset configuration')
    parser.add_argument('--param', action = 'append', metavar = 'KEY=VALUE',
                        help = 'override one config entry, repeatable')
    parser.add_argument('--seed', type = int, default = 0, help = 'master seed')
    parser.add_argument('--trials', type = int, help = 'Monte-Carlo trials per point')
    parser.add_argument('--threads', type = int, default = 1, help = 'worker threads')
    parser.add_argument('--out', default = '-', help = 'output path, - for stdout')
    parser.add_argument('--format', choices = ['csv', 'json'], default = 'csv')
    parser.add_argument('--reproducible', action = 'store_true',
                        help = 'pin the timestamp to SOURCE_DATE_EPOCH and zero wall-clock columns')
    parser.add_argument('--no-progress', dest = 'progress', action = 'store_false',
                        help = 'hide progress bars')

def _float_list(text):
    try:
        return [float(x) for x in text.split(',') if len(x.strip()) > 0]
    except ValueError:
        raise argparse.ArgumentTypeError('expected comma separated numbers, got {!r}'.format(text))

def _int_list(text):
    try:
        return [int(x) for x in text.split(',') if len(x.strip()) > 0]
    except ValueError:
        raise argparse.ArgumentTypeError('expected comma separated integers, got {!r}'.format(text))

def build_parser():
    parser = ArgumentParser(prog = 'pyura',
                            description = 'Link-level simulator of multi-stage orthogonal-pilot unsourced random access')
    subparsers = parser.add_subparsers(dest = 'command')

    curve = subparsers.add_parser('detector-curve', help = 'pilot detector P_D versus P_p')
    _add_common(curve)
    curve.add_argument('--antennas', type = int, help = 'M (defaults to the config)')
    curve.add_argument('--pilot-length', type = int, help = 'n_p (defaults to the config)')
    curve.add_argument('--gamma', type = float, help = 'false-alarm level per row')
    curve.add_argument('--pilot-power-range', type = float, nargs = 2, metavar = ('START', 'STOP'),
                       default = [0.0, 0.02])
    curve.add_argument('--points', type = int, default = 8)
    curve.set_defaults(func = cmd_detector_curve)

    pupe = subparsers.add_parser('pupe', help = 'per-user probability of error')
    _add_common(pupe)
    pupe.add_argument('--num-active', type = _int_list, help = 'K_a values, comma separated')
    pupe.add_argument('--ebn0-db', type = _float_list, help = 'E_b/N0 grid in dB, comma separated')
    pupe.add_argument('--target-pe', type = float, help = 'search mode: smallest E_b/N0 with P_e <= target')
    pupe.add_argument('--ebn0-range', type = float, nargs = 2, metavar = ('LO', 'HI'), default = [-5.0, 10.0])
    pupe.add_argument('--power-ratio', type = float, help = 'P_c / P_p (defaults to the config)')
    pupe.add_argument('--loose', action = 'store_true', help = 'search on the point estimate')
    pupe.set_defaults(func = cmd_pupe)

    selftest = subparsers.add_parser('selftest', help = 'run the self-check battery')
    selftest.add_argument('--seed', type = int, default = 0)
    selftest.add_argument('--crc-polynomial', help = 'decoder-side CRC polynomial (negative control)')
    selftest.add_argument('--out', default = '-', help = "report path ('-' for stdout)")
    selftest.set_defaults(func = cmd_selftest)
    return parser

def main(argv: Optional[List[str]] = None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError('a command is required')
        return args.func(args)
    except UsageError as e:
        print('pyura: error: {}'.format(e), file = sys.stderr)
        return 1
    except pyura.ConfigError as e:
        print('pyura: invalid configuration: {}'.format(e), file = sys.stderr)
        return 2

__all__ = []
