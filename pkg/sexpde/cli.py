"""The ``sexpde`` command.

    sexpde converge-time --config time-phi2.cfg --seed 1 --out results/

Every command writes its CSV and an ``effective.cfg`` with the complete
configuration it ran with into the output directory.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass

from .config import COMMANDS, parse_config
from .exceptions import SexpdeError
from .experiments import (
    converge_space, converge_time, discretize, selftest, strong_study,
)
from .fem import functional_phi1, functional_phi2
from .integrator import simulate, snapshot_rows
from .model import check_lipschitz
from .noise import NoiseStream
from .reports import SelftestTable, SnapshotTable


__all__ = ('RunManifest', 'run', 'main')

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: str = None
    seed: int = None
    out: str = '.'
    threads: int = None
    preset: str = None
    realization: int = 0
    mesh_dump: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError('unknown command %r' % self.command)

    @property
    def thread_count(self):
        threads = self.threads
        if threads is None:
            threads = int(os.environ.get('SEXPDE_THREADS', 1))
        if threads < 1:
            raise ValueError('thread count must be >= 1, got %r' % threads)
        return threads


def load_config(manifest):
    text = ''
    if manifest.config:
        with open(manifest.config) as f:
            text = f.read()
    config = parse_config(text)
    if manifest.seed is not None:
        config.override('study', 'seed', manifest.seed)
    if manifest.preset is not None:
        config.override('problem', 'preset', manifest.preset)
    config.apply_scale(manifest.command)
    return config.validate(manifest.command)


def _write(path, text):
    with open(path, 'w') as f:
        f.write(text)
    log.info('wrote %s', path)


def _simulate(manifest, config, out):
    problem = config.problem()
    check_lipschitz(problem, (config['mesh']['L1'], config['mesh']['L2']),
                    seed=config.seed)
    mesh = config['mesh']
    disc = discretize(problem, mesh['nx'], config.noise_settings(),
                      ny=mesh['ny'], L1=mesh['L1'], L2=mesh['L2'],
                      lumped=mesh['lumped'])
    run_cfg = config.run_config()
    state, states = simulate(problem, disc.ops, disc.basis, disc.spectrum,
                             disc.E, NoiseStream(config.seed),
                             manifest.realization, run_cfg)
    log.info('t=%g: int X = %.10g, |X|^2 = %.10g', state.t,
             functional_phi1(disc.ops, state.x),
             functional_phi2(disc.ops, state.x))
    if states:
        table = SnapshotTable(list(snapshot_rows(states, disc.ops)))
        _write(os.path.join(out, 'snapshots.csv'),
               table.as_csv(comments=config.lines()))
    if manifest.mesh_dump:
        with open(os.path.join(out, 'mesh.txt'), 'w') as f:
            disc.mesh.dump(f)
    return 0


def _selftest(manifest, config, out):
    table = SelftestTable(selftest(config.seed))
    print(table.as_text())
    _write(os.path.join(out, 'selftest.csv'),
           table.as_csv(comments=config.lines()))
    return all(row['passed'] for row in table.data) and 0 or 1


def _study(manifest, config, out):
    cfg = config.study(manifest.thread_count)
    if manifest.command == 'converge-time':
        report = converge_time(cfg)
    elif manifest.command == 'converge-space':
        report = converge_space(cfg)
    else:
        report = strong_study(cfg, axis=config['study']['axis'])
    print(report)
    _write(os.path.join(out, '%s.csv' % report.study), report.as_csv())
    return 0


def run(manifest):
    """Run ``manifest`` and return the exit status.

    Errors propagate; ``main`` turns them into exit codes.
    """
    config = load_config(manifest)
    out = manifest.out
    os.makedirs(out, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError('output directory %s is not writable' % out)
    _write(os.path.join(out, 'effective.cfg'), config.render())
    log.info('%s with seed %d, %d thread(s)', manifest.command, config.seed,
             manifest.thread_count)
    if manifest.command == 'simulate':
        return _simulate(manifest, config, out)
    if manifest.command == 'selftest':
        return _selftest(manifest, config, out)
    return _study(manifest, config, out)


def build_parser():
    parser = argparse.ArgumentParser(
        prog='sexpde',
        description='Stochastic exponential Euler / finite element solver '
                    'and convergence studies.')
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--config', help='configuration file')
    parser.add_argument('--seed', type=int,
                        help='master seed, overrides study.seed')
    parser.add_argument('--out', default='.', help='output directory')
    parser.add_argument('--threads', type=int,
                        help='worker threads (default $SEXPDE_THREADS or 1)')
    parser.add_argument('--preset', choices=('linear2d', 'multiplicative-demo'),
                        help='overrides problem.preset')
    parser.add_argument('--realization', type=int, default=0,
                        help='realization index for simulate')
    parser.add_argument('--mesh-dump', action='store_true',
                        help='simulate: also write mesh.txt')
    parser.add_argument('-v', '--verbose', action='count', default=0)
    parser.add_argument('-q', '--quiet', action='count', default=0)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.INFO - 10 * args.verbose + 10 * args.quiet
    logging.basicConfig(level=max(level, logging.DEBUG),
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        manifest = RunManifest(
            args.command, config=args.config, seed=args.seed, out=args.out,
            threads=args.threads, preset=args.preset,
            realization=args.realization, mesh_dump=args.mesh_dump)
        return run(manifest)
    except SexpdeError as e:
        print('sexpde: %s' % e, file=sys.stderr)
        return 2
    except ValueError as e:
        print('sexpde: %s' % e, file=sys.stderr)
        return 2
    except OSError as e:
        print('sexpde: %s' % e, file=sys.stderr)
        return 3


if __name__ == '__main__':
    sys.exit(main())
