"""
Command line entry point: ``coopdstc {ber,converge,bounds,fdarmo}``.
"""
import argparse as _argparse
import logging as _logging
import sys as _sys
import typing as _t

import coopdstc.config as _config
import coopdstc.exceptions as _ex
import coopdstc.harness as _harness
import coopdstc.records as _records
import coopdstc.results as _results


_logger = _logging.getLogger(__name__)

COMMANDS = {
    'ber': (_harness.run_ber, _records.BERRecord, 'bit error rate per SNR point'),
    'converge': (_harness.run_convergence, _records.ConvergenceRecord, 'windowed BER/MSE per symbol index'),
    'bounds': (_harness.run_bound_comparison, _records.BoundRecord, 'Monte Carlo PEP against upper bounds'),
    'fdarmo': (_harness.run_fd_armo, _records.FDARMORecord, 'feedback-free code selection report'),
}


def build_parser() -> _argparse.ArgumentParser:
    parser = _argparse.ArgumentParser(
        prog='coopdstc',
        description='Adaptive distributed space-time coding for cooperative MIMO relaying.')
    subparsers = parser.add_subparsers(dest='command', required=True)
    for name, (_, _, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument('--config', required=True, help='key = value experiment file')
        sub.add_argument('--seed', type=int, default=None, help='override master_seed')
        sub.add_argument('--out', required=True, help='CSV output path')
        sub.add_argument('--db', default=None, help='SQLAlchemy url, records are appended to <command>_results')
        sub.add_argument('--workers', type=int, default=None, help='override workers')
        sub.add_argument('--timing', action='store_true', help='include wall-clock columns in the CSV')
        sub.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    return parser


def run(args: _argparse.Namespace) -> int:
    run_experiment, record_type, _ = COMMANDS[args.command]
    overrides = {'master_seed': args.seed, 'workers': args.workers}
    cfg = _config.build_experiment_config(_config.load_config(args.config), overrides)
    records = run_experiment(cfg)
    _records.emit_csv(records, args.out, record_type, include_volatile=args.timing)
    if args.db:
        engine = _results.create_engine(args.db)
        _results.store_records(records, f'{args.command}_results', engine)
    _logger.info('wrote %d records to %s', len(records), args.out)
    return 0


def main(argv: _t.Optional[_t.Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = _logging.DEBUG if args.verbose else _logging.INFO
    _logging.basicConfig(level=level, format='%(asctime)s %(name)s %(levelname)s: %(message)s')
    try:
        return run(args)
    except _ex.ConfigError as e:
        print(f'coopdstc: error: {e}', file=_sys.stderr)
        return 2
    except (_ex.CoopDSTCError, OSError) as e:
        print(f'coopdstc: error: {e}', file=_sys.stderr)
        return 1


if __name__ == '__main__':
    _sys.exit(main())
