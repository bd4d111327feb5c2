"""Main command-line application."""

import argparse
import logging
import sys
from typing import List, Optional

from config import ConfigError, load_config
from paritysim.cli.commands import EXIT_USAGE, cmd_bench, cmd_fidelity, cmd_nmr, cmd_run, cmd_sweep


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='paritysim',
        description='Parity-problem simulator: gate-level algorithms and the two-spin NMR experiment.',
    )
    parser.add_argument('--config', help='key = value configuration file')
    parser.add_argument('--seed', type=int, help='override the configured RNG seed')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='-v for INFO, -vv for DEBUG')
    commands = parser.add_subparsers(dest='command', required=True)

    run = commands.add_parser('run', help='solve one hidden string')
    run.add_argument('a', help='hidden binary string')
    run.add_argument('--backend', choices=('dense', 'product'), default='product')
    run.add_argument('--algorithm', choices=('refined', 'original', 'classical'), default='refined')
    run.add_argument('--out', help='also write the report here')
    run.add_argument('--timing', action='store_true', help='include wall time in the report')
    run.set_defaults(handler=cmd_run)

    sweep = commands.add_parser('sweep', help='solve many hidden strings')
    sweep.add_argument('--n', type=int, required=True)
    sweep.add_argument('--trials', type=int, required=True)
    sweep.add_argument('--backend', choices=('dense', 'product'), default='product')
    sweep.add_argument('--workers', type=int, default=1)
    sweep.add_argument('--out', help='also write the report here')
    sweep.add_argument('--timing', action='store_true', help='include mean wall time in the report')
    sweep.set_defaults(handler=cmd_sweep)

    nmr = commands.add_parser('nmr', help='simulate the two-spin experiment for a in {00,01,10,11}')
    nmr.add_argument('a')
    nmr.add_argument('--out', help='output file prefix (default nmr_<a>)')
    nmr.set_defaults(handler=cmd_nmr)

    fidelity = commands.add_parser('fidelity', help='compare compiled pulse programs with ideal gates')
    fidelity.set_defaults(handler=cmd_fidelity)

    bench = commands.add_parser('bench', help='time the dense and product backends')
    bench.add_argument('--max-n', type=int, default=100000, help='largest product-backend n')
    bench.add_argument('--dense-max-n', type=int, default=20, help='largest dense-backend n')
    bench.add_argument('--out', help='also write the CSV here')
    bench.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    try:
        config = load_config(args.config, {'seed': args.seed})
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return args.handler(args, config)


if __name__ == '__main__':
    sys.exit(main())
