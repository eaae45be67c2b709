"""Command-line entry point: ``cliffsim <command> [options]``.

Commands are ``verify``, ``ndecs-grid``, ``smc-convergence``, ``scaling-compare`` and
``spd-scaling``. Each reads an optional TOML manifest (``--manifest``); anything it leaves out uses
the desk-scale defaults. Results go to ``--out``, by default a ``cliffsim`` directory under the
platform's user data directory.
"""
import argparse
import logging
import sys
from logging import getLogger
from pathlib import Path
from typing import List, Optional

from attr import evolve

from . import __version__
from .harness import COMMANDS, DEFAULT_OUTPUT_DIR, VERIFY_CHECKS, load_manifest
from .models import ExperimentManifest

logger = getLogger(__name__)


def apply_paper_scale(m: ExperimentManifest) -> ExperimentManifest:
    """16-qubit, 5-step Trotter circuit at the ``(M_C, M_P) = (720, 120)`` grid point. This is a
    long run (hours) and is only used when asked for.
    """
    circuit = evolve(m.circuit, family='trotter', n=16, steps=5)
    grid = evolve(m.grid, m_c=[720], m_p=[120])
    return evolve(m, circuit=circuit, grid=grid)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--manifest', type=Path, help='Experiment manifest (TOML, JSON or YAML)')
    common.add_argument('--out', type=Path, default=Path(DEFAULT_OUTPUT_DIR))
    common.add_argument('--seed', type=int, help='Root seed; overrides the manifest')
    common.add_argument('--threads', type=int, help='Worker count (default: $CLIFFSIM_THREADS)')
    common.add_argument('--plot', action='store_true', help='Also write SVG figures')
    common.add_argument('--log-level', default='INFO')

    parser = argparse.ArgumentParser(prog='cliffsim', description=__doc__.splitlines()[0])
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)
    for name in COMMANDS:
        sub = commands.add_parser(name, parents=[common], help=COMMANDS[name].__doc__.split('.')[0])
        if name == 'ndecs-grid':
            sub.add_argument(
                '--paper-scale', action='store_true', help='16 qubits, 5 steps, (720, 120)'
            )
        if name == 'verify':
            sub.add_argument('--checks', nargs='+', choices=list(VERIFY_CHECKS))
            sub.add_argument('--format', dest='report_format', default='json')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(), format='%(asctime)s %(levelname)s %(name)s: %(message)s'
    )

    try:
        manifest = load_manifest(args.manifest, seed=args.seed)
        if getattr(args, 'paper_scale', False):
            manifest = apply_paper_scale(manifest)
        out_dir = args.out / args.command
        logger.info(f'Running {args.command}; writing results to {out_dir}')
        command = COMMANDS[args.command]
        if args.command == 'verify':
            report = command(
                manifest,
                out_dir,
                args.threads,
                args.plot,
                checks=args.checks,
                report_format=args.report_format,
            )
            for name in report.failed:
                logger.error(f'Failed check: {name}')
            return 0 if report.passed else 1
        command(manifest, out_dir, args.threads, args.plot)
    except (OSError, ValueError) as e:
        logger.error(f'{args.command} failed: {e}')
        logger.debug(e, exc_info=True)
        return 2
    return 0


if __name__ == '__main__':
    sys.exit(main())
