import argparse
import logging
import os
import sys

from commands import Commands
from constants import *
from errors import QQLabError

log = logging.getLogger('qqlab.cli')


def parse_complex(text: str) -> complex:
    try:
        re_part, im_part = text.split(',')
        return complex(float(re_part), float(im_part))
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected re,im but got {text!r}')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Simulate, analyze and reconstruct biphoton polarization-frequency ququarts. Angles are given in degrees.')
    parser.add_argument('--output-dir', default=os.environ.get(VAR_OUTPUT_DIR_ENV, VAR_OUTPUT_DIR_DEFAULT), help='Where results are written. Defaults to $' + VAR_OUTPUT_DIR_ENV + ' or ' + VAR_OUTPUT_DIR_DEFAULT)
    parser.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    synth = sub.add_parser(COMMAND_SYNTH, help='Write a state file from explicit amplitudes or a seeded random draw')
    for name in ('c1', 'b-plus', 'c4', 'b-minus'):
        synth.add_argument('--' + name, type=parse_complex, default=0j, help='Amplitude as re,im')
    synth.add_argument('--random', action='store_true', help='Draw a random normalized state')
    synth.add_argument('--seed', type=int, default=0, help='Seed for --random')
    synth.add_argument('--output', help='State file path (default <output-dir>/state.json)')

    simulate = sub.add_parser(COMMAND_SIMULATE, help='Simulate coincidence records for every entry of a manifest')
    simulate.add_argument('manifest', help='Campaign manifest JSON')
    simulate.add_argument('--state', help='State file (overrides the manifest)')
    simulate.add_argument('--workers', type=int, default=VAR_WORKERS_DEFAULT, help='Simulation threads. Output does not depend on it')
    simulate.add_argument('--format', choices=['csv', 'json'], default='csv', help='Record file format')

    rec = sub.add_parser(COMMAND_RECONSTRUCT, help='Reconstruct the state from a directory of count records')
    rec.add_argument('logs', help='Directory of record CSV files')
    rec.add_argument('--alpha0', type=float, default=VAR_ALPHA0_DEG_DEFAULT, help='Small angle of the slope records in degrees')
    rec.add_argument('--output', help='Estimate JSON path')

    for name, text in ((COMMAND_ANALYZE, 'Correlation report of a state'),
                       (COMMAND_COMPARE, 'Correlation report with the mixed-polarization and two-qubit models side by side')):
        analyze = sub.add_parser(name, help=text)
        analyze.add_argument('state', help='State file')
        analyze.add_argument('--sweep', nargs=2, metavar=('PARAMETER', 'GRID'), help='Also emit a sweep CSV, e.g. b_minus 0:1:101')
        analyze.add_argument('--both-models', action='store_true', help='Print both models side by side')
        analyze.add_argument('--restarts', type=int, default=VAR_OPTIMIZER_RESTARTS_DEFAULT, help='Restarts of the separable-state minimization')
        analyze.add_argument('--components', type=int, default=VAR_OPTIMIZER_COMPONENTS_DEFAULT, help='Product states in each separable mixture')
        analyze.add_argument('--output', help='Report JSON path')

    sweep = sub.add_parser(COMMAND_SWEEP, help='Correlation quantifiers along a parameter grid')
    sweep.add_argument('parameter', choices=['b_minus'], help='Swept parameter (|B-|^2)')
    sweep.add_argument('grid', help='start:stop:count')
    sweep.add_argument('--state', help='Base state whose polarization qutrit is kept (default: B+ only)')
    sweep.add_argument('--output', help='CSV path')

    plan = sub.add_parser(COMMAND_PLAN, help='Write a measurement campaign manifest')
    plan.add_argument('--scenario', choices=['zero_c', 'single_c', 'general', 'zero_bplus'], help='Only the records one branch needs (default: full campaign)')
    plan.add_argument('--n-total', type=int, default=VAR_N_TOTAL_DEFAULT, help='Coincidences per record, 0 for exact probabilities')
    plan.add_argument('--seed-base', type=int, default=VAR_SEED_BASE_DEFAULT, help='Record i is simulated with seed seed-base + i')
    plan.add_argument('--alpha0', type=float, default=VAR_ALPHA0_DEG_DEFAULT, help='Small angle of the slope records in degrees')
    plan.add_argument('--state', default='', help='State file recorded in the manifest')
    plan.add_argument('--output', help='Manifest path')
    return parser


def build_config(parsed) -> dict:
    return {
        VAR_OUTPUT_DIR: parsed.output_dir,
        VAR_WORKERS: getattr(parsed, 'workers', VAR_WORKERS_DEFAULT),
        VAR_ALPHA0_DEG: getattr(parsed, 'alpha0', VAR_ALPHA0_DEG_DEFAULT),
        VAR_N_TOTAL: getattr(parsed, 'n_total', VAR_N_TOTAL_DEFAULT),
        VAR_SEED_BASE: getattr(parsed, 'seed_base', VAR_SEED_BASE_DEFAULT),
        VAR_OPTIMIZER_RESTARTS: getattr(parsed, 'restarts', VAR_OPTIMIZER_RESTARTS_DEFAULT),
        VAR_OPTIMIZER_COMPONENTS: getattr(parsed, 'components', VAR_OPTIMIZER_COMPONENTS_DEFAULT),
        VAR_OPTIMIZER_SEED: VAR_OPTIMIZER_SEED_DEFAULT,
    }


def queue_command(commands: Commands, parsed):
    c = parsed.command
    if c == COMMAND_SYNTH:
        amplitudes = None if parsed.random else (parsed.c1, parsed.b_plus, parsed.c4, parsed.b_minus)
        commands.addCommand(c, amplitudes, parsed.seed, parsed.output)
    elif c == COMMAND_SIMULATE:
        commands.addCommand(c, parsed.manifest, parsed.state, parsed.format)
    elif c == COMMAND_RECONSTRUCT:
        commands.addCommand(c, parsed.logs, parsed.output)
    elif c in (COMMAND_ANALYZE, COMMAND_COMPARE):
        if parsed.sweep is not None and parsed.sweep[0] != 'b_minus':
            raise QQLabError(f'Unsupported sweep parameter {parsed.sweep[0]!r}')
        commands.addCommand(COMMAND_ANALYZE, parsed.state, parsed.sweep[1] if parsed.sweep else None,
                            parsed.both_models or c == COMMAND_COMPARE, parsed.output)
    elif c == COMMAND_SWEEP:
        commands.addCommand(c, parsed.parameter, parsed.grid, parsed.state, parsed.output)
    elif c == COMMAND_PLAN:
        commands.addCommand(c, parsed.scenario, parsed.state, parsed.output)


def main(argv=None) -> int:
    parsed = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if parsed.verbose else logging.INFO,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s',
                        handlers=[logging.StreamHandler()])
    commands = Commands(build_config(parsed))
    try:
        queue_command(commands, parsed)
        commands.runAll()
    except QQLabError as e:
        print(f'Error: {e}', file=sys.stderr)
        return e.exit_code
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
