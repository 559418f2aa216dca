import argparse as ap
import sys

from src.utils import *
from src.config_processor import FLAG_KEYS, build_run_config
from src.commands import cmd_soliton, cmd_asymptotics, cmd_spectrum, cmd_sweep, cmd_validate

COMMAND_HANDLERS = {
    'soliton': cmd_soliton,
    'asymptotics': cmd_asymptotics,
    'spectrum': cmd_spectrum,
    'sweep': cmd_sweep,
    'validate': cmd_validate,
}
EXIT_CODES = (
    ((DomainError, ArgumentError, ConfigError), 2),
    ((NonConvergenceError, ConsistencyError), 3),
    ((ValidationFailure,), 4),
)
OUTPUT_ERROR_CODE = 2 # unwritable output folder or file


def shared_arguments() -> ap.ArgumentParser:
    '''
    Flags understood by every subcommand. Defaults are None so that values missing on the
    command line fall through to the config file and the packaged defaults.
    '''
    parser = ap.ArgumentParser(add_help=False)
    parser.add_argument('--model', type=str, choices=['mtm', 'gn'], help='Model: massive Thirring (mtm) or massive Gross-Neveu (gn).')
    parser.add_argument('--omega', type=float, nargs='+', help='Soliton frequency, or several of them.')
    parser.add_argument('--omega-range', type=float, nargs=3, metavar=('START', 'STOP', 'STEP'), help='Grid of frequencies.')
    parser.add_argument('--p', type=float, help='Transverse wavenumber.')
    parser.add_argument('--p-range', type=float, nargs=3, metavar=('START', 'STOP', 'STEP'), help='Grid of wavenumbers.')
    parser.add_argument('--n', type=int, help='Chebyshev degree N (N + 1 nodes).')
    parser.add_argument('--n-values', type=int, nargs='+', help='Chebyshev degrees checked by validate.')
    parser.add_argument('--scale', type=float, help='Scaling L of the map x = L atanh(z).')
    parser.add_argument('--out', type=str, help='Path to the output folder.')
    parser.add_argument('--format', type=str, choices=['csv', 'json'], help='Output format.')
    parser.add_argument('--jobs', type=int, help='Worker processes for sweeps.')
    parser.add_argument('--backend', type=str, choices=['qr', 'lapack'], help='Eigenvalue backend.')
    parser.add_argument('--im-cutoff', type=float, help='Window |Im lambda| < cutoff of the spurious eigenvalue metric.')
    parser.add_argument('--margin', type=float, help='Distance from the continuous spectrum that counts as isolated.')
    parser.add_argument('--allow-limit', action='store_true', default=None, help='Accept the algebraic soliton at omega = -1 (mtm).')
    parser.add_argument('--corrections', action='store_true', default=None, help='Add the correction coefficients alpha and beta (gn).')
    parser.add_argument('--dump-matrix', action='store_true', default=None, help='Also write the assembled matrix.')
    parser.add_argument('--x-max', type=float, help='Half width of the soliton sampling window.')
    parser.add_argument('--points', type=int, help='Number of soliton samples.')
    parser.add_argument('--config', type=str, help='Path to a JSON config file with one key per flag.')
    return parser


def read_arguments(argv: list = None) -> ap.Namespace:
    '''
    Read the command line arguments provided by the user.
    '''
    arg_parser = ap.ArgumentParser(description='TRANSTAB: Transverse Stability of Line Solitons in Massive Dirac Models')
    subparsers = arg_parser.add_subparsers(dest='command', required=True)
    parent = shared_arguments()
    subparsers.add_parser('soliton', parents=[parent], help='Sample the soliton profile.')
    subparsers.add_parser('asymptotics', parents=[parent], help='Tabulate the small-p eigenvalue slopes.')
    subparsers.add_parser('spectrum', parents=[parent], help='Compute the spectrum at one wavenumber.')
    subparsers.add_parser('sweep', parents=[parent], help='Track isolated eigenvalues over a wavenumber grid.')
    subparsers.add_parser('validate', parents=[parent], help='Reproduce the spurious eigenvalue tables.')
    return arg_parser.parse_args(argv)


def run(args: ap.Namespace):
    print('Reading configuration...')
    flags = {key: getattr(args, key) for key in FLAG_KEYS}
    config = build_run_config(args.command, flags, args.config)
    return COMMAND_HANDLERS[args.command](config)


def main(argv: list = None) -> int:
    args = read_arguments(argv)
    try:
        run(args)
    except TranstabError as e:
        for classes, code in EXIT_CODES:
            if isinstance(e, classes):
                print(f'{type(e).__name__}: {e}', file=sys.stderr)
                return code
        raise
    except OSError as e:
        print(f'cannot write output: {e}', file=sys.stderr)
        return OUTPUT_ERROR_CODE
    print('Done.')
    return 0


if __name__ == '__main__':
    sys.exit(main())
