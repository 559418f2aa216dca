import json
import os
from dataclasses import dataclass, asdict

import jsonschema
import numpy as np

from src.utils import ModelKind, ArgumentError, ConfigError, parse_model

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'config')
DEFAULT_CONFIG_PATH = os.path.join(CONFIG_DIR, 'config.json')
SCHEMA_PATH = os.path.join(CONFIG_DIR, 'config_schema.json')
REFERENCE_TABLES_PATH = os.path.join(CONFIG_DIR, 'reference_tables.json')
OUTPUT_DIR_VARIABLE = 'TRANSTAB_OUTPUT_DIR' # environment override of the default output directory
GRID_DECIMALS = 12 # rounding of generated p and omega grids

COMMANDS = ('soliton', 'asymptotics', 'spectrum', 'sweep', 'validate')
# keys of a user config file, one per long command line flag
FLAG_KEYS = ('model', 'omega', 'omega_range', 'p', 'p_range', 'n', 'n_values', 'scale', 'out', 'format',
             'jobs', 'backend', 'im_cutoff', 'margin', 'allow_limit', 'corrections', 'dump_matrix',
             'x_max', 'points')


@dataclass
class RunConfig:
    '''
    Everything a subcommand needs, after merging command line flags, the user config file, the
    environment and the packaged defaults. Grids are stored as plain lists so that the echo in
    the output headers is exact.
    '''
    command: str
    model: ModelKind = None
    omega: list = None
    p: list = None
    n: int = None
    n_values: list = None
    scale: float = 10.0
    out: str = './output/'
    format: str = 'csv'
    jobs: int = 1
    backend: str = 'lapack'
    im_cutoff: float = 10.0
    margin: float = None
    allow_limit: bool = False
    corrections: bool = False
    dump_matrix: bool = False
    x_max: float = 20.0
    points: int = 401
    class_tol: float = 1e-6
    origin_tol: float = 1e-4
    growth_tol: float = 1e-3
    ceiling_factor: float = 10.0

    def to_dict(self) -> dict:
        values = asdict(self)
        values['model'] = self.model.value if self.model is not None else None
        return values


def read_json(path: str) -> dict:
    '''
    Read a JSON file, turning I/O and syntax problems into configuration errors.

    :param path: The path to the JSON file.
    '''
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except OSError as e:
        raise ConfigError(f'cannot read configuration file {path}: {e.strerror}')
    except json.JSONDecodeError as e:
        raise ConfigError(f'malformed JSON in {path}: {e.msg} (line {e.lineno})')


def read_default_config(path: str = DEFAULT_CONFIG_PATH) -> dict:
    '''Load the packaged defaults.'''
    return read_json(path)


def read_user_config(path: str, schema_path: str = SCHEMA_PATH) -> dict:
    '''
    Load a user config file and validate it against the schema. The file is a flat JSON object
    whose keys are the long flag names with dashes replaced by underscores.

    :param path: The path to the user config file.
    :param schema_path: The path to the JSON schema.
    '''
    user = read_json(path)
    schema = read_json(schema_path)
    try:
        jsonschema.validate(instance=user, schema=schema)
    except jsonschema.ValidationError as e:
        location = '/'.join(str(part) for part in e.absolute_path) or '<root>'
        raise ConfigError(f'invalid configuration file {path} at {location}: {e.message}')
    return user


def read_reference_tables(path: str = REFERENCE_TABLES_PATH) -> dict:
    '''Load the published spurious eigenvalue tables used by the validate command.'''
    return read_json(path)


def range_grid(start: float, stop: float, step: float, what: str = 'p') -> list:
    '''
    Equally spaced values start, start + step, ... up to and including stop (within rounding).

    :param start: First value.
    :param stop: Last value.
    :param step: Positive spacing.
    :param what: Name of the parameter, for error messages.
    '''
    if not step > 0:
        raise ArgumentError(f'{what}-range step must be positive, got {step}')
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    if count <= 0:
        raise ArgumentError(f'empty {what}-range: start={start} stop={stop} step={step}')
    return [float(v) for v in np.round(start + step * np.arange(count), GRID_DECIMALS)]


def default_p_grid(defaults: dict, model: ModelKind) -> list:
    '''
    The default sweep grid: a fine step near the origin, where the eigenvalues split off from
    zero, and a coarse step beyond it.

    :param defaults: The packaged defaults.
    :param model: The model, which determines the end of the sweep.
    '''
    sweep = defaults['sweep']
    stop = sweep['p_stop'][model.value]
    fine = range_grid(0.0, sweep['fine_until'], sweep['fine_step'])
    coarse = range_grid(sweep['fine_until'] + sweep['coarse_step'], stop, sweep['coarse_step'])
    return fine + [p for p in coarse if p > fine[-1]]


def default_omega_grid(defaults: dict, model: ModelKind) -> list:
    '''Uniform omega grid across the existence interval, kept a small offset from its ends.'''
    settings = defaults['asymptotics']
    low, high = model.interval
    offset = settings['edge_offset']
    return [float(v) for v in np.round(np.linspace(low + offset, high - offset, settings['omega_points']), GRID_DECIMALS)]


def _as_list(value) -> list:
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [v for v in value]
    return [value]


def build_run_config(command: str, flags: dict, config_path: str = None, defaults: dict = None,
                     environ: dict = None) -> RunConfig:
    '''
    Merge the configuration sources of a run. Explicit command line flags win over the user
    config file, which wins over the TRANSTAB_OUTPUT_DIR environment variable and the packaged
    defaults. Flags that were not given must be passed as None.

    :param command: The subcommand.
    :param flags: Flag values keyed like the config file.
    :param config_path: Optional path to a user config file.
    :param defaults: The packaged defaults, read from config/config.json when omitted.
    :param environ: Environment variables, os.environ when omitted.
    '''
    if command not in COMMANDS:
        raise ArgumentError(f'unknown command {command!r}')
    defaults = read_default_config() if defaults is None else defaults
    environ = os.environ if environ is None else environ
    user = read_user_config(config_path) if config_path else {}

    merged = {key: defaults[key] for key in ('scale', 'format', 'jobs', 'backend', 'im_cutoff', 'margin')}
    merged['out'] = environ.get(OUTPUT_DIR_VARIABLE, defaults['output_dir'])
    merged['x_max'] = defaults['soliton']['x_max']
    merged['points'] = defaults['soliton']['points']
    merged.update(user)
    merged.update({key: value for key, value in flags.items() if value is not None})

    model = parse_model(merged['model']) if merged.get('model') is not None else None
    if model is None and command != 'validate':
        raise ArgumentError(f'the {command} command needs --model')

    if merged.get('omega') is not None:
        omega = [float(v) for v in _as_list(merged['omega'])]
    elif merged.get('omega_range') is not None:
        omega = range_grid(*merged['omega_range'], what='omega')
    elif command == 'asymptotics':
        omega = default_omega_grid(defaults, model)
    else:
        omega = None
    if omega is None and command in ('soliton', 'spectrum', 'sweep'):
        raise ArgumentError(f'the {command} command needs --omega')

    if merged.get('p_range') is not None:
        p = range_grid(*merged['p_range'])
    elif merged.get('p') is not None:
        p = [float(v) for v in _as_list(merged['p'])]
    elif command == 'sweep':
        p = default_p_grid(defaults, model)
    else:
        p = [0.0]
    if command == 'spectrum' and len(p) != 1:
        raise ArgumentError('the spectrum command takes a single --p')

    n = merged.get('n')
    if n is None and model is not None:
        n = defaults['n'][model.value]
    if n is not None and int(n) < 2:
        raise ArgumentError(f'grid degree must be an integer >= 2, got {n}')
    n_values = merged.get('n_values')
    if n_values is None and command == 'validate' and float(merged['im_cutoff']) == defaults['im_cutoff']:
        n_values = list(defaults['validate']['n_values'])
    if int(merged['jobs']) < 1:
        raise ArgumentError(f'--jobs must be at least 1, got {merged["jobs"]}')
    if merged.get('margin') is not None and not float(merged['margin']) > 0:
        raise ArgumentError(f'--margin must be positive, got {merged["margin"]}')

    classification = defaults['classification']
    class_tol = classification['class_tol'][model.value] if model is not None else classification['class_tol']['mtm']
    return RunConfig(
        command=command,
        model=model,
        omega=omega,
        p=p,
        n=int(n) if n is not None else None,
        n_values=[int(v) for v in n_values] if n_values is not None else None,
        scale=float(merged['scale']),
        out=merged['out'],
        format=merged['format'],
        jobs=int(merged['jobs']),
        backend=merged['backend'],
        im_cutoff=float(merged['im_cutoff']),
        margin=float(merged['margin']) if merged.get('margin') is not None else None,
        allow_limit=bool(merged.get('allow_limit', False)),
        corrections=bool(merged.get('corrections', False)),
        dump_matrix=bool(merged.get('dump_matrix', False)),
        x_max=float(merged['x_max']),
        points=int(merged['points']),
        class_tol=float(class_tol),
        origin_tol=float(classification['origin_tol']),
        growth_tol=float(classification['growth_tol']),
        ceiling_factor=float(defaults['validate']['ceiling_factor']),
    )
