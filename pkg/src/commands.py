import json
import os

import numpy as np
import pandas as pd
from tqdm import tqdm

from src import __version__
from src.asymptotic_analytics import asymptotic_prediction
from src.chebyshev_grid import build_grid
from src.config_processor import RunConfig, read_reference_tables
from src.eigen_solver import eigvals
from src.soliton_profiles import make_profile, eval_profile
from src.spectrum_analyzer import (classify_eigenvalue, compute_sweep_spectra, default_margin, kernel_cluster,
                                   solve_point, spurious_metric, sweep_summary, symmetry_residual, track_branches,
                                   REAL_PAIR, COMPLEX_QUARTET)
from src.stability_operator import assemble, continuous_bands, write_matrix_dump
from src.utils import ModelKind, ArgumentError, ValidationFailure, compute_num_unstable_text

FLOAT_FORMAT = '%.17g' # round-trip precision for every number written
EDGE_TOL = 1e-9 # eigenvalues this close to a band edge are flagged as boundary modes


def _jsonable(value):
    '''Convert numpy scalars, arrays and complex numbers into JSON types; complex becomes [re, im].'''
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, ModelKind):
        return value.value
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def output_header(config: RunConfig) -> str:
    '''The comment line that opens every CSV output: artifact version and the full configuration.'''
    return f'# transtab {__version__} {config.command} config: {json.dumps(config.to_dict(), sort_keys=True)}'


def output_stem(config: RunConfig, name: str) -> str:
    os.makedirs(config.out, exist_ok=True)
    return os.path.join(config.out, name)


def write_json(payload: dict, config: RunConfig, path: str) -> str:
    '''
    Write a JSON document carrying the artifact version and the configuration next to the payload.

    :param payload: The content.
    :param config: The run configuration.
    :param path: Output file.
    '''
    document = {'version': __version__, 'command': config.command, 'config': config.to_dict()}
    document.update(payload)
    with open(path, 'w') as f:
        json.dump(_jsonable(document), f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def write_table(frame: pd.DataFrame, config: RunConfig, stem: str) -> str:
    '''
    Write a table in the configured format: CSV below the header comment line, or a JSON
    document with one record per row.

    :param frame: The table.
    :param config: The run configuration.
    :param stem: Output path without extension.
    '''
    if config.format == 'json':
        return write_json({'rows': frame.to_dict(orient='records')}, config, stem + '.json')
    path = stem + '.csv'
    with open(path, 'w', newline='') as f:
        f.write(output_header(config) + '\n')
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT)
    return path


def _tag(value: float) -> str:
    return f'{value:g}'


def cmd_soliton(config: RunConfig) -> list:
    '''
    Sample the soliton on a uniform grid of [-x_max, x_max] and write `x, re_u, im_u, abs_u`,
    one file per frequency.

    :param config: The run configuration.
    '''
    paths = []
    x = np.linspace(-config.x_max, config.x_max, config.points)
    for omega in config.omega:
        profile = make_profile(config.model, omega, config.allow_limit)
        u = eval_profile(profile, x)
        frame = pd.DataFrame({'x': x, 're_u': u.real, 'im_u': u.imag, 'abs_u': np.abs(u)})
        stem = output_stem(config, f'soliton_{config.model.value}_omega{_tag(omega)}')
        paths.append(write_table(frame, config, stem))
    return paths


def cmd_asymptotics(config: RunConfig) -> str:
    '''
    Tabulate the slopes Lambda_r and Lambda_i of the eigenvalues near the origin over a grid of
    frequencies, with the correction coefficients of the Gross-Neveu eigenvectors on request.

    :param config: The run configuration.
    '''
    if config.corrections and config.model is not ModelKind.GROSS_NEVEU:
        raise ArgumentError('correction coefficients exist for the gn model only')
    rows = []
    for omega in tqdm(config.omega, desc='Evaluating asymptotics'):
        prediction = asymptotic_prediction(config.model, omega, corrections=config.corrections)
        row = {'omega': prediction.omega, 'lambda_r': prediction.lambda_r, 'lambda_i': prediction.lambda_i}
        if config.corrections:
            alpha = prediction.alpha if prediction.alpha is not None else complex(np.nan, np.nan)
            beta = prediction.beta if prediction.beta is not None else complex(np.nan, np.nan)
            row.update({'alpha_re': alpha.real, 'alpha_im': alpha.imag, 'beta_re': beta.real, 'beta_im': beta.imag})
        rows.append(row)
    frame = pd.DataFrame(rows)
    return write_table(frame, config, output_stem(config, f'asymptotics_{config.model.value}'))


def _count_unstable(isolated, classes, growth_tol: float) -> tuple:
    real_pairs = sum(1 for v, c in zip(isolated, classes) if c == REAL_PAIR and v.real > growth_tol)
    quartets = sum(1 for v, c in zip(isolated, classes) if c == COMPLEX_QUARTET and v.real > growth_tol and v.imag > 0)
    return real_pairs, quartets


def cmd_spectrum(config: RunConfig) -> list:
    '''
    Solve the spectral problem once per frequency at the configured wavenumber and write the
    whole eigenvalue cloud, annotated with the distance to the continuous spectrum, the isolated
    flag, boundary modes on the band edges and the class of each isolated eigenvalue. A JSON
    summary with the bands, the isolated set and the quality measures goes next to it.

    :param config: The run configuration.
    '''
    paths = []
    p = config.p[0]
    grid = build_grid(config.n, config.scale)
    for omega in config.omega:
        print(f'Assembling stability operator for omega={omega:g}, p={p:g}, N={config.n}...')
        operator = assemble(config.model, omega, p, grid)
        print('Computing eigenvalues...')
        eigs = eigvals(operator.matrix_a, backend=config.backend)
        values = eigs.values
        bands = continuous_bands(config.model, omega, p)
        margin = config.margin if config.margin is not None else default_margin(bands)

        distance = bands.distance(values)
        isolated = distance > margin
        edges = np.array([edge for edge, _ in bands.band_edges])
        on_edge = np.min(np.abs(values[:, None] - 1j * edges[None, :]), axis=1) <= EDGE_TOL * (1.0 + np.abs(values))
        classes = [classify_eigenvalue(v, config.class_tol, config.origin_tol) if flag else ''
                   for v, flag in zip(values, isolated)]
        frame = pd.DataFrame({'re_lambda': values.real, 'im_lambda': values.imag, 'band_distance': distance,
                              'isolated': isolated, 'on_band_edge': on_edge, 'class': classes})

        isolated_values = values[isolated]
        isolated_classes = [c for c, flag in zip(classes, isolated) if flag]
        num_real_pairs, num_quartets = _count_unstable(isolated_values, isolated_classes, config.growth_tol)
        summary = {
            'model': config.model, 'omega': omega, 'p': p, 'n': config.n, 'scale': config.scale,
            'band_edges': [{'edge': edge, 'direction': direction} for edge, direction in bands.band_edges],
            'gap_closed': bands.gap_closed, 'half_gap': bands.half_gap, 'margin': margin,
            'isolated': [{'lambda': v, 'class': c} for v, c in zip(isolated_values, isolated_classes)],
            'kernel_cluster_size': int(kernel_cluster(values, config.origin_tol).size),
            'spurious_metric': spurious_metric(values, config.im_cutoff),
            'symmetry_residual': symmetry_residual(values, config.model),
            'unstable_real_pairs': num_real_pairs, 'unstable_quartets': num_quartets,
        }

        stem = output_stem(config, f'spectrum_{config.model.value}_omega{_tag(omega)}_p{_tag(p)}_n{config.n}')
        if config.format == 'json':
            paths.append(write_json({'eigenvalues': frame.to_dict(orient='records'), 'summary': summary},
                                    config, stem + '.json'))
        else:
            paths.append(write_table(frame, config, stem))
            paths.append(write_json({'summary': summary}, config, stem + '_summary.json'))
        if config.dump_matrix:
            paths.append(stem + '_matrix.csv')
            write_matrix_dump(operator, paths[-1], output_header(config))

        text = compute_num_unstable_text(num_real_pairs, num_quartets)
        if text:
            print(text)
    return paths


def cmd_sweep(config: RunConfig) -> list:
    '''
    Follow the isolated eigenvalues over the wavenumber grid for every frequency. The branch
    table lists model, omega, p, branch_id, re_lambda, im_lambda, class and the mirror residual
    in canonical (omega, p, branch) order; the summary JSON holds thresholds, events and the
    maximal growth rate.

    :param config: The run configuration.
    '''
    paths = []
    grid = build_grid(config.n, config.scale)
    p_grid = sorted(config.p)
    for omega in sorted(config.omega):
        print(f'Sweeping {len(p_grid)} wavenumbers for omega={omega:g}, N={config.n}...')
        spectra = compute_sweep_spectra(config.model, omega, p_grid, grid, config.backend, config.margin,
                                        config.jobs, progress=True)
        print('Tracking eigenvalue branches...')
        branches = track_branches(config.model, omega, p_grid, grid, config.backend, config.margin,
                                  config.class_tol, config.origin_tol, spectra=spectra)
        summary = sweep_summary(branches, spectra, config.growth_tol)

        rows = [{'model': config.model.value, 'omega': omega, 'p': p, 'branch_id': branch.branch_id,
                 're_lambda': value.real, 'im_lambda': value.imag, 'class': label, 'residual': residual}
                for branch in branches for (p, value, residual), label in zip(branch.points, branch.classes)]
        frame = pd.DataFrame(rows, columns=['model', 'omega', 'p', 'branch_id', 're_lambda', 'im_lambda',
                                            'class', 'residual'])
        frame = frame.sort_values(['p', 'branch_id'], kind='mergesort').reset_index(drop=True)

        stem = output_stem(config, f'sweep_{config.model.value}_omega{_tag(omega)}_n{config.n}')
        summary.update({'model': config.model, 'omega': omega, 'n': config.n, 'num_branches': len(branches)})
        paths.append(write_table(frame, config, stem))
        paths.append(write_json({'summary': summary}, config, stem + '_summary.json'))

        print(f'Maximal growth rate: {summary["max_growth_rate"]:.6g}')
        if summary['instability_threshold'] is not None:
            print(f'Instability threshold: p* = {summary["instability_threshold"]:g}')
        elif summary['unstable_at_final_p']:
            print(f'Instability persists up to p = {p_grid[-1]:g}')
    return paths


def _select_tables(config: RunConfig, tables: dict) -> list:
    selected = []
    for key, table in tables.items():
        tag = table.get('model', key)
        if config.model is not None and tag != config.model.value:
            continue
        if float(table['im_cutoff']) != config.im_cutoff:
            continue
        selected.append((tag, table))
    if not selected:
        if config.model is None or config.omega is None:
            raise ArgumentError(f'no reference table for cutoff {config.im_cutoff:g}; give --model and --omega')
        selected.append((config.model.value, {'im_cutoff': config.im_cutoff, 'omega': config.omega, 'metric': {}}))
    return selected


def _reference(table: dict, n: int, omega: float) -> float:
    row = table['metric'].get(str(n))
    for index, tabulated in enumerate(table['omega']):
        if row is not None and abs(tabulated - omega) < 1e-9:
            return float(row[index])
    return float('nan')


def cmd_validate(config: RunConfig, tables: dict = None) -> pd.DataFrame:
    '''
    Recompute the spurious eigenvalue metric max |Re lambda| over |Im lambda| < cutoff at p = 0
    and compare it with the published values. A metric fails when it exceeds ceiling_factor
    times its reference; the report is written and printed before ValidationFailure is raised.

    :param config: The run configuration.
    :param tables: Reference tables, read from config/reference_tables.json when omitted.
    '''
    tables = read_reference_tables() if tables is None else tables
    tasks = []
    for tag, table in _select_tables(config, tables):
        omegas = config.omega if config.omega is not None else table['omega']
        n_values = config.n_values if config.n_values is not None else sorted(int(n) for n in table['metric'])
        if not n_values:
            n_values = [config.n]
        tasks.extend((tag, table, n, omega) for n in n_values for omega in omegas)

    grids = {}
    rows = []
    for tag, table, n, omega in tqdm(tasks, desc='Validating spurious eigenvalue metric'):
        if n not in grids:
            grids[n] = build_grid(n, config.scale)
        eigs = solve_point(ModelKind(tag), omega, 0.0, grids[n], config.backend)
        metric = spurious_metric(eigs, config.im_cutoff)
        reference = _reference(table, n, omega)
        ceiling = config.ceiling_factor * reference
        rows.append({'model': tag, 'omega': omega, 'n': n, 'im_cutoff': config.im_cutoff, 'metric': metric,
                     'reference': reference, 'ceiling': ceiling,
                     'passed': bool(np.isnan(ceiling) or metric <= ceiling)})

    report = pd.DataFrame(rows, columns=['model', 'omega', 'n', 'im_cutoff', 'metric', 'reference', 'ceiling', 'passed'])
    write_table(report, config, output_stem(config, 'validate'))
    print(report.to_string(index=False))
    failed = int((~report['passed']).sum())
    if failed:
        raise ValidationFailure(f'{failed} of {len(report)} metrics exceed their ceilings')
    return report
