import warnings
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree
from tqdm import tqdm

from src.asymptotic_analytics import asymptotic_prediction
from src.chebyshev_grid import ChebGrid
from src.eigen_solver import EigenSet, eigvals
from src.stability_operator import SpectralBands, assemble, continuous_bands
from src.utils import ModelKind, ArgumentError

DEFAULT_IM_CUTOFF = 10.0 # window |Im lambda| < cutoff of the spurious eigenvalue metric
MARGIN_FRACTION = 0.05 # isolation margin as a fraction of the half gap
MARGIN_FLOOR = 1e-3
CLASS_TOL = 1e-6 # relative tolerance of the axis classification
ORIGIN_TOL = 1e-4 # eigenvalues this close to zero belong to the kernel cluster
GROWTH_TOL = 1e-3 # real parts above this count as an instability
AXIS_CONE = 0.1 # |Im| <= AXIS_CONE |lambda| selects the real-axis branch in slope fits
SEED_RADIUS = 0.5 # relative radius for matching the predicted near-origin eigenvalues

REAL_PAIR = 'real_pair'
IMAGINARY_PAIR = 'imaginary_pair'
COMPLEX_QUARTET = 'complex_quartet'
ABSORBED = 'absorbed'
NEAR_ORIGIN = 'near_origin'

EVENT_KINDS = {
    (IMAGINARY_PAIR, COMPLEX_QUARTET): 'bifurcation_into_quartet',
    (REAL_PAIR, COMPLEX_QUARTET): 'bifurcation_into_quartet',
    (COMPLEX_QUARTET, IMAGINARY_PAIR): 'return_to_imaginary_axis',
    (COMPLEX_QUARTET, REAL_PAIR): 'return_to_real_axis',
    (REAL_PAIR, IMAGINARY_PAIR): 'collision_at_origin',
    (IMAGINARY_PAIR, REAL_PAIR): 'collision_at_origin',
    (NEAR_ORIGIN, REAL_PAIR): 'collision_at_origin',
    (NEAR_ORIGIN, IMAGINARY_PAIR): 'collision_at_origin',
    (REAL_PAIR, NEAR_ORIGIN): 'collision_at_origin',
    (IMAGINARY_PAIR, NEAR_ORIGIN): 'collision_at_origin',
}


@dataclass
class TrackedBranch:
    '''
    An isolated eigenvalue followed across the transverse wavenumber. Each point is
    (p, lambda, residual), where the residual is the distance from lambda to its nearest mirror
    image in the computed spectrum.
    '''
    branch_id: int
    points: list = field(default_factory=list)
    classes: list = field(default_factory=list)
    events: list = field(default_factory=list)
    active: bool = True

    @property
    def last_value(self) -> complex:
        return self.points[-1][1]

    def jumps(self) -> list:
        values = [point[1] for point in self.points]
        return [abs(b - a) for a, b in zip(values[:-1], values[1:])]


def _values(eigs) -> np.ndarray:
    if isinstance(eigs, EigenSet):
        return eigs.values
    return np.atleast_1d(np.asarray(eigs, dtype=complex))


def spurious_metric(eigs, im_cutoff: float = DEFAULT_IM_CUTOFF) -> float:
    '''
    max |Re lambda| over the eigenvalues with |Im lambda| < cutoff. At p = 0 the exact spectrum
    lies on the imaginary axis, so this measures the discretization artifacts.

    :param eigs: EigenSet or array of eigenvalues.
    :param im_cutoff: Window on the imaginary part.
    '''
    values = _values(eigs)
    window = values[np.abs(values.imag) < im_cutoff]
    if window.size == 0:
        raise ArgumentError(f'no eigenvalues with |Im lambda| < {im_cutoff}')
    return float(np.max(np.abs(window.real)))


def default_margin(bands: SpectralBands, fraction: float = MARGIN_FRACTION, floor: float = MARGIN_FLOOR) -> float:
    return max(fraction * bands.half_gap, floor)


def isolated_eigs(eigs, bands: SpectralBands, margin: float = None) -> np.ndarray:
    '''
    Eigenvalues farther than `margin` from every half-line of the continuous spectrum. This
    also removes the eigenvalues of the decoupled boundary rows, which sit exactly on the band
    edges.

    :param eigs: EigenSet or array of eigenvalues.
    :param bands: Continuous spectrum at the same (model, omega, p).
    :param margin: Isolation distance; 0.05 of the half gap with floor 1e-3 by default.
    '''
    values = _values(eigs)
    if margin is None:
        margin = default_margin(bands)
    isolated = values[bands.distance(values) > margin]
    order = np.lexsort((isolated.real, isolated.imag))
    return isolated[order]


def reflections(model: ModelKind) -> tuple:
    '''The maps lambda -> lambda' under which the spectrum of the model is closed.'''
    if model is ModelKind.MASSIVE_THIRRING:
        return (np.conj, np.negative, lambda v: -np.conj(v))
    return (lambda v: -np.conj(v),)


def symmetry_residual(eigs, model: ModelKind) -> float:
    '''
    Largest distance, relative to 1 + |lambda|, between a reflected eigenvalue and its nearest
    computed eigenvalue. For the massive Thirring model the spectrum is reflected across both
    axes, for the massive Gross-Neveu model across the imaginary axis only.

    :param eigs: EigenSet or array of eigenvalues.
    :param model: The model, which determines the symmetries.
    '''
    values = _values(eigs)
    if values.size == 0:
        raise ArgumentError('symmetry residual of an empty spectrum')
    tree = cKDTree(np.column_stack([values.real, values.imag]))
    worst = 0.0
    for reflect in reflections(model):
        mirrored = reflect(values)
        distances, _ = tree.query(np.column_stack([mirrored.real, mirrored.imag]))
        worst = max(worst, float(np.max(distances / (1.0 + np.abs(values)))))
    return worst


def mirror_mismatch(value: complex, values: np.ndarray, model: ModelKind) -> float:
    '''Distance from one eigenvalue's mirror images to the computed spectrum.'''
    return float(max(np.min(np.abs(values - reflect(value))) for reflect in reflections(model)))


def match_spectra(first, second) -> np.ndarray:
    '''
    Distances between two eigenvalue sets of equal size after pairing them optimally, so that
    the comparison does not depend on the sort order of nearly equal eigenvalues.

    :param first: Eigenvalues.
    :param second: Eigenvalues.
    '''
    a, b = _values(first), _values(second)
    if a.size != b.size:
        raise ArgumentError(f'cannot match spectra of sizes {a.size} and {b.size}')
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return cost[rows, cols]


def kernel_cluster(eigs, tol: float = ORIGIN_TOL) -> np.ndarray:
    '''Eigenvalues with |lambda| <= tol.'''
    values = _values(eigs)
    return values[np.abs(values) <= tol]


def classify_eigenvalue(value: complex, class_tol: float = CLASS_TOL, origin_tol: float = ORIGIN_TOL) -> str:
    '''
    Classify an isolated eigenvalue by its position: near the origin, on the real axis, on the
    imaginary axis, or off both axes.

    :param value: The eigenvalue.
    :param class_tol: Relative tolerance for lying on an axis.
    :param origin_tol: Radius of the kernel cluster.
    '''
    size = abs(value)
    if size <= origin_tol:
        return NEAR_ORIGIN
    if abs(value.imag) <= class_tol * (1.0 + size):
        return REAL_PAIR
    if abs(value.real) <= class_tol * (1.0 + size):
        return IMAGINARY_PAIR
    return COMPLEX_QUARTET


def solve_point(model: ModelKind, omega: float, p: float, grid: ChebGrid, backend: str = 'lapack') -> EigenSet:
    '''Assemble the block-diagonalized operator at one wavenumber and compute its eigenvalues.'''
    return eigvals(assemble(model, omega, p, grid).matrix_a, backend=backend)


def _branch_eigenvalues(model, omega, p, grid, backend, margin):
    eigs = solve_point(model, omega, p, grid, backend)
    bands = continuous_bands(model, omega, p)
    return eigs, bands, isolated_eigs(eigs, bands, margin)


def slope_fit(model: ModelKind, omega: float, p_samples, grid: ChebGrid, backend: str = 'lapack',
              margin: float = None) -> dict:
    '''
    Estimate the slopes Lambda_r and Lambda_i from computed spectra. At every p we pick the
    smallest isolated eigenvalue in the right half plane near the real axis and the smallest
    one in the upper half plane near the imaginary axis, then fit lambda/p = Lambda + c p^2 by
    least squares; the intercepts are the estimates.

    :param model: The model.
    :param omega: The soliton frequency.
    :param p_samples: At least three small wavenumbers in (0, 0.15].
    :param grid: The collocation grid.
    :param backend: Eigen backend.
    :param margin: Isolation margin.
    '''
    p_samples = np.asarray(sorted(p_samples), dtype=float)
    if p_samples.size < 3 or p_samples[0] <= 0.0 or p_samples[-1] > 0.15:
        raise ArgumentError('slope fit needs at least three wavenumbers in (0, 0.15]')

    real_branch, imaginary_branch = [], []
    for p in p_samples:
        _, _, isolated = _branch_eigenvalues(model, omega, p, grid, backend, margin)
        size = np.abs(isolated)
        real_axis = isolated[(isolated.real > 0) & (np.abs(isolated.imag) <= AXIS_CONE * size)]
        imaginary_axis = isolated[(isolated.imag > 0) & (np.abs(isolated.real) <= AXIS_CONE * size)]
        if real_axis.size == 0 or imaginary_axis.size == 0:
            missing = 'real' if real_axis.size == 0 else 'imaginary'
            raise ArgumentError(f'{missing}-axis eigenvalue branch not found at p={p}')
        real_branch.append(real_axis[np.argmin(np.abs(real_axis))].real)
        imaginary_branch.append(imaginary_axis[np.argmin(np.abs(imaginary_axis))].imag)

    lambda_r_hat = np.polyfit(p_samples ** 2, np.array(real_branch) / p_samples, 1)[1]
    lambda_i_hat = np.polyfit(p_samples ** 2, np.array(imaginary_branch) / p_samples, 1)[1]
    return {'lambda_r_hat': float(lambda_r_hat), 'lambda_i_hat': float(lambda_i_hat)}


def _sweep_point(arg_tuple):
    index, model, omega, p, grid, backend, margin = arg_tuple
    eigs, bands, isolated = _branch_eigenvalues(model, omega, p, grid, backend, margin)
    return index, eigs.values, bands, isolated


def compute_sweep_spectra(model: ModelKind, omega: float, p_grid, grid: ChebGrid, backend: str = 'lapack',
                          margin: float = None, jobs: int = 1, progress: bool = False) -> list:
    '''
    Solve the spectral problem at every wavenumber of the grid, in a pool of `jobs` worker
    processes when jobs > 1. Results come back in the order of p_grid whatever the order of
    completion. Each entry is (p, eigenvalues, bands, isolated eigenvalues).

    :param model: The model.
    :param omega: The soliton frequency.
    :param p_grid: Wavenumbers.
    :param grid: The collocation grid.
    :param backend: Eigen backend.
    :param margin: Isolation margin.
    :param jobs: Number of worker processes.
    :param progress: Show a progress bar.
    '''
    arg_tuple_list = [(j, model, omega, float(p), grid, backend, margin) for j, p in enumerate(p_grid)]
    results = [None] * len(arg_tuple_list)
    pool = Pool(jobs) if jobs > 1 else None
    try:
        stream = pool.imap_unordered(_sweep_point, arg_tuple_list) if pool else map(_sweep_point, arg_tuple_list)
        for index, values, bands, isolated in tqdm(stream, total=len(arg_tuple_list),
                                                   desc='Solving spectral problems', disable=not progress):
            results[index] = (float(p_grid[index]), values, bands, isolated)
    finally:
        if pool:
            pool.close()
            pool.join()
    return results


def _match_radius(branch: TrackedBranch, step: float, slope_bound: float) -> float:
    jumps = branch.jumps()[-2:]
    if jumps:
        return max(3.0 * float(np.median(jumps)), 0.05 * step)
    return max(0.05 * step, 2.0 * step * slope_bound)


def _prediction(branch: TrackedBranch) -> complex:
    if len(branch.points) < 2:
        return branch.last_value
    (p0, v0, _), (p1, v1, _) = branch.points[-2:]
    return v1 + (v1 - v0)


def _add_point(branch: TrackedBranch, p: float, value: complex, residual: float, label: str):
    if branch.classes:
        previous = branch.classes[-1]
        kind = EVENT_KINDS.get((previous, label))
        if kind is not None:
            branch.events.append({'p': p, 'branch_id': branch.branch_id, 'kind': kind,
                                  'from': previous, 'to': label, 'lambda': value})
    branch.points.append((p, value, residual))
    branch.classes.append(label)


def track_branches(model: ModelKind, omega: float, p_grid, grid: ChebGrid, backend: str = 'lapack',
                   margin: float = None, class_tol: float = CLASS_TOL, origin_tol: float = ORIGIN_TOL,
                   jobs: int = 1, progress: bool = False, spectra: list = None) -> list:
    '''
    Follow the isolated eigenvalues across an ascending grid of wavenumbers by nearest
    neighbour continuation. At the first wavenumber the eigenvalues closest to the predicted
    +-p Lambda_r and +-i p Lambda_i open branches 0 to 3. A branch accepts the candidate with the
    smallest jump |d lambda| below its match radius (three times the median of its last two
    jumps, at least 0.05 times the step), ties going to the candidate closest to the linear
    extrapolation. Branches without a candidate are absorbed into the continuous spectrum and
    unmatched candidates open new branches.

    :param model: The model.
    :param omega: The soliton frequency.
    :param p_grid: Ascending wavenumbers.
    :param grid: The collocation grid.
    :param backend: Eigen backend.
    :param margin: Isolation margin.
    :param class_tol: Relative tolerance of the axis classification.
    :param origin_tol: Radius of the kernel cluster.
    :param jobs: Worker processes for the eigensolves.
    :param progress: Show a progress bar.
    :param spectra: Precomputed output of compute_sweep_spectra.
    '''
    p_grid = np.asarray(p_grid, dtype=float)
    if p_grid.size == 0:
        raise ArgumentError('empty wavenumber grid')
    if np.any(np.diff(p_grid) <= 0):
        raise ArgumentError('wavenumber grid must be strictly ascending')
    if spectra is None:
        spectra = compute_sweep_spectra(model, omega, p_grid, grid, backend, margin, jobs, progress)

    prediction = asymptotic_prediction(model, omega, corrections=False)
    slope_bound = max(prediction.lambda_r, prediction.lambda_i, 1.0)
    branches = []

    def open_branch(p, value, values, emerged):
        branch = TrackedBranch(len(branches))
        branches.append(branch)
        _add_point(branch, p, value, mirror_mismatch(value, values, model), classify_eigenvalue(value, class_tol, origin_tol))
        if emerged:
            branch.events.append({'p': p, 'branch_id': branch.branch_id, 'kind': 'emergence',
                                  'from': None, 'to': branch.classes[-1], 'lambda': value})

    p0, values0, _, isolated0 = spectra[0]
    remaining = list(isolated0)
    seeds = [p0 * prediction.lambda_r, -p0 * prediction.lambda_r,
             1j * p0 * prediction.lambda_i, -1j * p0 * prediction.lambda_i]
    for seed in seeds:
        if not remaining or seed == 0:
            continue
        distances = np.abs(np.array(remaining) - seed)
        nearest = int(np.argmin(distances))
        if distances[nearest] <= SEED_RADIUS * abs(seed):
            open_branch(p0, remaining.pop(nearest), values0, False)
    for value in remaining:
        open_branch(p0, value, values0, False)

    previous_p = p0
    for p, values, _, isolated in spectra[1:]:
        step = p - previous_p
        active = [b for b in branches if b.active]
        proposals = []
        for branch in active:
            radius = _match_radius(branch, step, slope_bound)
            predicted = _prediction(branch)
            jumps = np.abs(isolated - branch.last_value)
            inside = np.nonzero(jumps <= radius)[0]
            if inside.size > 1:
                warnings.warn(f'ambiguous continuation of branch {branch.branch_id} at p={p}: '
                              f'{inside.size} candidates within {radius:.3e}')
            for index in inside:
                proposals.append((jumps[index], abs(isolated[index] - predicted), branch.branch_id, int(index)))

        taken_branches, taken_candidates = set(), set()
        for _, _, branch_id, index in sorted(proposals):
            if branch_id in taken_branches or index in taken_candidates:
                continue
            taken_branches.add(branch_id)
            taken_candidates.add(index)
            value = isolated[index]
            _add_point(branches[branch_id], p, value, mirror_mismatch(value, values, model),
                       classify_eigenvalue(value, class_tol, origin_tol))

        for branch in active:
            if branch.branch_id in taken_branches:
                continue
            predicted = _prediction(branch)
            landing = values[int(np.argmin(np.abs(values - predicted)))]
            branch.events.append({'p': p, 'branch_id': branch.branch_id, 'kind': 'absorption',
                                  'from': branch.classes[-1], 'to': ABSORBED, 'lambda': landing})
            branch.points.append((p, landing, mirror_mismatch(landing, values, model)))
            branch.classes.append(ABSORBED)
            branch.active = False

        for index, value in enumerate(isolated):
            if index not in taken_candidates:
                open_branch(p, value, values, True)
        previous_p = p
    return branches


def sweep_summary(branches: list, spectra: list, growth_tol: float = GROWTH_TOL) -> dict:
    '''
    Summarize a sweep: the largest growth rate, the wavenumbers with unstable isolated
    eigenvalues, the instability threshold p* (first grid point after the last unstable one,
    None when the instability persists to the end), the first wavenumber where the gap of the
    continuous spectrum has closed, the wavenumbers with complex quartets, and all events.

    :param branches: Output of track_branches.
    :param spectra: Output of compute_sweep_spectra for the same grid.
    :param growth_tol: Real part above which an eigenvalue counts as unstable.
    '''
    p_grid = [entry[0] for entry in spectra]
    unstable = set()
    quartets = set()
    max_growth = 0.0
    real_pair_final = False
    for branch in branches:
        for (p, value, _), label in zip(branch.points, branch.classes):
            if label == ABSORBED:
                continue
            max_growth = max(max_growth, float(value.real))
            if value.real > growth_tol:
                unstable.add(p)
                if label == REAL_PAIR and p == p_grid[-1]:
                    real_pair_final = True
            if label == COMPLEX_QUARTET:
                quartets.add(p)

    threshold = None
    if unstable and max(unstable) < p_grid[-1]:
        threshold = min(p for p in p_grid if p > max(unstable))
    gap_closure = next((entry[0] for entry in spectra if entry[2].gap_closed), None)
    events = sorted((event for branch in branches for event in branch.events),
                    key=lambda event: (event['p'], event['branch_id']))
    return {
        'max_growth_rate': max_growth,
        'unstable_p': sorted(unstable),
        'instability_threshold': threshold,
        'unstable_at_final_p': p_grid[-1] in unstable,
        'real_pair_at_final_p': real_pair_final,
        'gap_closure_p': gap_closure,
        'quartet_p': sorted(quartets),
        'events': events,
    }
