from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd

from src.chebyshev_grid import ChebGrid
from src.soliton_profiles import make_profile, eval_profile
from src.utils import ModelKind, ArgumentError, SIGMA, BLOCK_S, J_MATRIX, check_omega

GAP_TOL = 1e-14 # innermost band edges closer to the origin than this count as touching


class OperatorForm(Enum):
    FULL_SYSTEM = 'full'
    BLOCK_DIAGONALIZED = 'block'


# derivative coefficients: component k carries derivative_signs[k] * i * D
DERIVATIVE_SIGNS = {
    OperatorForm.FULL_SYSTEM: np.array([-1.0, 1.0, 1.0, -1.0]),
    OperatorForm.BLOCK_DIAGONALIZED: np.array([-1.0, 1.0, -1.0, 1.0]),
}
# coupling of the mass terms, the omega-diagonal added separately
MASS_COUPLING = {
    OperatorForm.FULL_SYSTEM: -np.array([[0.0, 0.0, 1.0, 0.0],
                                         [0.0, 0.0, 0.0, 1.0],
                                         [1.0, 0.0, 0.0, 0.0],
                                         [0.0, 1.0, 0.0, 0.0]]),
    OperatorForm.BLOCK_DIAGONALIZED: np.array([[0.0, -1.0, 0.0, 0.0],
                                               [-1.0, 0.0, 0.0, 0.0],
                                               [0.0, 0.0, 0.0, 1.0],
                                               [0.0, 0.0, 1.0, 0.0]]),
}
WEIGHT = {OperatorForm.FULL_SYSTEM: SIGMA, OperatorForm.BLOCK_DIAGONALIZED: BLOCK_S}
GN_BLOCK_COUPLING = np.array([[0.0, 0.0, 0.0, 1.0],
                              [0.0, 0.0, 1.0, 0.0],
                              [0.0, -1.0, 0.0, 0.0],
                              [-1.0, 0.0, 0.0, 0.0]]) # S^t (-i J) S divided by i


@dataclass(frozen=True, eq=False)
class StabilityOperator:
    '''
    Dense matrix A = -i W (H + E_p) of the spectral problem, where W is sigma for the full
    system and the block symplectic matrix for the block-diagonalized one. Unknowns are laid
    out component by component, each over all grid nodes.
    '''
    model: ModelKind
    omega: float
    p: float
    grid: ChebGrid = field(repr=False)
    matrix_a: np.ndarray = field(repr=False)
    form: OperatorForm = OperatorForm.BLOCK_DIAGONALIZED
    with_potential: bool = True

    @property
    def dimension(self) -> int:
        return self.matrix_a.shape[0]


@dataclass(frozen=True)
class SpectralBands:
    '''
    The continuous spectrum: half-lines {i s : direction * s >= direction * edge} on the
    imaginary axis, given as (edge, direction) pairs ordered as +Lambda_1, -Lambda_1,
    +Lambda_2, -Lambda_2.
    '''
    model: ModelKind
    omega: float
    p: float
    band_edges: tuple
    gap_closed: bool

    @property
    def half_gap(self) -> float:
        '''Distance from the origin to the innermost edge, zero once the gap has closed.'''
        if self.gap_closed:
            return 0.0
        return min(abs(edge) for edge, _ in self.band_edges)

    def distance(self, values) -> np.ndarray:
        '''
        Distance of eigenvalues from the union of the four half-lines.

        :param values: Complex eigenvalue(s).
        '''
        values = np.atleast_1d(np.asarray(values, dtype=complex))
        distances = []
        for edge, direction in self.band_edges:
            outside = np.maximum(direction * (edge - values.imag), 0.0)
            distances.append(np.hypot(values.real, outside))
        return np.min(distances, axis=0)


def potential_matrix(model: ModelKind, form: OperatorForm, u) -> np.ndarray:
    '''
    The potential W as a (4, 4, M) array of samples for soliton samples u.

    :param model: The model.
    :param form: Full or block-diagonalized system.
    :param u: Soliton samples at the M grid nodes.
    '''
    u = np.asarray(u, dtype=complex)
    ub = np.conj(u)
    a = np.abs(u) ** 2
    u2, ub2 = u * u, ub * ub
    zero = np.zeros_like(u)
    if form is OperatorForm.FULL_SYSTEM:
        if model is ModelKind.MASSIVE_THIRRING:
            rows = [[a, zero, u2, a],
                    [zero, a, a, ub2],
                    [ub2, a, a, zero],
                    [a, u2, zero, a]]
        else:
            rows = [[a, ub2, u2 + 2.0 * ub2, a],
                    [u2, a, a, 2.0 * u2 + ub2],
                    [2.0 * u2 + ub2, a, a, u2],
                    [a, u2 + 2.0 * ub2, ub2, a]]
    else:
        if model is ModelKind.MASSIVE_THIRRING:
            rows = [[2.0 * a, u2, zero, zero],
                    [ub2, 2.0 * a, zero, zero],
                    [zero, zero, zero, -u2],
                    [zero, zero, -ub2, zero]]
        else:
            rows = [[2.0 * a, u2 + 3.0 * ub2, zero, zero],
                    [3.0 * u2 + ub2, 2.0 * a, zero, zero],
                    [zero, zero, zero, -u2 - ub2],
                    [zero, zero, -u2 - ub2, zero]]
    return np.array(rows)


def transverse_matrix(model: ModelKind, form: OperatorForm, p: float) -> np.ndarray:
    '''4x4 constant transverse term E_p.'''
    if model is ModelKind.MASSIVE_THIRRING:
        return p * p * np.eye(4)
    if form is OperatorForm.FULL_SYSTEM:
        return -1j * p * J_MATRIX
    return 1j * p * GN_BLOCK_COUPLING


def hamiltonian_matrix(model: ModelKind, omega: float, p: float, grid: ChebGrid,
                       form: OperatorForm, with_potential: bool = True) -> np.ndarray:
    '''
    Assemble the self-adjoint part H + E_p as a dense 4(N+1) x 4(N+1) matrix. The derivative
    -i d/dx becomes -i D~_N, potentials become diagonal matrices of soliton samples.

    :param model: The model.
    :param omega: The soliton frequency.
    :param p: Transverse wavenumber.
    :param grid: The collocation grid.
    :param form: Full or block-diagonalized system.
    :param with_potential: Include the soliton potential; without it only the free operator remains.
    '''
    m = grid.size
    constant = omega * np.eye(4) + MASS_COUPLING[form] + transverse_matrix(model, form, p)
    if with_potential:
        u = eval_profile(make_profile(model, omega), grid.nodes_x)
        potential = potential_matrix(model, form, u)
    else:
        potential = np.zeros((4, 4, m), dtype=complex)

    h = np.zeros((4 * m, 4 * m), dtype=complex)
    identity = np.eye(m)
    for k in range(4):
        for l in range(4):
            block = constant[k, l] * identity + np.diag(potential[k, l])
            if k == l:
                block = block + DERIVATIVE_SIGNS[form][k] * 1j * grid.d_scaled
            h[k * m:(k + 1) * m, l * m:(l + 1) * m] = block
    return h


def apply_weight(weight: np.ndarray, h: np.ndarray) -> np.ndarray:
    '''Multiply by weight (x) identity without forming the Kronecker product.'''
    m = h.shape[0] // 4
    stacked = h.reshape(4, m, h.shape[1])
    return np.einsum('kl,lmn->kmn', weight, stacked).reshape(h.shape)


def assemble(model: ModelKind, omega: float, p: float, grid: ChebGrid,
             form: OperatorForm = OperatorForm.BLOCK_DIAGONALIZED, with_potential: bool = True) -> StabilityOperator:
    '''
    Assemble the stability operator. Since the weight squares to the identity, the problem
    i lambda W V = (H + E_p) V is equivalent to the standard eigenvalue problem
    lambda V = -i W (H + E_p) V.

    :param model: The model.
    :param omega: The soliton frequency.
    :param p: Transverse wavenumber.
    :param grid: The collocation grid.
    :param form: Full or block-diagonalized system.
    :param with_potential: Include the soliton potential.
    '''
    if not isinstance(grid, ChebGrid):
        raise ArgumentError('a Chebyshev grid is required to assemble the operator')
    if not isinstance(model, ModelKind) or not isinstance(form, OperatorForm):
        raise ArgumentError(f'unsupported model/form combination {model!r}, {form!r}')
    omega = check_omega(model, omega)
    h = hamiltonian_matrix(model, omega, float(p), grid, form, with_potential)
    matrix_a = -1j * apply_weight(WEIGHT[form], h)
    return StabilityOperator(model, omega, float(p), grid, matrix_a, form, with_potential)


def recover_hamiltonian(operator: StabilityOperator) -> np.ndarray:
    '''Undo the reduction: i W A = H + E_p.'''
    return 1j * apply_weight(WEIGHT[operator.form], operator.matrix_a)


def derivative_part(operator: StabilityOperator) -> np.ndarray:
    '''The block-diagonal derivative terms of H, which are not self-adjoint in the nodal inner product.'''
    m = operator.grid.size
    part = np.zeros((4 * m, 4 * m), dtype=complex)
    for k, sign in enumerate(DERIVATIVE_SIGNS[operator.form]):
        part[k * m:(k + 1) * m, k * m:(k + 1) * m] = sign * 1j * operator.grid.d_scaled
    return part


def boundary_indices(grid: ChebGrid) -> np.ndarray:
    '''Rows of the endpoint nodes x = +-inf for all four components.'''
    m = grid.size
    return np.array([k * m + j for k in range(4) for j in (0, m - 1)])


def continuous_bands(model: ModelKind, omega: float, p: float) -> SpectralBands:
    '''
    Edges of the continuous spectrum. For the massive Thirring model the bands start at
    +-i(1 + omega + p^2) and +-i(1 - omega - p^2), so the gap closes once |p| >= sqrt(1 - omega);
    for the massive Gross-Neveu model they start at +-i(sqrt(1 + p^2) +- omega) and never overlap.

    :param model: The model.
    :param omega: The soliton frequency.
    :param p: Transverse wavenumber.
    '''
    omega = check_omega(model, omega)
    if model is ModelKind.MASSIVE_THIRRING:
        outer = 1.0 + omega + p * p
        inner = 1.0 - omega - p * p
    else:
        root = np.sqrt(1.0 + p * p)
        outer = root + omega
        inner = root - omega
    edges = ((outer, 1.0), (-outer, -1.0), (inner, 1.0), (-inner, -1.0))
    gap_closed = min(outer, inner) <= GAP_TOL
    return SpectralBands(model, omega, float(p), edges, bool(gap_closed))


def write_matrix_dump(operator: StabilityOperator, path: str, header: str = None):
    '''
    Write the nonzero entries of the operator as CSV rows `row, col, re, im` for external
    cross-validation.

    :param operator: The assembled operator.
    :param path: Output file.
    :param header: Optional comment line written above the table.
    '''
    rows, cols = np.nonzero(operator.matrix_a)
    values = operator.matrix_a[rows, cols]
    frame = pd.DataFrame({'row': rows, 'col': cols, 're': values.real, 'im': values.imag})
    with open(path, 'w', newline='') as f:
        if header:
            f.write(header + '\n')
        frame.to_csv(f, index=False, float_format='%.17g')
