import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from src.utils import ArgumentError, NonConvergenceError

BACKENDS = ('qr', 'lapack')
SWEEPS_PER_DIMENSION = 30 # iteration budget of the QR algorithm is 30 * dimension
EXCEPTIONAL_SHIFT_PERIOD = 10 # iterations without deflation before an exceptional shift
VECTOR_TOL = 1e-8 # residual accepted for inverse iteration
INVERSE_ITERATIONS = 3
SHIFT_OFFSET = 1e-10 # relative offset keeping the shifted matrix nonsingular


@dataclass(frozen=True, eq=False)
class EigenSet:
    '''
    Eigenvalues sorted by (imaginary part, real part), with optional unit eigenvectors in the
    columns of `vectors` and their residuals |A v - lambda v| / |A|_F.
    '''
    values: np.ndarray
    vectors: np.ndarray = None
    residuals: np.ndarray = None
    iterations: int = 0
    converged: bool = True
    backend: str = 'qr'

    def __len__(self):
        return len(self.values)


def sort_order(values) -> np.ndarray:
    '''Indices sorting eigenvalues by imaginary part, then real part.'''
    values = np.asarray(values)
    return np.lexsort((values.real, values.imag))


def _check_matrix(matrix) -> np.ndarray:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
        raise ArgumentError(f'a nonempty square matrix is required, got shape {matrix.shape}')
    if not np.all(np.isfinite(matrix)):
        raise ArgumentError('matrix has non-finite entries')
    return matrix.astype(complex)


def _givens(x: complex, y: complex) -> np.ndarray:
    '''
    Unitary G with real cosine such that G [x, y]^T = [r, 0]^T.
    '''
    ax, ay = abs(x), abs(y)
    norm = np.hypot(ax, ay)
    if norm == 0.0:
        return np.eye(2, dtype=complex)
    if ax == 0.0:
        return np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)
    c = ax / norm
    s = (x / ax) * np.conj(y) / norm
    return np.array([[c, s], [-np.conj(s), c]], dtype=complex)


def _wilkinson_shift(a: complex, b: complex, c: complex, d: complex) -> complex:
    '''Eigenvalue of [[a, b], [c, d]] closest to d.'''
    half_trace = 0.5 * (a + d)
    root = np.sqrt(0.25 * (a - d) ** 2 + b * c + 0j)
    first, second = half_trace + root, half_trace - root
    return first if abs(first - d) <= abs(second - d) else second


def hessenberg_qr(h: np.ndarray) -> tuple:
    '''
    Eigenvalues of an upper Hessenberg matrix by the implicitly shifted single-shift QR
    algorithm. A subdiagonal entry is set to zero once
    |h[k, k-1]| <= eps (|h[k-1, k-1]| + |h[k, k]|), and the active window shrinks from the
    bottom. Only the active window is updated, which is enough for eigenvalues.

    :param h: Upper Hessenberg matrix, overwritten.
    '''
    n = h.shape[0]
    eps = np.finfo(float).eps
    scale = max(np.linalg.norm(h, ord='fro'), np.finfo(float).tiny)
    budget = SWEEPS_PER_DIMENSION * n
    iterations = 0
    stalled = 0
    hi = n - 1
    while hi > 0:
        lo = hi
        while lo > 0:
            neighbours = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if neighbours == 0.0:
                neighbours = scale
            if abs(h[lo, lo - 1]) <= eps * neighbours:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            stalled = 0
            continue

        iterations += 1
        stalled += 1
        if iterations > budget:
            raise NonConvergenceError(
                f'QR iteration did not converge within {budget} sweeps',
                {'iterations': iterations, 'converged': n - 1 - hi,
                 'active_window': (lo, hi), 'subdiagonal': complex(h[hi, hi - 1]),
                 'partial_eigenvalues': np.diag(h)[hi + 1:].copy()})

        if stalled % EXCEPTIONAL_SHIFT_PERIOD == 0:
            shift = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            shift = _wilkinson_shift(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])

        x = h[lo, lo] - shift
        y = h[lo + 1, lo]
        for k in range(lo, hi):
            g = _givens(x, y)
            start = max(lo, k - 1)
            h[k:k + 2, start:hi + 1] = g @ h[k:k + 2, start:hi + 1]
            stop = min(k + 3, hi + 1)
            h[lo:stop, k:k + 2] = h[lo:stop, k:k + 2] @ g.conj().T
            if k < hi - 1:
                x = h[k + 1, k]
                y = h[k + 2, k]
    return np.diag(h).copy(), iterations


def _residuals(matrix: np.ndarray, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    norm = max(np.linalg.norm(matrix, ord='fro'), np.finfo(float).tiny)
    return np.linalg.norm(matrix @ vectors - vectors * values, axis=0) / norm


def eigvals(matrix, backend: str = 'qr', compute_vectors: bool = False) -> EigenSet:
    '''
    Eigenvalues of a dense complex matrix. The 'qr' backend balances the matrix by a diagonal
    similarity with powers of two, reduces it to Hessenberg form and runs the shifted QR
    iteration above; the 'lapack' backend hands the whole problem to scipy.linalg.eig. When
    vectors are requested the 'qr' backend obtains them by inverse iteration.

    :param matrix: Square complex matrix.
    :param backend: Either 'qr' or 'lapack'.
    :param compute_vectors: Also return unit eigenvectors and residuals.
    '''
    matrix = _check_matrix(matrix)
    if backend not in BACKENDS:
        raise ArgumentError(f'unknown eigen backend {backend!r}, expected one of {BACKENDS}')

    if backend == 'lapack':
        if compute_vectors:
            values, vectors = la.eig(matrix, check_finite=False)
        else:
            values, vectors = la.eigvals(matrix, check_finite=False), None
        iterations = 0
    else:
        balanced, _ = la.matrix_balance(matrix, permute=False)
        h = la.hessenberg(balanced).astype(complex)
        values, iterations = hessenberg_qr(h)
        vectors = eigvecs_for(matrix, values).vectors if compute_vectors else None

    order = sort_order(values)
    values = values[order]
    residuals = None
    if vectors is not None:
        vectors = vectors[:, order]
        vectors = vectors / np.linalg.norm(vectors, axis=0)
        residuals = _residuals(matrix, values, vectors)
    return EigenSet(values, vectors, residuals, iterations, True, backend)


def _hessenberg_bands(h: np.ndarray) -> np.ndarray:
    '''Upper Hessenberg matrix in the banded storage of scipy.linalg.solve_banded.'''
    n = h.shape[0]
    rows, cols = np.nonzero(np.triu(np.ones((n, n), dtype=bool), -1))
    bands = np.zeros((n + 1, n), dtype=complex)
    bands[n - 1 + rows - cols, cols] = h[rows, cols]
    return bands


def eigvecs_for(matrix, selected_values, tol: float = VECTOR_TOL) -> EigenSet:
    '''
    Unit eigenvectors for selected eigenvalues by inverse iteration. The matrix is reduced once
    to Hessenberg form A = Q H Q^*; every shifted system H - s I is then solved as a banded
    system with one subdiagonal, so each selected eigenvalue costs O(n^2) and the vector is
    mapped back with Q. Vectors whose residual stays above `tol` are still returned, with a
    warning and `converged` set to False.

    :param matrix: Square complex matrix.
    :param selected_values: Eigenvalues (or close approximations) to compute vectors for.
    :param tol: Residual accepted for each vector.
    '''
    matrix = _check_matrix(matrix)
    selected = np.atleast_1d(np.asarray(selected_values, dtype=complex))
    n = matrix.shape[0]
    h, q = la.hessenberg(matrix, calc_q=True, check_finite=False)
    bands = _hessenberg_bands(np.asarray(h, dtype=complex))
    lower = 1 if n > 1 else 0
    if not lower:
        bands = bands[:1]
    start = np.random.default_rng(0).standard_normal(n) + 0j
    start /= np.linalg.norm(start)

    vectors = np.empty((n, selected.size), dtype=complex)
    for index, value in enumerate(selected):
        shift = value + SHIFT_OFFSET * (1.0 + abs(value)) * (1.0 + 1.0j)
        shifted = bands.copy()
        shifted[n - 1] -= shift
        y = start.copy()
        for _ in range(INVERSE_ITERATIONS):
            y = la.solve_banded((lower, n - 1), shifted, y, check_finite=False)
            y /= np.linalg.norm(y)
        v = q @ y
        vectors[:, index] = v / np.linalg.norm(v)

    residuals = _residuals(matrix, selected, vectors)
    converged = bool(np.all(residuals <= tol))
    if not converged:
        worst = int(np.argmax(residuals))
        warnings.warn(f'inverse iteration for eigenvalue {selected[worst]:.6g} reached residual '
                      f'{residuals[worst]:.3e} only; the eigenvalue may belong to a defective cluster')
    return EigenSet(selected, vectors, residuals, INVERSE_ITERATIONS, converged, 'inverse')
