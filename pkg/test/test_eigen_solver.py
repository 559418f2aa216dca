from src.eigen_solver import *
from src.spectrum_analyzer import match_spectra
from src.asymptotic_analytics import kernel_correlation, kernel_vector_samples, kernel_vectors, slopes
from src.chebyshev_grid import build_grid
from src.stability_operator import assemble
from src.utils import ModelKind
import src.eigen_solver as eigen_solver
import unittest
import warnings
import numpy as np


def random_matrix(n, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


class TestEigenSolver(unittest.TestCase):
    def setUp(self):
        self.matrix = random_matrix(40, 7)
        self.norm = np.linalg.norm(self.matrix)

    def test_trace_and_determinant(self):
        values = eigvals(self.matrix).values
        trace_error = abs(np.sum(values) - np.trace(self.matrix)) / self.norm
        _, log_det = np.linalg.slogdet(self.matrix)
        det_error = abs(np.sum(np.log(np.abs(values))) - log_det) / abs(log_det)
        self.assertTrue(trace_error <= 1e-10 and det_error <= 1e-10)

    def test_agrees_with_lapack(self):
        native = eigvals(self.matrix, backend='qr')
        reference = eigvals(self.matrix, backend='lapack')
        self.assertLessEqual(np.max(match_spectra(native, reference)) / self.norm, 1e-10)

    def test_similarity_invariance(self):
        rng = np.random.default_rng(3)
        transform = np.eye(40) + 0.1 * rng.standard_normal((40, 40))
        similar = np.linalg.solve(transform, self.matrix @ transform)
        distances = match_spectra(eigvals(self.matrix), eigvals(similar))
        self.assertLessEqual(np.max(distances) / self.norm, 1e-8)

    def test_scaling(self):
        scale = 2.5 - 1.5j
        distances = match_spectra(scale * eigvals(self.matrix).values, eigvals(scale * self.matrix))
        self.assertLessEqual(np.max(distances) / (abs(scale) * self.norm), 1e-10)

    def test_sorted_output(self):
        values = eigvals(self.matrix).values
        keys = list(zip(values.imag, values.real))
        self.assertEqual(keys, sorted(keys))

    def test_vectors(self):
        result = eigvals(random_matrix(64, 11), compute_vectors=True)
        unit = np.allclose(np.linalg.norm(result.vectors, axis=0), 1.0)
        self.assertTrue(unit and np.max(result.residuals) <= 1e-10 and result.converged)

    def test_lapack_vectors(self):
        result = eigvals(self.matrix, backend='lapack', compute_vectors=True)
        self.assertLessEqual(np.max(result.residuals), 1e-10)

    def test_rotation(self):
        values = eigvals(np.array([[0.0, 1.0], [-1.0, 0.0]])).values
        self.assertTrue(np.allclose(values, [-1j, 1j], atol=1e-14))

    def test_triangular(self):
        matrix = np.triu(random_matrix(12, 5))
        distances = match_spectra(eigvals(matrix), np.diag(matrix))
        self.assertLessEqual(np.max(distances), 1e-12)

    def test_real_nonsymmetric(self):
        matrix = np.array([[0.0, 0.0, 6.0], [1.0, 0.0, -11.0], [0.0, 1.0, 6.0]]) # roots 1, 2, 3
        values = eigvals(matrix).values
        self.assertTrue(np.allclose(np.sort(values.real), [1.0, 2.0, 3.0], atol=1e-10) and np.max(np.abs(values.imag)) <= 1e-10)

    def test_one_by_one(self):
        result = eigvals(np.array([[2.0 - 1.0j]]))
        self.assertEqual(result.values[0], 2.0 - 1.0j)
        self.assertEqual(len(result), 1)

    def test_eigvecs_for(self):
        values = eigvals(self.matrix, backend='lapack').values[:3]
        result = eigvecs_for(self.matrix, values)
        self.assertTrue(result.converged and result.vectors.shape == (40, 3) and np.max(result.residuals) <= 1e-10)

    def test_eigvecs_for_warns(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always')
            result = eigvecs_for(np.diag([1.0, 2.0, 3.0]), [1.5])
        self.assertTrue(not result.converged and len(caught) == 1)

    def test_eigvecs_for_operator_correlation(self):
        for model, omega, expected, other in [(ModelKind.MASSIVE_THIRRING, 0.0, 'Vt', None),
                                              (ModelKind.GROSS_NEVEU, 2.0 / 3.0, 'Vg', 'Vt')]:
            grid = build_grid(200)
            matrix = assemble(model, omega, 0.05, grid).matrix_a
            values = eigvals(matrix, backend='lapack').values
            target = 0.05 * slopes(model, omega)[0]
            value = values[np.argmin(np.abs(values - target))]
            with warnings.catch_warnings():
                warnings.simplefilter('ignore')
                vector = eigvecs_for(matrix, [value]).vectors[:, 0]
            samples = kernel_vector_samples(kernel_vectors(model, omega), grid.nodes_x)
            self.assertGreaterEqual(kernel_correlation(vector, samples[expected]), 0.95)
            if other is not None:
                self.assertLessEqual(kernel_correlation(vector, samples[other]), 0.1)

    def test_invalid_input(self):
        with self.assertRaises(ArgumentError):
            eigvals(np.zeros((3, 4)))
        with self.assertRaises(ArgumentError):
            eigvals(np.array([[np.nan]]))
        with self.assertRaises(ArgumentError):
            eigvals(np.eye(3), backend='arpack')

    def test_non_convergence(self):
        budget = eigen_solver.SWEEPS_PER_DIMENSION
        eigen_solver.SWEEPS_PER_DIMENSION = 0
        try:
            with self.assertRaises(NonConvergenceError) as context:
                eigvals(self.matrix)
        finally:
            eigen_solver.SWEEPS_PER_DIMENSION = budget
        diagnostic = context.exception.diagnostic
        self.assertTrue(diagnostic['iterations'] == 1 and 'partial_eigenvalues' in diagnostic)


if __name__ == '__main__':
    unittest.main()
