import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from src.soliton_profiles import SolitonProfile, make_profile, eval_profile, eval_profile_derivative
from src.utils import (ModelKind, BLOCK_S, BLOCK_P, ConsistencyError, NonConvergenceError,
                       check_omega, check_omega_range)

OMEGA_STEP = 1e-5 # step of the central difference in omega
RICHARDSON_TOL = 1e-6 # relative disagreement allowed between steps h and 2h
QUADRATURE_EPSABS = 1e-13
QUADRATURE_EPSREL = 1e-11
QUADRATURE_LIMIT = 2000 # maximum number of subintervals
TAIL_DECADES = 16 # cut the real line where exp(-mu X) < 10^-16
DENOMINATOR_TOL = 1e-12
CORRECTION_RANGE = {ModelKind.GROSS_NEVEU: (0.05, 0.95), ModelKind.MASSIVE_THIRRING: (-0.95, 0.95)}

KERNEL_NAMES = {
    ModelKind.MASSIVE_THIRRING: ('Vt', 'Vg', 'tVt', 'tVg'),
    ModelKind.GROSS_NEVEU: ('Vt', 'Vg', 'tVt', 'tVg', 'cVt', 'cVg'),
}
# entries <a, W b> that do not vanish; every other pairing is zero in the continuum
NONZERO_PAIRINGS = {
    ModelKind.MASSIVE_THIRRING: {
        ('S', 'Vt', 'tVt'), ('S', 'tVt', 'Vt'), ('S', 'Vg', 'tVg'), ('S', 'tVg', 'Vg'),
        ('I', 'Vt', 'Vt'), ('I', 'Vg', 'Vg'), ('I', 'tVt', 'tVt'), ('I', 'tVg', 'tVg'),
    },
    ModelKind.GROSS_NEVEU: {
        ('S', 'Vt', 'tVt'), ('S', 'tVt', 'Vt'), ('S', 'Vg', 'tVg'), ('S', 'tVg', 'Vg'),
        ('S', 'tVg', 'cVt'), ('S', 'cVt', 'tVg'),
        ('P', 'tVt', 'tVg'), ('P', 'tVg', 'tVt'), ('P', 'Vt', 'cVt'), ('P', 'cVt', 'Vt'),
        ('P', 'Vg', 'cVg'), ('P', 'cVg', 'Vg'), ('P', 'cVt', 'cVg'), ('P', 'cVg', 'cVt'),
    },
}
WEIGHTS = {'S': BLOCK_S, 'P': BLOCK_P, 'I': np.eye(4)}
PAIRING_WEIGHTS = {ModelKind.MASSIVE_THIRRING: ('S', 'I'), ModelKind.GROSS_NEVEU: ('S', 'P')}


@dataclass(frozen=True)
class AsymptoticPrediction:
    model: ModelKind
    omega: float
    lambda_r: float
    lambda_i: float
    alpha: complex = None
    beta: complex = None


@dataclass(frozen=True)
class KernelVectors:
    '''
    Eigenvectors and generalized eigenvectors of the block-diagonalized operator at p = 0,
    and for the massive Gross-Neveu model the two auxiliary vectors of the first order
    problem in p. The names used throughout are Vt, Vg (kernel), tVt, tVg (generalized
    kernel) and cVt, cVg (auxiliary, Gross-Neveu only).
    '''
    model: ModelKind
    omega: float
    profile: SolitonProfile
    omega_step: float = OMEGA_STEP

    @property
    def names(self) -> tuple:
        return KERNEL_NAMES[self.model]

    def omega_derivative(self, x, step: float = None):
        '''Central difference of U in omega.'''
        h = self.omega_step if step is None else step
        upper = make_profile(self.model, self.omega + h)
        lower = make_profile(self.model, self.omega - h)
        return (eval_profile(upper, x) - eval_profile(lower, x)) / (2.0 * h)

    def sample(self, x) -> dict:
        '''
        Evaluate every vector at the points x. Each entry of the result is a (4, len(x))
        complex array whose rows are the four components.

        :param x: Points, possibly including +-inf.
        '''
        x = np.atleast_1d(np.asarray(x, dtype=float))
        omega = self.omega
        u = eval_profile(self.profile, x)
        ub = np.conj(u)
        du = eval_profile_derivative(self.profile, x)
        wu = self.omega_derivative(x)
        zero = np.zeros_like(u)
        xf = np.where(np.isfinite(x), x, 0.0)

        vectors = {
            'Vt': np.array([du, np.conj(du), zero, zero]),
            'Vg': 1j * np.array([zero, zero, u, -ub]),
            'tVt': 1j * omega * xf * np.array([zero, zero, u, -ub]) - 0.5 * np.array([zero, zero, u, ub]),
            'tVg': np.array([wu, np.conj(wu), zero, zero]),
        }
        if self.model is ModelKind.GROSS_NEVEU:
            vectors['cVt'] = -0.5 * np.array([zero, zero, ub, -u])
            vectors['cVg'] = -0.5 / omega * np.array([ub, -u, zero, zero])
        return vectors


def kernel_vectors(model: ModelKind, omega: float) -> KernelVectors:
    '''
    Build the kernel vectors of a model at frequency omega and check the omega-derivative by
    comparing the central differences with steps h and 2h on a few points.

    :param model: The model.
    :param omega: The soliton frequency.
    '''
    profile = make_profile(model, omega)
    kernel = KernelVectors(model, profile.omega, profile)
    probe = np.linspace(-3.0, 3.0, 13) / profile.mu
    fine = kernel.omega_derivative(probe)
    coarse = kernel.omega_derivative(probe, 2.0 * kernel.omega_step)
    mismatch = np.max(np.abs(fine - coarse))
    if mismatch > RICHARDSON_TOL * max(1.0, np.max(np.abs(fine))):
        warnings.warn(f'omega-derivative of the soliton is unreliable at omega={omega}: '
                      f'steps h and 2h differ by {mismatch:.3e}')
    return kernel


def kernel_vector_samples(kernel: KernelVectors, nodes_x, names=None) -> dict:
    '''
    Samples of the kernel vectors in the block layout of the stability operator: the four
    components are stacked one after another, each over all grid nodes.

    :param kernel: The kernel vectors.
    :param nodes_x: Grid nodes, with infinite endpoints.
    :param names: Subset of vector names, all by default.
    '''
    vectors = kernel.sample(nodes_x)
    names = kernel.names if names is None else names
    return {name: vectors[name].reshape(-1) for name in names}


def kernel_correlation(vector, samples) -> float:
    '''|<v, w>| / (|v| |w|) for two grid vectors.'''
    vector = np.asarray(vector).ravel()
    samples = np.asarray(samples).ravel()
    return float(np.abs(np.vdot(samples, vector)) / (np.linalg.norm(vector) * np.linalg.norm(samples)))


def _cutoff(profile: SolitonProfile) -> float:
    return TAIL_DECADES * np.log(10.0) / profile.mu


def integrate_symmetric(integrand, cutoff: float, what: str):
    '''
    Integrate a complex vector-valued function over (-X, X). We fold the interval onto (0, X)
    and integrate f(x) + f(-x), so odd parts cancel pointwise. Real and imaginary parts are
    passed to quad_vec as one real vector.

    :param integrand: Function taking an array of points and returning (k, len(points)) values.
    :param cutoff: Half length X of the interval.
    :param what: Name of the quantity, used in the error message.
    '''
    def folded(x):
        values = integrand(np.array([x, -x]))
        total = values[:, 0] + values[:, 1]
        return np.concatenate([total.real, total.imag])

    result, error, info = quad_vec(folded, 0.0, cutoff, epsabs=QUADRATURE_EPSABS, epsrel=QUADRATURE_EPSREL,
                                   limit=QUADRATURE_LIMIT, norm='max', full_output=True)
    if info.status != 0:
        raise NonConvergenceError(f'quadrature of {what} did not converge, achieved error {error:.3e}',
                                  {'achieved_error': float(error), 'intervals': int(info.intervals.shape[0])})
    half = result.shape[0] // 2
    return result[:half] + 1j * result[half:]


def mtm_norms(omega: float) -> dict:
    '''
    Closed-form integrals of the massive Thirring soliton: |U|^2, |U'|^2, the momentum-like
    integral int(omega |U|^2 + (i/2)(conj(U) U' - U conj(U)')) = 2 sqrt(1 - omega^2), and the
    derivative of |U|^2 in omega.

    :param omega: Frequency in (-1, 1).
    '''
    omega = check_omega(ModelKind.MASSIVE_THIRRING, omega)
    mu = np.sqrt(1.0 - omega * omega)
    angle = np.arctan(np.sqrt((1.0 - omega) / (1.0 + omega)))
    return {
        'norm_sq_u': 4.0 * angle,
        'norm_sq_du': -4.0 * omega * mu + 4.0 * (1.0 + omega * omega) * angle,
        'momentum_like': 2.0 * mu,
        'd_norm_sq_u': -2.0 / mu,
    }


def gn_norms(omega: float) -> dict:
    '''
    Closed-form integrals of the massive Gross-Neveu soliton: |U|^2 = mu/omega, its derivative
    in omega, and I(omega) = (1 - omega^2) int_0^inf dz / (1 + omega cosh z)^2, which equals
    (2/mu) atanh(mu/(1 + omega)) - 1 = -1 - (1/mu) log((1 - mu)/omega).

    :param omega: Frequency in (0, 1).
    '''
    omega = check_omega(ModelKind.GROSS_NEVEU, omega)
    mu = np.sqrt(1.0 - omega * omega)
    return {
        'norm_sq_u': mu / omega,
        'd_norm_sq_u': -1.0 / (omega * omega * mu),
        'i_omega': 2.0 / mu * np.arctanh(mu / (1.0 + omega)) - 1.0,
    }


def norms_by_quadrature(model: ModelKind, omega: float) -> dict:
    '''
    The integrals entering the slopes, computed by quadrature of the soliton instead of closed
    forms: norm_sq_u, norm_sq_du, d_norm_sq_u (from the omega-difference of U), the phase
    integral q = (i/2) int (conj(U) U' - U conj(U)') and momentum_like = omega |U|^2 + q.

    :param model: The model.
    :param omega: The soliton frequency.
    '''
    kernel = kernel_vectors(model, omega)
    profile = kernel.profile

    def integrand(x):
        u = eval_profile(profile, x)
        du = eval_profile_derivative(profile, x)
        wu = kernel.omega_derivative(x)
        return np.array([np.abs(u) ** 2,
                         np.abs(du) ** 2,
                         2.0 * np.real(np.conj(u) * wu),
                         -np.imag(np.conj(u) * du)])

    values = integrate_symmetric(integrand, _cutoff(profile), 'soliton norms').real
    norm_sq_u, norm_sq_du, d_norm_sq_u, phase = values
    return {
        'norm_sq_u': norm_sq_u,
        'norm_sq_du': norm_sq_du,
        'd_norm_sq_u': d_norm_sq_u,
        'phase': phase,
        'momentum_like': omega * norm_sq_u + phase,
    }


def slopes(model: ModelKind, omega: float) -> tuple:
    '''Leading order slopes (Lambda_r, Lambda_i) of the eigenvalues splitting from zero.'''
    if model is ModelKind.MASSIVE_THIRRING:
        norms = mtm_norms(omega)
        mu_sq = 1.0 - omega * omega
        lambda_r = mu_sq ** -0.25 * np.sqrt(norms['norm_sq_du'])
        lambda_i = mu_sq ** 0.25 * np.sqrt(norms['norm_sq_u'])
    else:
        norms = gn_norms(omega)
        lambda_r = np.sqrt(1.0 - omega * omega)
        lambda_i = np.sqrt(norms['i_omega'] / (1.0 + norms['i_omega']))
    return float(lambda_r), float(lambda_i)


def quadratic_residuals(model: ModelKind, omega: float) -> dict:
    '''
    Residuals of the scalar equations that define Lambda_r and Lambda_i when every coefficient
    comes from quadrature. For the massive Thirring model these are
    Lambda_r^2 int(omega|U|^2 + q) = 2|U'|^2 and -Lambda_i^2 d|U|^2/domega = 2|U|^2; for the
    massive Gross-Neveu model Lambda_r^2 d|U|^2/domega + |U|^2/omega = 0 and
    -Lambda_i^2 (omega |U|^2 + q) + q = 0.

    :param model: The model.
    :param omega: The soliton frequency.
    '''
    lambda_r, lambda_i = slopes(model, omega)
    norms = norms_by_quadrature(model, omega)
    if model is ModelKind.MASSIVE_THIRRING:
        real_axis = lambda_r ** 2 * norms['momentum_like'] - 2.0 * norms['norm_sq_du']
        imaginary_axis = -lambda_i ** 2 * norms['d_norm_sq_u'] - 2.0 * norms['norm_sq_u']
    else:
        real_axis = lambda_r ** 2 * norms['d_norm_sq_u'] + norms['norm_sq_u'] / omega
        imaginary_axis = -lambda_i ** 2 * norms['momentum_like'] + norms['phase']
    return {'real_axis': float(real_axis), 'imaginary_axis': float(imaginary_axis)}


def projection_matrix_elements(model: ModelKind, omega: float) -> dict:
    '''
    Compute the pairings <a, W b> of the kernel vectors by quadrature, with the complex
    conjugate taken on the first slot. The weights are the block symplectic matrix 'S' for
    both models, the identity 'I' (Gram matrix) for the massive Thirring model and the
    transverse coupling 'P' for the massive Gross-Neveu model. Keys are (weight, a, b).

    :param model: The model.
    :param omega: The soliton frequency.
    '''
    low, high = CORRECTION_RANGE[model]
    omega = check_omega_range(model, omega, low, high, 'projection matrix elements')
    kernel = kernel_vectors(model, omega)
    names = kernel.names
    keys = [(w, a, b) for w in PAIRING_WEIGHTS[model] for a in names for b in names]

    def integrand(x):
        vectors = kernel.sample(x)
        weighted = {w: {b: WEIGHTS[w] @ vectors[b] for b in names} for w in PAIRING_WEIGHTS[model]}
        return np.array([np.sum(np.conj(vectors[a]) * weighted[w][b], axis=0) for w, a, b in keys])

    values = integrate_symmetric(integrand, _cutoff(kernel.profile), 'projection matrix elements')
    return dict(zip(keys, values))


def zero_pattern(model: ModelKind) -> list:
    '''Keys of the pairings that vanish in the continuum.'''
    names = KERNEL_NAMES[model]
    nonzero = NONZERO_PAIRINGS[model]
    return [(w, a, b) for w in PAIRING_WEIGHTS[model] for a in names for b in names if (w, a, b) not in nonzero]


def _correction_quotients(elements: dict, lambda_r: float, lambda_i: float) -> tuple:
    e = elements
    lr2, li2 = lambda_r ** 2, lambda_i ** 2
    alpha_denominator = 1j * e[('S', 'tVt', 'Vt')] * (lr2 + li2)
    beta_denominator = -1j * e[('S', 'tVg', 'Vg')] * (li2 + lr2)
    if abs(alpha_denominator) <= DENOMINATOR_TOL or abs(beta_denominator) <= DENOMINATOR_TOL:
        raise ConsistencyError(f'vanishing denominator in the correction coefficients: '
                               f'{abs(alpha_denominator):.3e}, {abs(beta_denominator):.3e}')
    alpha = (lr2 * (e[('P', 'tVt', 'tVg')] + 1j * e[('S', 'cVt', 'tVg')]) - e[('P', 'cVt', 'cVg')]) / alpha_denominator
    beta = (li2 * (1j * e[('S', 'cVg', 'tVt')] - e[('P', 'tVg', 'tVt')]) - e[('P', 'cVg', 'cVt')]) / beta_denominator
    return complex(alpha), complex(beta), complex(alpha_denominator), complex(beta_denominator)


def compute_corrections(omega: float, elements: dict = None) -> dict:
    '''
    Coefficients alpha and beta of the kernel admixture in the first order eigenvectors of
    the massive Gross-Neveu problem. They are quotients of projection matrix elements with
    denominators i<tVt, S Vt>(Lambda_r^2 + Lambda_i^2) and -i<tVg, S Vg>(Lambda_i^2 + Lambda_r^2).

    :param omega: Frequency in [0.05, 0.95].
    :param elements: Precomputed projection matrix elements, computed when omitted.
    '''
    if elements is None:
        elements = projection_matrix_elements(ModelKind.GROSS_NEVEU, omega)
    lambda_r, lambda_i = slopes(ModelKind.GROSS_NEVEU, omega)
    alpha, beta, alpha_denominator, beta_denominator = _correction_quotients(elements, lambda_r, lambda_i)
    return {'alpha': alpha, 'beta': beta,
            'alpha_denominator': alpha_denominator, 'beta_denominator': beta_denominator}


def _pairing_block(elements: dict, weight: str, rows: tuple, cols: tuple) -> np.ndarray:
    return np.array([[elements[(weight, a, b)] for b in cols] for a in rows])


def second_order_residual(omega: float, elements: dict = None) -> float:
    '''
    Largest magnitude on the diagonal of the second order solvability matrix of the massive
    Gross-Neveu problem, for both branches Lambda_1^2 = Lambda_r^2 and Lambda_1^2 = -Lambda_i^2.
    A vanishing diagonal means the eigenvalues have no correction of order p^2.

    :param omega: Frequency in [0.05, 0.95].
    :param elements: Precomputed projection matrix elements.
    '''
    if elements is None:
        elements = projection_matrix_elements(ModelKind.GROSS_NEVEU, omega)
    corrections = compute_corrections(omega, elements)
    lambda_r, lambda_i = slopes(ModelKind.GROSS_NEVEU, omega)
    admixture = np.array([[0.0, corrections['alpha']], [corrections['beta'], 0.0]])

    phi0, phi1, phi2 = ('Vt', 'Vg'), ('tVt', 'tVg'), ('cVt', 'cVg')
    s10 = _pairing_block(elements, 'S', phi1, phi0)
    p20 = _pairing_block(elements, 'P', phi2, phi0)
    s12 = _pairing_block(elements, 'S', phi1, phi2)
    s21 = _pairing_block(elements, 'S', phi2, phi1)
    p11 = _pairing_block(elements, 'P', phi1, phi1)
    p22 = _pairing_block(elements, 'P', phi2, phi2)

    worst = 0.0
    for lambda_sq in (lambda_r ** 2, -lambda_i ** 2):
        right = (1j * lambda_sq * s10 @ admixture + p20 @ admixture
                 + 1j * lambda_sq * (s12 - s21) - lambda_sq * p11 + p22)
        worst = max(worst, float(np.max(np.abs(np.diag(right)))))
    return worst


def asymptotic_prediction(model: ModelKind, omega: float, corrections: bool = True) -> AsymptoticPrediction:
    '''
    Slopes of the eigenvalues that split from zero for small p, lambda = +-p Lambda_r and
    lambda = +-i p Lambda_i, and for the massive Gross-Neveu model the correction coefficients
    alpha and beta when omega lies in the range where they are evaluated.

    :param model: The model.
    :param omega: The soliton frequency.
    :param corrections: Evaluate alpha and beta (Gross-Neveu only).
    '''
    omega = check_omega(model, omega)
    lambda_r, lambda_i = slopes(model, omega)
    alpha = beta = None
    low, high = CORRECTION_RANGE[ModelKind.GROSS_NEVEU]
    if corrections and model is ModelKind.GROSS_NEVEU and low <= omega <= high:
        values = compute_corrections(omega)
        alpha, beta = values['alpha'], values['beta']
    return AsymptoticPrediction(model, omega, lambda_r, lambda_i, alpha, beta)
