from enum import Enum

import numpy as np

SINGLE_REAL = 'real pair' # text for a single pair of real eigenvalues
MULTIPLE_REAL = SINGLE_REAL + 's' # text for multiple pairs of real eigenvalues
SINGLE_QUARTET = 'complex quartet' # text for a single quartet of complex eigenvalues
MULTIPLE_QUARTET = SINGLE_QUARTET + 's' # text for multiple quartets


class ModelKind(Enum):
    '''
    The two massive Dirac models whose line solitons we study. The value is the
    short tag used on the command line and in output files.
    '''
    MASSIVE_THIRRING = 'mtm'
    GROSS_NEVEU = 'gn'

    @property
    def interval(self) -> tuple:
        '''Open interval of admissible soliton frequencies.'''
        if self is ModelKind.MASSIVE_THIRRING:
            return (-1.0, 1.0)
        return (0.0, 1.0)

    @property
    def title(self) -> str:
        if self is ModelKind.MASSIVE_THIRRING:
            return 'massive Thirring model'
        return 'massive Gross-Neveu model'


class TranstabError(Exception):
    '''Base class of all errors raised by TRANSTAB.'''


class DomainError(TranstabError, ValueError):
    '''A frequency lies outside the admissible interval of the model.'''


class ArgumentError(TranstabError, ValueError):
    '''A numerical argument is invalid (empty set, bad size, mismatched objects).'''


class ConfigError(TranstabError):
    '''The configuration file could not be read or violates the schema.'''


class NonConvergenceError(TranstabError, ArithmeticError):
    '''
    An iterative procedure stopped before reaching its tolerance.

    :param message: Human readable description.
    :param diagnostic: Dictionary with what was achieved before stopping.
    '''
    def __init__(self, message: str, diagnostic: dict = None):
        super().__init__(message)
        self.diagnostic = diagnostic if diagnostic is not None else {}


class ConsistencyError(TranstabError, ArithmeticError):
    '''A quantity that is nonzero in theory vanished numerically.'''


class ValidationFailure(TranstabError):
    '''A reproduced metric exceeded its ceiling.'''


# Pauli matrices and the 4x4 structure matrices of the spectral problem
SIGMA_0 = np.eye(2)
SIGMA_1 = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_3 = np.array([[1.0, 0.0], [0.0, -1.0]])

SIGMA = np.diag([1.0, -1.0, 1.0, -1.0]) # weight of the original four-component system
S_TRANSFORM = np.array([[1.0, 0.0, 1.0, 0.0],
                        [0.0, 1.0, 0.0, 1.0],
                        [0.0, 1.0, 0.0, -1.0],
                        [1.0, 0.0, -1.0, 0.0]]) / np.sqrt(2.0) # orthogonal block-diagonalizing transform
BLOCK_S = np.block([[np.zeros((2, 2)), SIGMA_3], [SIGMA_3, np.zeros((2, 2))]]) # S^t sigma S
BLOCK_P = 1j * np.block([[np.zeros((2, 2)), SIGMA_1], [-SIGMA_1, np.zeros((2, 2))]])
J_MATRIX = np.array([[0.0, 0.0, 1.0, 0.0],
                     [0.0, 0.0, 0.0, 1.0],
                     [-1.0, 0.0, 0.0, 0.0],
                     [0.0, -1.0, 0.0, 0.0]]) # transverse coupling of the Gross-Neveu system


def parse_model(tag) -> ModelKind:
    '''
    Turn a command line tag ('mtm' or 'gn') into a ModelKind. A ModelKind is returned unchanged.

    :param tag: The tag or the model itself.
    '''
    if isinstance(tag, ModelKind):
        return tag
    try:
        return ModelKind(str(tag).lower())
    except ValueError:
        raise ArgumentError(f'unknown model {tag!r}, expected one of mtm, gn')


def check_omega(model: ModelKind, omega: float, allow_limit: bool = False) -> float:
    '''
    Check that a frequency lies strictly inside the existence interval of the model.
    We make a single exception for the algebraic MTM profile at omega = -1, which is only
    accepted when `allow_limit` is set.

    :param model: The model.
    :param omega: The frequency to check.
    :param allow_limit: Accept omega = -1 for the massive Thirring model.
    '''
    omega = float(omega)
    low, high = model.interval
    if allow_limit and model is ModelKind.MASSIVE_THIRRING and omega == -1.0:
        return omega
    if not (low < omega < high):
        raise DomainError(f'omega={omega} outside the admissible interval ({low:g}, {high:g}) '
                          f'for the {model.title}')
    return omega


def check_omega_range(model: ModelKind, omega: float, low: float, high: float, what: str) -> float:
    '''Restrict omega to a closed sub-interval where `what` is evaluated.'''
    omega = check_omega(model, omega)
    if not (low <= omega <= high):
        raise DomainError(f'{what} is evaluated for omega in [{low:g}, {high:g}] '
                          f'for the {model.title}, got omega={omega}')
    return omega


def compute_num_unstable_text(num_real_pairs: int, num_quartets: int) -> str:
    '''
    Compute the text that is printed to the console after the isolated eigenvalues of a
    spectrum are classified. The text is based on the number of unstable eigenvalue groups.

    :param num_real_pairs: The number of pairs of real eigenvalues.
    :param num_quartets: The number of quartets of complex eigenvalues.
    '''
    if num_real_pairs + num_quartets == 0:
        return ''

    text = 'Detected '
    if num_real_pairs > 0:
        text += str(num_real_pairs) + ' ' + (SINGLE_REAL if num_real_pairs == 1 else MULTIPLE_REAL)
    if num_real_pairs > 0 and num_quartets > 0:
        text += ' and '
    if num_quartets > 0:
        text += str(num_quartets) + ' ' + (SINGLE_QUARTET if num_quartets == 1 else MULTIPLE_QUARTET)
    text += ' of unstable eigenvalues.'
    return text
