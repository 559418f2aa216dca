from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from src.utils import ArgumentError

DEFAULT_SCALE = 10.0 # scaling parameter L of the map x = L atanh(z)


@dataclass(frozen=True, eq=False)
class ChebGrid:
    '''
    Chebyshev points z_j = cos(j pi / N) mapped to the real line by x_j = L atanh(z_j),
    together with the standard differentiation matrix D_N and the scaled matrix
    D~_N = (1/L) sech^2(x_i / L) D_N that differentiates in x.
    '''
    n: int
    scale: float
    nodes_z: np.ndarray = field(repr=False)
    nodes_x: np.ndarray = field(repr=False)
    d_standard: np.ndarray = field(repr=False)
    d_scaled: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.n + 1

    @property
    def interior(self) -> slice:
        return slice(1, self.n)


def chebyshev_nodes(n: int) -> np.ndarray:
    '''
    Chebyshev points ordered from z_0 = 1 to z_N = -1. We evaluate them as sines of
    symmetric angles so that z_j = -z_{N-j} holds exactly in floating point.

    :param n: Polynomial degree N.
    '''
    return np.sin(np.pi * np.arange(n, -n - 1, -2) / (2.0 * n))


def differentiation_matrix(n: int) -> np.ndarray:
    '''
    The standard Chebyshev collocation matrix with off-diagonal entries
    (c_i/c_j)(-1)^(i+j)/(z_i - z_j), c_0 = c_N = 2, and the diagonal obtained by the negative
    row-sum trick. The node differences are computed with trigonometric identities and
    flipped to the lower triangle, as in the Weideman-Reddy construction.

    :param n: Polynomial degree N.
    '''
    k = np.arange(n + 1)
    theta = k * np.pi / n
    n1 = (n + 1) // 2 # flipping trick indices
    n2 = (n + 2) // 2

    # z_i - z_j = 2 sin((j+i) pi/2N) sin((j-i) pi/2N)
    half = np.outer(theta / 2.0, np.ones(n + 1))
    dz = 2.0 * np.sin(half.T + half) * np.sin(half.T - half)
    dz = np.vstack([dz[:n1, :], -np.flipud(np.fliplr(dz[:n2, :]))])
    dz[k, k] = 1.0

    c = toeplitz((-1.0) ** k)
    c[0, :] *= 2.0
    c[-1, :] *= 2.0
    c[:, 0] /= 2.0
    c[:, -1] /= 2.0

    d = c / dz
    d[k, k] = 0.0
    d[k, k] = -np.sum(d, axis=1)
    return d


def build_grid(n: int, scale: float = DEFAULT_SCALE) -> ChebGrid:
    '''
    Build the mapped Chebyshev grid. The endpoint nodes are stored as +inf and -inf, and
    since sech^2(x/L) = 1 - z^2 vanishes there, the first and last rows of the scaled
    matrix are exactly zero.

    :param n: Polynomial degree N (N + 1 nodes), at least 2.
    :param scale: Map scaling L > 0.
    '''
    if int(n) != n or n < 2:
        raise ArgumentError(f'grid degree must be an integer >= 2, got {n}')
    if not scale > 0:
        raise ArgumentError(f'grid scale must be positive, got {scale}')
    n = int(n)
    scale = float(scale)

    z = chebyshev_nodes(n)
    x = np.empty(n + 1)
    x[0] = np.inf
    x[-1] = -np.inf
    x[1:-1] = scale * np.arctanh(z[1:-1])

    d = differentiation_matrix(n)
    stretch = (1.0 - z * z) / scale
    stretch[0] = stretch[-1] = 0.0
    d_scaled = stretch[:, None] * d

    return ChebGrid(n, scale, z, x, d, d_scaled)


def sample_on_grid(grid: ChebGrid, f, limits: tuple = None) -> np.ndarray:
    '''
    Sample a function at the grid nodes x_0..x_N. The function is called with the full node
    array, including the infinite endpoints, and must return its limits there; a pair of
    explicit endpoint values can be given instead.

    :param grid: The grid.
    :param f: Vectorized function of x.
    :param limits: Optional values (f(+inf), f(-inf)) stored at x_0 and x_N.
    '''
    values = np.array(np.broadcast_to(f(grid.nodes_x), grid.nodes_x.shape), dtype=complex)
    if limits is not None:
        values[0], values[-1] = limits
    return values
