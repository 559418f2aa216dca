from dataclasses import dataclass

import numpy as np

from src.utils import ModelKind, check_omega


@dataclass(frozen=True)
class SolitonProfile:
    '''
    A line soliton of one of the two models. The decay rate `mu` is normally filled in by
    `make_profile`; it is a field so that a deliberately wrong profile can be built when
    checking that the residual test is able to fail.
    '''
    model: ModelKind
    omega: float
    mu: float

    @property
    def is_algebraic(self) -> bool:
        return self.model is ModelKind.MASSIVE_THIRRING and self.omega == -1.0


def make_profile(model: ModelKind, omega: float, allow_limit: bool = False) -> SolitonProfile:
    '''
    Build the soliton profile of a model for frequency omega. We check the existence interval
    first: omega in (-1, 1) for the massive Thirring model and omega in (0, 1) for the
    massive Gross-Neveu model.

    :param model: The model.
    :param omega: The soliton frequency.
    :param allow_limit: Accept the algebraic MTM profile at omega = -1.
    '''
    omega = check_omega(model, omega, allow_limit)
    return SolitonProfile(model, omega, float(np.sqrt(1.0 - omega * omega)))


def _scaled_parts(profile: SolitonProfile, x):
    '''
    Common factors of the closed forms after removing exp(mu |x|) from numerator and
    denominator. With t = mu|x|, q = exp(-2t) and s = sign(x) both solitons read
    U = C exp(-t) A(q) / B(q), which stays finite at x = +-inf.
    '''
    omega, mu = profile.omega, profile.mu
    x = np.asarray(x, dtype=float)
    t = mu * np.abs(x)
    s = np.sign(x)
    decay = np.exp(-t)
    q = decay * decay
    a = np.sqrt(1.0 + omega)
    b = np.sqrt(1.0 - omega)
    numerator = a * (1.0 + q) - 1j * s * b * (1.0 - q)
    if profile.model is ModelKind.MASSIVE_THIRRING:
        prefactor = np.sqrt(2.0) * mu
        denominator = 1.0 + q * q + 2.0 * omega * q
        coupling = 1.0
    else:
        prefactor = mu
        denominator = omega * (1.0 + q * q) + 2.0 * q
        coupling = omega
    return prefactor, decay, q, s, a, b, numerator, denominator, coupling


def _algebraic_profile(x):
    x = np.asarray(x, dtype=float)
    finite = np.isfinite(x)
    xf = np.where(finite, x, 0.0)
    value = 2.0 * (1.0 - 2j * xf) / (1.0 + 4.0 * xf * xf)
    return np.where(finite, value, 0.0)


def _algebraic_derivative(x):
    x = np.asarray(x, dtype=float)
    finite = np.isfinite(x)
    xf = np.where(finite, x, 0.0)
    r = 1.0 + 4.0 * xf * xf
    value = (-4j * r - 16.0 * xf * (1.0 - 2j * xf)) / (r * r)
    return np.where(finite, value, 0.0)


def eval_profile(profile: SolitonProfile, x):
    '''
    Evaluate the soliton U(x). The argument may be a scalar or an array and may contain
    +-inf, where the profile vanishes.

    :param profile: The soliton profile.
    :param x: Evaluation point(s).
    '''
    if profile.is_algebraic:
        return _algebraic_profile(x)
    prefactor, decay, _, _, _, _, numerator, denominator, _ = _scaled_parts(profile, x)
    return prefactor * decay * numerator / denominator


def eval_profile_derivative(profile: SolitonProfile, x):
    '''
    Evaluate dU/dx from the analytically differentiated closed form. Writing U = C n/d with
    n = a cosh(mu x) - i b sinh(mu x), we use U' = C (n'/d - (n/d)(d'/d)) in the same
    overflow-free scaling as `eval_profile`.

    :param profile: The soliton profile.
    :param x: Evaluation point(s).
    '''
    if profile.is_algebraic:
        return _algebraic_derivative(x)
    prefactor, decay, q, s, a, b, numerator, denominator, coupling = _scaled_parts(profile, x)
    mu = profile.mu
    d_numerator = mu * (s * a * (1.0 - q) - 1j * b * (1.0 + q))
    log_derivative = 2.0 * mu * coupling * s * (1.0 - q * q) / denominator
    return prefactor * decay / denominator * (d_numerator - numerator * log_derivative)


def nonlinearity(model: ModelKind, u):
    '''Right-hand side of the stationary equation for a given amplitude.'''
    if model is ModelKind.MASSIVE_THIRRING:
        return np.abs(u) ** 2 * u
    return u * np.abs(u) ** 2 + np.conj(u) ** 3


def ode_residual(profile: SolitonProfile, x):
    '''
    Return |i U' - omega U + conj(U) - N(U)| where N(U) = |U|^2 U for the massive Thirring
    model and N(U) = U|U|^2 + conj(U)^3 for the massive Gross-Neveu model.

    :param profile: The soliton profile.
    :param x: Evaluation point(s).
    '''
    u = eval_profile(profile, x)
    du = eval_profile_derivative(profile, x)
    left = 1j * du - profile.omega * u + np.conj(u)
    return np.abs(left - nonlinearity(profile.model, u))


def nls_limit_profile(profile: SolitonProfile, x):
    '''
    The sech envelope approached by the soliton as omega -> 1: mu sech(mu x) for the massive
    Thirring model, and 2^(-1/2) mu sech(mu x) for the massive Gross-Neveu model.

    :param profile: The soliton profile.
    :param x: Evaluation point(s).
    '''
    x = np.asarray(x, dtype=float)
    t = profile.mu * np.abs(x)
    sech = 2.0 * np.exp(-t) / (1.0 + np.exp(-2.0 * t))
    amplitude = profile.mu if profile.model is ModelKind.MASSIVE_THIRRING else profile.mu / np.sqrt(2.0)
    return amplitude * sech


def peak_amplitude(profile: SolitonProfile) -> float:
    '''
    Maximum of |U| over the real line. It sits at x = 0 except for the two-humped
    Gross-Neveu solitons with omega < 1/2, whose maximum 1/(2 sqrt(omega)) is attained
    where cosh(2 mu x) = (1 - 2 omega^2)/omega.
    '''
    if profile.model is ModelKind.GROSS_NEVEU and profile.omega < 0.5:
        return float(0.5 / np.sqrt(profile.omega))
    return float(np.abs(eval_profile(profile, 0.0)))
