from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Union

import numpy as np

from .exceptions import DomainError

_HUGE = np.finfo(float).max


class MeritFamily(Enum):
    LOG = 'log'
    FRACTION = 'fraction'
    POWER = 'power'
    ARCTAN = 'arctan'
    CWB_LOG = 'cwb_log'


@dataclass(frozen=True)
class MeritFunction:
    """
    A merit function for sparsity Psi_eps(s) = sum_i phi_eps(s_i) on the
    nonnegative orthant
    """
    family: MeritFamily
    eps_merit: float

    def __post_init__(self):
        if not isinstance(self.family, MeritFamily):
            object.__setattr__(self, 'family', MeritFamily(self.family))
        if not np.isfinite(self.eps_merit) or self.eps_merit <= 0:
            raise DomainError(f'eps_merit must be positive, got {self.eps_merit}')
        if (self.family in (MeritFamily.LOG, MeritFamily.POWER)
                and self.eps_merit >= 1):
            raise DomainError(
                f'{self.family.name} merit requires eps_merit < 1, '
                f'got {self.eps_merit}'
            )

    @property
    def soc_exact(self) -> bool:
        """
        True when Psi has an exact rotated second-order cone formulation
        """
        return self.family is MeritFamily.FRACTION


class SurrogateKind(Enum):
    J1_EXP = 'j1'
    J2_NEGLOG = 'j2'
    J3_INVPSI = 'j3'
    J4_MEAN_INV = 'j4'


@dataclass(frozen=True)
class Surrogate:
    """
    Convex decreasing function f(lam6) of the dual density used by the
    third relaxation
    """
    kind: SurrogateKind
    sigma1: float
    merit: MeritFunction

    def __post_init__(self):
        if not isinstance(self.kind, SurrogateKind):
            object.__setattr__(self, 'kind', SurrogateKind(self.kind))
        if not np.isfinite(self.sigma1) or self.sigma1 <= 0:
            raise DomainError(f'sigma1 must be positive, got {self.sigma1}')

    @property
    def soc_exact(self) -> bool:
        return self.kind is SurrogateKind.J3_INVPSI and self.merit.soc_exact


class Tangent(NamedTuple):
    """
    First order model value + gradient @ (s - at) of a merit function or
    surrogate
    """
    at: np.ndarray
    value: float
    gradient: np.ndarray

    def __call__(self, s) -> float:
        return self.value + float(self.gradient @ (np.asarray(s, float) - self.at))

    @property
    def constant(self) -> float:
        """
        Value of the model at the origin
        """
        return self.value - float(self.gradient @ self.at)


def _nonneg(s) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if s.ndim != 1:
        raise DomainError(f'expected a vector, got shape {s.shape}')
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise DomainError('merit functions are defined on finite s >= 0 only')
    return s


def _power_shift(eps: float) -> float:
    # underflows to 0 for small eps, which is the correct limit
    return float(np.exp(np.log(eps) / eps))


def merit_terms(m: MeritFunction, s) -> np.ndarray:
    """
    Componentwise values phi_eps(s_i)
    """
    s = _nonneg(s)
    eps = m.eps_merit
    family = m.family
    if family is MeritFamily.LOG:
        return 1.0 - np.log(s + eps) / np.log(eps)
    if family is MeritFamily.FRACTION:
        return s / (s + eps)
    if family is MeritFamily.POWER:
        return (s + _power_shift(eps)) ** eps
    if family is MeritFamily.ARCTAN:
        return (2.0 / np.pi) * np.arctan(s / eps)
    return np.log(s + eps)


def merit_value(m: MeritFunction, s) -> float:
    """
    Evaluate Psi_eps(s)
    :param m: merit function
    :param s: nonnegative vector
    :return: sum of the componentwise terms
    """
    return float(np.sum(merit_terms(m, s)))


def merit_gradient(m: MeritFunction, s) -> np.ndarray:
    """
    Componentwise derivative of phi_eps, one-sided at s_i = 0
    :param m: merit function
    :param s: nonnegative vector
    :return: strictly positive vector
    """
    s = _nonneg(s)
    eps = m.eps_merit
    family = m.family
    if family is MeritFamily.LOG:
        return -1.0 / ((s + eps) * np.log(eps))
    if family is MeritFamily.FRACTION:
        return eps / (s + eps) ** 2
    if family is MeritFamily.POWER:
        with np.errstate(divide='ignore', over='ignore'):
            gradient = eps * np.exp((eps - 1.0) * np.log(s + _power_shift(eps)))
        return np.minimum(gradient, _HUGE)
    if family is MeritFamily.ARCTAN:
        return (2.0 / np.pi) * eps / (s ** 2 + eps ** 2)
    return 1.0 / (s + eps)


def merit_hessian_diag(m: MeritFunction, s) -> np.ndarray:
    """
    Diagonal of the Hessian of Psi_eps. Only the arctan family is provided.
    """
    if m.family is not MeritFamily.ARCTAN:
        raise DomainError(f'no Hessian for the {m.family.name} family')
    s = _nonneg(s)
    eps = m.eps_merit
    return -(4.0 / np.pi) * eps * s / (s ** 2 + eps ** 2) ** 2


def linearize(m: Union[MeritFunction, Surrogate], at) -> Tangent:
    at = _nonneg(at).copy()
    if isinstance(m, Surrogate):
        return Tangent(at=at, value=surrogate_value(m, at),
                       gradient=surrogate_gradient(m, at))
    return Tangent(at=at, value=merit_value(m, at), gradient=merit_gradient(m, at))


def reweight(m: MeritFunction, x) -> np.ndarray:
    """
    Reweighted l1 update w = grad Psi_eps(|x|)
    """
    return merit_gradient(m, np.abs(np.asarray(x, dtype=float)))


def surrogate_value(f: Surrogate, lam6) -> float:
    """
    Evaluate the surrogate f(lam6)
    """
    lam6 = _nonneg(lam6)
    kind = f.kind
    if kind is SurrogateKind.J4_MEAN_INV:
        return float(np.mean(1.0 / (merit_terms(f.merit, lam6) + f.sigma1)))
    psi = merit_value(f.merit, lam6)
    if kind is SurrogateKind.J1_EXP:
        return float(np.exp(-psi))
    if kind is SurrogateKind.J2_NEGLOG:
        if psi + f.sigma1 <= 0:
            raise DomainError('J2 requires Psi + sigma1 > 0')
        return float(-np.log(psi + f.sigma1))
    return 1.0 / (psi + f.sigma1)


def surrogate_gradient(f: Surrogate, lam6) -> np.ndarray:
    lam6 = _nonneg(lam6)
    kind = f.kind
    dpsi = merit_gradient(f.merit, lam6)
    if kind is SurrogateKind.J4_MEAN_INV:
        phi = merit_terms(f.merit, lam6)
        return -dpsi / (lam6.size * (phi + f.sigma1) ** 2)
    psi = merit_value(f.merit, lam6)
    if kind is SurrogateKind.J1_EXP:
        return -np.exp(-psi) * dpsi
    if kind is SurrogateKind.J2_NEGLOG:
        return -dpsi / (psi + f.sigma1)
    return -dpsi / (psi + f.sigma1) ** 2


__all__ = [
    'MeritFamily',
    'MeritFunction',
    'SurrogateKind',
    'Surrogate',
    'Tangent',
    'merit_terms',
    'merit_value',
    'merit_gradient',
    'merit_hessian_diag',
    'linearize',
    'reweight',
    'surrogate_value',
    'surrogate_gradient',
]
