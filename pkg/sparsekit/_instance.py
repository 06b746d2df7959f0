import json
from typing import NamedTuple, Optional, Tuple, Union, Sequence

import numpy as np

from .exceptions import DimensionMismatch, DomainError

ArrayLike = Union[np.ndarray, Sequence[float]]


class Instance:
    """
    Data of the feasible set T = {x : ||y - Ax|| <= eps_noise, Bx <= b}.
    B may have zero rows.
    """

    def __init__(self, A, y, B=None, b=None, eps_noise: float = 0.0) -> None:
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.y = np.asarray(y, dtype=float).ravel()
        m, n = self.A.shape
        if B is None:
            B = np.zeros((0, n))
        self.B = np.asarray(B, dtype=float).reshape(-1, n) if np.size(B) else \
            np.zeros((0, n))
        self.b = np.asarray(b if b is not None else [], dtype=float).ravel()
        self.eps_noise = float(eps_noise)
        if self.y.size != m:
            raise DimensionMismatch(f'A is {m}x{n} but y has {self.y.size} entries')
        if self.B.shape[1] != n:
            raise DimensionMismatch(f'B must have {n} columns')
        if self.b.size != self.B.shape[0]:
            raise DimensionMismatch(
                f'B has {self.B.shape[0]} rows but b has {self.b.size} entries'
            )
        if not np.isfinite(self.eps_noise) or self.eps_noise < 0:
            raise DomainError(f'eps_noise must be >= 0, got {eps_noise}')

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def l(self) -> int:  # noqa: E743
        return self.B.shape[0]

    def feasibility_residual(self, x) -> Tuple[float, float]:
        """
        :return: (max(0, ||y - Ax|| - eps_noise), max(0, max(Bx - b)))
        """
        x = np.asarray(x, dtype=float)
        ball = max(0.0, float(np.linalg.norm(self.y - self.A @ x)) - self.eps_noise)
        polyhedral = max(0.0, float(np.max(self.B @ x - self.b))) if self.l else 0.0
        return ball, polyhedral

    def contains(self, x, tol: float = 1e-6) -> bool:
        return max(self.feasibility_residual(x)) <= tol

    def restricted(self, support) -> 'Instance':
        """
        :return: the instance over the columns in support only
        """
        support = list(support)
        return Instance(self.A[:, support], self.y, self.B[:, support], self.b,
                        self.eps_noise)

    def __repr__(self):
        return (f'Instance(m={self.m}, n={self.n}, l={self.l}, '
                f'eps_noise={self.eps_noise})')


def check_weight(w, n: int) -> np.ndarray:
    """
    Validate a weight vector
    :param w: candidate weights
    :param n: expected length
    :return: the weights as a float array
    """
    w = np.asarray(w, dtype=float).ravel()
    if w.size != n:
        raise DimensionMismatch(f'weight has {w.size} entries, expected {n}')
    if not np.all(np.isfinite(w)):
        raise DomainError('weights must be finite')
    if np.any(w < 0):
        raise DomainError('weights must be nonnegative')
    return w


class PrimalTriple(NamedTuple):
    x: np.ndarray
    t: np.ndarray
    gamma: np.ndarray


class DualVars(NamedTuple):
    lam1: float
    lam2: np.ndarray
    lam3: np.ndarray
    lam4: np.ndarray
    lam5: np.ndarray
    lam6: np.ndarray

    def objective(self, inst: Instance) -> float:
        """
        Dual objective -lam1 eps - lam2'b + lam3'y
        """
        return float(-self.lam1 * inst.eps_noise - self.lam2 @ inst.b
                     + self.lam3 @ inst.y)

    def residuals(self, inst: Instance, w) -> dict:
        """
        Violation of each constraint defining the dual feasible set D(w)
        """
        stationarity = inst.B.T @ self.lam2 - inst.A.T @ self.lam3 \
            + self.lam4 - self.lam5
        negative = min(0.0, self.lam1, *(float(np.min(v)) for v in
                       (self.lam2, self.lam4, self.lam5, self.lam6) if v.size))
        return {
            'cone': max(0.0, float(np.linalg.norm(self.lam3)) - self.lam1),
            'sign': -negative,
            'stationarity': float(np.max(np.abs(stationarity), initial=0.0)),
            'weight': float(np.max(np.abs(self.lam4 + self.lam5 + self.lam6
                                          - np.asarray(w, dtype=float)),
                                   initial=0.0)),
        }

    @staticmethod
    def mean(duals: Sequence['DualVars']) -> 'DualVars':
        lam1 = float(np.mean([d.lam1 for d in duals]))
        return DualVars(lam1, *(np.mean([d[i] for d in duals], axis=0)
                                for i in range(1, 6)))


def example1() -> Instance:
    """
    Four variable instance with a unique sparsest point (0, 0, 2, 1)
    """
    A = [[1, 0, -2, 5],
         [0, 1, 4, -9],
         [1, 0, -2, 5]]
    B = [[-0.5, 0, 1, -2.5],
         [0.5, -0.5, -1, 2],
         [-3, -3, -2, 3]]
    return Instance(A=A, y=[1, -1, 1], B=B, b=[-0.5, 1, -1], eps_noise=0.1)


def instance_to_dict(inst: Instance, x_star=None, seed: Optional[int] = None) -> dict:
    return {
        'm': inst.m,
        'n': inst.n,
        'l': inst.l,
        'A': inst.A.tolist(),
        'B': inst.B.tolist(),
        'y': inst.y.tolist(),
        'b': inst.b.tolist(),
        'eps_noise': inst.eps_noise,
        'x_star': None if x_star is None else np.asarray(x_star, float).tolist(),
        'seed': seed,
    }


def instance_from_dict(data: dict) -> Tuple[Instance, Optional[np.ndarray], Optional[int]]:
    try:
        m, n, l = int(data['m']), int(data['n']), int(data['l'])
        A = np.asarray(data['A'], dtype=float).reshape(m, n)
        B = np.asarray(data['B'] or [], dtype=float).reshape(l, n)
        inst = Instance(A=A, y=data['y'], B=B, b=data['b'] or [],
                        eps_noise=data['eps_noise'])
    except (DimensionMismatch, DomainError):
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise DimensionMismatch(f'malformed instance document: {e}') from e
    x_star = data.get('x_star')
    if x_star is not None:
        x_star = np.asarray(x_star, dtype=float)
    seed = data.get('seed')
    return inst, x_star, None if seed is None else int(seed)


def save_instance(path, inst: Instance, x_star=None, seed: Optional[int] = None):
    with open(path, 'w') as f:
        json.dump(instance_to_dict(inst, x_star, seed), f)


def load_instance(path) -> Tuple[Instance, Optional[np.ndarray], Optional[int]]:
    """
    Read an instance document {m, n, l, A, B, y, b, eps_noise, x_star, seed}
    """
    with open(path) as f:
        return instance_from_dict(json.load(f))


__all__ = [
    'Instance',
    'PrimalTriple',
    'DualVars',
    'check_weight',
    'example1',
    'instance_to_dict',
    'instance_from_dict',
    'save_instance',
    'load_instance',
]
