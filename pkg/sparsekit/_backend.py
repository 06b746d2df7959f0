from abc import ABC, abstractmethod
from enum import Enum
from typing import NamedTuple, Tuple, Dict, Type, TypeVar, List

import numpy as np

from ._cones import ConeBlock, ConeProgram
from .exceptions import UnknownBackend

T = TypeVar('T')

_backends: Dict[str, Type['ConeSolverBackend']] = {}

NEAR_OPTIMAL_GAP = 1e-4


class SolverStatus(Enum):
    OPTIMAL = 'optimal'
    MAX_ITERS = 'max_iters'
    NUMERICAL_FAILURE = 'numerical_failure'


class SolverResult(NamedTuple):
    status: SolverStatus
    primal: np.ndarray
    slack: np.ndarray
    dual: np.ndarray
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    primal_objective: float
    dual_objective: float
    cones: Tuple[ConeBlock, ...]

    @property
    def optimal(self) -> bool:
        return self.status is SolverStatus.OPTIMAL

    def near_optimal(self, tol_solver: float,
                     tol_gap: float = NEAR_OPTIMAL_GAP) -> bool:
        """
        OPTIMAL, or stopped at the iteration limit with primal and dual
        residuals within 10 tol_solver and a relative gap within tol_gap
        """
        if self.optimal:
            return True
        return (self.status is SolverStatus.MAX_ITERS
                and max(self.primal_residual, self.dual_residual) <= 10 * tol_solver
                and self.gap <= tol_gap)

    def block_duals(self) -> List[np.ndarray]:
        """
        :return: the dual vector split per cone block
        """
        blocks, start = [], 0
        for _, dim in self.cones:
            blocks.append(self.dual[start:start + dim])
            start += dim
        return blocks


def residuals(program: ConeProgram, z, s, y):
    """
    Relative primal residual, dual residual and gap of a candidate
    primal-dual point
    :return: (primal_residual, dual_residual, gap, primal_obj, dual_obj)
    """
    c, G, h = program.objective, program.eq_matrix, program.eq_rhs
    primal_residual = np.linalg.norm(G @ z + s - h) / (1 + np.linalg.norm(h))
    dual_residual = np.linalg.norm(G.T @ y + c) / (1 + np.linalg.norm(c))
    primal_obj = float(c @ z)
    dual_obj = float(-h @ y)
    gap = max(abs(primal_obj - dual_obj), abs(float(s @ y))) / (1 + abs(primal_obj))
    return (float(primal_residual), float(dual_residual), float(gap),
            primal_obj, dual_obj)


class ConeSolverBackend(ABC):
    """
    Interface of a cone program solver. Backends are stateless between
    calls, so one instance may serve concurrent solves.
    """
    name = None

    @abstractmethod
    def solve(self, program: ConeProgram, tol_solver: float,
              max_iters: int) -> SolverResult:
        pass


def backend(name: str):
    """
    Decorator registering a backend type under a command line name

    @backend('ipm')
    class InteriorPointBackend(ConeSolverBackend):
        ...
    """
    def decorator(cls: T) -> T:
        cls.name = name
        _backends[name] = cls
        return cls
    return decorator


def backend_named(name: str) -> Type[ConeSolverBackend]:
    try:
        return _backends[name]
    except KeyError:
        known = ', '.join(sorted(_backends))
        raise UnknownBackend(f'Unknown backend "{name}", expected one of: {known}')


def backend_names() -> List[str]:
    return sorted(_backends)


__all__ = [
    'NEAR_OPTIMAL_GAP',
    'SolverStatus',
    'SolverResult',
    'ConeSolverBackend',
    'backend',
    'backend_named',
    'backend_names',
]
