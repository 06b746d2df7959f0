from enum import Enum
from typing import NamedTuple, Sequence, Tuple, List

import numpy as np
import scipy.sparse as sp

from .exceptions import DimensionMismatch

_SQRT_HALF = np.sqrt(0.5)


class ConeKind(Enum):
    ZERO = 'zero'
    NONNEG = 'nonneg'
    SOC = 'soc'
    RSOC = 'rsoc'


class ConeBlock(NamedTuple):
    """
    A block of the slack vector. SOC blocks lead with the radius t of
    {(t, x) : ||x|| <= t}; RSOC blocks are {(p, q, r) : 2pq >= ||r||^2, p, q >= 0}.
    """
    kind: ConeKind
    dim: int


def _check_block(kind: ConeKind, dim: int):
    if dim < 1:
        raise DimensionMismatch(f'{kind.name} block needs dim >= 1, got {dim}')
    if kind is ConeKind.RSOC and dim < 3:
        raise DimensionMismatch(f'RSOC block needs dim >= 3, got {dim}')


class ConeProgram:
    """
    Standard form cone program

        minimize    c'z
        subject to  Gz + s = h,  s in K_1 x ... x K_p

    with dual

        maximize    -h'y
        subject to  G'y + c = 0,  y in K_1* x ... x K_p*
    """

    def __init__(self, objective, eq_matrix, eq_rhs,
                 cones: Sequence[ConeBlock]) -> None:
        self.objective = np.asarray(objective, dtype=float).ravel()
        self.eq_matrix = sp.csr_matrix(eq_matrix, dtype=float)
        self.eq_rhs = np.asarray(eq_rhs, dtype=float).ravel()
        self.cones: Tuple[ConeBlock, ...] = tuple(
            ConeBlock(ConeKind(kind), int(dim)) for kind, dim in cones
        )
        rows, cols = self.eq_matrix.shape
        if cols != self.objective.size:
            raise DimensionMismatch(
                f'G has {cols} columns but c has {self.objective.size} entries'
            )
        if rows != self.eq_rhs.size:
            raise DimensionMismatch(
                f'G has {rows} rows but h has {self.eq_rhs.size} entries'
            )
        for kind, dim in self.cones:
            _check_block(kind, dim)
        if sum(dim for _, dim in self.cones) != rows:
            raise DimensionMismatch('cone block dims must sum to the rows of G')

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @property
    def num_rows(self) -> int:
        return self.eq_rhs.size

    def offsets(self) -> List[slice]:
        """
        :return: the row slice of every cone block, in order
        """
        slices, start = [], 0
        for _, dim in self.cones:
            slices.append(slice(start, start + dim))
            start += dim
        return slices

    def split(self, v) -> List[np.ndarray]:
        v = np.asarray(v, dtype=float)
        return [v[block] for block in self.offsets()]

    def __repr__(self):
        blocks = ', '.join(f'{kind.name}({dim})' for kind, dim in self.cones)
        return f'{type(self).__name__}(num_vars={self.num_vars}, cones=[{blocks}])'


def rsoc_to_soc(v) -> np.ndarray:
    """
    Orthogonal symmetric map (p, q, r) -> ((p + q)/sqrt2, (p - q)/sqrt2, r)
    taking the rotated cone onto the second-order cone. It is its own inverse.
    """
    v = np.array(v, dtype=float)
    p, q = v[0], v[1]
    v[0], v[1] = _SQRT_HALF * (p + q), _SQRT_HALF * (p - q)
    return v


def _project_soc(v: np.ndarray) -> np.ndarray:
    t, x = v[0], v[1:]
    norm_x = np.linalg.norm(x)
    if norm_x <= t:
        return v.copy()
    if norm_x <= -t:
        return np.zeros_like(v)
    result = np.empty_like(v)
    result[0] = 1.0
    result[1:] = x / norm_x
    result *= (norm_x + t) / 2.
    return result


def project_cone(kind: ConeKind, v) -> np.ndarray:
    """
    Euclidean projection onto a single cone
    :param kind: cone kind
    :param v: point
    :return: nearest point of the cone
    """
    kind = ConeKind(kind)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    _check_block(kind, v.size)
    if kind is ConeKind.ZERO:
        return np.zeros_like(v)
    if kind is ConeKind.NONNEG:
        return np.maximum(v, 0.0)
    if kind is ConeKind.SOC:
        return _project_soc(v)
    return rsoc_to_soc(_project_soc(rsoc_to_soc(v)))


def project_dual_cone(kind: ConeKind, v) -> np.ndarray:
    """
    Projection onto the dual cone. The zero cone has the whole space as its
    dual; the others are self-dual.
    """
    kind = ConeKind(kind)
    if kind is ConeKind.ZERO:
        return np.array(v, dtype=float)
    return project_cone(kind, v)


def project_product(cones: Sequence[ConeBlock], v, dual: bool = False) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    result = np.empty_like(v)
    start = 0
    project = project_dual_cone if dual else project_cone
    for kind, dim in cones:
        result[start:start + dim] = project(kind, v[start:start + dim])
        start += dim
    return result


def cone_violation(cones: Sequence[ConeBlock], v, dual: bool = False) -> float:
    """
    Distance from v to the cone product (or its dual)
    """
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return 0.0
    return float(np.linalg.norm(v - project_product(cones, v, dual=dual)))


__all__ = [
    'ConeKind',
    'ConeBlock',
    'ConeProgram',
    'rsoc_to_soc',
    'project_cone',
    'project_dual_cone',
    'project_product',
    'cone_violation',
]
