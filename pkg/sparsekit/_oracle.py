import logging
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from typing import NamedTuple, Optional, Tuple, Iterable

import numpy as np
import scipy.sparse as sp

from ._cones import ConeKind, ConeProgram
from ._context import current_context
from ._instance import Instance
from ._settings import uses_settings
from ._solver import solve, require_converged
from .exceptions import CardinalityLimit, DomainError

logger = logging.getLogger(__name__)

MAX_ENUMERATION = 20
FEASIBILITY_TOL = 1e-7


class OracleResult(NamedTuple):
    k_star: Optional[int]
    support: Optional[Tuple[int, ...]]

    @property
    def found(self) -> bool:
        return self.k_star is not None


def _support_program(inst: Instance, support, oracle_box: float) -> ConeProgram:
    # variables (x_S, v, gamma); minimize the violation v
    m, l, k = inst.m, inst.l, len(support)
    A, B = inst.A[:, support], inst.B[:, support]
    Z = sp.csr_matrix
    one = sp.csr_matrix(np.ones((1, 1)))
    rows = [
        sp.hstack([A, Z((m, 1)), sp.identity(m)]),
        sp.vstack([sp.hstack([Z((1, k)), -one, Z((1, m))]),
                   sp.hstack([Z((m, k + 1)), -sp.identity(m)])]),
        sp.hstack([Z((1, k)), -one, Z((1, m))]),
        sp.hstack([sp.identity(k), Z((k, m + 1))]),
        sp.hstack([-sp.identity(k), Z((k, m + 1))]),
    ]
    rhs = [inst.y, np.r_[inst.eps_noise, np.zeros(m)], [0.0],
           np.full(2 * k, oracle_box)]
    cones = [(ConeKind.ZERO, m), (ConeKind.SOC, m + 1), (ConeKind.NONNEG, 1),
             (ConeKind.NONNEG, 2 * k)]
    if l:
        rows.append(sp.hstack([B, -sp.csr_matrix(np.ones((l, 1))), Z((l, m))]))
        rhs.append(inst.b)
        cones.append((ConeKind.NONNEG, l))
    objective = np.zeros(k + 1 + m)
    objective[k] = 1.0
    return ConeProgram(objective, sp.vstack(rows), np.concatenate(
        [np.asarray(r, dtype=float) for r in rhs]), cones)


@uses_settings
def support_feasible(inst: Instance, support: Iterable[int],
                     oracle_box: float = None) -> bool:
    """
    Test whether T holds a point supported on the given columns
    :param support: zero based column indices
    :param oracle_box: bound on |x_i| keeping the program bounded
    :raise SolverFailure: if neither backend solves the feasibility program
    """
    support = sorted(set(int(i) for i in support))
    if any(not 0 <= i < inst.n for i in support):
        raise DomainError(f'support {support} out of range for n = {inst.n}')
    if not support:
        ball = float(np.linalg.norm(inst.y)) - inst.eps_noise
        polyhedral = float(np.max(-inst.b, initial=0.0))
        return max(ball, polyhedral) <= FEASIBILITY_TOL
    program = _support_program(inst, support, oracle_box)
    result = require_converged(program, solve(program),
                               f'support {support} feasibility',
                               tol_gap=FEASIBILITY_TOL)
    return result.primal_objective <= FEASIBILITY_TOL


def l0_min(inst: Instance, max_card: Optional[int] = None,
           threads: int = 1) -> OracleResult:
    """
    Smallest support of a point in T by enumeration, ascending in size and
    lexicographic within a size
    :param max_card: largest support size tried, n by default
    :return: OracleResult(None, None) when nothing up to max_card is feasible
    :raise CardinalityLimit: if n > 20
    """
    n = inst.n
    if n > MAX_ENUMERATION:
        raise CardinalityLimit(f'n = {n} is too large to enumerate supports '
                               f'(limit {MAX_ENUMERATION})')
    max_card = n if max_card is None else int(max_card)
    if not 0 <= max_card <= n:
        raise DomainError(f'max_card must lie in [0, {n}], got {max_card}')
    context = current_context().flattened()

    def feasible(support):
        with context.flattened():
            return support_feasible(inst, support)

    for k in range(max_card + 1):
        candidates = list(combinations(range(n), k))
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                flags = list(pool.map(feasible, candidates))
        else:
            flags = (feasible(s) for s in candidates)
        for support, ok in zip(candidates, flags):
            if ok:
                logger.debug('smallest feasible support %s', support)
                return OracleResult(k, support)
    return OracleResult(None, None)


__all__ = [
    'OracleResult',
    'support_feasible',
    'l0_min',
    'MAX_ENUMERATION',
]
