import logging

from ._backend import ConeSolverBackend, SolverResult, SolverStatus, NEAR_OPTIMAL_GAP
from ._cones import ConeProgram
from ._context import SolverContext
from ._interior import InteriorPointBackend
from ._settings import uses_settings
from ._splitting import SplittingBackend
from .exceptions import DomainError, SolverFailure

logger = logging.getLogger(__name__)


@uses_settings
def solve(program: ConeProgram, tol_solver: float = None,
          max_iters: int = None) -> SolverResult:
    """
    Solve a cone program with the backend provided by the current
    SolverContext (interior point by default)
    :param program: the program
    :param tol_solver: tolerance on primal residual, dual residual and gap
    :param max_iters: iteration limit
    :return: SolverResult, never raises on non-convergence
    """
    if tol_solver <= 0:
        raise DomainError(f'tol_solver must be positive, got {tol_solver}')
    if max_iters < 1:
        raise DomainError(f'max_iters must be positive, got {max_iters}')
    solver = SolverContext.provide(ConeSolverBackend, default=InteriorPointBackend)
    result = solver.solve(program, tol_solver, max_iters)
    logger.debug('%s solved %r: %s after %d iterations',
                 type(solver).__name__, program, result.status.value,
                 result.iterations)
    return result


def require_optimal(result: SolverResult, what: str = 'cone program') -> SolverResult:
    """
    :raise SolverFailure: unless result is OPTIMAL
    """
    if result.status is not SolverStatus.OPTIMAL:
        raise SolverFailure(
            f'{what} ended with status {result.status.value} '
            f'(pres {result.primal_residual:.1e}, dres {result.dual_residual:.1e}, '
            f'gap {result.gap:.1e})',
            result,
        )
    return result


def _fallback_backend() -> ConeSolverBackend:
    current = SolverContext.find_subtype(ConeSolverBackend)
    if current is None or current is InteriorPointBackend:
        return SplittingBackend()
    return InteriorPointBackend()


@uses_settings
def require_converged(program: ConeProgram, result: SolverResult,
                      what: str = 'cone program', tol_gap: float = NEAR_OPTIMAL_GAP,
                      tol_solver: float = None, max_iters: int = None) -> SolverResult:
    """
    Accept a result that is OPTIMAL or near optimal. Anything else is solved
    once more with the other backend (splitting after interior point,
    interior point after anything else).
    :param program: the program result was computed for
    :param tol_gap: relative gap accepted at the iteration limit
    :raise SolverFailure: when neither backend gets near the optimum
    """
    if result.near_optimal(tol_solver, tol_gap):
        if not result.optimal:
            logger.warning('%s accepted at %s with gap %.1e', what,
                           result.status.value, result.gap)
        return result
    fallback = _fallback_backend()
    logger.warning('%s ended with %s, retrying with %s', what,
                   result.status.value, type(fallback).__name__)
    retried = fallback.solve(program, tol_solver, max_iters)
    if retried.near_optimal(tol_solver, tol_gap):
        return retried
    raise SolverFailure(
        f'{what} ended with status {retried.status.value} after retrying with '
        f'{type(fallback).__name__} (pres {retried.primal_residual:.1e}, '
        f'dres {retried.dual_residual:.1e}, gap {retried.gap:.1e})',
        retried,
    )


__all__ = ['solve', 'require_optimal', 'require_converged']
