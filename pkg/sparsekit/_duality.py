import logging
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional, FrozenSet, List, Tuple

import numpy as np

from ._algorithms import sparsity
from ._context import current_context
from ._instance import Instance, PrimalTriple, DualVars, check_weight
from ._solver import solve, require_optimal
from ._weighted import build_aux_tj, solve_weighted_l1, WeightedSolution
from .exceptions import AssumptionViolation, DomainError, SolverFailure

logger = logging.getLogger(__name__)

INTERIOR_TOL = 1e-8
GAP_TOL = 1e-5


class KktReport(NamedTuple):
    stationarity_x: float
    stationarity_gamma: float
    stationarity_t: float
    comp_soc: float
    comp_ineq: float
    comp_t_minus_x: float
    comp_t_plus_x: float
    comp_t: float
    feasibility: float
    max_residual: float
    gamma_skipped: bool = False

    def residuals(self) -> dict:
        return {name: getattr(self, name) for name in self._fields[:9]}


def kkt_check(inst: Instance, w, primal: PrimalTriple, dual: DualVars) -> KktReport:
    """
    Residual of every line of the optimality system of min w'|x| over T.
    The gradient of ||gamma|| does not exist at gamma = 0; that line is then
    reported as 0 with gamma_skipped set.
    """
    w = check_weight(w, inst.n)
    x, t, gamma = (np.asarray(v, dtype=float) for v in primal)
    slack = inst.b - inst.B @ x
    norm_gamma = float(np.linalg.norm(gamma))
    d = dual.residuals(inst, w)

    skipped = norm_gamma <= 1e-12
    if skipped:
        stationarity_gamma = 0.0
    else:
        stationarity_gamma = float(np.max(np.abs(dual.lam1 * gamma / norm_gamma
                                                 - dual.lam3)))
    ball, polyhedral = inst.feasibility_residual(x)
    feasibility = max(
        ball, polyhedral,
        max(0.0, norm_gamma - inst.eps_noise),
        float(np.max(np.abs(gamma - (inst.y - inst.A @ x)), initial=0.0)),
        float(np.max(np.abs(x) - t, initial=0.0)),
        d['cone'], d['sign'],
    )
    values = [
        d['stationarity'],
        stationarity_gamma,
        d['weight'],
        abs(dual.lam1 * (inst.eps_noise - norm_gamma)),
        abs(float(dual.lam2 @ slack)) if inst.l else 0.0,
        abs(float(dual.lam4 @ (t - x))),
        abs(float(dual.lam5 @ (t + x))),
        abs(float(dual.lam6 @ t)),
        feasibility,
    ]
    return KktReport(*values, max_residual=max(values), gamma_skipped=skipped)


class ComplementarityReport(NamedTuple):
    gap: float
    support_sum: int
    bound: int

    def __float__(self):
        return self.gap


def complementarity_gap(x, lam6, zero_threshold: float = 1e-5) -> ComplementarityReport:
    """
    :return: max_i |x_i| (lam6)_i, the thresholded ||x||_0 + ||lam6||_0 and
        its bound n
    """
    x = np.asarray(x, dtype=float)
    lam6 = np.asarray(lam6, dtype=float)
    if x.shape != lam6.shape:
        raise DomainError(f'x has shape {x.shape} but lam6 has {lam6.shape}')
    gap = float(np.max(np.abs(x) * lam6, initial=0.0))
    support_sum = sparsity(x, zero_threshold) + sparsity(lam6, zero_threshold)
    return ComplementarityReport(gap, support_sum, x.size)


class StrictPair(NamedTuple):
    primal: PrimalTriple
    dual: DualVars
    min_sum: float
    P_star: FrozenSet[int]
    Q_star: FrozenSet[int]
    strict_tol: float
    gap: float
    cases: Tuple[int, ...]

    @property
    def verified(self) -> bool:
        return self.min_sum > self.strict_tol and not (self.P_star & self.Q_star)


def _preconditions(inst: Instance, w: np.ndarray) -> Tuple[dict, Optional[WeightedSolution]]:
    checks = {'positive_weight': bool(np.all(w > 0))}
    try:
        base = solve_weighted_l1(inst, w)
    except SolverFailure as e:
        logger.info('weighted problem not solved: %s', e)
        checks.update(solved=False, finite_positive_value=False,
                      interior_optimum=False)
        return checks, None
    checks['solved'] = True
    checks['finite_positive_value'] = bool(np.isfinite(base.objective)
                                           and base.objective > INTERIOR_TOL)
    margin = inst.eps_noise - float(np.linalg.norm(base.primal.gamma))
    checks['interior_optimum'] = bool(margin > INTERIOR_TOL)
    return checks, base


def _coordinate(inst: Instance, w: np.ndarray, z_bound: float, j: int,
                base: WeightedSolution, strict_tol: float, context):
    with context.flattened():
        program = build_aux_tj(inst, w, z_bound, j)
        result = require_optimal(solve(program), f'auxiliary problem {j}')
    primal = program.primal(result)
    xi = result.primal_objective
    if xi < -strict_tol:
        return 1, primal, base.dual
    mu, tau = program.aux_dual(result)
    if tau <= INTERIOR_TOL:
        raise SolverFailure(f'auxiliary dual {j} has tau = {tau:.3e}', result)
    lam6 = mu.lam6.copy()
    lam6[j] += 1.0
    dual = DualVars(mu.lam1 / tau, mu.lam2 / tau, mu.lam3 / tau, mu.lam4 / tau,
                    mu.lam5 / tau, lam6 / tau)
    return 2, primal, dual


def strict_pair_construct(inst: Instance, w, threads: int = 1) -> StrictPair:
    """
    Build a strictly complementary primal-dual pair of min w'|x| over T.
    For every coordinate j the largest t_j over the optimal face is found;
    a positive maximum gives a primal with t_j > 0, otherwise the scaled
    auxiliary dual has (lam6)_j > 0. The n pairs are averaged.
    :param threads: worker threads for the n auxiliary solves
    :raise AssumptionViolation: w is not positive, the optimal value is not
        finite and positive, or no optimum lies strictly inside the ball
    """
    w = check_weight(w, inst.n)
    checks, base = _preconditions(inst, w)
    if not all(checks.values()):
        failed = ', '.join(name for name, ok in checks.items() if not ok)
        raise AssumptionViolation(f'strict pair preconditions fail: {failed}', checks)
    z_star = base.objective
    z_bound = z_star + 1e-9 * (1 + abs(z_star))
    strict_tol = 1e-6 * max(1.0, float(np.max(base.primal.t, initial=0.0)),
                            float(np.max(base.dual.lam6, initial=0.0)))
    context = current_context().flattened()

    def coordinate(j):
        return _coordinate(inst, w, z_bound, j, base, strict_tol, context)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = list(pool.map(coordinate, range(inst.n)))
    else:
        pairs = [coordinate(j) for j in range(inst.n)]

    cases = tuple(case for case, _, _ in pairs)
    primal = PrimalTriple(*(np.mean([p[i] for _, p, _ in pairs], axis=0)
                            for i in range(3)))
    dual = DualVars.mean([d for _, _, d in pairs])
    gap = abs(float(w @ primal.t) - dual.objective(inst)) / (1 + abs(z_star))
    if gap > GAP_TOL:
        logger.warning('averaged pair has relative gap %.2e', gap)
    sums = primal.t + dual.lam6
    pair = StrictPair(
        primal, dual, float(np.min(sums)),
        frozenset(np.flatnonzero(primal.t > strict_tol).tolist()),
        frozenset(np.flatnonzero(dual.lam6 > strict_tol).tolist()),
        strict_tol, gap, cases,
    )
    logger.info('strict pair: P* = %s, Q* = %s, min sum %.3e',
                sorted(pair.P_star), sorted(pair.Q_star), pair.min_sum)
    return pair


def unit_weight(inst: Instance, w) -> np.ndarray:
    """
    Rescale w so that the weighted l1 optimum equals 1
    """
    w = check_weight(w, inst.n)
    z = solve_weighted_l1(inst, w).objective
    if not z > INTERIOR_TOL:
        raise DomainError(f'weighted optimum {z:.3e} cannot be normalized')
    return w / z


class WeightDiagnostics(NamedTuple):
    objective: Optional[float]
    sparsity: Optional[int]
    k_star: Optional[int]
    matches_oracle: Optional[bool]
    finite_positive: bool
    strict_pair: Optional[StrictPair]
    messages: List[str]

    @property
    def strictly_complementary(self) -> bool:
        return self.strict_pair is not None and self.strict_pair.verified


def weight_diagnostics(inst: Instance, w, k_star: Optional[int] = None,
                       zero_threshold: float = 1e-5,
                       threads: int = 1) -> WeightDiagnostics:
    """
    Check whether w looks like an optimal weight: the weighted solution is
    as sparse as the oracle says, a strictly complementary pair exists and
    the optimal value is finite and positive. Never raises on a failed check.
    """
    w = check_weight(w, inst.n)
    messages = []
    try:
        solution = solve_weighted_l1(inst, w)
    except SolverFailure as e:
        return WeightDiagnostics(None, None, k_star, None, False, None, [str(e)])
    found = sparsity(solution.primal.x, zero_threshold)
    matches = None if k_star is None else found == k_star
    finite_positive = bool(np.isfinite(solution.objective)
                           and solution.objective > INTERIOR_TOL)
    try:
        pair = strict_pair_construct(inst, w, threads=threads)
    except (AssumptionViolation, SolverFailure) as e:
        pair = None
        messages.append(str(e))
    return WeightDiagnostics(solution.objective, found, k_star, matches,
                             finite_positive, pair, messages)


__all__ = [
    'KktReport',
    'kkt_check',
    'ComplementarityReport',
    'complementarity_gap',
    'StrictPair',
    'strict_pair_construct',
    'unit_weight',
    'WeightDiagnostics',
    'weight_diagnostics',
]
