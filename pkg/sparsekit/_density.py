import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from ._backend import SolverResult, SolverStatus
from ._cones import ConeKind, ConeProgram
from ._instance import Instance, DualVars
from ._merit import (
    MeritFunction,
    Surrogate,
    SurrogateKind,
    Tangent,
    linearize,
    merit_value,
    surrogate_value,
)
from ._settings import uses_settings
from ._solver import solve, require_converged
from .exceptions import (
    InvalidWeightSet,
    NotConeRepresentable,
    SolverFailure,
    SubproblemFailure,
    UnknownAlgorithm,
)

logger = logging.getLogger(__name__)

DAMPING = 0.5
INNER_ITERATIONS = 20
CONSTRAINT_TOL = 1e-6


class Relaxation(Enum):
    """
    I:   maximize D(lam) + alpha Psi(lam6)  s.t. D(lam) <= 1
    II:  maximize D(lam)                    s.t. D(lam) <= alpha Psi(lam6)
    III: maximize D(lam)                    s.t. D(lam) + f(lam6) <= gamma_bound
    """
    I = 1
    II = 2
    III = 3


class WeightSetKind(Enum):
    BOX = 'box'
    INVERSE = 'inverse'


@dataclass(frozen=True)
class WeightSetRule:
    """
    Bounded weight set anchored at the previous iterate:

    BOX:      anchor'w <= M,  0 <= w <= M_star
    INVERSE:  0 <= w_i <= M / (|anchor_i| + sigma2)
    """
    variant: WeightSetKind
    M: float
    anchor: np.ndarray
    M_star: Optional[float] = None
    sigma2: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.variant, WeightSetKind):
            object.__setattr__(self, 'variant', WeightSetKind(self.variant))
        anchor = np.asarray(self.anchor, dtype=float).ravel()
        if not np.all(np.isfinite(anchor)):
            raise InvalidWeightSet('anchor must be finite')
        object.__setattr__(self, 'anchor', anchor)
        if self.M is None or not self.M > 0:
            raise InvalidWeightSet(f'M must be positive, got {self.M}')
        if self.variant is WeightSetKind.BOX:
            if self.M_star is None or not 1 <= self.M <= self.M_star:
                raise InvalidWeightSet(
                    f'BOX requires 1 <= M <= M_star, got M={self.M}, '
                    f'M_star={self.M_star}'
                )
        elif self.sigma2 is None or not self.sigma2 > 0:
            raise InvalidWeightSet(f'INVERSE requires sigma2 > 0, got {self.sigma2}')

    def anchored(self, anchor) -> 'WeightSetRule':
        return replace(self, anchor=anchor)

    def upper_bounds(self) -> np.ndarray:
        if self.variant is WeightSetKind.BOX:
            return np.full(self.anchor.size, float(self.M_star))
        return self.M / (np.abs(self.anchor) + self.sigma2)

    def violation(self, w) -> float:
        w = np.asarray(w, dtype=float)
        excess = max(0.0, float(np.max(w - self.upper_bounds())),
                     float(-np.min(w)))
        if self.variant is WeightSetKind.BOX:
            excess = max(excess, float(self.anchor @ w) - self.M)
        return excess

    def contains(self, w, tol: float = 1e-6) -> bool:
        return self.violation(w) <= tol


class _Index:
    def __init__(self, sizes):
        self.slices = {}
        start = 0
        for name, size in sizes:
            self.slices[name] = slice(start, start + size)
            start += size
        self.size = start

    def __getitem__(self, name) -> slice:
        return self.slices[name]

    def columns(self, name, values=None) -> sp.csr_matrix:
        """
        Rows selecting variable block name, scaled by values
        """
        block = self.slices[name]
        k = block.stop - block.start
        data = np.ones(k) if values is None else np.asarray(values, float)
        return sp.csr_matrix((data, (np.arange(k), np.arange(block.start, block.stop))),
                             shape=(k, self.size))

    def embed(self, rows: int, **blocks) -> sp.csr_matrix:
        matrix = sp.lil_matrix((rows, self.size))
        for name, values in blocks.items():
            if np.size(values):
                matrix[:, self.slices[name]] = values
        return matrix.tocsr()

    def row(self, **coefficients) -> sp.csr_matrix:
        row = np.zeros(self.size)
        for name, values in coefficients.items():
            row[self.slices[name]] = values
        return sp.csr_matrix(row)


class DensitySolution(NamedTuple):
    w: np.ndarray
    dual: DualVars
    objective: float
    merit_value: float
    u: Optional[np.ndarray]
    psi: Optional[float]
    v: Optional[float]
    eps_merit: float

    @property
    def lam6(self) -> np.ndarray:
        return self.dual.lam6


class DensityProgram(ConeProgram):
    """
    Dual density relaxation over (w, lam1, ..., lam6) with lam in D(w).
    With model None the merit term is represented exactly:

        (lam6_i + eps, u_i, sqrt(2 eps)) in RSOC  so  u_i >= eps / (lam6_i + eps)
        Psi = n - sum(u)
        (psi + sigma1, v, sqrt2) in RSOC          so  v >= 1 / (psi + sigma1)

    Otherwise model is the tangent of Psi (relaxations I, II) or of f
    (relaxation III) in lam6.
    """

    def __init__(self, relaxation: Relaxation, inst: Instance, cfg,
                 merit: MeritFunction, rule: Optional[WeightSetRule] = None,
                 model: Optional[Tangent] = None):
        m, n, l = inst.m, inst.n, inst.l
        self.relaxation = relaxation
        self.inst = inst
        self.rule = rule
        self.merit = merit
        self.model = model
        self.alpha = cfg.alpha
        self.gamma_bound = cfg.gamma_bound
        exact = model is None
        sizes = [('w', n), ('lam1', 1), ('lam2', l), ('lam3', m),
                 ('lam4', n), ('lam5', n), ('lam6', n)]
        if exact:
            sizes.append(('u', n))
            if relaxation is Relaxation.III:
                sizes += [('psi', 1), ('v', 1)]
        index = self.index = _Index(sizes)
        dual_objective = dict(lam1=-inst.eps_noise, lam2=-inst.b, lam3=inst.y)
        rows, rhs, cones = [], [], []

        def add(matrix, h, kind):
            matrix = sp.csr_matrix(matrix)
            rows.append(matrix)
            rhs.append(np.broadcast_to(np.asarray(h, float), (matrix.shape[0],)))
            cones.append((kind, matrix.shape[0]))

        stationarity = index.embed(n, lam2=inst.B.T, lam3=-inst.A.T) \
            + index.columns('lam4') - index.columns('lam5')
        add(stationarity, 0.0, ConeKind.ZERO)
        add(index.columns('lam4') + index.columns('lam5') + index.columns('lam6')
            - index.columns('w'), 0.0, ConeKind.ZERO)
        add(-sp.vstack([index.columns('lam1'), index.columns('lam3')]), 0.0,
            ConeKind.SOC)
        for name in ('lam2', 'lam4', 'lam5', 'lam6', 'w'):
            if index[name].stop > index[name].start:
                add(-index.columns(name), 0.0, ConeKind.NONNEG)
        if rule is None:
            add(index.columns('w'), cfg.weight_cap, ConeKind.NONNEG)
        else:
            add(index.columns('w'), rule.upper_bounds(), ConeKind.NONNEG)
            if rule.variant is WeightSetKind.BOX:
                add(index.row(w=rule.anchor), rule.M, ConeKind.NONNEG)

        eps = merit.eps_merit
        if exact:
            for i in range(n):
                lam6_i = index['lam6'].start + i
                u_i = index['u'].start + i
                block = sp.csr_matrix(([-1.0, -1.0], ([0, 1], [lam6_i, u_i])),
                                      shape=(3, index.size))
                add(block, [eps, 0.0, np.sqrt(2 * eps)], ConeKind.RSOC)

        objective = np.zeros(index.size)
        for name, values in dual_objective.items():
            objective[index[name]] = -np.asarray(values)
        if relaxation is Relaxation.I:
            add(index.row(**dual_objective), 1.0, ConeKind.NONNEG)
            if exact:
                objective[index['u']] = self.alpha
            else:
                objective[index['lam6']] -= self.alpha * model.gradient
        elif relaxation is Relaxation.II:
            if exact:
                add(index.row(u=self.alpha, **dual_objective),
                    self.alpha * n, ConeKind.NONNEG)
            else:
                add(index.row(lam6=-self.alpha * model.gradient, **dual_objective),
                    self.alpha * model.constant, ConeKind.NONNEG)
        else:
            if exact:
                add(index.row(v=1.0, **dual_objective), self.gamma_bound,
                    ConeKind.NONNEG)
                rotated = sp.csr_matrix(
                    ([-1.0, -1.0], ([0, 1], [index['psi'].start, index['v'].start])),
                    shape=(3, index.size))
                add(rotated, [cfg.sigma1, 0.0, np.sqrt(2.0)], ConeKind.RSOC)
                add(index.row(u=1.0, psi=1.0), float(n), ConeKind.NONNEG)
            else:
                add(index.row(lam6=model.gradient, **dual_objective),
                    self.gamma_bound - model.constant, ConeKind.NONNEG)
        self.dual_objective_row = index.row(**dual_objective).toarray().ravel()
        super().__init__(objective, sp.vstack(rows), np.concatenate(rhs), cones)

    def dual_vars(self, z) -> DualVars:
        index = self.index
        return DualVars(float(z[index['lam1']][0]), z[index['lam2']].copy(),
                        z[index['lam3']].copy(), z[index['lam4']].copy(),
                        z[index['lam5']].copy(), z[index['lam6']].copy())

    def solution(self, result: SolverResult) -> DensitySolution:
        z = result.primal
        index = self.index
        dual = self.dual_vars(z)
        lam6 = np.maximum(dual.lam6, 0.0)
        D = float(self.dual_objective_row @ z)
        true_psi = merit_value(self.merit, lam6)
        u = psi = v = None
        if self.model is None:
            scaled = z[index['u']]
            u = scaled / self.merit.eps_merit
            psi = self.inst.n - float(np.sum(scaled))
            if self.relaxation is Relaxation.III:
                v = float(z[index['v']][0])
        objective = D + self.alpha * true_psi if self.relaxation is Relaxation.I else D
        return DensitySolution(w=z[index['w']].copy(), dual=dual, objective=objective,
                               merit_value=true_psi, u=u, psi=psi, v=v,
                               eps_merit=self.merit.eps_merit)


def _surrogate(cfg, merit: MeritFunction) -> Surrogate:
    kind = getattr(cfg, 'surrogate', SurrogateKind.J3_INVPSI)
    return Surrogate(kind, cfg.sigma1, merit)


def _check_exact(relaxation: Relaxation, cfg, merit: MeritFunction):
    if relaxation is Relaxation.III:
        if not _surrogate(cfg, merit).soc_exact:
            raise NotConeRepresentable(
                'only J3 with the FRACTION merit has an exact conic form'
            )
    elif not merit.soc_exact:
        raise NotConeRepresentable(
            f'{merit.family.name} merit has no exact conic form'
        )


def _relaxation(variant) -> Relaxation:
    if isinstance(variant, Relaxation):
        return variant
    if isinstance(variant, str):
        try:
            return Relaxation[variant.upper()]
        except KeyError:
            raise UnknownAlgorithm(f'unknown relaxation "{variant}"')
    return Relaxation(variant)


_ROMAN = ('I', 'II', 'III', 'IV', 'V', 'VI')


def dra_variant(variant: Union[int, str]) -> Tuple[Relaxation, WeightSetKind]:
    """
    Relaxation and weight set of a reweighted variant I..VI: pairs (I, II),
    (III, IV), (V, VI) share a relaxation; odd variants use BOX, even ones
    INVERSE.
    """
    if isinstance(variant, str):
        if variant.upper() not in _ROMAN:
            raise UnknownAlgorithm(f'unknown reweighted variant "{variant}"')
        variant = _ROMAN.index(variant.upper()) + 1
    if not 1 <= variant <= 6:
        raise UnknownAlgorithm(f'unknown reweighted variant {variant}')
    kind = WeightSetKind.BOX if variant % 2 else WeightSetKind.INVERSE
    return Relaxation((variant + 1) // 2), kind


def build_dda(variant, inst: Instance, cfg) -> DensityProgram:
    """
    Exact conic form of the one-step dual density relaxation
    :param variant: Relaxation I, II or III
    :param cfg: carries alpha or gamma_bound, sigma1, merit and weight_cap
    :raise NotConeRepresentable: when the merit or surrogate is not exact
    """
    relaxation = _relaxation(variant)
    _check_exact(relaxation, cfg, cfg.merit)
    return DensityProgram(relaxation, inst, cfg, cfg.merit)


def build_dra_subproblem(variant, inst: Instance, rule: WeightSetRule,
                         cfg) -> DensityProgram:
    """
    Exact conic form of the reweighted dual density subproblem with w
    restricted to the weight set of rule
    :param variant: reweighted variant 1..6 (or 'I'..'VI')
    """
    relaxation, kind = dra_variant(variant)
    if not isinstance(rule, WeightSetRule):
        raise InvalidWeightSet(f'expected a WeightSetRule, got {rule!r}')
    if rule.anchor.size != inst.n:
        raise InvalidWeightSet(f'anchor has {rule.anchor.size} entries, expected {inst.n}')
    if rule.variant is not kind:
        logger.info('variant %s normally uses the %s weight set, got %s',
                    _ROMAN[(relaxation.value - 1) * 2], kind.name, rule.variant.name)
    _check_exact(relaxation, cfg, cfg.merit)
    return DensityProgram(relaxation, inst, cfg, cfg.merit, rule)


def true_violation(relaxation: Relaxation, cfg, merit: MeritFunction,
                   solution: DensitySolution) -> float:
    """
    Violation of the nonlinear constraint of the relaxation, evaluated with
    the exact merit function
    """
    lam6 = np.maximum(solution.lam6, 0.0)
    D = solution.objective if relaxation is not Relaxation.I else \
        solution.objective - cfg.alpha * solution.merit_value
    if relaxation is Relaxation.I:
        return max(0.0, D - 1.0)
    if relaxation is Relaxation.II:
        return max(0.0, D - cfg.alpha * merit_value(merit, lam6))
    f = _surrogate(cfg, merit)
    return max(0.0, D + surrogate_value(f, lam6) - cfg.gamma_bound)


def _tangent(relaxation: Relaxation, cfg, merit: MeritFunction, at) -> Tangent:
    if relaxation is Relaxation.III:
        return linearize(_surrogate(cfg, merit), at)
    return linearize(merit, at)


@uses_settings
def _solve_program(build, merit: MeritFunction, what: str,
                   eps_floor: float = None,
                   tol_solver: float = None) -> Tuple[DensityProgram, SolverResult]:
    """
    Solve build(merit), retrying once with eps_merit raised to eps_floor when
    the solver stops at the iteration limit and then once with the other
    backend
    :raise SubproblemFailure: when no attempt gets near the optimum
    """
    program = build(merit)
    result = solve(program)
    if (result.status is SolverStatus.MAX_ITERS
            and not result.near_optimal(tol_solver)
            and merit.eps_merit < eps_floor):
        logger.warning('%s ended with %s, retrying with eps_merit %.1e '
                       'instead of %.1e', what, result.status.value,
                       eps_floor, merit.eps_merit)
        program = build(replace(merit, eps_merit=eps_floor))
        result = solve(program)
    try:
        return program, require_converged(program, result, what)
    except SolverFailure as e:
        raise SubproblemFailure(str(e)) from e


def solve_nonconic(program_family, inst: Instance, cfg,
                   merit: MeritFunction,
                   rule: Optional[WeightSetRule] = None) -> DensitySolution:
    """
    Sequential linearization of a dual density relaxation for merits and
    surrogates without a conic form. Psi (or f) is replaced by its tangent
    at the current lam6; when the solution violates the true constraint the
    linearization point is damped towards it instead of accepted. A
    subproblem that cannot be solved pulls the linearization point back
    towards the last one that could.
    :param program_family: Relaxation I, II or III
    :raise SubproblemFailure: when no iterate satisfies the true constraint
    """
    relaxation = _relaxation(program_family)
    what = f'linearized relaxation {relaxation.name}'
    at = np.ones(inst.n)
    solvable = None
    accepted = None
    for iteration in range(INNER_ITERATIONS):

        def build(m: MeritFunction) -> DensityProgram:
            return DensityProgram(relaxation, inst, cfg, m, rule,
                                  model=_tangent(relaxation, cfg, m, at))

        try:
            program, result = _solve_program(build, merit, what)
        except SubproblemFailure as e:
            logger.warning('linearized subproblem %d failed: %s', iteration, e)
            if solvable is None:
                break
            at = DAMPING * at + (1 - DAMPING) * solvable
            continue
        solvable = at
        merit = program.merit
        candidate = program.solution(result)
        lam6 = np.maximum(candidate.lam6, 0.0)
        violation = true_violation(relaxation, cfg, merit, candidate)
        logger.debug('linearization %d: objective %.6g violation %.2e',
                     iteration, candidate.objective, violation)
        if violation <= CONSTRAINT_TOL:
            accepted = candidate
            if np.max(np.abs(lam6 - at)) <= 1e-8 * (1 + np.max(np.abs(at))):
                break
            at = lam6
        else:
            at = DAMPING * at + (1 - DAMPING) * lam6
    if accepted is None:
        raise SubproblemFailure(
            f'no linearized iterate of relaxation {relaxation.name} satisfied '
            f'the true constraint within {CONSTRAINT_TOL}'
        )
    return accepted


def solve_density(relaxation, inst: Instance, cfg,
                  rule: Optional[WeightSetRule] = None) -> DensitySolution:
    """
    Solve a dual density relaxation, exactly when the merit (and surrogate)
    admit a conic form and by sequential linearization otherwise. A solve
    that stops at the iteration limit is retried with eps_merit raised to
    eps_floor, then with the other backend.
    """
    relaxation = _relaxation(relaxation)
    merit = cfg.merit
    try:
        _check_exact(relaxation, cfg, merit)
    except NotConeRepresentable:
        return solve_nonconic(relaxation, inst, cfg, merit, rule)

    def build(m: MeritFunction) -> DensityProgram:
        return DensityProgram(relaxation, inst, cfg, m, rule)

    program, result = _solve_program(
        build, merit, f'dual density relaxation {relaxation.name}')
    return program.solution(result)


__all__ = [
    'Relaxation',
    'WeightSetKind',
    'WeightSetRule',
    'DensityProgram',
    'DensitySolution',
    'dra_variant',
    'build_dda',
    'build_dra_subproblem',
    'true_violation',
    'solve_nonconic',
    'solve_density',
]
