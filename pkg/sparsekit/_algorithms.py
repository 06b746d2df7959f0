import logging
from dataclasses import dataclass, field, replace, fields
from enum import Enum
from typing import NamedTuple, Optional, List

import numpy as np

from ._density import (
    Relaxation,
    WeightSetKind,
    WeightSetRule,
    DensitySolution,
    dra_variant,
    solve_density,
)
from ._instance import Instance, check_weight
from ._merit import MeritFamily, MeritFunction, SurrogateKind, reweight
from ._weighted import WeightedSolution, solve_weighted_l1
from .exceptions import (
    DomainError,
    SolverFailure,
    SubproblemFailure,
    UnknownAlgorithm,
)

logger = logging.getLogger(__name__)


class Variant(Enum):
    L1 = 'l1'
    RA = 'ra'
    CWB = 'cwb'
    ARCTAN_RA = 'arctan_ra'
    DDA_I = 'dda_i'
    DDA_II = 'dda_ii'
    DDA_III = 'dda_iii'
    DRA_I = 'dra_i'
    DRA_II = 'dra_ii'
    DRA_III = 'dra_iii'
    DRA_IV = 'dra_iv'
    DRA_V = 'dra_v'
    DRA_VI = 'dra_vi'

    @property
    def reweighted(self) -> bool:
        return self in (Variant.L1, Variant.RA, Variant.CWB, Variant.ARCTAN_RA)

    @property
    def relaxation(self) -> Relaxation:
        if self.name.startswith('DDA_'):
            return Relaxation[self.name[4:]]
        if self.name.startswith('DRA_'):
            return dra_variant(self.name[4:])[0]
        raise UnknownAlgorithm(f'{self.name} has no dual density relaxation')

    @property
    def weight_set(self) -> Optional[WeightSetKind]:
        if self.name.startswith('DRA_'):
            return dra_variant(self.name[4:])[1]
        return None


_FRACTION = MeritFunction(MeritFamily.FRACTION, 1e-15)


@dataclass(frozen=True)
class AlgorithmConfig:
    """
    Algorithm selector plus its constants. Use preset() for the defaults
    and replace() to override single constants.
    """
    variant: Variant
    name: str = ''
    merit: MeritFunction = _FRACTION
    alpha: Optional[float] = None
    gamma_bound: Optional[float] = None
    M: Optional[float] = None
    M_star: Optional[float] = None
    sigma1: Optional[float] = None
    sigma2: Optional[float] = None
    k_max: int = 5
    zero_threshold: float = 1e-5
    weight_cap: float = 1e3
    surrogate: SurrogateKind = SurrogateKind.J3_INVPSI
    early_stop: bool = False

    def __post_init__(self):
        if not isinstance(self.variant, Variant):
            object.__setattr__(self, 'variant', Variant(self.variant))
        if not self.name:
            object.__setattr__(self, 'name', self.variant.value)
        variant = self.variant
        lowest = 1 if variant.reweighted else 0
        if int(self.k_max) != self.k_max or self.k_max < lowest:
            raise DomainError(f'k_max must be an integer >= {lowest}, got {self.k_max}')
        if not self.zero_threshold > 0:
            raise DomainError('zero_threshold must be positive')
        if variant.reweighted:
            return
        required = ['weight_cap']
        relaxation = variant.relaxation
        required += ['gamma_bound', 'sigma1'] if relaxation is Relaxation.III \
            else ['alpha']
        if variant.weight_set is WeightSetKind.BOX:
            required += ['M', 'M_star']
        elif variant.weight_set is WeightSetKind.INVERSE:
            required += ['M', 'sigma2']
        for name in required:
            value = getattr(self, name)
            if value is None or not value > 0:
                raise DomainError(f'{variant.name} needs a positive {name}, got {value}')

    def replace(self, **changes) -> 'AlgorithmConfig':
        return replace(self, **changes)

    def weight_rule(self, anchor) -> WeightSetRule:
        return WeightSetRule(self.variant.weight_set, self.M, anchor,
                             M_star=self.M_star, sigma2=self.sigma2)

    def describe(self) -> dict:
        """
        Plain dictionary of the effective constants, for provenance
        """
        described = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Enum):
                value = value.value
            elif isinstance(value, MeritFunction):
                value = {'family': value.family.value, 'eps_merit': value.eps_merit}
            described[f.name] = value
        return described


def _preset_table():
    def dra(name, variant, **constants):
        return AlgorithmConfig(variant, name=name, **constants)

    table = [
        AlgorithmConfig(Variant.L1, name='l1', k_max=1),
        AlgorithmConfig(Variant.RA, name='ra',
                        merit=MeritFunction(MeritFamily.LOG, 1e-1)),
        AlgorithmConfig(Variant.CWB, name='cwb',
                        merit=MeritFunction(MeritFamily.CWB_LOG, 1e-1)),
        AlgorithmConfig(Variant.CWB, name='cwb5',
                        merit=MeritFunction(MeritFamily.CWB_LOG, 1e-5)),
        AlgorithmConfig(Variant.ARCTAN_RA, name='arctan',
                        merit=MeritFunction(MeritFamily.ARCTAN, 1e-1)),
        AlgorithmConfig(Variant.ARCTAN_RA, name='arctan5',
                        merit=MeritFunction(MeritFamily.ARCTAN, 1e-5)),
        dra('dda1', Variant.DDA_I, alpha=1e-8),
        dra('dda2', Variant.DDA_II, alpha=1e-5),
        dra('dda3', Variant.DDA_III, gamma_bound=1.0, sigma1=0.1),
        dra('dra1', Variant.DRA_I, alpha=1e-8, M=1e2, M_star=1e3),
        dra('dra2', Variant.DRA_II, alpha=1e-8, M=1e2, sigma2=0.1),
        dra('dra3', Variant.DRA_III, alpha=1e-5, M=10.0, M_star=10.0),
        dra('dra4', Variant.DRA_IV, alpha=1e-5, M=10.0, sigma2=0.1),
        dra('dra5', Variant.DRA_V, gamma_bound=1.0, M=10.0, M_star=10.0, sigma1=0.1),
        dra('dra6', Variant.DRA_VI, gamma_bound=1.0, M=10.0, sigma1=0.1, sigma2=0.1),
    ]
    return {config.name: config for config in table}


PRESETS = _preset_table()


def preset(name: str, **overrides) -> AlgorithmConfig:
    """
    Look up default constants by name (l1, ra, cwb, cwb5, arctan, arctan5,
    dda1-dda3, dra1-dra6)
    """
    try:
        config = PRESETS[name.lower()]
    except KeyError:
        raise UnknownAlgorithm(
            f'Unknown algorithm "{name}", expected one of: {", ".join(PRESETS)}'
        )
    return config.replace(**overrides) if overrides else config


class IterateRecord(NamedTuple):
    k: int
    w: np.ndarray
    x: Optional[np.ndarray]
    lam6: Optional[np.ndarray]
    objective: Optional[float]
    status: str


@dataclass
class RunTrace:
    algorithm: str
    zero_threshold: float = 1e-5
    iterates: List[IterateRecord] = field(default_factory=list)
    final_x: Optional[np.ndarray] = None
    final_sparsity: Optional[int] = None
    failed: bool = False
    message: str = ''

    def record(self, k: int, w, solution: WeightedSolution, lam6=None):
        x = solution.primal.x
        self.iterates.append(IterateRecord(
            k, np.asarray(w, float).copy(), x,
            solution.dual.lam6 if lam6 is None else lam6,
            solution.objective, 'optimal'
        ))
        self.final_x = x
        self.final_sparsity = sparsity(x, self.zero_threshold)

    def fail(self, k: int, w, error: Exception):
        logger.warning('%s stopped at iteration %d: %s', self.algorithm, k, error)
        self.iterates.append(IterateRecord(
            k, None if w is None else np.asarray(w, float).copy(),
            None, None, None, 'failed'
        ))
        self.failed = True
        self.message = str(error)
        return self

    def converged(self, tol: float = 1e-8) -> bool:
        good = [r.x for r in self.iterates if r.x is not None]
        return len(good) >= 2 and np.max(np.abs(good[-1] - good[-2])) <= tol


def sparsity(x, zero_threshold: float = 1e-5) -> int:
    """
    Count entries with |x_i| > zero_threshold * max(1, ||x||_inf)
    """
    x = np.abs(np.asarray(x, dtype=float))
    if x.size == 0:
        return 0
    return int(np.count_nonzero(x > zero_threshold * max(1.0, float(x.max()))))


def ra_solve(inst: Instance, merit: MeritFunction, w0=None, k_max: int = 5,
             zero_threshold: float = 1e-5, early_stop: bool = False,
             name: str = 'ra') -> RunTrace:
    """
    Reweighted l1: x^k minimizes (w^k)'|x| over T and w^(k+1) is the merit
    gradient at |x^k|
    :param w0: initial weights, all ones by default
    """
    w = np.ones(inst.n) if w0 is None else check_weight(w0, inst.n)
    trace = RunTrace(name, zero_threshold)
    for k in range(1, k_max + 1):
        try:
            solution = solve_weighted_l1(inst, w)
        except SolverFailure as e:
            return trace.fail(k, w, e)
        trace.record(k, w, solution)
        if early_stop and trace.converged():
            break
        w = reweight(merit, solution.primal.x)
    return trace


class DdaOutcome(NamedTuple):
    w0: np.ndarray
    lam6: np.ndarray
    x0: np.ndarray
    density: DensitySolution
    weighted: WeightedSolution


def dda_solve(variant, inst: Instance, cfg: AlgorithmConfig) -> DdaOutcome:
    """
    One step dual density algorithm: solve the relaxation for (w0, lam6)
    and then min (w0)'|x| over T for x0
    :param variant: Relaxation I, II or III
    """
    density = solve_density(variant, inst, cfg)
    weighted = solve_weighted_l1(inst, np.maximum(density.w, 0.0))
    return DdaOutcome(density.w, density.lam6, weighted.primal.x, density, weighted)


def dra_solve(variant, inst: Instance, cfg: AlgorithmConfig) -> RunTrace:
    """
    Dual density reweighted algorithm. The initial weights come from the
    matching one step algorithm; iteration k then solves the relaxation
    over the weight set anchored at x^(k-1) followed by a weighted l1 solve.
    :param variant: 1..6 or 'I'..'VI'
    """
    relaxation, kind = dra_variant(variant)
    trace = RunTrace(cfg.name, cfg.zero_threshold)
    try:
        outcome = dda_solve(relaxation, inst, cfg)
    except (SubproblemFailure, SolverFailure) as e:
        return trace.fail(0, None, e)
    trace.record(0, outcome.w0, outcome.weighted, lam6=outcome.lam6)
    rule = WeightSetRule(kind, cfg.M, outcome.x0, M_star=cfg.M_star,
                         sigma2=cfg.sigma2)
    for k in range(1, cfg.k_max + 1):
        try:
            density = solve_density(relaxation, inst, cfg, rule=rule)
            w = np.maximum(density.w, 0.0)
            solution = solve_weighted_l1(inst, w)
        except (SubproblemFailure, SolverFailure) as e:
            return trace.fail(k, None, e)
        trace.record(k, w, solution, lam6=density.lam6)
        if cfg.early_stop and trace.converged():
            break
        rule = rule.anchored(solution.primal.x)
    return trace


def l1_solve(inst: Instance) -> np.ndarray:
    """
    Plain l1 minimization over T
    """
    return solve_weighted_l1(inst, np.ones(inst.n)).primal.x


def run_algorithm(cfg: AlgorithmConfig, inst: Instance) -> RunTrace:
    """
    Run any configured algorithm and return its trace
    """
    variant = cfg.variant
    if variant is Variant.L1:
        return ra_solve(inst, cfg.merit, k_max=1, zero_threshold=cfg.zero_threshold,
                        name=cfg.name)
    if variant.reweighted:
        return ra_solve(inst, cfg.merit, k_max=cfg.k_max,
                        zero_threshold=cfg.zero_threshold,
                        early_stop=cfg.early_stop, name=cfg.name)
    if variant.name.startswith('DRA_'):
        return dra_solve(variant.name[4:], inst, cfg)
    trace = RunTrace(cfg.name, cfg.zero_threshold)
    try:
        outcome = dda_solve(variant.relaxation, inst, cfg)
    except (SubproblemFailure, SolverFailure) as e:
        return trace.fail(0, None, e)
    trace.record(0, outcome.w0, outcome.weighted, lam6=outcome.lam6)
    return trace


__all__ = [
    'Variant',
    'AlgorithmConfig',
    'PRESETS',
    'preset',
    'IterateRecord',
    'RunTrace',
    'DdaOutcome',
    'sparsity',
    'ra_solve',
    'dda_solve',
    'dra_solve',
    'l1_solve',
    'run_algorithm',
]
