import logging
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from ._backend import SolverResult
from ._cones import ConeKind, ConeProgram
from ._instance import Instance, PrimalTriple, DualVars, check_weight
from ._settings import uses_settings
from ._solver import solve, require_optimal
from .exceptions import DomainError

logger = logging.getLogger(__name__)


class WeightedL1Program(ConeProgram):
    """
    Epigraph form of min w'|x| over T in the variables (x, t, gamma):

        minimize    w't
        subject to  gamma = y - Ax              (zero)
                    b - Bx >= 0                 (nonneg, lam2)
                    (eps; gamma) in SOC         (lam1, lam3)
                    t - x >= 0, t + x >= 0      (nonneg, lam4, lam5)
                    t >= 0                      (nonneg, lam6)

    Coordinates with zero weight get the extra bound t_i <= zero_weight_cap.
    """

    def __init__(self, inst: Instance, w, zero_weight_cap: float,
                 objective=None, extra_rows=None, extra_rhs=None):
        m, n, l = inst.m, inst.n, inst.l
        w = check_weight(w, n)
        self.inst = inst
        self.weights = w
        I_n, I_m = sp.identity(n), sp.identity(m)
        Z = sp.csr_matrix
        rows, rhs, cones = [], [], []

        def add(matrix, h, kind, dim):
            rows.append(sp.csr_matrix(matrix, shape=(dim, 2 * n + m)))
            rhs.append(np.asarray(h, dtype=float).ravel())
            cones.append((kind, dim))

        add(sp.hstack([inst.A, Z((m, n)), I_m]), inst.y, ConeKind.ZERO, m)
        if l:
            add(sp.hstack([inst.B, Z((l, 2 * n + m - n))]), inst.b,
                ConeKind.NONNEG, l)
        self.noiseless = inst.eps_noise == 0
        if self.noiseless:
            add(sp.hstack([Z((m, 2 * n)), -I_m]), np.zeros(m), ConeKind.ZERO, m)
        else:
            soc = sp.vstack([Z((1, 2 * n + m)), sp.hstack([Z((m, 2 * n)), -I_m])])
            add(soc, np.r_[inst.eps_noise, np.zeros(m)], ConeKind.SOC, m + 1)
        add(sp.hstack([I_n, -I_n, Z((n, m))]), np.zeros(n), ConeKind.NONNEG, n)
        add(sp.hstack([-I_n, -I_n, Z((n, m))]), np.zeros(n), ConeKind.NONNEG, n)
        add(sp.hstack([Z((n, n)), -I_n, Z((n, m))]), np.zeros(n), ConeKind.NONNEG, n)
        self.capped = np.flatnonzero(w == 0)
        if self.capped.size:
            k = self.capped.size
            cap = sp.csr_matrix((np.ones(k), (np.arange(k), n + self.capped)),
                                shape=(k, 2 * n + m))
            add(cap, np.full(k, zero_weight_cap), ConeKind.NONNEG, k)
        if extra_rows is not None:
            add(extra_rows, extra_rhs, ConeKind.NONNEG, extra_rows.shape[0])
        if objective is None:
            objective = np.concatenate([np.zeros(n), w, np.zeros(m)])
        super().__init__(objective, sp.vstack(rows), np.concatenate(rhs), cones)

    def primal(self, result: SolverResult) -> PrimalTriple:
        n = self.inst.n
        z = result.primal
        return PrimalTriple(x=z[:n].copy(), t=z[n:2 * n].copy(), gamma=z[2 * n:].copy())

    def dual(self, result: SolverResult) -> DualVars:
        blocks = result.block_duals()
        y1 = blocks[0]
        position = 1
        lam2 = blocks[position] if self.inst.l else np.zeros(0)
        position += 1 if self.inst.l else 0
        ball = blocks[position]
        lam3 = -y1
        lam1 = float(np.linalg.norm(lam3)) if self.noiseless else float(ball[0])
        lam4, lam5, lam6 = blocks[position + 1:position + 4]
        return DualVars(lam1, lam2.copy(), lam3.copy(), lam4.copy(),
                        lam5.copy(), lam6.copy())


class AuxProgram(WeightedL1Program):
    """
    Maximize t_j over the optimal face of the weighted problem:

        minimize    -t_j
        subject to  the constraints of WeightedL1Program
                    z_star - w't >= 0           (nonneg, tau)
    """

    def __init__(self, inst: Instance, w, z_star: float, j: int,
                 zero_weight_cap: float):
        n, m = inst.n, inst.m
        w = check_weight(w, n)
        objective = np.zeros(2 * n + m)
        objective[n + j] = -1.0
        bound = sp.csr_matrix(np.concatenate([np.zeros(n), w, np.zeros(m)]))
        super().__init__(inst, w, zero_weight_cap, objective=objective,
                         extra_rows=bound, extra_rhs=[z_star])
        self.j = j
        self.z_star = z_star

    def aux_dual(self, result: SolverResult) -> 'AuxDual':
        """
        Multipliers (mu, tau) of the auxiliary problem. The dual constraint
        on t reads tau w = mu4 + mu5 + mu6 + e_j.
        """
        return AuxDual(mu=self.dual(result), tau=float(result.block_duals()[-1][0]))


class AuxDual(NamedTuple):
    mu: DualVars
    tau: float


class WeightedSolution(NamedTuple):
    primal: PrimalTriple
    dual: DualVars
    objective: float
    result: SolverResult


@uses_settings
def build_weighted_l1(inst: Instance, w,
                      zero_weight_cap: float = None) -> WeightedL1Program:
    """
    Build min w'|x| over T as a cone program
    :param inst: problem data
    :param w: nonnegative weights
    :return: program exposing primal() and dual() index maps
    """
    return WeightedL1Program(inst, w, zero_weight_cap)


@uses_settings
def build_aux_tj(inst: Instance, w, z_star: float, j: int,
                 zero_weight_cap: float = None) -> AuxProgram:
    """
    Build the problem of maximizing t_j among optimal solutions of the
    weighted problem
    :param z_star: optimal value of build_weighted_l1(inst, w)
    :param j: zero based coordinate
    """
    if not 0 <= j < inst.n:
        raise DomainError(f'index {j} out of range for n = {inst.n}')
    return AuxProgram(inst, w, z_star, j, zero_weight_cap)


def extract_primal(inst: Instance, w, result: SolverResult) -> PrimalTriple:
    require_optimal(result, 'weighted l1 program')
    return build_weighted_l1(inst, w).primal(result)


def extract_dual(inst: Instance, w, result: SolverResult) -> DualVars:
    """
    Map the solver duals of build_weighted_l1(inst, w) to (lam1, ..., lam6)
    """
    require_optimal(result, 'weighted l1 program')
    return build_weighted_l1(inst, w).dual(result)


def solve_weighted_l1(inst: Instance, w) -> WeightedSolution:
    """
    Solve min w'|x| over T
    :raise SolverFailure: if the solve is not OPTIMAL
    """
    program = build_weighted_l1(inst, w)
    result = require_optimal(solve(program), 'weighted l1 program')
    return WeightedSolution(program.primal(result), program.dual(result),
                            result.primal_objective, result)


__all__ = [
    'WeightedL1Program',
    'AuxProgram',
    'AuxDual',
    'WeightedSolution',
    'build_weighted_l1',
    'build_aux_tj',
    'extract_primal',
    'extract_dual',
    'solve_weighted_l1',
]
