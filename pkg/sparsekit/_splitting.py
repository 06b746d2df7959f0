import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg

from ._backend import (
    ConeSolverBackend,
    SolverResult,
    SolverStatus,
    backend,
    residuals,
)
from ._cones import ConeProgram, project_product

logger = logging.getLogger(__name__)


@backend('admm')
class SplittingBackend(ConeSolverBackend):
    """
    Operator splitting method alternating a proximal step on the affine set
    Gz + s = h with a projection onto the cone product, followed by a scaled
    dual update. The linear system is factored once per program.
    """
    rho = 1.0
    sigma = 1e-6
    relaxation = 1.6
    check_every = 10

    def solve(self, program: ConeProgram, tol_solver: float,
              max_iters: int) -> SolverResult:
        G, h, c = program.eq_matrix, program.eq_rhs, program.objective
        cones = program.cones
        n, rows = program.num_vars, program.num_rows
        rho, sigma, alpha = self.rho, self.sigma, self.relaxation
        system = (sigma * sp.identity(n) + rho * (G.T @ G)).tocsc()
        factor = scipy.sparse.linalg.splu(system)

        z = np.zeros(n)
        s = np.zeros(rows)
        u = np.zeros(rows)
        measures = residuals(program, z, s, rho * u)
        status = SolverStatus.MAX_ITERS
        iteration = 0
        for iteration in range(1, max_iters + 1):
            z = factor.solve(sigma * z - c - rho * (G.T @ (s - h + u)))
            relaxed = alpha * (h - G @ z) + (1 - alpha) * s
            s = project_product(cones, relaxed - u)
            u = u + s - relaxed
            if iteration % self.check_every and iteration != max_iters:
                continue
            if not (np.all(np.isfinite(z)) and np.all(np.isfinite(u))):
                status = SolverStatus.NUMERICAL_FAILURE
                break
            measures = residuals(program, z, s, rho * u)
            if max(measures[:3]) <= tol_solver:
                status = SolverStatus.OPTIMAL
                break
            if iteration % (100 * self.check_every) == 0:
                logger.debug('admm %6d: pres %.2e dres %.2e gap %.2e',
                             iteration, *measures[:3])
        if status is not SolverStatus.OPTIMAL:
            measures = residuals(program, z, s, rho * u)
        return SolverResult(status, z, s, rho * u, *measures[:3], iteration,
                            *measures[3:], cones)


__all__ = ['SplittingBackend']
