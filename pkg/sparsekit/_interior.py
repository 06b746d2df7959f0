import logging
from typing import List, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from ._backend import (
    ConeSolverBackend,
    SolverResult,
    SolverStatus,
    backend,
    residuals,
)
from ._cones import ConeKind, ConeProgram

logger = logging.getLogger(__name__)

_STEP_FRACTION = 0.99
_SQRT_HALF = np.sqrt(0.5)


class _Layout:
    """
    Internal ordering of the cone rows: all nonnegative rows first, then
    one second-order block per SOC or RSOC block. Rotated blocks are mapped
    onto second-order blocks with the symmetric orthogonal map T.
    """

    def __init__(self, program: ConeProgram):
        eq_rows, lin_rows, soc_rows = [], [], []
        rotated = []
        for (kind, dim), rows in zip(program.cones, program.offsets()):
            index = np.arange(rows.start, rows.stop)
            if kind is ConeKind.ZERO:
                eq_rows.append(index)
            elif kind is ConeKind.NONNEG:
                lin_rows.append(index)
            else:
                soc_rows.append(index)
                rotated.append(kind is ConeKind.RSOC)
        empty = np.zeros(0, dtype=int)
        self.eq = np.concatenate(eq_rows) if eq_rows else empty
        lin = np.concatenate(lin_rows) if lin_rows else empty
        self.n_lin = lin.size
        self.soc: List[Tuple[int, int]] = []
        start = self.n_lin
        for index in soc_rows:
            self.soc.append((start, index.size))
            start += index.size
        self.perm = np.concatenate([lin] + soc_rows) if (lin_rows or soc_rows) \
            else empty
        self.size = self.perm.size
        self.degree = self.n_lin + len(self.soc)
        self.rotation = self._rotation(rotated)

    def _rotation(self, rotated) -> sp.csr_matrix:
        T = sp.lil_matrix((self.size, self.size))
        T.setdiag(1.0)
        for (start, _), is_rotated in zip(self.soc, rotated):
            if is_rotated:
                T[start, start] = _SQRT_HALF
                T[start, start + 1] = _SQRT_HALF
                T[start + 1, start] = _SQRT_HALF
                T[start + 1, start + 1] = -_SQRT_HALF
        return T.tocsr()

    def identity(self) -> np.ndarray:
        e = np.zeros(self.size)
        e[:self.n_lin] = 1.0
        for start, _ in self.soc:
            e[start] = 1.0
        return e

    def min_eig(self, x: np.ndarray) -> float:
        values = [np.min(x[:self.n_lin])] if self.n_lin else []
        for start, dim in self.soc:
            values.append(x[start] - np.linalg.norm(x[start + 1:start + dim]))
        return min(values) if values else np.inf

    def product(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        result = np.empty_like(u)
        nl = self.n_lin
        result[:nl] = u[:nl] * v[:nl]
        for start, dim in self.soc:
            ub, vb = u[start:start + dim], v[start:start + dim]
            result[start] = ub @ vb
            result[start + 1:start + dim] = ub[0] * vb[1:] + vb[0] * ub[1:]
        return result

    def divide(self, lam: np.ndarray, d: np.ndarray) -> np.ndarray:
        """
        Solve lam o x = d for x
        """
        result = np.empty_like(d)
        nl = self.n_lin
        result[:nl] = d[:nl] / lam[:nl]
        for start, dim in self.soc:
            lb, db = lam[start:start + dim], d[start:start + dim]
            l0, l1 = lb[0], lb[1:]
            x0 = (l0 * db[0] - l1 @ db[1:]) / (l0 ** 2 - l1 @ l1)
            result[start] = x0
            result[start + 1:start + dim] = (db[1:] - x0 * l1) / l0
        return result

    def max_step(self, x: np.ndarray, d: np.ndarray) -> float:
        step = np.inf
        nl = self.n_lin
        if nl:
            negative = d[:nl] < 0
            if np.any(negative):
                step = np.min(-x[:nl][negative] / d[:nl][negative])
        for start, dim in self.soc:
            step = min(step, _soc_step(x[start:start + dim], d[start:start + dim]))
        return step


def _jdot(u: np.ndarray, v: np.ndarray) -> float:
    return u[0] * v[0] - u[1:] @ v[1:]


def _soc_step(x: np.ndarray, d: np.ndarray) -> float:
    # smallest positive root of jdot(x + a d, x + a d) = 0, on x and d
    # rescaled to unit max norm so the quadratic cannot overflow
    x_scale, d_scale = np.max(np.abs(x)), np.max(np.abs(d))
    if d_scale == 0:
        return np.inf
    if not np.isfinite(d_scale) or x_scale == 0:
        return 0.0
    x, d = x / x_scale, d / d_scale
    a, b, c = _jdot(d, d), _jdot(x, d), _jdot(x, x)
    if abs(a) <= 1e-300:
        root = -c / (2 * b) if b < 0 else np.inf
    else:
        disc = b * b - a * c
        if disc < 0:
            return np.inf
        q = -(b + np.copysign(np.sqrt(disc), b))
        roots = [r for r in (q / a, c / q if q != 0 else np.inf) if r > 0]
        root = min(roots) if roots else np.inf
    return root * x_scale / d_scale


class _Scaling:
    """
    Nesterov-Todd scaling W with W z = W^-1 s = lam
    """

    def __init__(self, layout: _Layout, s: np.ndarray, z: np.ndarray):
        self.layout = layout
        nl = layout.n_lin
        self.d = np.sqrt(s[:nl] / z[:nl])
        self.blocks = []
        for start, dim in layout.soc:
            sb, zb = s[start:start + dim], z[start:start + dim]
            s_norm, z_norm = np.sqrt(_jdot(sb, sb)), np.sqrt(_jdot(zb, zb))
            s_bar, z_bar = sb / s_norm, zb / z_norm
            gamma = np.sqrt((1 + z_bar @ s_bar) / 2)
            w_bar = s_bar.copy()
            w_bar[0] += z_bar[0]
            w_bar[1:] -= z_bar[1:]
            w_bar /= 2 * gamma
            v = w_bar.copy()
            v[0] += 1.0
            v /= np.sqrt(2 * (w_bar[0] + 1))
            self.blocks.append((np.sqrt(s_norm / z_norm), v))
        self.lam = self.apply(z)

    def apply(self, x: np.ndarray, inverse: bool = False) -> np.ndarray:
        layout = self.layout
        nl = layout.n_lin
        result = np.empty_like(x)
        result[:nl] = x[:nl] / self.d if inverse else x[:nl] * self.d
        for (start, dim), (beta, v) in zip(layout.soc, self.blocks):
            xb = x[start:start + dim]
            if inverse:
                jv = v.copy()
                jv[1:] *= -1
                jx = xb.copy()
                jx[1:] *= -1
                block = (2 * jv * (v @ jx) - jx) / beta
            else:
                jx = xb.copy()
                jx[1:] *= -1
                block = beta * (2 * v * (v @ xb) - jx)
            result[start:start + dim] = block
        return result

    def inverse_matrix(self) -> sp.csr_matrix:
        blocks = []
        if self.layout.n_lin:
            blocks.append(sp.diags(1 / self.d))
        for (_, dim), (beta, v) in zip(self.layout.soc, self.blocks):
            J = np.eye(dim)
            J[1:, 1:] *= -1
            jv = J @ v
            blocks.append((2 * np.outer(jv, jv) - J) / beta)
        return sp.block_diag(blocks, format='csr')


class _KktSolver:
    """
    Factorization of the reduced system

        [ G'W^-2 G   A' ] [dx]   [r1]
        [ A          0  ] [dy] = [r2]

    with a small quasi-definite regularization removed by iterative
    refinement. Falls back to dense least squares when the sparse LU fails.
    """
    regularization = 1e-10

    def __init__(self, H: sp.spmatrix, A: sp.spmatrix):
        n, p = H.shape[0], A.shape[0]
        self.exact = sp.bmat([[H, A.T], [A, None]], format='csc') if p \
            else sp.csc_matrix(H)
        self.lu = None
        self.dense = None
        delta = self.regularization
        for _ in range(3):
            regularized = sp.bmat(
                [[H + delta * sp.identity(n), A.T],
                 [A, -delta * sp.identity(p)]], format='csc'
            ) if p else sp.csc_matrix(H + delta * sp.identity(n))
            try:
                self.lu = scipy.sparse.linalg.splu(regularized)
                return
            except RuntimeError:
                logger.debug('sparse LU failed, raising regularization')
                delta *= 1e4
        self.dense = self.exact.toarray()

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.lu is None:
            return scipy.linalg.lstsq(self.dense, rhs)[0]
        x = self.lu.solve(rhs)
        for _ in range(3):
            x = x + self.lu.solve(rhs - self.exact @ x)
        return x


@backend('ipm')
class InteriorPointBackend(ConeSolverBackend):
    """
    Primal-dual path following method with Nesterov-Todd scaling and a
    Mehrotra predictor-corrector step for programs over products of zero,
    nonnegative, second-order and rotated second-order cones.
    """
    iteration_cap = 200
    stall_limit = 5

    def solve(self, program: ConeProgram, tol_solver: float,
              max_iters: int) -> SolverResult:
        layout = _Layout(program)
        G = program.eq_matrix
        c = program.objective
        Gk = (layout.rotation @ G[layout.perm]).tocsr()
        hk = layout.rotation @ program.eq_rhs[layout.perm]
        A = G[layout.eq].tocsr()
        b = program.eq_rhs[layout.eq]
        h_norm = 1 + np.linalg.norm(program.eq_rhs)
        c_norm = 1 + np.linalg.norm(c)
        n, p = program.num_vars, layout.eq.size
        e = layout.identity()

        def finish(status, x, y, s, z, iterations):
            dual = np.zeros(program.num_rows)
            slack = np.zeros(program.num_rows)
            dual[layout.eq] = y
            dual[layout.perm] = layout.rotation @ z
            slack[layout.perm] = layout.rotation @ s
            measures = residuals(program, x, slack, dual)
            return SolverResult(status, x, slack, dual, *measures[:3],
                                iterations, *measures[3:], program.cones)

        kkt = _KktSolver(Gk.T @ Gk, A)
        x, y = np.split(kkt.solve(np.concatenate([Gk.T @ hk, b])), [n])
        s = hk - Gk @ x
        u, y = np.split(kkt.solve(np.concatenate([-c, np.zeros(p)])), [n])
        z = Gk @ u
        if layout.size == 0:
            status = SolverStatus.OPTIMAL
            return finish(status, x, y, s, z, 0)
        for v in (s, z):
            shift = -layout.min_eig(v)
            if shift >= -1e-8 * max(1.0, np.linalg.norm(v)):
                v += (1 + shift) * e

        stalled = 0
        limit = min(max_iters, self.iteration_cap)
        for iteration in range(limit + 1):
            r_x = Gk.T @ z + A.T @ y + c
            r_y = A @ x - b
            r_z = Gk @ x + s - hk
            primal_obj = c @ x
            dual_obj = -hk @ z - b @ y
            primal_residual = np.sqrt(r_y @ r_y + r_z @ r_z) / h_norm
            dual_residual = np.linalg.norm(r_x) / c_norm
            gap = max(abs(primal_obj - dual_obj), s @ z) / (1 + abs(primal_obj))
            logger.debug('ipm %3d: pres %.2e dres %.2e gap %.2e',
                         iteration, primal_residual, dual_residual, gap)
            if not np.all(np.isfinite([primal_residual, dual_residual, gap])):
                return finish(SolverStatus.NUMERICAL_FAILURE, x, y, s, z, iteration)
            if max(primal_residual, dual_residual, gap) <= tol_solver:
                return finish(SolverStatus.OPTIMAL, x, y, s, z, iteration)
            if iteration == limit or stalled >= self.stall_limit:
                break
            mu = (s @ z) / layout.degree
            with np.errstate(invalid='raise', divide='raise'):
                try:
                    scaling = _Scaling(layout, s, z)
                except FloatingPointError:
                    return finish(SolverStatus.NUMERICAL_FAILURE, x, y, s, z,
                                  iteration)
            lam = scaling.lam
            scaled_G = scaling.inverse_matrix() @ Gk
            kkt = _KktSolver((scaled_G.T @ scaled_G).tocsc(), A)

            def newton(d_s):
                q = layout.divide(lam, d_s)
                rhs_z = -r_z - scaling.apply(q)
                g = scaling.apply(scaling.apply(rhs_z, True), True)
                dx, dy = np.split(
                    kkt.solve(np.concatenate([-r_x + Gk.T @ g, -r_y])), [n]
                )
                dz = scaling.apply(scaling.apply(Gk @ dx - rhs_z, True), True)
                ds = scaling.apply(q - scaling.apply(dz))
                return dx, dy, dz, ds

            base = -layout.product(lam, lam)
            dxa, dya, dza, dsa = newton(base)
            step = min(1.0, layout.max_step(s, dsa), layout.max_step(z, dza))
            mu_affine = ((s + step * dsa) @ (z + step * dza)) / layout.degree
            sigma = min(1.0, max(0.0, mu_affine / mu)) ** 3
            correction = layout.product(scaling.apply(dsa, True),
                                        scaling.apply(dza))
            dx, dy, dz, ds = newton(base + sigma * mu * e - correction)
            if not all(np.all(np.isfinite(v)) for v in (dx, dy, dz, ds)):
                return finish(SolverStatus.NUMERICAL_FAILURE, x, y, s, z,
                              iteration)
            step = min(1.0, _STEP_FRACTION * min(layout.max_step(s, ds),
                                                 layout.max_step(z, dz)))
            stalled = stalled + 1 if step < 1e-8 else 0
            x = x + step * dx
            y = y + step * dy
            z = z + step * dz
            s = s + step * ds
        logger.debug('ipm stopped without convergence after %d iterations',
                     iteration)
        return finish(SolverStatus.MAX_ITERS, x, y, s, z, iteration)


__all__ = ['InteriorPointBackend']
