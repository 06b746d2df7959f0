import logging

import numpy as np
import pytest

from sparsekit import (
    ConeSolverBackend,
    InteriorPointBackend,
    MeritFamily,
    MeritFunction,
    Relaxation,
    SolverContext,
    SolverStatus,
    Surrogate,
    SurrogateKind,
    WeightSetKind,
    WeightSetRule,
    build_dda,
    build_dra_subproblem,
    dra_variant,
    preset,
    solve,
    solve_density,
    solve_nonconic,
    surrogate_value,
    true_violation,
)
from sparsekit.exceptions import InvalidWeightSet, NotConeRepresentable, UnknownAlgorithm

from conftest import interior_instance

MODERATE = MeritFunction(MeritFamily.FRACTION, 0.1)


def dual_residual(solution, inst):
    residuals = solution.dual.residuals(inst, solution.w)
    return max(residuals.values()) / (1 + float(np.max(solution.w)))


def test_variant_table():
    assert dra_variant(1) == (Relaxation.I, WeightSetKind.BOX)
    assert dra_variant(2) == (Relaxation.I, WeightSetKind.INVERSE)
    assert dra_variant('iv') == (Relaxation.II, WeightSetKind.INVERSE)
    assert dra_variant(5) == (Relaxation.III, WeightSetKind.BOX)
    assert dra_variant('VI') == (Relaxation.III, WeightSetKind.INVERSE)
    with pytest.raises(UnknownAlgorithm):
        dra_variant(7)
    with pytest.raises(UnknownAlgorithm):
        dra_variant('VII')


def test_weight_set_validation():
    with pytest.raises(InvalidWeightSet):
        WeightSetRule(WeightSetKind.BOX, 100.0, np.zeros(3), M_star=10.0)
    with pytest.raises(InvalidWeightSet):
        WeightSetRule(WeightSetKind.BOX, 0.5, np.zeros(3), M_star=10.0)
    with pytest.raises(InvalidWeightSet):
        WeightSetRule(WeightSetKind.INVERSE, 10.0, np.zeros(3))
    with pytest.raises(InvalidWeightSet):
        WeightSetRule(WeightSetKind.INVERSE, 10.0, [np.nan, 0, 0], sigma2=0.1)


def test_inverse_bounds_at_zero_anchor():
    rule = WeightSetRule(WeightSetKind.INVERSE, 10.0, np.zeros(4), sigma2=0.1)
    assert rule.upper_bounds() == pytest.approx(np.full(4, 100.0))
    assert rule.contains(np.full(4, 100.0))
    assert not rule.contains(np.full(4, 100.1))


def test_box_membership():
    rule = WeightSetRule(WeightSetKind.BOX, 10.0, [3.0, -2.0], M_star=10.0)
    assert rule.contains([4.0, 1.0])
    assert not rule.contains([4.0, 0.0])
    assert rule.contains([4.0, 4.0])
    assert rule.violation([4.0, 0.0]) == pytest.approx(2.0)
    assert rule.anchored([0.0, 0.0]).contains([10.0, 10.0])


def test_exact_build_requires_fraction(ex1):
    cfg = preset('dda1').replace(merit=MeritFunction(MeritFamily.ARCTAN, 0.1))
    with pytest.raises(NotConeRepresentable):
        build_dda(Relaxation.I, ex1, cfg)
    cfg = preset('dda3').replace(surrogate=SurrogateKind.J4_MEAN_INV)
    with pytest.raises(NotConeRepresentable):
        build_dda(Relaxation.III, ex1, cfg)


def test_dda_third_relaxation_meets_true_constraint(ex1):
    cfg = preset('dda3')
    solution = solve_density(Relaxation.III, ex1, cfg)
    merit = MeritFunction(MeritFamily.FRACTION, solution.eps_merit)
    f = Surrogate(SurrogateKind.J3_INVPSI, cfg.sigma1, merit)
    assert solution.objective + surrogate_value(f, np.maximum(solution.lam6, 0)) \
        <= cfg.gamma_bound + 1e-6
    assert dual_residual(solution, ex1) <= 1e-5


def test_dda_first_relaxation_bound(ex1):
    cfg = preset('dra1')
    solution = solve_density(Relaxation.I, ex1, cfg)
    assert solution.objective <= 1 + cfg.alpha * ex1.n + 1e-6
    assert np.all(solution.w <= cfg.weight_cap + 1e-6)


def test_exact_merit_representation(ex1):
    cfg = preset('dda1').replace(alpha=1.0, merit=MODERATE)
    program = build_dda(Relaxation.I, ex1, cfg)
    solution = program.solution(solve(program))
    lam6 = np.maximum(solution.lam6, 0)
    products = solution.u * (lam6 + MODERATE.eps_merit)
    assert np.all(products >= 1 - 1e-6)
    assert np.all(products <= 1 + 1e-5)
    assert abs(solution.merit_value - solution.psi) <= 1e-5 * ex1.n


@pytest.mark.parametrize('variant', [1, 2, 3, 4, 5, 6])
def test_reweighted_subproblem_stays_in_weight_set(ex1, variant):
    cfg = preset(f'dra{variant}')
    relaxation, kind = dra_variant(variant)
    rule = cfg.weight_rule([0.0, 0.0, 2.0, 1.0])
    assert rule.variant is kind
    solution = solve_density(relaxation, ex1, cfg, rule=rule)
    assert rule.contains(solution.w, tol=1e-4)
    assert dual_residual(solution, ex1) <= 1e-5


def test_box_rule_at_zero_anchor_binds_cap(ex1):
    cfg = preset('dra5')
    rule = cfg.weight_rule(np.zeros(4))
    program = build_dra_subproblem(5, ex1, rule, cfg)
    solution = program.solution(solve(program))
    assert np.all(solution.w <= cfg.M_star + 1e-6)


def test_subproblem_checks_rule(ex1):
    cfg = preset('dra2')
    with pytest.raises(InvalidWeightSet):
        build_dra_subproblem(2, ex1, 'not a rule', cfg)
    with pytest.raises(InvalidWeightSet):
        build_dra_subproblem(2, ex1, cfg.weight_rule(np.zeros(3)), cfg)


@pytest.mark.parametrize('name, relaxation', [('dda1', Relaxation.I),
                                              ('dda2', Relaxation.II),
                                              ('dda3', Relaxation.III)])
def test_linearization_for_arctan(ex1, name, relaxation):
    merit = MeritFunction(MeritFamily.ARCTAN, 0.1)
    cfg = preset(name).replace(merit=merit)
    solution = solve_density(relaxation, ex1, cfg)
    assert true_violation(relaxation, cfg, merit, solution) <= 1e-6
    assert np.all(solution.lam6 >= -1e-8)


def test_linearization_for_other_surrogates(ex1):
    cfg = preset('dda3').replace(surrogate=SurrogateKind.J4_MEAN_INV)
    solution = solve_density(Relaxation.III, ex1, cfg)
    assert solution.u is None
    assert true_violation(Relaxation.III, cfg, cfg.merit, solution) <= 1e-6


@pytest.mark.parametrize('seed', range(20))
@pytest.mark.parametrize('relaxation', list(Relaxation))
def test_linearization_matches_exact_build(relaxation, seed):
    inst, _ = interior_instance(seed)
    cfg = preset({Relaxation.I: 'dda1', Relaxation.II: 'dda2',
                  Relaxation.III: 'dda3'}[relaxation]).replace(merit=MODERATE)
    exact = solve_density(relaxation, inst, cfg)
    linearized = solve_nonconic(relaxation, inst, cfg, MODERATE)
    assert linearized.objective == pytest.approx(exact.objective, abs=1e-4)


class FailingOnce(ConeSolverBackend):
    calls = 0

    def solve(self, program, tol_solver, max_iters):
        FailingOnce.calls += 1
        result = InteriorPointBackend().solve(program, tol_solver, max_iters)
        if FailingOnce.calls == 1:
            return result._replace(status=SolverStatus.MAX_ITERS, gap=1.0)
        return result


def test_retries_with_eps_floor(ex1, caplog):
    FailingOnce.calls = 0
    with SolverContext(FailingOnce, eps_floor=1e-6):
        with caplog.at_level(logging.WARNING, logger='sparsekit._density'):
            solution = solve_density(Relaxation.III, ex1, preset('dda3'))
    assert FailingOnce.calls == 2
    assert solution.eps_merit == 1e-6
    assert 'retrying' in caplog.text


class BrokenOnce(FailingOnce):
    def solve(self, program, tol_solver, max_iters):
        result = super().solve(program, tol_solver, max_iters)
        if FailingOnce.calls == 1:
            return result._replace(status=SolverStatus.NUMERICAL_FAILURE)
        return result


def test_numerical_failure_switches_backend(ex1, caplog):
    FailingOnce.calls = 0
    with SolverContext(BrokenOnce, eps_floor=1e-6):
        solution = solve_density(Relaxation.III, ex1, preset('dda3'))
    assert FailingOnce.calls == 1
    assert solution.eps_merit == preset('dda3').merit.eps_merit
    assert 'retrying with InteriorPointBackend' in caplog.text


class Stalling(InteriorPointBackend):
    def solve(self, program, tol_solver, max_iters):
        result = super().solve(program, tol_solver, max_iters)
        return result._replace(status=SolverStatus.MAX_ITERS,
                               gap=max(result.gap, 1.5e-5))


@pytest.mark.parametrize('relaxation', list(Relaxation))
def test_linearization_accepts_stalled_solves(ex1, relaxation):
    cfg = preset(f'dda{relaxation.value}').replace(merit=MODERATE)
    with SolverContext(Stalling):
        solution = solve_nonconic(relaxation, ex1, cfg, MODERATE)
    assert true_violation(relaxation, cfg, MODERATE, solution) <= 1e-6


def test_box_subproblem_uses_signed_anchor(ex1):
    cfg = preset('dra5')
    rule = cfg.weight_rule([0.0, 0.0, -2.0, 1.0])
    solution = solve_density(Relaxation.III, ex1, cfg, rule=rule)
    assert rule.contains(solution.w, tol=1e-4)
    assert float(rule.anchor @ solution.w) <= cfg.M + 1e-4
