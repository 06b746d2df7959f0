import numpy as np
import pytest

from sparsekit import (
    AlgorithmConfig,
    MeritFamily,
    MeritFunction,
    PRESETS,
    Variant,
    WeightSetKind,
    WeightSetRule,
    dda_solve,
    dra_solve,
    l1_solve,
    preset,
    ra_solve,
    run_algorithm,
    solve_weighted_l1,
    sparsity,
)
from sparsekit.exceptions import DomainError, SubproblemFailure, UnknownAlgorithm

from conftest import interior_instance


def test_preset_names():
    assert set(PRESETS) == {'l1', 'ra', 'cwb', 'cwb5', 'arctan', 'arctan5',
                            'dda1', 'dda2', 'dda3', 'dra1', 'dra2', 'dra3',
                            'dra4', 'dra5', 'dra6'}
    assert preset('DRA4') is PRESETS['dra4']


def test_preset_constants():
    dra5 = preset('dra5')
    assert dra5.variant is Variant.DRA_V
    assert (dra5.gamma_bound, dra5.M, dra5.M_star, dra5.sigma1) == (1.0, 10.0, 10.0, 0.1)
    assert dra5.merit == MeritFunction(MeritFamily.FRACTION, 1e-15)
    assert preset('dra2').sigma2 == 0.1
    assert preset('cwb5').merit.eps_merit == 1e-5
    assert preset('l1').k_max == 1


def test_unknown_preset():
    with pytest.raises(UnknownAlgorithm) as e:
        preset('dra7')
    assert 'dra6' in str(e.value)


def test_overrides_are_validated():
    assert preset('dra4', M=5.0).M == 5.0
    assert preset('dra4').M == 10.0
    with pytest.raises(DomainError):
        preset('dra4', sigma2=0.0)
    with pytest.raises(DomainError):
        preset('dra1', M_star=None)
    with pytest.raises(DomainError):
        preset('ra', k_max=0)
    assert preset('dra1', k_max=0).k_max == 0


def test_variant_properties():
    assert Variant.CWB.reweighted
    assert Variant.DRA_III.relaxation.name == 'II'
    assert Variant.DRA_III.weight_set is WeightSetKind.BOX
    assert Variant.DDA_II.weight_set is None
    with pytest.raises(UnknownAlgorithm):
        Variant.RA.relaxation


def test_config_from_value():
    cfg = AlgorithmConfig('dda_iii', gamma_bound=2.0, sigma1=0.5)
    assert cfg.variant is Variant.DDA_III
    assert cfg.name == 'dda_iii'


def test_describe_is_plain():
    described = preset('dra6').describe()
    assert described['variant'] == 'dra_vi'
    assert described['merit'] == {'family': 'fraction', 'eps_merit': 1e-15}
    assert described['sigma2'] == 0.1


def test_sparsity_is_relative():
    assert sparsity([0, 0, 2, 1]) == 2
    assert sparsity([1e4, 5e-2, 0]) == 1
    assert sparsity([1e-6, 0]) == 0
    assert sparsity([]) == 0


def test_l1_on_example(ex1):
    x = l1_solve(ex1)
    assert ex1.contains(x)
    assert np.abs(x).sum() <= 0.75 + 1e-5


def test_single_reweighted_step_is_l1():
    inst, _ = interior_instance(2)
    trace = run_algorithm(preset('ra', k_max=1), inst)
    assert len(trace.iterates) == 1
    assert trace.final_x == pytest.approx(l1_solve(inst), abs=1e-6)
    assert run_algorithm(preset('l1'), inst).final_sparsity == trace.final_sparsity


def test_cwb_on_example(ex1):
    trace = run_algorithm(preset('cwb'), ex1)
    assert not trace.failed
    assert [r.k for r in trace.iterates] == [1, 2, 3, 4, 5]
    assert trace.final_sparsity <= 2


def test_reweighting_follows_merit_gradient(ex1):
    merit = MeritFunction(MeritFamily.CWB_LOG, 0.1)
    trace = ra_solve(ex1, merit, k_max=2)
    first, second = trace.iterates
    assert first.w == pytest.approx(np.ones(4))
    assert second.w == pytest.approx(1 / (np.abs(first.x) + 0.1))


def test_zero_observation_gives_zero(origin_instance):
    for name in ('ra', 'cwb', 'arctan'):
        trace = run_algorithm(preset(name, k_max=2), origin_instance)
        assert not trace.failed
        assert trace.final_x == pytest.approx(np.zeros(6), abs=1e-6)
        assert trace.final_sparsity == 0


def test_early_stop():
    inst, _ = interior_instance(4)
    full = run_algorithm(preset('cwb', k_max=8), inst)
    stopped = run_algorithm(preset('cwb', k_max=8, early_stop=True), inst)
    assert len(stopped.iterates) <= len(full.iterates)
    assert stopped.final_x == pytest.approx(
        full.iterates[len(stopped.iterates) - 1].x)


@pytest.mark.parametrize('name', ['dda1', 'dda2', 'dda3'])
def test_one_step_feasible(ex1, name):
    cfg = preset(name)
    outcome = dda_solve(cfg.variant.relaxation, ex1, cfg)
    assert ex1.contains(outcome.x0)
    assert np.all(outcome.w0 >= -1e-8)
    trace = run_algorithm(cfg, ex1)
    assert [r.k for r in trace.iterates] == [0]
    assert trace.final_x == pytest.approx(outcome.x0, abs=1e-6)


def test_reweighted_without_iterations_matches_one_step(ex1):
    trace = dra_solve(4, ex1, preset('dra4', k_max=0))
    outcome = dda_solve(2, ex1, preset('dda2'))
    assert len(trace.iterates) == 1
    assert trace.final_x == pytest.approx(outcome.x0, abs=1e-6)


@pytest.mark.parametrize('variant', [2, 4, 6])
def test_weights_stay_in_anchored_set(variant):
    inst, _ = interior_instance(variant)
    cfg = preset(f'dra{variant}', k_max=3)
    trace = run_algorithm(cfg, inst)
    assert not trace.failed
    assert len(trace.iterates) == cfg.k_max + 1
    for previous, current in zip(trace.iterates, trace.iterates[1:]):
        rule = WeightSetRule(WeightSetKind.INVERSE, cfg.M, previous.x,
                             sigma2=cfg.sigma2)
        assert rule.contains(current.w, tol=1e-4)
        assert inst.contains(current.x)


def test_reweighted_objective_matches_weighted_solve():
    inst, _ = interior_instance(9)
    trace = run_algorithm(preset('dra6', k_max=2), inst)
    last = trace.iterates[-1]
    assert last.objective == pytest.approx(
        solve_weighted_l1(inst, last.w).objective, rel=1e-6, abs=1e-8)


def test_failure_ends_trace(ex1, monkeypatch):
    import sparsekit._algorithms as algorithms

    calls = []

    def failing(*args, **kwargs):
        calls.append(args)
        if len(calls) > 1:
            raise SubproblemFailure('stalled')
        return original(*args, **kwargs)

    original = algorithms.solve_density
    monkeypatch.setattr(algorithms, 'solve_density', failing)
    trace = run_algorithm(preset('dra4', k_max=3), ex1)
    assert trace.failed
    assert trace.message == 'stalled'
    assert [r.status for r in trace.iterates] == ['optimal', 'failed']
    assert trace.final_x is not None
