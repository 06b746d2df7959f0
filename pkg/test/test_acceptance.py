import json
import os

import numpy as np
import pytest

from sparsekit import (
    PRESETS,
    SweepSpec,
    complementarity_gap,
    generate_instance,
    kkt_check,
    l0_min,
    preset,
    run_algorithm,
    run_sweep,
    solve_weighted_l1,
)
from sparsekit._cli import EXIT_OK, main

from conftest import interior_instance

SLOW = os.environ.get('SPARSEKIT_SLOW', '')
THREADS = os.cpu_count() or 1

slow = pytest.mark.skipif(SLOW != '1', reason='set SPARSEKIT_SLOW=1 for desk scale sweeps')
smoke = pytest.mark.skipif(SLOW not in ('1', 'smoke'),
                           reason='set SPARSEKIT_SLOW=smoke for the short desk sweep')

DESK_LEVELS = (14, 20)


@pytest.mark.parametrize('seed', range(100))
def test_weighted_problem_optimality(seed):
    inst, _ = interior_instance(seed, m=10, n=30, l=5)
    w = np.random.default_rng(1000 + seed).uniform(0.5, 2.0, size=inst.n)
    solution = solve_weighted_l1(inst, w)
    dual_value = solution.dual.objective(inst)
    assert abs(solution.objective - dual_value) <= 1e-5 * (1 + abs(solution.objective))
    assert kkt_check(inst, w, solution.primal, solution.dual).max_residual <= 1e-5
    report = complementarity_gap(solution.primal.x, solution.dual.lam6)
    assert report.gap <= 1e-5
    assert report.support_sum <= inst.n


@pytest.fixture(scope='module')
def small_runs():
    """
    Oracle and final sparsity of every preset on 50 instances with m=5, n=10
    """
    runs = []
    for seed in range(50):
        inst = generate_instance((5, 10, 0), 2, 1e-4, seed=seed).instance
        found = {}
        for name, config in PRESETS.items():
            trace = run_algorithm(config, inst)
            if trace.final_x is not None and inst.contains(trace.final_x):
                found[name] = trace.final_sparsity
        runs.append((l0_min(inst), found))
    return runs


def test_oracle_bounds_every_algorithm(small_runs):
    for oracle, found in small_runs:
        assert oracle.found
        for name, sparsity in found.items():
            assert sparsity >= oracle.k_star, name


def test_reweighting_beats_l1_on_average(small_runs):
    pairs = [(found['dra6'], found['l1']) for _, found in small_runs
             if 'dra6' in found and 'l1' in found]
    assert len(pairs) >= 45
    dra6, l1 = np.mean(pairs, axis=0)
    assert dra6 <= l1


@slow
@pytest.mark.slow
def test_desk_scale_sweep():
    algorithms = (preset('l1'), preset('dra4'), preset('dra6'),
                  preset('dra6', k_max=1, name='dra6_k1'))
    spec = SweepSpec.preset('n1', sparsity_range=DESK_LEVELS, trials_per_level=50,
                            algorithms=algorithms, threads=THREADS)
    result = run_sweep(spec)
    l1 = result.mean_rate('l1')
    assert result.mean_rate('dra4') >= l1 + 0.10
    assert result.mean_rate('dra6') >= l1 + 0.10
    for k in spec.levels:
        assert result.rate('dra6', k) >= result.rate('dra6_k1', k), k


@smoke
@pytest.mark.slow
def test_desk_scale_smoke(tmp_path, capsys):
    stem = tmp_path / 'desk'
    code = main(['sweep', '--case', 'n1', '--sparsity', '%d..%d' % DESK_LEVELS,
                 '--trials', '10', '--algs', 'l1,dra4,dra6', '--seed', '1',
                 '--threads', str(THREADS), '-o', str(stem), '--json'])
    assert code == EXIT_OK
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 3 * (DESK_LEVELS[1] - DESK_LEVELS[0] + 1)
    mean = {name: np.mean([r['rate'] for r in rows if r['algorithm'] == name])
            for name in ('l1', 'dra4', 'dra6')}
    assert mean['dra6'] >= mean['l1']
    assert mean['dra4'] >= mean['l1']
    assert (tmp_path / 'desk.svg').exists()
