import json

import numpy as np
import pytest

from sparsekit import save_instance
from sparsekit._cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main
from sparsekit.exceptions import SolverFailure


def test_solve_example(capsys):
    assert main(['solve', 'example1', '--weight', '100,100,1,1']) == EXIT_OK
    out = capsys.readouterr().out
    assert 'sparsity: 2, support: [3, 4]' in out
    assert 'objective: ' in out


def test_solve_json_with_weight(capsys):
    assert main(['solve', 'example1', '--weight', '1,100,1,100', '--json']) == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    assert document['algorithm'] == 'weighted l1'
    assert document['objective'] == pytest.approx(0.75, rel=1e-5)


def test_solve_with_overrides(tmp_path, capsys):
    output = tmp_path / 'solution.json'
    code = main(['solve', 'example1', '--algorithm', 'cwb', '--set', 'k_max=2',
                 '--set', 'eps_merit=0.5', '-o', str(output)])
    assert code == EXIT_OK
    document = json.loads(output.read_text())
    assert document['config']['k_max'] == 2
    assert document['config']['merit']['eps_merit'] == 0.5


def test_solve_saved_instance(tmp_path, capsys, ex1):
    path = tmp_path / 'instance.json'
    save_instance(path, ex1, x_star=[0, 0, 2, 1], seed=4)
    assert main(['solve', str(path), '--weight', '100,100,1,1', '--json']) == EXIT_OK
    assert json.loads(capsys.readouterr().out)['support'] == [3, 4]


def test_usage_errors(tmp_path, capsys):
    assert main(['solve', str(tmp_path / 'missing.json')]) == EXIT_USAGE
    assert main(['solve', 'example1', '--weight', '1,a']) == EXIT_USAGE
    assert main(['solve', 'example1', '--set', 'bogus=1']) == EXIT_USAGE
    assert main(['sweep', '--case', 'custom', '--dims', '6,12,2',
                 '--sparsity', '5..x', '--algs', 'l1']) == EXIT_USAGE
    assert main(['sweep', '--case', 'custom', '--dims', '6,12,2',
                 '--sparsity', '1..2', '--algs', 'l1,dra9']) == EXIT_USAGE
    assert 'dra9' in capsys.readouterr().err
    with pytest.raises(SystemExit) as e:
        main(['solve', 'example1', '--algorithm', 'nope'])
    assert e.value.code == EXIT_USAGE


def test_numerical_failure(monkeypatch, capsys):
    import sparsekit._cli as cli

    def failing(inst, w):
        raise SolverFailure('did not converge')

    monkeypatch.setattr(cli, 'solve_weighted_l1', failing)
    assert main(['verify', 'example1']) == EXIT_NUMERICAL
    assert 'numerical failure' in capsys.readouterr().err


def test_verify_example(capsys):
    assert main(['verify', 'example1', '--weight', '100,100,1,1']) == EXIT_OK
    out = capsys.readouterr().out
    assert 'P* = [3, 4]' in out
    assert 'Q* = [1, 2]' in out


def test_verify_reports_precondition_failure(capsys):
    assert main(['verify', 'example1', '--weight', '0,1,1,1', '--json']) == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    assert 'precondition_failure' in document['strict_pair']
    assert document['strict_pair']['checks']['positive_weight'] is False


def test_verify_diagnostics(capsys):
    assert main(['verify', 'example1', '--weight', '100,100,1,1', '--diagnostics',
                 '--k-star', '2', '--json']) == EXIT_OK
    diagnostics = json.loads(capsys.readouterr().out)['diagnostics']
    assert diagnostics['matches_oracle'] is True
    assert diagnostics['strictly_complementary'] is True


def test_sweep_writes_files(tmp_path, capsys):
    stem = tmp_path / 'rates'
    args = ['sweep', '--case', 'custom', '--dims', '6,12,2', '--sparsity', '1..2',
            '--trials', '2', '--algs', 'l1,cwb', '--seed', '0x10', '-o', str(stem)]
    assert main(args) == EXIT_OK
    first = (tmp_path / 'rates.csv').read_bytes()
    assert (tmp_path / 'rates.svg').exists()
    assert json.loads((tmp_path / 'rates.json').read_text())['spec']['seed'] == 16
    assert main(args) == EXIT_OK
    assert (tmp_path / 'rates.csv').read_bytes() == first


def test_sweep_seed_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv('SPARSEKIT_SEED', '7')
    stem = tmp_path / 'env'
    assert main(['sweep', '--case', 'custom', '--dims', '6,12,0', '--sparsity', '1',
                 '--trials', '1', '--algs', 'l1', '-o', str(stem), '--json']) == EXIT_OK
    rows = json.loads(capsys.readouterr().out)
    assert [row['sparsity'] for row in rows] == [1]
    assert json.loads((tmp_path / 'env.json').read_text())['spec']['seed'] == 7


def test_sweep_from_spec_file(tmp_path, capsys):
    spec = tmp_path / 'spec.json'
    spec.write_text(json.dumps({'m': 6, 'n': 12, 'l': 2, 'sparsity_range': [1, 1],
                                'trials_per_level': 1, 'algorithms': ['l1'],
                                'seed': 3}))
    assert main(['sweep', '--spec', str(spec), '-o', str(tmp_path / 'out')]) == EXIT_OK
    assert (tmp_path / 'out.csv').exists()


def test_backend_choice(capsys):
    assert main(['--backend', 'admm', 'solve', 'example1', '--weight', '100,100,1,1',
                 '--json']) == EXIT_OK
    x = np.array(json.loads(capsys.readouterr().out)['x'])
    assert x == pytest.approx([0, 0, 2, 1], abs=1e-3)


def test_sweep_spec_with_unknown_key(tmp_path, capsys):
    spec = tmp_path / 'spec.json'
    spec.write_text(json.dumps({'m': 6, 'n': 12, 'l': 2, 'sparsity_range': [1, 1],
                                'trials_per_level': 1, 'algorithms': ['l1'],
                                'trails': 3}))
    assert main(['sweep', '--spec', str(spec), '-o', str(tmp_path / 'out')]) == EXIT_USAGE
    assert 'trails' in capsys.readouterr().err
