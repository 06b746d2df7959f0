import argparse
import json
import logging
import sys
from dataclasses import fields, replace
from typing import List, Optional

import numpy as np

from . import _splitting  # noqa: F401  registers the admm backend
from ._algorithms import AlgorithmConfig, preset, run_algorithm, sparsity, PRESETS
from ._backend import backend_named, backend_names
from ._context import SolverContext
from ._duality import (
    complementarity_gap,
    kkt_check,
    strict_pair_construct,
    weight_diagnostics,
)
from ._environment import seed_from_environment
from ._experiments import SweepSpec, SweepCase, emit_results, run_sweep, sweep_algorithms
from ._instance import Instance, example1, load_instance
from ._weighted import solve_weighted_l1
from .exceptions import (
    AssumptionViolation,
    CardinalityLimit,
    InvalidSeed,
    NoNamedSetting,
    SolverFailure,
    SubproblemFailure,
    UnknownAlgorithm,
    UnknownBackend,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

USAGE_ERRORS = (OSError, ValueError, UnknownAlgorithm, UnknownBackend, InvalidSeed,
                NoNamedSetting, CardinalityLimit)
NUMERICAL_ERRORS = (SolverFailure, SubproblemFailure, AssumptionViolation,
                    np.linalg.LinAlgError)

_INTEGER_SETTINGS = {'k_max'}
_FLAG_SETTINGS = {'early_stop'}


class UsageError(Exception):
    pass


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(',')])
    except ValueError:
        raise UsageError(f'expected comma separated numbers, got "{text}"')


def _sparsity_range(text: str):
    low, sep, high = text.partition('..')
    try:
        return (int(low), int(high)) if sep else (int(low), int(low))
    except ValueError:
        raise UsageError(f'expected a range like 5..25, got "{text}"')


def _load(name: str) -> Instance:
    if name == 'example1':
        return example1()
    return load_instance(name)[0]


def _override(config: AlgorithmConfig, assignments: List[str]) -> AlgorithmConfig:
    known = {f.name for f in fields(AlgorithmConfig)} - {'variant', 'name', 'merit'}
    changes = {}
    merit = config.merit
    for assignment in assignments:
        key, sep, value = assignment.partition('=')
        key = key.strip()
        if not sep:
            raise UsageError(f'expected key=value, got "{assignment}"')
        try:
            if key == 'eps_merit':
                merit = replace(merit, eps_merit=float(value))
            elif key in _FLAG_SETTINGS:
                changes[key] = value.strip().lower() in ('1', 'true', 'yes', 'on')
            elif key in _INTEGER_SETTINGS:
                changes[key] = int(value)
            elif key in known and key != 'surrogate':
                changes[key] = float(value)
            else:
                raise UsageError(f'unknown setting "{key}"')
        except ValueError:
            raise UsageError(f'bad value for {key}: "{value}"')
    return config.replace(merit=merit, **changes)


def _support(x, zero_threshold: float) -> List[int]:
    x = np.abs(np.asarray(x))
    return [int(i) + 1 for i in np.flatnonzero(x > zero_threshold * max(1.0, x.max()))]


def _emit(document: dict, as_json: bool, lines: List[str], output: Optional[str] = None):
    if output:
        with open(output, 'w') as f:
            json.dump(document, f, indent=2)
    if as_json:
        print(json.dumps(document, indent=2))
    else:
        print('\n'.join(lines))


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    if args.weight is not None:
        w = _vector(args.weight)
        solution = solve_weighted_l1(inst, w)
        x, objective, label, threshold = solution.primal.x, solution.objective, \
            'weighted l1', 1e-5
        config = {'weight': w.tolist()}
    else:
        config = _override(preset(args.algorithm), args.set)
        trace = run_algorithm(config, inst)
        if trace.final_x is None:
            raise SubproblemFailure(trace.message or f'{config.name} produced no iterate')
        if trace.failed:
            logger.warning('%s stopped early: %s', config.name, trace.message)
        x = trace.final_x
        objective = next(r.objective for r in reversed(trace.iterates)
                         if r.x is not None)
        label, threshold, config = config.name, config.zero_threshold, config.describe()
    ball, polyhedral = inst.feasibility_residual(x)
    document = {
        'algorithm': label,
        'config': config,
        'x': x.tolist(),
        'sparsity': sparsity(x, threshold),
        'support': _support(x, threshold),
        'objective': objective,
        'residuals': {'ball': ball, 'polyhedral': polyhedral},
    }
    lines = [
        f'algorithm: {label}',
        f'x = {np.array2string(x, precision=6, suppress_small=True)}',
        f'sparsity: {document["sparsity"]}, support: {document["support"]}',
        f'objective: {objective:.8g}',
        f'residuals: ball {ball:.2e}, polyhedral {polyhedral:.2e}',
    ]
    _emit(document, args.json, lines, args.output)
    return EXIT_OK


def _sweep_spec(args) -> SweepSpec:
    seed = args.seed if args.seed is not None else seed_from_environment()
    if args.spec:
        with open(args.spec) as f:
            data = json.load(f)
        names = data.pop('algorithms', ['l1'])
        case = data.pop('case', 'custom')
        data['algorithms'] = [preset(name) for name in names]
        data.setdefault('seed', seed)
        try:
            if case != SweepCase.CUSTOM.value:
                for key in ('m', 'n', 'l'):
                    data.pop(key, None)
                return SweepSpec.preset(case, **data)
            return SweepSpec(**data)
        except TypeError as e:
            raise UsageError(f'invalid sweep spec {args.spec}: {e}')
    algorithms = sweep_algorithms(args.algs.split(','))
    trials = args.trials if args.trials is not None else (50 if args.desk else 200)
    common = dict(sparsity_range=_sparsity_range(args.sparsity), trials_per_level=trials,
                  eps_noise=args.eps_noise, algorithms=algorithms, seed=seed,
                  reject_outside=args.reject_outside, threads=args.threads)
    if args.case == SweepCase.CUSTOM.value:
        if not args.dims:
            raise UsageError('--case custom needs --dims m,n,l')
        try:
            m, n, l = (int(v) for v in args.dims.split(','))
        except ValueError:
            raise UsageError(f'expected --dims m,n,l, got "{args.dims}"')
        return SweepSpec(m=m, n=n, l=l, **common)
    return SweepSpec.preset(args.case, **common)


def cmd_sweep(args) -> int:
    spec = _sweep_spec(args)
    if args.desk and args.trials is None:
        logger.info('desk scale sweep: %d trials per level', spec.trials_per_level)
    result = run_sweep(spec)
    files = emit_results(result, args.output, timing=args.timing)
    summary = result.summary(args.timing)
    if args.json:
        print(summary.to_json(orient='records'))
    else:
        print(summary.to_string(index=False))
        print(f'wrote {files.csv} and {files.svg}')
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = _load(args.instance)
    w = _vector(args.weight) if args.weight else np.ones(inst.n)
    solution = solve_weighted_l1(inst, w)
    kkt = kkt_check(inst, w, solution.primal, solution.dual)
    comp = complementarity_gap(solution.primal.x, solution.dual.lam6)
    document = {
        'weight': w.tolist(),
        'objective': solution.objective,
        'kkt': {**kkt.residuals(), 'max_residual': kkt.max_residual,
                'gamma_skipped': kkt.gamma_skipped},
        'complementarity': comp._asdict(),
    }
    lines = [
        f'objective: {solution.objective:.8g}',
        f'KKT max residual: {kkt.max_residual:.3e}'
        + (' (gamma gradient line skipped at gamma = 0)' if kkt.gamma_skipped else ''),
        f'complementarity gap: {comp.gap:.3e}, '
        f'||x||_0 + ||lam6||_0 = {comp.support_sum} <= {comp.bound}',
    ]
    try:
        pair = strict_pair_construct(inst, w, threads=args.threads)
    except AssumptionViolation as e:
        document['strict_pair'] = {'precondition_failure': str(e), 'checks': e.checks}
        lines.append(f'strict pair: precondition failure ({e})')
    else:
        document['strict_pair'] = {
            'P_star': sorted(i + 1 for i in pair.P_star),
            'Q_star': sorted(i + 1 for i in pair.Q_star),
            'min_sum': pair.min_sum,
            'strict_tol': pair.strict_tol,
            'gap': pair.gap,
            'verified': pair.verified,
        }
        lines.append(f'strict pair: P* = {document["strict_pair"]["P_star"]}, '
                     f'Q* = {document["strict_pair"]["Q_star"]}, '
                     f'min(t + lam6) = {pair.min_sum:.3e}')
    if args.diagnostics:
        diagnostics = weight_diagnostics(inst, w, k_star=args.k_star,
                                         threads=args.threads)
        document['diagnostics'] = {
            'sparsity': diagnostics.sparsity,
            'k_star': diagnostics.k_star,
            'matches_oracle': diagnostics.matches_oracle,
            'finite_positive': diagnostics.finite_positive,
            'strictly_complementary': diagnostics.strictly_complementary,
        }
        lines.append('diagnostics: ' + ', '.join(
            f'{key} {value}' for key, value in document['diagnostics'].items()))
    _emit(document, args.json, lines, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='sparsekit',
        description='Sparse recovery through dual density reweighting.')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='-v for progress, -vv for solver iterations')
    parser.add_argument('--backend', choices=backend_names(), default=None,
                        help='cone solver backend (default: ipm)')
    commands = parser.add_subparsers(dest='command', required=True)

    solve = commands.add_parser('solve', help='run one algorithm on an instance')
    solve.add_argument('instance', help='instance JSON file or "example1"')
    solve.add_argument('--algorithm', default='l1', choices=sorted(PRESETS),
                       help='algorithm preset (default: l1)')
    solve.add_argument('--weight', help='plain weighted l1 with w1,w2,...')
    solve.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                       help='override a preset constant, e.g. --set k_max=3')
    solve.add_argument('-o', '--output', help='write the solution JSON here')
    solve.add_argument('--json', action='store_true', help='print JSON')
    solve.set_defaults(run=cmd_solve)

    sweep = commands.add_parser('sweep', help='recovery rate against sparsity')
    sweep.add_argument('--spec', help='sweep description as JSON')
    sweep.add_argument('--case', default='n1', choices=[c.value for c in SweepCase])
    sweep.add_argument('--dims', help='m,n,l for --case custom')
    sweep.add_argument('--sparsity', default='5..25', help='inclusive range a..b')
    sweep.add_argument('--trials', type=int, default=None,
                       help='trials per level (default: 200, or 50 with --desk)')
    sweep.add_argument('--desk', action='store_true',
                       help='desk scale default of 50 trials per level')
    sweep.add_argument('--algs', default='l1,dra4,dra6,cwb',
                       help='comma separated presets')
    sweep.add_argument('--eps-noise', type=float, default=1e-4)
    sweep.add_argument('--seed', type=lambda s: int(s, 0), default=None,
                       help='64-bit seed (default: $SPARSEKIT_SEED or 0)')
    sweep.add_argument('--threads', type=int, default=1)
    sweep.add_argument('--timing', action='store_true',
                       help='fill mean_seconds (reruns then differ)')
    sweep.add_argument('--reject-outside', action='store_true',
                       help='redraw noise so the planted point lies in T')
    sweep.add_argument('-o', '--output', default='sweep', help='output stem')
    sweep.add_argument('--json', action='store_true', help='print JSON')
    sweep.set_defaults(run=cmd_sweep)

    verify = commands.add_parser('verify', help='optimality and complementarity report')
    verify.add_argument('instance', help='instance JSON file or "example1"')
    verify.add_argument('--weight', help='w1,w2,... (default: all ones)')
    verify.add_argument('--threads', type=int, default=1)
    verify.add_argument('--diagnostics', action='store_true',
                        help='also report the optimal weight checks')
    verify.add_argument('--k-star', type=int, default=None,
                        help='known smallest support size for --diagnostics')
    verify.add_argument('-o', '--output', help='write the report JSON here')
    verify.add_argument('--json', action='store_true', help='print JSON')
    verify.set_defaults(run=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    context = SolverContext(backend_named(args.backend)) if args.backend \
        else SolverContext()
    try:
        with context:
            return args.run(args)
    except NUMERICAL_ERRORS as e:
        print(f'sparsekit {args.command}: numerical failure: {e}', file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, *USAGE_ERRORS) as e:
        print(f'sparsekit {args.command}: {e}', file=sys.stderr)
        return EXIT_USAGE


__all__ = ['main', 'build_parser', 'cmd_solve', 'cmd_sweep', 'cmd_verify']
