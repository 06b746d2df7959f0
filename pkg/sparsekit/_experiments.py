import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import NamedTuple, Optional, Tuple, List

import numpy as np
import pandas as pd

from ._algorithms import AlgorithmConfig, preset, run_algorithm
from ._context import current_context
from ._instance import Instance
from .exceptions import DomainError, SolverFailure, SubproblemFailure

logger = logging.getLogger(__name__)

SUCCESS_TOL = 1e-5
COLUMNS = ['algorithm', 'sparsity', 'trials', 'successes', 'rate', 'mean_seconds']
TRIAL_COLUMNS = ['algorithm', 'sparsity', 'trial', 'seed', 'success', 'failed',
                 'relative_error', 'found_sparsity', 'seconds']


class SweepCase(Enum):
    N1 = 'n1'
    N2 = 'n2'
    CUSTOM = 'custom'


_CASE_DIMS = {
    SweepCase.N1: (50, 200, 0),
    SweepCase.N2: (50, 200, 50),
}


@dataclass(frozen=True)
class SweepSpec:
    """
    Recovery sweep over planted sparsity levels. Every trial draws one
    instance from (seed, sparsity, trial) and runs every algorithm on it.
    """
    m: int
    n: int
    l: int = 0
    sparsity_range: Tuple[int, int] = (1, 1)
    trials_per_level: int = 200
    eps_noise: float = 1e-4
    algorithms: Tuple[AlgorithmConfig, ...] = ()
    seed: int = 0
    case: SweepCase = SweepCase.CUSTOM
    reject_outside: bool = False
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'algorithms', tuple(self.algorithms))
        object.__setattr__(self, 'sparsity_range', tuple(self.sparsity_range))
        low, high = self.sparsity_range
        if min(self.m, self.n) < 1 or self.l < 0:
            raise DomainError(f'bad dimensions m={self.m}, n={self.n}, l={self.l}')
        if not 1 <= low <= high:
            raise DomainError(f'sparsity range {low}..{high} is empty or starts below 1')
        if high >= self.m or high > self.n:
            raise DomainError(f'largest sparsity {high} must be below m = {self.m}')
        if self.trials_per_level < 1:
            raise DomainError('trials_per_level must be at least 1')
        if self.eps_noise < 0:
            raise DomainError('eps_noise must be >= 0')
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f'seed {self.seed} is not a 64-bit integer')
        if self.threads < 1:
            raise DomainError('threads must be at least 1')
        names = [config.name for config in self.algorithms]
        if not names:
            raise DomainError('a sweep needs at least one algorithm')
        if len(set(names)) != len(names):
            raise DomainError(f'algorithm names must be unique, got {names}')

    @classmethod
    def preset(cls, case, **kwargs) -> 'SweepSpec':
        """
        Sweep with the dimensions of case n1 (m=50, n=200, no inequalities)
        or n2 (m=50, n=200, l=50)
        """
        case = SweepCase(case.lower()) if isinstance(case, str) else SweepCase(case)
        if case is SweepCase.CUSTOM:
            raise DomainError('custom sweeps need explicit dimensions')
        m, n, l = _CASE_DIMS[case]
        return cls(m=m, n=n, l=l, case=case, **kwargs)

    @property
    def levels(self) -> range:
        return range(self.sparsity_range[0], self.sparsity_range[1] + 1)

    @property
    def dims(self) -> Tuple[int, int, int]:
        return self.m, self.n, self.l

    def replace(self, **changes) -> 'SweepSpec':
        return replace(self, **changes)

    def describe(self) -> dict:
        return {
            'case': self.case.value,
            'm': self.m,
            'n': self.n,
            'l': self.l,
            'sparsity_range': list(self.sparsity_range),
            'trials_per_level': self.trials_per_level,
            'eps_noise': self.eps_noise,
            'seed': self.seed,
            'reject_outside': self.reject_outside,
            'algorithms': [config.describe() for config in self.algorithms],
        }


class GeneratedInstance(NamedTuple):
    instance: Instance
    x_star: np.ndarray
    noise: float


def _stream(seed: int, k: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, k, trial])))


def generate_instance(dims, k: int, eps_noise: float, seed: int, trial: int = 0,
                      reject_outside: bool = False) -> GeneratedInstance:
    """
    Random instance with a planted k-sparse point. A and B are standard
    normal, y = A x* + (c1 eps / ||c||) c and b = B x* + |d|. The draws come
    from a Philox stream keyed by (seed, k, trial).
    :param dims: (m, n, l)
    :param reject_outside: redraw c1 until |c1| <= 1 so that x* lies in T
    :return: (instance, x_star, realized noise |c1| eps)
    """
    m, n, l = dims
    if not 0 <= k <= n:
        raise DomainError(f'sparsity {k} must lie in [0, {n}]')
    rng = _stream(seed, k, trial)
    A = rng.standard_normal((m, n))
    B = rng.standard_normal((l, n))
    x_star = np.zeros(n)
    support = rng.choice(n, size=k, replace=False)
    x_star[np.sort(support)] = rng.standard_normal(k)
    c = rng.standard_normal(m)
    c1 = rng.standard_normal()
    if reject_outside:
        while abs(c1) > 1:
            c1 = rng.standard_normal()
    d = np.abs(rng.standard_normal(l))
    norm_c = np.linalg.norm(c)
    noise = c * (c1 * eps_noise / norm_c) if norm_c > 0 else np.zeros(m)
    inst = Instance(A, A @ x_star + noise, B, B @ x_star + d, eps_noise)
    if abs(c1) > 1:
        logger.debug('trial %d at sparsity %d: planted point outside T (|c1| = %.3f)',
                     trial, k, abs(c1))
    return GeneratedInstance(inst, x_star, abs(c1) * eps_noise)


def relative_error(x_found, x_star) -> float:
    x_star = np.asarray(x_star, dtype=float)
    scale = np.linalg.norm(x_star)
    if scale == 0:
        raise DomainError('relative error against a zero vector')
    return float(np.linalg.norm(np.asarray(x_found, dtype=float) - x_star) / scale)


def success(x_found, x_star, tol: float = SUCCESS_TOL) -> bool:
    """
    Recovery criterion ||x_found - x*||_2 / ||x*||_2 <= tol
    """
    if x_found is None:
        return False
    return relative_error(x_found, x_star) <= tol


class TrialRecord(NamedTuple):
    algorithm: str
    sparsity: int
    trial: int
    seed: int
    success: bool
    failed: bool
    relative_error: float
    found_sparsity: int
    seconds: float


@dataclass
class SweepResult:
    spec: Optional[SweepSpec]
    records: List[TrialRecord] = field(default_factory=list)

    def trials_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records, columns=TRIAL_COLUMNS)

    def summary(self, timing: bool = False) -> pd.DataFrame:
        """
        One row per algorithm and sparsity in canonical order
        """
        frame = self.trials_frame()
        if frame.empty:
            return pd.DataFrame(columns=COLUMNS)
        grouped = frame.groupby(['algorithm', 'sparsity'], sort=False)
        summary = grouped.agg(trials=('success', 'size'),
                              successes=('success', 'sum'),
                              mean_seconds=('seconds', 'mean')).reset_index()
        summary['successes'] = summary['successes'].astype(int)
        summary['rate'] = summary['successes'] / summary['trials']
        if not timing:
            summary['mean_seconds'] = 0.0
        if self.spec is not None:
            order = {config.name: i for i, config in enumerate(self.spec.algorithms)}
            summary['_order'] = summary['algorithm'].map(order)
            summary = summary.sort_values(['_order', 'sparsity'], kind='stable')
        return summary[COLUMNS].reset_index(drop=True)

    def rate(self, algorithm: str, k: int) -> float:
        summary = self.summary()
        row = summary[(summary['algorithm'] == algorithm) & (summary['sparsity'] == k)]
        if row.empty:
            raise KeyError(f'no trials for {algorithm} at sparsity {k}')
        return float(row['rate'].iloc[0])

    def mean_rate(self, algorithm: str) -> float:
        summary = self.summary()
        return float(summary.loc[summary['algorithm'] == algorithm, 'rate'].mean())


def _run_trial(spec: SweepSpec, k: int, trial: int) -> List[TrialRecord]:
    generated = generate_instance(spec.dims, k, spec.eps_noise, spec.seed, trial,
                                  spec.reject_outside)
    records = []
    for config in spec.algorithms:
        started = time.perf_counter()
        try:
            trace = run_algorithm(config, generated.instance)
        except (SolverFailure, SubproblemFailure, np.linalg.LinAlgError,
                FloatingPointError, ValueError) as e:
            logger.warning('%s failed on trial %d at sparsity %d: %s',
                           config.name, trial, k, e)
            trace = None
        seconds = time.perf_counter() - started
        x = None if trace is None else trace.final_x
        error = np.inf if x is None else relative_error(x, generated.x_star)
        records.append(TrialRecord(
            config.name, k, trial, spec.seed, error <= SUCCESS_TOL,
            trace is None or trace.failed, error,
            -1 if x is None else trace.final_sparsity, seconds,
        ))
    return records


def run_sweep(spec: SweepSpec) -> SweepResult:
    """
    Run every algorithm of spec on the same instances and record per trial
    outcomes. Failed trials count as unsuccessful.
    """
    logger.info('sweep %s: sparsity %d..%d, %d trials, %s planted points outside T',
                spec.case.value, *spec.sparsity_range, spec.trials_per_level,
                'redrawing' if spec.reject_outside else 'keeping')
    tasks = [(k, t) for k in spec.levels for t in range(spec.trials_per_level)]
    context = current_context().flattened()

    def trial(task):
        with context.flattened():
            return _run_trial(spec, *task)

    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            batches = list(pool.map(trial, tasks))
    else:
        batches = [trial(task) for task in tasks]
    records = [record for batch in batches for record in batch]
    order = {config.name: i for i, config in enumerate(spec.algorithms)}
    records.sort(key=lambda r: (order[r.algorithm], r.sparsity, r.trial))
    return SweepResult(spec, records)


class EmittedFiles(NamedTuple):
    csv: Path
    svg: Path
    trials: Path
    provenance: Path


def _plot(summary: pd.DataFrame, path: Path):
    import matplotlib
    matplotlib.use('Agg')
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({'svg.hashsalt': 'sparsekit', 'svg.fonttype': 'none'}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for name, rows in summary.groupby('algorithm', sort=False):
            ax.plot(rows['sparsity'], rows['rate'], marker='o', markersize=3,
                    label=name, gid=f'series-{name}')
        ax.set_xlabel('Sparsity')
        ax.set_ylabel('Frequency of success')
        ax.set_ylim(-0.02, 1.02)
        if not summary.empty:
            ax.legend(loc='lower left')
        ax.grid(True, linestyle=':')
        fig.tight_layout()
        fig.savefig(path, format='svg', metadata={'Date': None})
        plt.close(fig)


def emit_results(result: SweepResult, path, timing: bool = False) -> EmittedFiles:
    """
    Write <stem>.csv (one row per algorithm and sparsity), <stem>.svg (success
    rate against sparsity), <stem>_trials.csv and the <stem>.json provenance
    record
    :param path: output stem; a .csv or .svg suffix is dropped
    :param timing: fill mean_seconds, otherwise 0.0 keeps reruns identical
    """
    path = Path(path)
    stem = path.with_suffix('') if path.suffix in ('.csv', '.svg') else path
    files = EmittedFiles(stem.with_name(stem.name + '.csv'),
                         stem.with_name(stem.name + '.svg'),
                         stem.with_name(stem.name + '_trials.csv'),
                         stem.with_name(stem.name + '.json'))
    summary = result.summary(timing)
    summary.to_csv(files.csv, index=False)
    trials = result.trials_frame()
    if not timing:
        trials['seconds'] = 0.0
    trials.to_csv(files.trials, index=False)
    _plot(summary, files.svg)
    provenance = {
        'columns': COLUMNS,
        'timing': timing,
        'spec': None if result.spec is None else result.spec.describe(),
    }
    with open(files.provenance, 'w') as f:
        json.dump(provenance, f, indent=2, sort_keys=True)
    logger.info('wrote %s', ', '.join(str(p) for p in files))
    return files


def sweep_algorithms(names) -> Tuple[AlgorithmConfig, ...]:
    return tuple(preset(name.strip()) for name in names if name.strip())


__all__ = [
    'SUCCESS_TOL',
    'COLUMNS',
    'TRIAL_COLUMNS',
    'SweepCase',
    'SweepSpec',
    'GeneratedInstance',
    'generate_instance',
    'relative_error',
    'success',
    'TrialRecord',
    'SweepResult',
    'run_sweep',
    'EmittedFiles',
    'emit_results',
    'sweep_algorithms',
]
