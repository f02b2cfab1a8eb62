"""Reproducible Monte Carlo experiments and the diagnostic checks built on them.

Replicate k of an experiment (k runs over the n grid, then over replicates)
draws from ``replicate_rng(seed, k)``. Results are gathered in replicate order,
so output files do not depend on the number of worker threads.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .components import decompose, susceptibilities
from .config_loader import ConfigLoader, load_settings
from .degree_models import (DegreeSequence, WeightSequence, build_power_law_degrees,
                            build_power_law_weights, criticality, sample_iid_degrees,
                            scaling_constants, size_biased_laplace, theta_estimates)
from .error_handling import (ExperimentError, FailureLog, LabConfigError, LabError,
                             LabValidationError, RegimeError)
from .exploration import components_from_walk, explore_dfs
from .formats import write_csv, write_json
from .graph_gen import config_model, erased_config_model, inhomogeneous_graph, uniform_simple
from .limit_processes import ExcursionLawParams, ThetaSequence, excursion_law_sample
from .percolation import (PercolationSpec, bond_percolate, critical_p, default_regime,
                          fountoulakis_percolate, janson_percolate)
from .seeding import replicate_rng
from .telemetry import TelemetryManager

logger = logging.getLogger(__name__)
telemetry = TelemetryManager('harness')

MODELS = ('cm', 'ecm', 'uniform_simple', 'grg', 'chunglu', 'norrosreittu')
WEIGHTED_MODELS = ('grg', 'chunglu', 'norrosreittu')
DEGREE_LAWS = ('power_law', 'iid_power_law', 'mixture')
PERCOLATION_MODES = ('none', 'bond', 'janson', 'fountoulakis')
OUTPUTS = ('sizes', 'surplus', 'diameter', 'susceptibilities', 'walks', 'excursions')
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass(frozen=True)
class ExperimentSpec:
    model: str = 'cm'
    degrees: str = 'power_law'
    tau: float = 3.5
    cF: float = 1.0
    mixture: Tuple[Tuple[int, float], ...] = ()
    regime: Optional[str] = None
    lam: float = 0.0
    p: Optional[float] = None
    mode: str = 'bond'
    n_grid: Tuple[int, ...] = (1000,)
    replicates: int = 10
    seed: int = 0
    outputs: Tuple[str, ...] = ('sizes', 'surplus')
    top_k: int = 10
    excursion_T: float = 20.0
    excursion_dt: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, 'n_grid', tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, 'outputs', tuple(self.outputs))
        object.__setattr__(self, 'mixture', tuple((int(k), float(f)) for k, f in self.mixture))
        problems = []
        if self.model not in MODELS:
            problems.append(f'unknown model {self.model!r}')
        if self.degrees not in DEGREE_LAWS:
            problems.append(f'unknown degree law {self.degrees!r}')
        if self.mode not in PERCOLATION_MODES:
            problems.append(f'unknown percolation mode {self.mode!r}')
        if self.mode in ('janson', 'fountoulakis') and self.model != 'cm':
            problems.append(f'{self.mode} percolation needs the configuration model')
        if self.model in WEIGHTED_MODELS and self.mode != 'bond' and self.mode != 'none':
            problems.append('inhomogeneous models percolate by bond deletion only')
        if self.degrees == 'mixture' and (not self.mixture or abs(sum(f for _, f in self.mixture) - 1.0) > 1e-9):
            problems.append('mixture fractions must be given and sum to 1')
        if self.replicates < 1:
            problems.append('replicates must be at least 1')
        if not self.n_grid or min(self.n_grid) < 1:
            problems.append('n grid must hold positive sizes')
        if self.top_k < 1:
            problems.append('top_k must be positive')
        unknown = sorted(set(self.outputs) - set(OUTPUTS))
        if unknown:
            problems.append(f'unknown outputs {unknown}')
        if self.seed < 0:
            problems.append('seed must be non-negative')
        if problems:
            raise LabValidationError('invalid experiment spec: ' + '; '.join(problems),
                                     context={'problems': problems})

    def as_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out['n_grid'] = list(self.n_grid)
        out['outputs'] = list(self.outputs)
        out['mixture'] = [list(pair) for pair in self.mixture]
        return out

    def spec_hash(self) -> str:
        canonical = json.dumps(self.as_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def load_experiment_spec(path) -> ExperimentSpec:
    """Read an ExperimentSpec from JSON or TOML; an ``[experiment]`` table is unwrapped."""
    raw = ConfigLoader(path, required=True).load()
    if set(raw) == {'experiment'}:
        raw = raw['experiment']
    known = {f.name for f in fields(ExperimentSpec)}
    aliases = {'lambda': 'lam', 'n': 'n_grid'}
    data = {aliases.get(k, k): v for k, v in raw.items()}
    unknown = sorted(set(data) - known)
    if unknown:
        raise LabConfigError('unknown experiment spec keys', context={'path': str(path), 'keys': unknown})
    if isinstance(data.get('n_grid'), int):
        data['n_grid'] = [data['n_grid']]
    try:
        return ExperimentSpec(**data)
    except (ValueError, TypeError) as e:
        raise LabConfigError(f'invalid experiment spec: {e}', context={'path': str(path)}, original_exception=e)


@dataclass(frozen=True)
class ReplicateRecord:
    n: int
    replicate: int
    index: int
    p: float
    sizes: Tuple[int, ...]
    surplus: Tuple[int, ...]
    edges: Tuple[int, ...]
    diameter: int = -1
    s2_star: float = math.nan
    s3_star: float = math.nan
    delta_max: int = -1
    walk_sizes: Tuple[int, ...] = ()

    def row(self) -> List[Any]:
        return [self.n, self.replicate, self.p, self.sizes[0] if self.sizes else 0,
                self.surplus[0] if self.surplus else 0, self.edges[0] if self.edges else 0,
                self.diameter, self.s2_star, self.s3_star, self.delta_max,
                ';'.join(map(str, self.sizes)), ';'.join(map(str, self.surplus)),
                ';'.join(map(str, self.walk_sizes))]


RECORD_HEADER = ('n', 'replicate', 'p', 'C1', 'surplus1', 'edges1', 'diameter1', 's2_star', 's3_star',
                 'delta_max', 'sizes', 'surplus', 'walk_sizes')


@dataclass
class RunResult:
    spec: ExperimentSpec
    spec_hash: str
    records: List[Optional[ReplicateRecord]]
    summary: Dict[int, Dict[str, Dict[str, float]]]
    failures: List[Dict[str, Any]] = field(default_factory=list)
    failure_count: int = 0
    limit_law: Optional[Dict[str, List[float]]] = None
    durations: Dict[str, Any] = field(default_factory=dict)
    code_version: str = 'unknown'

    @property
    def completed(self) -> List[ReplicateRecord]:
        return [r for r in self.records if r is not None]


def summarize(samples: Sequence[float]) -> Dict[str, float]:
    """Mean, standard error and quantiles of a sample."""
    arr = np.asarray(samples, dtype=float)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        return {'count': 0, 'mean': math.nan, 'se': math.nan,
                **{f'q{int(q * 100):02d}': math.nan for q in QUANTILES}}
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    out = {'count': int(arr.size), 'mean': float(arr.mean()), 'se': se}
    for q, value in zip(QUANTILES, np.quantile(arr, QUANTILES)):
        out[f'q{int(q * 100):02d}'] = float(value)
    return out


def _mixture_degrees(mixture: Sequence[Tuple[int, float]], n: int) -> DegreeSequence:
    counts = [int(math.floor(frac * n)) for _, frac in mixture]
    counts[0] += n - sum(counts)
    values = np.concatenate([np.full(c, k, dtype=np.int64) for (k, _), c in zip(mixture, counts)])
    return DegreeSequence.from_iterable(np.sort(values)[::-1])


def build_sequence(spec: ExperimentSpec, n: int, rng: np.random.Generator):
    """Degree or weight sequence for one replicate."""
    if spec.degrees == 'mixture':
        d = _mixture_degrees(spec.mixture, n)
        return WeightSequence(d.degrees.astype(float)) if spec.model in WEIGHTED_MODELS else d
    if spec.model in WEIGHTED_MODELS:
        return build_power_law_weights(spec.tau, n, spec.cF)
    if spec.degrees == 'iid_power_law':
        return sample_iid_degrees(spec.tau, spec.cF, n, rng)
    return build_power_law_degrees(spec.tau, n, spec.cF)


def _host_graph(spec: ExperimentSpec, seq, rng: np.random.Generator):
    if spec.model == 'cm':
        return config_model(seq, rng)
    if spec.model == 'ecm':
        return erased_config_model(seq, rng)[0]
    if spec.model == 'uniform_simple':
        return uniform_simple(seq, rng)
    return inhomogeneous_graph(seq, spec.model, rng)


def run_replicate(spec: ExperimentSpec, n: int, rng: np.random.Generator, replicate: int = 0,
                  index: int = 0) -> ReplicateRecord:
    """One pass of the pipeline: sequence, graph, percolation, decomposition."""
    scal = scaling_constants(spec.tau, n)
    seq = build_sequence(spec, n, rng)
    regime = spec.regime or default_regime(scal)
    p = 1.0 if spec.mode == 'none' else critical_p(PercolationSpec(regime, spec.lam, spec.p), seq, scal)
    if spec.mode == 'janson':
        graph = janson_percolate(seq, p, rng).graph
    elif spec.mode == 'fountoulakis':
        graph = fountoulakis_percolate(seq, p, rng).graph
    else:
        graph = _host_graph(spec, seq, rng)
        if spec.mode == 'bond':
            graph = bond_percolate(graph, p, rng).graph
    want_susc = 'susceptibilities' in spec.outputs
    diameters = True if want_susc else (1 if 'diameter' in spec.outputs else False)
    comps = decompose(graph, diameters=diameters)
    top = comps[:spec.top_k]
    extra: Dict[str, Any] = {}
    if 'diameter' in spec.outputs and top:
        extra['diameter'] = top[0].diameter
    if want_susc:
        report = susceptibilities(graph, np.ones(graph.n), stats=comps)
        extra.update(s2_star=report.s2_star, s3_star=report.s3_star, delta_max=report.delta_max)
    if 'walks' in spec.outputs:
        walk, _ = explore_dfs(DegreeSequence(graph.degrees()), rng)
        walk_sizes = sorted((c.size for c in components_from_walk(walk)), reverse=True)
        extra['walk_sizes'] = tuple(walk_sizes[:spec.top_k])
    return ReplicateRecord(n=n, replicate=replicate, index=index, p=p,
                           sizes=tuple(c.size for c in top), surplus=tuple(c.surplus for c in top),
                           edges=tuple(c.edges for c in top), **extra)


def _summaries(spec: ExperimentSpec, records: Sequence[Optional[ReplicateRecord]]) -> Dict[int, Dict[str, Dict[str, float]]]:
    out: Dict[int, Dict[str, Dict[str, float]]] = {}
    for n in spec.n_grid:
        rows = [r for r in records if r is not None and r.n == n]
        stats_n = {
            'C1': summarize([r.sizes[0] if r.sizes else 0 for r in rows]),
            'surplus1': summarize([r.surplus[0] if r.surplus else 0 for r in rows]),
        }
        if 'diameter' in spec.outputs:
            stats_n['diameter1'] = summarize([r.diameter for r in rows])
        if 'susceptibilities' in spec.outputs:
            stats_n['s2_star'] = summarize([r.s2_star for r in rows])
            stats_n['delta_max'] = summarize([r.delta_max for r in rows])
        if 'walks' in spec.outputs:
            stats_n['walk_C1'] = summarize([r.walk_sizes[0] if r.walk_sizes else 0 for r in rows])
        out[n] = stats_n
    return out


def _limit_law(spec: ExperimentSpec, rng: np.random.Generator) -> Optional[Dict[str, List[float]]]:
    """Longest-excursion law of the limit process matching the largest n of the grid."""
    n = max(spec.n_grid)
    scal = scaling_constants(spec.tau, n)
    if scal.regime == 'tau_23':
        logger.warning('no excursion limit for tau in (2, 3); skipping excursions output')
        return None
    d = build_sequence(spec, n, rng)
    if not isinstance(d, DegreeSequence):
        raise ExperimentError('excursion laws are defined for degree-based models', context={'model': spec.model})
    report = criticality(d, scal)
    if scal.regime == 'tau_gt4':
        params = ExcursionLawParams(process='bm_parabolic', mu=report.mu_hat, eta=report.eta_hat,
                                    lam=spec.lam, T=spec.excursion_T, dt=spec.excursion_dt)
    else:
        K = int(load_settings()['truncation_K'])
        theta = ThetaSequence(theta_estimates(spec.tau, spec.cF, K), mu=report.mu_hat)
        params = ExcursionLawParams(process='thinned_levy', mu=report.mu_hat, lam=spec.lam, theta=theta,
                                    T=spec.excursion_T, dt=spec.excursion_dt, mark_regime='unit')
    law = excursion_law_sample(params, spec.replicates, rng)
    return {'length': law.longest().tolist(), 'marks': law.longest_marks().tolist()}


def git_describe() -> str:
    try:
        out = subprocess.run(['git', 'describe', '--always', '--dirty'], capture_output=True, text=True,
                             timeout=5, cwd=Path(__file__).resolve().parent)
    except (OSError, subprocess.SubprocessError):
        return 'unknown'
    return out.stdout.strip() or 'unknown'


@telemetry.trace('run_experiment')
def run_experiment(spec: ExperimentSpec, parallelism: int = 1) -> RunResult:
    """Run every (n, replicate) task; failures are logged and counted, never fatal."""
    if parallelism < 1:
        raise LabValidationError('parallelism must be at least 1', context={'parallelism': parallelism})
    tasks = [(n, r, k * spec.replicates + r) for k, n in enumerate(spec.n_grid) for r in range(spec.replicates)]
    failures = FailureLog(logger, limit=int(load_settings()['failure_history_limit']))
    durations: List[float] = [0.0] * len(tasks)

    def execute(task: Tuple[int, int, int]) -> Optional[ReplicateRecord]:
        n, r, index = task
        start = time.perf_counter()
        try:
            record = run_replicate(spec, n, replicate_rng(spec.seed, index), replicate=r, index=index)
        except (LabError, ArithmeticError, ValueError, MemoryError) as e:
            failures.record(e, {'n': n, 'replicate': r, 'index': index})
            return None
        finally:
            durations[index] = time.perf_counter() - start
        logger.info(f"replicate {index} (n={n}, r={r}) done: |C1|={record.sizes[0] if record.sizes else 0}")
        return record

    start = time.perf_counter()
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(execute, tasks))
    else:
        records = [execute(t) for t in tasks]
    limit_law = None
    if 'excursions' in spec.outputs:
        limit_law = _limit_law(spec, replicate_rng(spec.seed, len(tasks)))
    if failures.count:
        logger.warning(f"{failures.count} of {len(tasks)} replicates failed")
    return RunResult(spec=spec, spec_hash=spec.spec_hash(), records=records,
                     summary=_summaries(spec, records), failures=failures.get_history(),
                     failure_count=failures.count, limit_law=limit_law,
                     durations={'total_s': time.perf_counter() - start, 'replicate_s': durations},
                     code_version=git_describe())


def write_results(result: RunResult, out_dir) -> Dict[str, Path]:
    """replicates.csv, summary.csv, optional limit_law.csv and manifest.json, each written atomically."""
    out = Path(out_dir)
    paths = {'replicates': write_csv(out / 'replicates.csv', RECORD_HEADER,
                                     (r.row() for r in result.records if r is not None))}
    summary_rows = []
    for n, by_stat in result.summary.items():
        for name, s in by_stat.items():
            summary_rows.append([n, name] + [s[k] for k in ('count', 'mean', 'se', 'q05', 'q25', 'q50', 'q75', 'q95')])
    paths['summary'] = write_csv(out / 'summary.csv',
                                 ('n', 'statistic', 'count', 'mean', 'se', 'q05', 'q25', 'q50', 'q75', 'q95'),
                                 summary_rows)
    if result.limit_law is not None:
        paths['limit_law'] = write_csv(out / 'limit_law.csv', ('draw', 'length', 'marks'),
                                       ((k, length, int(m)) for k, (length, m) in
                                        enumerate(zip(result.limit_law['length'], result.limit_law['marks']))))
    paths['manifest'] = write_json(out / 'manifest.json', {
        'spec': result.spec.as_dict(),
        'spec_hash': result.spec_hash,
        'seed': result.spec.seed,
        'git_describe': result.code_version,
        'durations': result.durations,
        'failure_count': result.failure_count,
        'failures': result.failures,
        'replicates_completed': len(result.completed),
    })
    return paths


@dataclass(frozen=True)
class TwoHopReport:
    C: float
    violations: int
    alpha: float
    values: np.ndarray
    bounds: np.ndarray


def two_hop_check(w: WeightSequence, p: float, lam: float, i_max: int, j_max: int,
                  alpha: Optional[float] = None, C: Optional[float] = None) -> TwoHopReport:
    """Exact two-hop GRG connection probabilities against C lam^2 (i ^ j)^{-(1-alpha)} (i v j)^{-alpha}.

    p_ij(2) = p^2 sum_{v not in {i, j}} a_iv a_jv with a_iv = w_i w_v / (l + w_i w_v).
    Indices are 1-based ranks of the weights in decreasing order; alpha defaults to
    log(w_(1) / w_(n)) / log n. The fitted C is the smallest with zero violations;
    ``violations`` counts pairs above the bound with the given C (or the fitted one).
    """
    if not 0.0 <= p <= 1.0:
        raise LabValidationError('p must lie in [0, 1]', context={'p': p})
    weights = np.sort(np.asarray(w.weights, dtype=float))[::-1]
    n = weights.size
    rows = max(i_max, j_max)
    if rows > n or min(i_max, j_max) < 1:
        raise LabValidationError('grid exceeds the number of vertices', context={'i_max': i_max, 'j_max': j_max, 'n': n})
    if alpha is None:
        alpha = math.log(weights[0] / weights[-1]) / math.log(n) if n > 1 and weights[-1] > 0 else 0.5
    ell = weights.sum()
    prod = np.outer(weights[:rows], weights)
    a = prod / (ell + prod)
    full = a @ a.T
    diag = np.diag(a[:, :rows])
    values = p ** 2 * (full - a[:, :rows] * diag[None, :] - diag[:, None] * a[:, :rows].T)
    values = values[:i_max, :j_max]
    i = np.arange(1, i_max + 1)[:, None]
    j = np.arange(1, j_max + 1)[None, :]
    scale = lam ** 2 if lam > 0 else 1.0
    bounds = scale * np.minimum(i, j) ** (-(1.0 - alpha)) * np.maximum(i, j) ** (-alpha)
    off = i != j
    values = np.where(off, values, 0.0)
    fitted = float(np.max(values[off] / bounds[off])) if off.any() else 0.0
    threshold = fitted if C is None else float(C)
    violations = int(np.count_nonzero(off & (values > threshold * bounds * (1 + 1e-12))))
    return TwoHopReport(C=fitted, violations=violations, alpha=float(alpha), values=values, bounds=bounds)


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float
    n_values: Tuple[int, ...]


def scaling_regression(sizes: Mapping[int, Sequence[float]], level: float = 0.95) -> RegressionResult:
    """Least-squares slope of log median |C_(1)| against log n with a t-interval."""
    if len(sizes) < 3:
        raise LabValidationError('need at least three n values', context={'count': len(sizes)})
    ns = sorted(sizes)
    medians = np.array([np.median(np.asarray(sizes[n], dtype=float)) for n in ns])
    if np.any(medians <= 0):
        raise LabValidationError('median sizes must be positive', context={'medians': medians.tolist()})
    fit = stats.linregress(np.log(ns), np.log(medians))
    stderr = float(fit.stderr) if np.isfinite(fit.stderr) else 0.0
    half = float(stats.t.ppf(0.5 + level / 2.0, len(ns) - 2)) * stderr
    return RegressionResult(slope=float(fit.slope), intercept=float(fit.intercept), stderr=stderr,
                            ci_low=float(fit.slope) - half, ci_high=float(fit.slope) + half,
                            n_values=tuple(ns))


@dataclass(frozen=True)
class KappaEstimate:
    t_grid: Tuple[float, ...]
    estimates: Tuple[float, ...]
    kappa: float
    spread: float


def estimate_kappa(d: DegreeSequence, p: float, tau: float, t_grid: Sequence[float] = (0.5, 1.0, 2.0)) -> KappaEstimate:
    """kappa(t) = (1 - E[exp(-t p^{1/(3-tau)} D*)]) / (t^{tau-2} p^{(tau-2)/(3-tau)}), averaged over t."""
    if not 2.0 < tau < 3.0:
        raise RegimeError('kappa is defined for tau in (2, 3)', tau=tau)
    if not 0.0 < p <= 1.0 or not t_grid or min(t_grid) <= 0:
        raise LabValidationError('need p in (0, 1] and a positive t grid', context={'p': p})
    scale = p ** ((tau - 2.0) / (3.0 - tau))
    est = [size_biased_laplace(d, p, t, tau) / (t ** (tau - 2.0) * scale) for t in t_grid]
    kappa = float(np.mean(est))
    spread = float(max(abs(e - kappa) for e in est) / kappa) if kappa > 0 else math.inf
    return KappaEstimate(t_grid=tuple(float(t) for t in t_grid), estimates=tuple(float(e) for e in est),
                         kappa=kappa, spread=spread)


@dataclass(frozen=True)
class NearCriticalRow:
    n: int
    p_n: float
    p_c: float
    window_ok: bool
    ratio: Dict[str, float]
    theory: float
    edge_ratio: Dict[str, float]
    edge_ratio_theory: float
    kappa: float = math.nan


def near_critical_report(tau: float, n_grid: Sequence[int], side: str, replicates: int, seed: int,
                         cF: float = 1.0, i: int = 1, shift: Optional[float] = None,
                         t_grid: Sequence[float] = (0.5, 1.0, 2.0)) -> List[NearCriticalRow]:
    """Barely sub/supercritical percolation on CM with power-law degrees, tau in (2, 3).

    subcritical: p_n = p_c / shift (default log n); ratio |C_(i)| / (n^alpha p_n), theory theta_i.
    supercritical: p_n = p_c * shift (default log n); ratio |C_(1)| / (n p_n^{1/(3-tau)}) against
    mu kappa^{1/(3-tau)} / 2^{(tau-2)/(3-tau)}; edges/size is reported with the constant
    2^{(2 tau - 6)/(3 - tau)} that the two limit constants imply.
    """
    if side not in ('subcritical', 'supercritical'):
        raise LabValidationError('side must be subcritical or supercritical', context={'side': side})
    if not 2.0 < tau < 3.0:
        raise RegimeError('near-critical report needs tau in (2, 3)', tau=tau)
    alpha = 1.0 / (tau - 1.0)
    rows = []
    for k, n in enumerate(n_grid):
        d = build_power_law_degrees(tau, n, cF)
        scal = scaling_constants(tau, n)
        report = criticality(d, scal)
        p_c = 1.0 / report.nu_n
        factor = shift if shift is not None else math.log(n)
        p_n = p_c / factor if side == 'subcritical' else min(p_c * factor, 1.0)
        if side == 'subcritical':
            window_ok = math.log(n) / d.total < p_n < p_c
        else:
            window_ok = p_c < p_n < 1.0
        if not window_ok:
            logger.warning(f"p_n={p_n:.4g} outside the {side} window at n={n} (p_c={p_c:.4g})")
        ratios, edge_ratios = [], []
        for r in range(replicates):
            rng = replicate_rng(seed, k * replicates + r)
            graph = bond_percolate(config_model(d, rng), p_n, rng).graph
            comps = decompose(graph, diameters=False)
            if side == 'subcritical':
                size = comps[i - 1].size if len(comps) >= i else 0
                ratios.append(size / (n ** alpha * p_n))
            else:
                ratios.append(comps[0].size / (n * p_n ** (1.0 / (3.0 - tau))))
                edge_ratios.append(comps[0].edges / comps[0].size)
        kappa = math.nan
        if side == 'subcritical':
            theory = float(theta_estimates(tau, cF, i)[i - 1])
        else:
            kappa = estimate_kappa(d, p_n, tau, t_grid).kappa
            theory = report.mu_hat * kappa ** (1.0 / (3.0 - tau)) / 2.0 ** ((tau - 2.0) / (3.0 - tau))
        rows.append(NearCriticalRow(n=n, p_n=p_n, p_c=p_c, window_ok=window_ok, ratio=summarize(ratios),
                                    theory=theory, edge_ratio=summarize(edge_ratios),
                                    edge_ratio_theory=2.0 ** ((2.0 * tau - 6.0) / (3.0 - tau)), kappa=kappa))
    return rows
