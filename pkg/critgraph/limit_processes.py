"""Limit processes of the exploration walks, their excursions and Poisson marks.

Three processes are simulated on a uniform grid of step dt:

* Brownian motion with parabolic drift (finite third moment);
* the thinned Levy process sum_i theta_i (1{xi_i <= t} - theta_i t / mu) + lambda t
  (tau in (3, 4)), optionally with a Brownian stand-in for the truncated tail;
* the indicator process lambda sum_i theta_i 1{xi_i <= t} - 2t (tau in (2, 3)).

Exponential clocks are drawn exactly; only the recording is gridded. A jump
at xi is visible from the first grid time >= xi.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .components import UVector, order_u0
from .config_loader import load_settings
from .error_handling import LabValidationError
from .seeding import spawn

logger = logging.getLogger(__name__)

THETA_CLASSES = ('l3_not_l2', 'l2_not_l1')
MARK_REGIMES = ('beta_over_mu', 'theta_ratio', 'unit')
PROCESSES = ('bm_parabolic', 'thinned_levy', 'isj')


@dataclass(frozen=True)
class ThetaSequence:
    theta: np.ndarray
    mu: float
    cls: str = 'l3_not_l2'

    def __post_init__(self):
        arr = np.asarray(self.theta, dtype=float).reshape(-1)
        if arr.size == 0 or np.any(arr <= 0):
            raise LabValidationError('theta must be a non-empty positive sequence')
        if np.any(np.diff(arr) > 0):
            raise LabValidationError('theta must be non-increasing')
        if self.mu <= 0:
            raise LabValidationError('mu must be positive', context={'mu': self.mu})
        if self.cls not in THETA_CLASSES:
            raise LabValidationError('unknown theta class', context={'cls': self.cls})
        arr.setflags(write=False)
        object.__setattr__(self, 'theta', arr)

    @classmethod
    def power_law(cls, alpha: float, K: int, mu: float = 1.0, cF: float = 1.0,
                  theta_class: str = 'l3_not_l2') -> 'ThetaSequence':
        """theta_i = (cF / i)^alpha, i <= K."""
        return cls((cF / np.arange(1, K + 1, dtype=float)) ** alpha, mu, theta_class)

    @property
    def K(self) -> int:
        return int(self.theta.size)


@dataclass(frozen=True)
class LimitPath:
    times: np.ndarray
    values: np.ndarray
    dt: float
    clocks: Optional[np.ndarray] = None
    tail_mode: str = 'truncate'
    tail_values: Optional[np.ndarray] = field(default=None, repr=False)
    reflected: bool = False

    @property
    def T(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class MarkedExcursions:
    intervals: np.ndarray
    lengths: np.ndarray
    areas: np.ndarray
    marks: np.ndarray
    complete: np.ndarray
    ordered: bool = False
    index_bounds: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64), repr=False)

    def __len__(self) -> int:
        return int(self.lengths.size)

    def as_uvector(self, k: Optional[int] = None) -> UVector:
        marks = self.marks if self.marks.size == self.lengths.size else np.zeros(self.lengths.size, int)
        vec = order_u0(zip(self.lengths.tolist(), marks.astype(int).tolist()))
        return vec if k is None else vec.top(k)


@dataclass(frozen=True)
class ExcursionLawParams:
    process: str = 'bm_parabolic'
    mu: float = 1.0
    eta: float = 1.0
    lam: float = 0.0
    theta: Optional[ThetaSequence] = None
    T: float = 20.0
    dt: float = 1e-3
    mark_regime: Optional[str] = 'beta_over_mu'
    tail: str = 'truncate'
    tail_sigma2: Optional[float] = None


@dataclass(frozen=True)
class ExcursionLaw:
    draws: List[UVector]
    complete_fraction: float
    pilot_ok: bool

    def longest(self) -> np.ndarray:
        return np.array([d.pairs[0][0] if len(d) else 0.0 for d in self.draws])

    def longest_marks(self) -> np.ndarray:
        return np.array([d.pairs[0][1] if len(d) else 0 for d in self.draws])


def _grid(T: float, dt: float) -> np.ndarray:
    if dt <= 0 or T <= 0:
        raise LabValidationError('T and dt must be positive', context={'T': T, 'dt': dt})
    steps = int(round(T / dt))
    return np.arange(steps + 1) * dt


def simulate_bm_parabolic(mu: float, eta: float, lam: float, T: float, dt: float,
                          rng: np.random.Generator) -> LimitPath:
    """B(s) = (sqrt(eta) / mu) W(s) + lam s - eta s^2 / (2 mu^3) on the grid."""
    if mu <= 0 or eta <= 0:
        raise LabValidationError('mu and eta must be positive', context={'mu': mu, 'eta': eta})
    times = _grid(T, dt)
    steps = times.size - 1
    noise = np.concatenate([[0.0], np.cumsum(rng.standard_normal(steps) * np.sqrt(dt))])
    values = np.sqrt(eta) / mu * noise + lam * times - eta * times ** 2 / (2.0 * mu ** 3)
    return LimitPath(times=times, values=values, dt=dt)


def _jump_part(times: np.ndarray, clocks: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    increments = np.zeros(times.size)
    idx = np.searchsorted(times, clocks, side='left')
    inside = idx < times.size
    np.add.at(increments, idx[inside], sizes[inside])
    return np.cumsum(increments)


def _clocks(theta: ThetaSequence, rng: np.random.Generator) -> np.ndarray:
    return rng.exponential(scale=theta.mu / theta.theta)


def tail_variance_rate(theta_tail: Sequence[float], mu: float = 1.0) -> float:
    """Variance rate sum theta_i^3 / mu of the compensated tail sum_{i > K} theta_i (I_i(t) - theta_i t / mu)."""
    arr = np.asarray(theta_tail, dtype=float)
    return float(np.sum(arr ** 3) / mu)


def simulate_thinned_levy(theta: ThetaSequence, lam: float, T: float, dt: float,
                          rng: np.random.Generator, tail: str = 'truncate',
                          tail_sigma2: Optional[float] = None) -> LimitPath:
    if theta.cls != 'l3_not_l2':
        raise LabValidationError('thinned Levy paths need an l3-not-l2 theta sequence', context={'cls': theta.cls})
    times = _grid(T, dt)
    clocks = _clocks(theta, rng)
    th = theta.theta
    values = _jump_part(times, clocks, th) + (lam - float(np.sum(th ** 2)) / theta.mu) * times
    tail_values = None
    if tail == 'brownian':
        if tail_sigma2 is None or tail_sigma2 < 0:
            raise LabValidationError('brownian tail needs a non-negative tail variance rate',
                                     context={'tail_sigma2': tail_sigma2})
        steps = times.size - 1
        tail_values = np.concatenate([[0.0], np.cumsum(rng.standard_normal(steps) * np.sqrt(tail_sigma2 * dt))])
        values = values + tail_values
    elif tail != 'truncate':
        raise LabValidationError('unknown tail mode', context={'tail': tail})
    return LimitPath(times=times, values=values, dt=dt, clocks=clocks, tail_mode=tail,
                     tail_values=tail_values)


def simulate_isj(theta: ThetaSequence, lam: float, T: float, dt: float,
                 rng: np.random.Generator) -> LimitPath:
    """lam sum_i theta_i 1{xi_i <= t} - 2t with xi_i ~ Exp(theta_i / mu)."""
    if lam <= 0:
        raise LabValidationError('lambda must be positive', context={'lambda': lam})
    if theta.cls != 'l2_not_l1':
        raise LabValidationError('indicator paths need an l2-not-l1 theta sequence', context={'cls': theta.cls})
    times = _grid(T, dt)
    clocks = _clocks(theta, rng)
    values = lam * _jump_part(times, clocks, theta.theta) - 2.0 * times
    return LimitPath(times=times, values=values, dt=dt, clocks=clocks)


def thinned_levy_mean(theta: ThetaSequence, lam: float, t: float) -> float:
    th = theta.theta
    return float(np.sum(th * (1 - np.exp(-th * t / theta.mu))) - t * np.sum(th ** 2) / theta.mu + lam * t)


def isj_mean(theta: ThetaSequence, lam: float, t: float) -> float:
    th = theta.theta
    return float(lam * np.sum(th * (1 - np.exp(-th * t / theta.mu))) - 2.0 * t)


def reflect(path: LimitPath) -> LimitPath:
    """refl(S)(t) = S(t) - min_{u <= t} S(u)."""
    values = path.values - np.minimum.accumulate(path.values)
    return LimitPath(times=path.times, values=values, dt=path.dt, clocks=path.clocks,
                     tail_mode=path.tail_mode, tail_values=path.tail_values, reflected=True)


def _build(times: np.ndarray, refl: np.ndarray, bounds: List[tuple], dt: float) -> MarkedExcursions:
    last = times.size - 1
    idx = np.array(bounds, dtype=np.int64).reshape(-1, 2)
    csum = np.concatenate([[0.0], np.cumsum(refl)])
    areas = (csum[idx[:, 1]] - csum[idx[:, 0]]) * dt if idx.size else np.empty(0)
    complete = np.array([refl[r] == 0 or r < last for _, r in bounds], dtype=bool) if bounds else np.empty(0, bool)
    intervals = times[idx] if idx.size else np.empty((0, 2))
    lengths = intervals[:, 1] - intervals[:, 0] if idx.size else np.empty(0)
    return MarkedExcursions(intervals=intervals, lengths=lengths, areas=areas,
                            marks=np.empty(0, dtype=np.int64), complete=complete, index_bounds=idx)


def excursions(path: LimitPath) -> MarkedExcursions:
    """Maximal grid runs where the reflected path is positive.

    An excursion starts at the last zero before the run and ends at the first
    grid time where refl returns to 0; a run still open at T ends at T and is
    flagged incomplete.
    """
    refl = path.values if path.reflected else reflect(path).values
    positive = refl > 0
    edges = np.diff(positive.astype(np.int8))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) + 1
    if positive[-1]:
        ends = np.append(ends, refl.size - 1)
    bounds = list(zip(starts.tolist(), ends.tolist()))
    return _build(path.times, refl, bounds, path.dt)


def excursions_from_running_minimum(path: LimitPath) -> MarkedExcursions:
    """Same excursions, read off the zero set of S minus its running minimum."""
    raw = path.values
    running = np.minimum.accumulate(raw)
    gap = raw - running
    zeros = np.flatnonzero(gap <= 0)
    bounds = [(int(a), int(b)) for a, b in zip(zeros[:-1], zeros[1:]) if b - a > 1]
    open_run = zeros[-1] < raw.size - 1
    if open_run:
        bounds.append((int(zeros[-1]), raw.size - 1))
    return _build(path.times, gap, bounds, path.dt)


def mark_rate(regime: str, mu: Optional[float] = None, theta: Optional[ThetaSequence] = None) -> float:
    if regime == 'beta_over_mu':
        if mu is None or mu <= 0:
            raise LabValidationError('beta_over_mu marks need mu > 0', context={'mu': mu})
        return 1.0 / mu
    if regime == 'theta_ratio':
        if theta is None:
            raise LabValidationError('theta_ratio marks need a theta sequence')
        return float(np.sum(theta.theta ** 2) / theta.mu ** 2)
    if regime == 'unit':
        return 1.0
    raise LabValidationError('unknown mark regime', context={'regime': regime, 'known': list(MARK_REGIMES)})


def marks(path: LimitPath, regime: str, rng: np.random.Generator, mu: Optional[float] = None,
          theta: Optional[ThetaSequence] = None, rate: Optional[float] = None) -> MarkedExcursions:
    """Poisson(rate * refl(t) * dt) counts per grid step, totalled per excursion."""
    rate = mark_rate(regime, mu, theta) if rate is None else float(rate)
    if rate < 0:
        raise LabValidationError('mark rate must be non-negative', context={'rate': rate})
    refl = path if path.reflected else reflect(path)
    exc = excursions(refl)
    step_counts = rng.poisson(rate * refl.values[:-1] * path.dt) if rate > 0 else np.zeros(refl.values.size - 1, int)
    csum = np.concatenate([[0], np.cumsum(step_counts)])
    counts = (csum[exc.index_bounds[:, 1]] - csum[exc.index_bounds[:, 0]]) if len(exc) else np.empty(0, int)
    return MarkedExcursions(intervals=exc.intervals, lengths=exc.lengths, areas=exc.areas,
                            marks=counts.astype(np.int64), complete=exc.complete,
                            index_bounds=exc.index_bounds)


def order_excursions(exc: MarkedExcursions) -> MarkedExcursions:
    """Sort by length descending, ties by marks descending."""
    marks_ = exc.marks if exc.marks.size == exc.lengths.size else np.zeros(exc.lengths.size, np.int64)
    order = np.lexsort((-marks_, -exc.lengths))
    return MarkedExcursions(intervals=exc.intervals[order], lengths=exc.lengths[order],
                            areas=exc.areas[order], marks=marks_[order], complete=exc.complete[order],
                            ordered=True, index_bounds=exc.index_bounds[order])


def simulate_path(params: ExcursionLawParams, rng: np.random.Generator) -> LimitPath:
    if params.process == 'bm_parabolic':
        return simulate_bm_parabolic(params.mu, params.eta, params.lam, params.T, params.dt, rng)
    if params.theta is None:
        raise LabValidationError('jump processes need a theta sequence', context={'process': params.process})
    if params.process == 'thinned_levy':
        return simulate_thinned_levy(params.theta, params.lam, params.T, params.dt, rng,
                                     tail=params.tail, tail_sigma2=params.tail_sigma2)
    if params.process == 'isj':
        return simulate_isj(params.theta, params.lam, params.T, params.dt, rng)
    raise LabValidationError('unknown limit process', context={'process': params.process})


def _one_draw(params: ExcursionLawParams, rng: np.random.Generator, k: int) -> tuple:
    path = reflect(simulate_path(params, rng))
    if params.mark_regime:
        exc = marks(path, params.mark_regime, rng, mu=params.mu, theta=params.theta)
    else:
        exc = excursions(path)
    ordered = order_excursions(exc)
    longest_done = bool(ordered.complete[0]) if len(ordered) else True
    return ordered.as_uvector(k), longest_done


def excursion_law_sample(params: ExcursionLawParams, n_paths: int, rng: np.random.Generator,
                         k: int = 1, settings: Optional[dict] = None) -> ExcursionLaw:
    """i.i.d. draws of the top-k ordered (length, marks) excursion vector.

    A pilot batch checks that the longest excursion closes before T often
    enough; failure is logged as a T-too-small warning.
    """
    if n_paths < 1 or k < 1:
        raise LabValidationError('n_paths and k must be positive', context={'n_paths': n_paths, 'k': k})
    settings = settings or load_settings()
    pilot_paths = int(settings['excursion_pilot_paths'])
    quantile = float(settings['excursion_pilot_quantile'])
    streams = spawn(rng, pilot_paths + n_paths)
    pilot = [_one_draw(params, s, k)[1] for s in streams[:pilot_paths]]
    pilot_fraction = float(np.mean(pilot)) if pilot else 1.0
    pilot_ok = pilot_fraction >= quantile
    if not pilot_ok:
        logger.warning(f"T={params.T} looks too small: longest excursion closed in only "
                       f"{pilot_fraction:.0%} of {pilot_paths} pilot paths")
    draws, done = [], []
    for s in streams[pilot_paths:]:
        vec, closed = _one_draw(params, s, k)
        draws.append(vec)
        done.append(closed)
    return ExcursionLaw(draws=draws, complete_fraction=float(np.mean(done)), pilot_ok=pilot_ok)

