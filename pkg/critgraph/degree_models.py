"""Degree and weight sequences, scaling constants and criticality diagnostics.

Degree sequences are immutable ``numpy`` arrays wrapped in a frozen dataclass.
Every constructor in this module returns a sequence with an even number of
half-edges: when rounding leaves the total odd, one dummy half-edge is attached
to vertex 1 (index 0).
"""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .error_handling import LabValidationError, RegimeError

logger = logging.getLogger(__name__)

INT64_SAFE = 2 ** 62


def _constant_one(x: float) -> float:
    return 1.0


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class DegreeSequence:
    """Per-vertex degrees d_1..d_n; ``total`` is ℓ_n."""

    degrees: np.ndarray

    def __post_init__(self):
        arr = np.array(self.degrees, dtype=np.int64, copy=True).reshape(-1)
        if arr.size and arr.min() < 0:
            raise LabValidationError('degrees must be non-negative',
                                     context={'min_degree': int(arr.min())})
        object.__setattr__(self, 'degrees', _frozen(arr))

    @classmethod
    def from_iterable(cls, values: Sequence[int], fix_parity: bool = True) -> 'DegreeSequence':
        arr = np.array(list(values), dtype=np.int64)
        if fix_parity:
            arr = _fix_parity(arr)
        return cls(arr)

    @property
    def n(self) -> int:
        return int(self.degrees.size)

    @property
    def total(self) -> int:
        return int(self.degrees.sum())

    @property
    def is_sorted(self) -> bool:
        return bool(np.all(self.degrees[:-1] >= self.degrees[1:])) if self.n > 1 else True

    @property
    def has_even_total(self) -> bool:
        return self.total % 2 == 0

    def half_edge_owner(self) -> np.ndarray:
        """Owner vertex of each half-edge; ids are contiguous and grouped by vertex."""
        return np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)

    def sorted_desc(self) -> 'DegreeSequence':
        return DegreeSequence(np.sort(self.degrees)[::-1])

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class WeightSequence:
    """Per-vertex non-negative weights w_1..w_n; ``total`` is ℓ_n^w."""

    weights: np.ndarray

    def __post_init__(self):
        arr = np.array(self.weights, dtype=float, copy=True).reshape(-1)
        if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0):
            raise LabValidationError('weights must be finite and non-negative')
        object.__setattr__(self, 'weights', _frozen(arr))

    @property
    def n(self) -> int:
        return int(self.weights.size)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class ScalingConstants:
    """Regime exponents and the n-dependent scales a_n, b_n, c_n."""

    tau: float
    n: int
    alpha: float
    rho: float
    eta: float
    a_n: float
    b_n: float
    c_n: float
    regime: str
    slowly_varying: Callable[[float], float] = field(default=_constant_one, repr=False, compare=False)


@dataclass(frozen=True)
class CriticalityReport:
    nu_n: float
    nu_n_exact: Fraction
    mu_hat: float
    sigma2_hat: float
    sigma3_hat: float
    eta_hat: float
    beta_hat: float
    lambda_hat: float
    theta_hat: List[float]
    third_moment_tail: List[float]


@dataclass(frozen=True)
class MomentDiagnostics:
    first_moment: float
    second_moment: float
    tail_kind: str
    k_grid: List[int]
    tail_sums: List[float]
    monotone_decay: bool

    def as_dict(self) -> Dict:
        return {
            'first_moment': self.first_moment,
            'second_moment': self.second_moment,
            'tail_kind': self.tail_kind,
            'k_grid': list(self.k_grid),
            'tail_sums': list(self.tail_sums),
            'monotone_decay': self.monotone_decay,
        }


def _fix_parity(arr: np.ndarray) -> np.ndarray:
    if arr.size and int(arr.sum()) % 2 == 1:
        arr = arr.copy()
        arr[0] += 1
    return arr


def _check_tau(tau: float) -> None:
    if not (2.0 < tau < 4.0) or tau == 3.0:
        raise RegimeError('tau must lie in (2, 3) or (3, 4)', tau=tau)


def _check_n(n: int) -> None:
    if int(n) != n or n < 1:
        raise LabValidationError('n must be a positive integer', context={'n': n})


def scaling_constants(tau: float, n: int, L: Optional[Callable[[float], float]] = None) -> ScalingConstants:
    """Exponents (alpha, rho, eta) and scales for the regime containing tau.

    tau > 4 returns the finite-third-moment triple alpha = eta = 1/3, rho = 2/3
    with L identically 1.
    """
    _check_n(n)
    if tau > 4.0:
        return ScalingConstants(tau=tau, n=n, alpha=1 / 3, rho=2 / 3, eta=1 / 3,
                                a_n=n ** (1 / 3), b_n=n ** (2 / 3), c_n=n ** (1 / 3),
                                regime='tau_gt4')
    _check_tau(tau)
    slowly = L or _constant_one
    alpha = 1.0 / (tau - 1.0)
    rho = (tau - 2.0) / (tau - 1.0)
    if tau > 3.0:
        eta, regime = (tau - 3.0) / (tau - 1.0), 'tau_34'
    else:
        eta, regime = (3.0 - tau) / (tau - 1.0), 'tau_23'
    ell = slowly(n)
    return ScalingConstants(tau=tau, n=n, alpha=alpha, rho=rho, eta=eta,
                            a_n=n ** alpha * ell, b_n=n ** rho / ell, c_n=n ** eta / ell ** 2,
                            regime=regime, slowly_varying=slowly)


def build_power_law_degrees(tau: float, n: int, cF: float = 1.0, lam: float = 0.0,
                            L: Optional[Callable[[float], float]] = None) -> DegreeSequence:
    """d_i = floor((cF n / i)^{1/(tau-1)} (1 + lam / c_n)), at least 1, parity fixed."""
    _check_n(n)
    _check_tau(tau)
    if cF <= 0:
        raise LabValidationError('cF must be positive', context={'cF': cF})
    scal = scaling_constants(tau, n, L)
    i = np.arange(1, n + 1, dtype=float)
    raw = (cF * n / i) ** (1.0 / (tau - 1.0)) * (1.0 + lam / scal.c_n)
    # exact powers such as 8^(2/3) evaluate just below the integer
    degrees = np.maximum(np.floor(raw + 1e-9), 1).astype(np.int64)
    return DegreeSequence(_fix_parity(degrees))


def build_power_law_weights(tau: float, n: int, cF: float = 1.0) -> WeightSequence:
    """w_i = (cF n / i)^{1/(tau-1)}, the rank-one weights of the single-edge models."""
    _check_n(n)
    _check_tau(tau)
    if cF <= 0:
        raise LabValidationError('cF must be positive', context={'cF': cF})
    i = np.arange(1, n + 1, dtype=float)
    return WeightSequence((cF * n / i) ** (1.0 / (tau - 1.0)))


def theta_estimates(tau: float, cF: float, K: int) -> np.ndarray:
    """theta_i = (cF / i)^alpha for i <= K."""
    _check_tau(tau)
    alpha = 1.0 / (tau - 1.0)
    return (cF / np.arange(1, K + 1, dtype=float)) ** alpha


def sample_iid_degrees(tau: float, cF: float, n: int, rng: np.random.Generator) -> DegreeSequence:
    """Order statistics of n i.i.d. draws with P(D >= k) = min(1, cF k^{-(tau-1)}).

    Uses the Gamma coupling U_(i) = Gamma_i / Gamma_{n+1} with unit exponential
    spacings, so d_(i) = floor((cF / U_(i))^{1/(tau-1)}) is already non-increasing.
    """
    _check_n(n)
    _check_tau(tau)
    if cF <= 0:
        raise LabValidationError('cF must be positive', context={'cF': cF})
    gammas = np.cumsum(rng.exponential(1.0, size=n + 1))
    uniforms = gammas[:n] / gammas[n]
    degrees = np.maximum(np.floor((cF / uniforms) ** (1.0 / (tau - 1.0))), 1).astype(np.int64)
    return DegreeSequence(_fix_parity(degrees))


def iid_degree_mean(tau: float, cF: float, terms: int = 2_000_000) -> float:
    """E[D] = sum_k P(D >= k) for the i.i.d. law above (direct summation plus tail integral)."""
    k = np.arange(1, terms + 1, dtype=float)
    tail = np.minimum(1.0, cF * k ** (1.0 - tau))
    remainder = cF * terms ** (2.0 - tau) / (tau - 2.0)
    return float(tail.sum() + remainder)


def _exact_sums(d: np.ndarray) -> tuple[int, int]:
    total = int(d.sum())
    if d.size and int(d.max()) * max(total, 1) < INT64_SAFE:
        return total, int(np.dot(d, d - 1))
    as_int = [int(x) for x in d]
    return total, sum(x * (x - 1) for x in as_int)


def criticality(d: DegreeSequence, scal: ScalingConstants, K: int = 10) -> CriticalityReport:
    """nu_n = sum d_i(d_i - 1) / sum d_i in exact integer arithmetic, plus moment estimates."""
    if d.n == 0:
        raise LabValidationError('degree sequence is empty')
    total, second_factorial = _exact_sums(d.degrees)
    if total <= 0:
        raise LabValidationError('degree sequence has no half-edges', context={'n': d.n})
    nu_exact = Fraction(second_factorial, total)
    nu = float(nu_exact)
    deg = d.degrees.astype(float)
    mu = total / d.n
    sigma2 = float(np.mean(deg ** 2))
    sigma3 = float(np.mean(deg ** 3))
    ordered = np.sort(deg)[::-1]
    k = min(K, d.n)
    cubes = ordered ** 3
    tails = [float(cubes[j:].sum() / scal.a_n ** 3) for j in range(k + 1)]
    return CriticalityReport(
        nu_n=nu,
        nu_n_exact=nu_exact,
        mu_hat=mu,
        sigma2_hat=sigma2,
        sigma3_hat=sigma3,
        eta_hat=sigma3 * mu - sigma2 ** 2,
        beta_hat=1.0 / mu,
        lambda_hat=scal.c_n * (nu - 1.0),
        theta_hat=[float(x) for x in ordered[:k] / scal.a_n],
        third_moment_tail=tails,
    )


def moment_diagnostics(d: DegreeSequence, scal: ScalingConstants,
                       K: Sequence[int] | int = (0, 1, 10, 100, 1000)) -> MomentDiagnostics:
    """Moment checks of the regime's assumptions on a grid of truncation levels K.

    tau in (3, 4) (and tau > 4) reports a_n^{-3} sum_{i>K} d_i^3;
    tau in (2, 3) reports n^{-2 alpha} sum_{i>K} d_i^2.
    """
    if not d.is_sorted:
        raise LabValidationError('moment diagnostics need a non-increasing sequence')
    grid = [K] if isinstance(K, int) else list(K)
    grid = sorted({min(max(int(k), 0), d.n) for k in grid})
    deg = d.degrees.astype(float)
    if scal.regime == 'tau_23':
        kind = 'second_moment_tail'
        terms = deg ** 2 / d.n ** (2 * scal.alpha)
    else:
        kind = 'third_moment_tail'
        terms = deg ** 3 / scal.a_n ** 3
    suffix = np.concatenate([np.cumsum(terms[::-1])[::-1], [0.0]])
    tails = [float(suffix[k]) for k in grid]
    monotone = all(a >= b for a, b in zip(tails, tails[1:]))
    return MomentDiagnostics(
        first_moment=float(deg.mean()) if d.n else 0.0,
        second_moment=float(np.mean(deg ** 2)) if d.n else 0.0,
        tail_kind=kind,
        k_grid=grid,
        tail_sums=tails,
        monotone_decay=monotone,
    )


def size_biased_laplace(d: DegreeSequence, p: float, t: float, tau: float) -> float:
    """1 - E[exp(-t p^{1/(3-tau)} D*)] with D* the size-biased degree."""
    if not 2.0 < tau < 3.0:
        raise RegimeError('size-biased Laplace asymptotics need tau in (2, 3)', tau=tau)
    deg = d.degrees.astype(float)
    weights = deg / deg.sum()
    scale = t * p ** (1.0 / (3.0 - tau))
    return float(1.0 - np.dot(weights, np.exp(-scale * deg)))


def is_regime_consistent(scal: ScalingConstants) -> bool:
    """alpha = 1/(tau-1), rho = alpha (tau-2), eta = alpha |tau-3| pointwise."""
    if scal.regime == 'tau_gt4':
        return math.isclose(scal.alpha, 1 / 3) and math.isclose(scal.rho, 2 / 3)
    alpha = 1.0 / (scal.tau - 1.0)
    return (math.isclose(scal.alpha, alpha)
            and math.isclose(scal.rho, alpha * (scal.tau - 2.0))
            and math.isclose(scal.eta, alpha * abs(scal.tau - 3.0)))


def to_lines(d: DegreeSequence) -> str:
    """One degree per line."""
    return ''.join(f'{int(k)}\n' for k in d.degrees)


def to_json(d: DegreeSequence) -> str:
    return json.dumps({'n': d.n, 'total': d.total, 'degrees': [int(k) for k in d.degrees]})


def degree_sequence_from_file(path: str | os.PathLike) -> DegreeSequence:
    """Read a degree sequence written by ``to_lines`` or ``to_json`` (by suffix)."""
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise LabValidationError(f'cannot read degree file {path}', original_exception=e)
    try:
        if path.suffix == '.json':
            values = json.loads(text)['degrees']
        else:
            values = [int(tok) for tok in text.split()]
    except (ValueError, KeyError, TypeError) as e:
        raise LabValidationError(f'malformed degree file {path}', original_exception=e)
    d = DegreeSequence(np.array(values, dtype=np.int64))
    if not d.has_even_total:
        raise LabValidationError('degree file has an odd total', context={'path': str(path), 'total': d.total})
    return d
