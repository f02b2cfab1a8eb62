"""Single-edge limit object for tau in (2, 3): hubs joined by Poisson many edges.

Both kernels depend on (i, x) only through i * x, so
lambda_ij(1) = lambda_{i'j'}(1) / g with g = gcd(i, j), i' = i / g and j' = j / g.
Quadrature results are cached on coprime index pairs.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import integrate

from .config_loader import load_settings
from .error_handling import LabValidationError, QuadratureError
from .unionfind import UnionFind

logger = logging.getLogger(__name__)

KERNEL_KINDS = ('grg', 'ecm')
STABILITY_TOLERANCE = 0.02


@dataclass(frozen=True)
class HubKernel:
    kind: str
    alpha: float
    mu: float = 1.0
    cF: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise LabValidationError('unknown hub kernel', context={'kind': self.kind})
        if not 0.5 < self.alpha < 1.0:
            raise LabValidationError('alpha must lie in (1/2, 1)', context={'alpha': self.alpha})
        if self.mu <= 0 or self.cF <= 0:
            raise LabValidationError('mu and cF must be positive', context={'mu': self.mu, 'cF': self.cF})

    @classmethod
    def from_tau(cls, kind: str, tau: float, mu: float = 1.0, cF: float = 1.0) -> 'HubKernel':
        return cls(kind=kind, alpha=1.0 / (tau - 1.0), mu=mu, cF=cF)

    def theta(self, i: int, x):
        """theta_i(x), vectorized in x."""
        load = self.cF ** 2 * (i * np.asarray(x, dtype=float)) ** (-self.alpha)
        if self.kind == 'grg':
            return load / (self.mu + load)
        return -np.expm1(-load / self.mu)

    def tail_coefficient(self, i: int, j: int) -> float:
        """theta_i(x) theta_j(x) ~ coefficient * x^{-2 alpha} as x grows."""
        return self.cF ** 4 * float(i * j) ** (-self.alpha) / self.mu ** 2

    def cutoff_point(self, i: int, cutoff: float) -> float:
        """x beyond which theta_i(x) < cutoff, from the leading asymptotics."""
        return max(1.0, (self.cF ** 2 / (self.mu * cutoff)) ** (1.0 / self.alpha) / i)

    def hub_weight(self, i: int) -> float:
        return self.cF * i ** (-self.alpha)


@dataclass(frozen=True)
class TruncatedLimitGraph:
    K: int
    multiplicities: np.ndarray
    lambdas: np.ndarray
    lam: float
    kernel: HubKernel

    def edges(self) -> np.ndarray:
        """(i, j, count) rows for i < j with count > 0; hub indices start at 1."""
        rows, cols = np.nonzero(np.triu(self.multiplicities, k=1))
        return np.column_stack([rows + 1, cols + 1, self.multiplicities[rows, cols]])

    @property
    def edge_count(self) -> int:
        return int(np.triu(self.multiplicities, k=1).sum())


@dataclass(frozen=True)
class KStabilityReport:
    K: int
    top_K: Tuple[float, ...]
    top_2K: Tuple[float, ...]
    relative_change: float
    stable: bool

    def as_dict(self) -> dict:
        return {
            'K': self.K,
            'top_K': list(self.top_K),
            'top_2K': list(self.top_2K),
            'relative_change': self.relative_change,
            'stable': self.stable,
        }


@lru_cache(maxsize=None)
def _coprime_integral(kernel: HubKernel, i: int, j: int, rel_tol: float, cutoff: float) -> float:
    """Integral of theta_i theta_j over (0, inf) for coprime i <= j."""
    def near(x):
        return float(kernel.theta(i, x) * kernel.theta(j, x))

    def far(u):
        x = math.exp(u)
        return float(kernel.theta(i, x) * kernel.theta(j, x)) * x

    X = kernel.cutoff_point(i, cutoff)
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', integrate.IntegrationWarning)
        head, head_err = integrate.quad(near, 0.0, 1.0, epsabs=0.0, epsrel=rel_tol, limit=200)
        body, body_err = integrate.quad(far, 0.0, math.log(X), epsabs=0.0, epsrel=rel_tol, limit=200)
    tail = kernel.tail_coefficient(i, j) * X ** (1.0 - 2.0 * kernel.alpha) / (2.0 * kernel.alpha - 1.0)
    value = head + body + tail
    achieved = (head_err + body_err) / value if value > 0 else math.inf
    if not math.isfinite(value) or achieved > rel_tol:
        raise QuadratureError('quadrature tolerance not reached', achieved_error=achieved,
                              context={'i': i, 'j': j, 'kind': kernel.kind, 'rel_tol': rel_tol})
    return value


def _tolerances(settings: Optional[dict], rel_tol: Optional[float]) -> Tuple[float, float]:
    settings = settings or load_settings()
    tol = float(settings['quad_rel_tol']) if rel_tol is None else float(rel_tol)
    return tol, float(settings['theta_cutoff'])


def lambda_ij(i: int, j: int, lam: float, kernel: HubKernel, rel_tol: Optional[float] = None,
              settings: Optional[dict] = None) -> float:
    """lambda^2 times the integral of theta_i(x) theta_j(x) over (0, inf)."""
    if i < 1 or j < 1:
        raise LabValidationError('hub indices start at 1', context={'i': i, 'j': j})
    if lam <= 0:
        raise LabValidationError('lambda must be positive', context={'lambda': lam})
    tol, cutoff = _tolerances(settings, rel_tol)
    i, j = (int(i), int(j)) if i <= j else (int(j), int(i))
    g = math.gcd(i, j)
    return lam ** 2 * _coprime_integral(kernel, i // g, j // g, tol, cutoff) / g


def lambda_matrix(K: int, lam: float, kernel: HubKernel, rel_tol: Optional[float] = None,
                  settings: Optional[dict] = None, workers: int = 1) -> np.ndarray:
    """Symmetric K x K matrix of lambda_ij; the diagonal is filled but never sampled."""
    if K < 1:
        raise LabValidationError('K must be at least 1', context={'K': K})
    tol, cutoff = _tolerances(settings, rel_tol)
    settings = {'quad_rel_tol': tol, 'theta_cutoff': cutoff}

    def row(i: int) -> np.ndarray:
        return np.array([lambda_ij(i, j, lam, kernel, settings=settings) for j in range(i, K + 1)])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(1, K + 1)))
    else:
        rows = [row(i) for i in range(1, K + 1)]
    out = np.zeros((K, K))
    for i, values in enumerate(rows):
        out[i, i:] = values
        out[i:, i] = values
    return out


def sample_g_infty(K: int, lam: float, kernel: HubKernel, rng: np.random.Generator,
                   lambdas: Optional[np.ndarray] = None, settings: Optional[dict] = None) -> TruncatedLimitGraph:
    """Independent Poisson(lambda_ij) multiplicities for 1 <= i < j <= K."""
    if lambdas is None:
        lambdas = lambda_matrix(K, lam, kernel, settings=settings)
    elif lambdas.shape != (K, K):
        raise LabValidationError('lambda matrix shape does not match K', context={'K': K, 'shape': lambdas.shape})
    upper = np.triu(rng.poisson(np.triu(lambdas, k=1)), k=1)
    counts = upper + upper.T
    counts.setflags(write=False)
    return TruncatedLimitGraph(K=K, multiplicities=counts, lambdas=lambdas, lam=lam, kernel=kernel)


def _hub_components(G: TruncatedLimitGraph) -> UnionFind:
    uf = UnionFind(G.K)
    for i, j, _ in G.edges():
        uf.union(int(i) - 1, int(j) - 1)
    return uf


def limit_weights(G: TruncatedLimitGraph, theta: Optional[np.ndarray] = None) -> np.ndarray:
    """Per-component sums of theta_i = cF i^{-alpha}, in decreasing order."""
    if theta is None:
        theta = np.array([G.kernel.hub_weight(i) for i in range(1, G.K + 1)])
    elif len(theta) != G.K:
        raise LabValidationError('theta must have one entry per hub', context={'K': G.K, 'len': len(theta)})
    labels = _hub_components(G).labels()
    sums = np.bincount(labels, weights=theta, minlength=G.K)
    return np.sort(sums[np.unique(labels)])[::-1]


def tail_contribution(G: TruncatedLimitGraph, theta: Optional[np.ndarray] = None) -> float:
    """Share of sum(W^2) carried by components whose smallest hub index exceeds K/2."""
    if theta is None:
        theta = np.array([G.kernel.hub_weight(i) for i in range(1, G.K + 1)])
    total, tail = 0.0, 0.0
    for members in _hub_components(G).components():
        square = float(np.sum(theta[members])) ** 2
        total += square
        if members[0] + 1 > G.K / 2:
            tail += square
    return tail / total


def k_stability(K: int, lam: float, kernel: HubKernel, rng: np.random.Generator, samples: int = 200,
                top: int = 3, settings: Optional[dict] = None) -> KStabilityReport:
    """Median of the top entries of W at K against 2K; flags changes above 2%."""
    if samples < 1:
        raise LabValidationError('samples must be positive', context={'samples': samples})
    lambdas_2K = lambda_matrix(2 * K, lam, kernel, settings=settings)
    lambdas_K = lambdas_2K[:K, :K]
    medians = []
    for size, lambdas in ((K, lambdas_K), (2 * K, lambdas_2K)):
        tops = np.zeros((samples, top))
        for s in range(samples):
            weights = limit_weights(sample_g_infty(size, lam, kernel, rng, lambdas=lambdas))
            head = weights[:top]
            tops[s, :head.size] = head
        medians.append(np.median(tops, axis=0))
    change = float(np.max(np.abs(medians[1] - medians[0]) / medians[1]))
    stable = change < STABILITY_TOLERANCE
    if not stable:
        logger.warning('limit weights not stable in K: K=%d change=%.4f', K, change)
    return KStabilityReport(K=K, top_K=tuple(float(v) for v in medians[0]),
                            top_2K=tuple(float(v) for v in medians[1]),
                            relative_change=change, stable=stable)
