"""Two-sample law comparators"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from critgraph.error_handling import LabValidationError

METHODS = ('ks', 'tv_binned', 'chi2')
MIN_SAMPLES = 100
TV_THRESHOLD = 0.02
MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class LawComparison:
    method: str
    statistic: float
    p_value: Optional[float]
    critical_value: float
    reject: bool
    level: float
    n_a: int
    n_b: int
    df: Optional[int] = None

    def as_dict(self) -> dict:
        return {
            'method': self.method,
            'statistic': self.statistic,
            'p_value': self.p_value,
            'critical_value': self.critical_value,
            'reject': self.reject,
            'level': self.level,
            'n_a': self.n_a,
            'n_b': self.n_b,
            'df': self.df,
        }


def _clean(samples: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(samples, dtype=float).reshape(-1)
    if arr.size < MIN_SAMPLES:
        raise LabValidationError(f'sample {name} needs at least {MIN_SAMPLES} draws', context={'size': int(arr.size)})
    if not np.all(np.isfinite(arr)):
        raise LabValidationError(f'sample {name} has non-finite values')
    return arr


def _is_discrete(a: np.ndarray, b: np.ndarray, max_levels: int = 200) -> bool:
    pooled = np.concatenate([a, b])
    return bool(np.all(pooled == np.round(pooled))) and np.unique(pooled).size <= max_levels


def _binned_counts(a: np.ndarray, b: np.ndarray, bins):
    """Counts of both samples on a shared support: distinct values if discrete, else common edges."""
    if _is_discrete(a, b):
        support = np.unique(np.concatenate([a, b]))
        return np.searchsorted(support, a), np.searchsorted(support, b), support.size
    edges = np.histogram_bin_edges(np.concatenate([a, b]), bins=bins)
    ca = np.clip(np.searchsorted(edges, a, side='right') - 1, 0, edges.size - 2)
    cb = np.clip(np.searchsorted(edges, b, side='right') - 1, 0, edges.size - 2)
    return ca, cb, edges.size - 1


def total_variation(a: Sequence[float], b: Sequence[float], bins='auto') -> float:
    """Binned total variation distance between two empirical laws."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ca, cb, k = _binned_counts(a, b, bins)
    pa = np.bincount(ca, minlength=k) / a.size
    pb = np.bincount(cb, minlength=k) / b.size
    return float(0.5 * np.abs(pa - pb).sum())


def _merge_sparse(table: np.ndarray) -> np.ndarray:
    """Pool adjacent columns until every expected count reaches MIN_EXPECTED."""
    columns = []
    current = np.zeros(2)
    row_share = table.sum(axis=1) / table.sum()
    for col in table.T:
        current = current + col
        if np.all(row_share * current.sum() >= MIN_EXPECTED):
            columns.append(current)
            current = np.zeros(2)
    if current.sum() > 0:
        if columns:
            columns[-1] = columns[-1] + current
        else:
            columns.append(current)
    return np.array(columns).T


def compare_laws(a: Sequence[float], b: Sequence[float], method: str = 'ks', level: float = 1e-3,
                 bins='auto', tv_threshold: float = TV_THRESHOLD) -> LawComparison:
    """Two-sample comparison at the given level.

    ks: Kolmogorov-Smirnov, critical value sqrt(-log(level/2)/2) * sqrt((n+m)/(n m)).
    tv_binned: binned total variation against the fixed threshold ``tv_threshold``.
    chi2: homogeneity test on a 2 x k table with sparse columns pooled;
    degrees of freedom k - 1 after pooling.
    """
    if method not in METHODS:
        raise LabValidationError('unknown comparison method', context={'method': method})
    if not 0 < level < 1:
        raise LabValidationError('level must lie in (0, 1)', context={'level': level})
    a = _clean(a, 'a')
    b = _clean(b, 'b')
    if np.unique(np.concatenate([a, b])).size < 2:
        raise LabValidationError('pooled sample is constant; nothing to compare')
    n, m = int(a.size), int(b.size)

    if method == 'ks':
        result = stats.ks_2samp(a, b)
        critical = math.sqrt(-math.log(level / 2.0) / 2.0) * math.sqrt((n + m) / (n * m))
        return LawComparison('ks', float(result.statistic), float(result.pvalue), critical,
                             bool(result.pvalue < level), level, n, m)

    if method == 'tv_binned':
        tv = total_variation(a, b, bins=bins)
        return LawComparison('tv_binned', tv, None, tv_threshold, tv > tv_threshold, level, n, m)

    ca, cb, k = _binned_counts(a, b, bins)
    table = _merge_sparse(np.vstack([np.bincount(ca, minlength=k), np.bincount(cb, minlength=k)]).astype(float))
    if table.shape[1] < 2:
        raise LabValidationError('fewer than two categories after pooling sparse bins')
    statistic, p_value, df, _ = stats.chi2_contingency(table, correction=False)
    critical = float(stats.chi2.ppf(1.0 - level, df))
    return LawComparison('chi2', float(statistic), float(p_value), critical, bool(p_value < level),
                         level, n, m, df=int(df))
