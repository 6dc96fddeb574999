"""Question-conditioned importance map and the closed-form frame budget.

The map is the rank-1 outer product of row and column probe confidences.
Its distribution shape (|skewness| plus half the clipped excess kurtosis)
sizes the per-question budget: peaked or lopsided maps shrink it, near-
uniform maps fall back to the full pool.
"""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass

from gridscout import kernels

DEFAULT_GAMMA0 = 0.25
DEFAULT_VARIANCE_THRESHOLD = 1e-9


@dataclass(frozen=True)
class BudgetRule:
    gamma0: float = DEFAULT_GAMMA0
    variance_threshold: float = DEFAULT_VARIANCE_THRESHOLD

    def __post_init__(self):
        if self.gamma0 <= 0:
            raise ValueError(f"gamma0 must be > 0, got {self.gamma0}")
        if self.variance_threshold <= 0:
            raise ValueError(f"variance threshold must be > 0, got {self.variance_threshold}")


@dataclass(frozen=True)
class ShapeStats:
    skew: float
    kurt_ex: float
    sigma: float
    degenerate: bool


@dataclass(frozen=True)
class ImportanceMap:
    k: int
    row_conf: tuple[float, ...]
    col_conf: tuple[float, ...]
    values: array  # flat row-major, values[r*k + c] = row_conf[r] * col_conf[c]

    def value(self, r: int, c: int) -> float:
        return self.values[r * self.k + c]

    def matrix(self) -> list[list[float]]:
        return [list(self.values[r * self.k : (r + 1) * self.k]) for r in range(self.k)]


def build_map(row_conf, col_conf) -> ImportanceMap:
    """Outer product of the two confidence marginals."""
    if len(row_conf) != len(col_conf):
        raise ValueError(f"marginal length mismatch: {len(row_conf)} rows vs {len(col_conf)} columns")
    for v in list(row_conf) + list(col_conf):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"confidence {v} outside [0, 1]")
    rows = array("d", row_conf)
    cols = array("d", col_conf)
    values = kernels.outer_product(rows, cols)
    return ImportanceMap(k=len(rows), row_conf=tuple(rows), col_conf=tuple(cols), values=values)


def moments(values, variance_threshold: float = DEFAULT_VARIANCE_THRESHOLD) -> ShapeStats:
    """Population skewness and excess kurtosis of a value multiset.

    Population (n-denominator) moments, no sample-bias correction; a
    population variance below the threshold marks the distribution
    degenerate and reports both moments as 0.  sigma is left at 0 here and
    composed by shape_statistic.
    """
    if len(values) < 2:
        raise ValueError(f"moments need at least 2 values, got {len(values)}")
    buf = values if isinstance(values, array) else array("d", values)
    skew, kurt_ex, degenerate = kernels.shape_moments(buf, variance_threshold)
    return ShapeStats(skew=skew, kurt_ex=kurt_ex, sigma=0.0, degenerate=bool(degenerate))


def compose_sigma(skew: float, kurt_ex: float) -> float:
    return abs(skew) + 0.5 * max(0.0, kurt_ex)


def shape_statistic(imap: ImportanceMap, rule: BudgetRule = BudgetRule()) -> ShapeStats:
    """Shape statistic of the flattened map; degenerate maps give sigma 0.

    |skew| collapses the two few-frames-needed regimes: sparse peaks
    (positive skew) and redundant high-importance mass (negative skew).
    """
    stats = moments(imap.values, rule.variance_threshold)
    if stats.degenerate:
        return stats
    return ShapeStats(
        skew=stats.skew,
        kurt_ex=stats.kurt_ex,
        sigma=compose_sigma(stats.skew, stats.kurt_ex),
        degenerate=False,
    )


def effective_budget(stats: ShapeStats, k: int, rule: BudgetRule = BudgetRule()) -> int:
    """ceil(K^2 / (1 + gamma0 * K * sigma)), always in [1, K^2].

    The extra factor of K keeps the budget growing linearly (not
    quadratically) in K on peaked maps.
    """
    if k < 2:
        raise ValueError(f"grid size K must be >= 2, got {k}")
    n = k * k
    m = math.ceil(n / (1.0 + rule.gamma0 * k * stats.sigma))
    return min(n, max(1, m))
