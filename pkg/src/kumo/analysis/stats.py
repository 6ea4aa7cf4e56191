"""Chi-square independence test and Cramer's V, from first principles.

The chi-square survival function is evaluated through the regularized
incomplete gamma function (series expansion below a+1, Lentz continued
fraction above), which converges far past the 1e-8 absolute accuracy the
p-values are specified to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from ..envmodel import SeedConfig
from ..errors import DegenerateMargins, DegenerateTable
from ..taskgen import TaskInstance
from .signature import structure_signature

_EPS = 1e-15
_MAX_ITER = 10_000


def _lower_gamma_series(a: float, x: float) -> float:
    # P(a, x) via the series sum_{n>=0} x^n / (a (a+1) ... (a+n)).
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_gamma_cf(a: float, x: float) -> float:
    # Q(a, x) via Lentz's modified continued fraction.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_lower_gamma(a: float, x: float) -> float:
    """P(a, x) = gamma(a, x) / Gamma(a) for a > 0, x >= 0."""
    if a <= 0:
        raise ValueError("shape parameter must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return min(1.0, _lower_gamma_series(a, x))
    return max(0.0, 1.0 - _upper_gamma_cf(a, x))


def chi_square_cdf(x: float, k: int) -> float:
    """F(x; k), the chi-square CDF with k degrees of freedom."""
    if k <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0:
        return 0.0
    return regularized_lower_gamma(k / 2.0, x / 2.0)


def chi_square_sf(x: float, k: int) -> float:
    """Upper tail 1 - F(x; k), evaluated without cancellation when possible."""
    if k <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0:
        return 1.0
    a = k / 2.0
    half = x / 2.0
    if half < a + 1.0:
        return max(0.0, 1.0 - _lower_gamma_series(a, half))
    return min(1.0, _upper_gamma_cf(a, half))


@dataclass(frozen=True)
class ContingencyTable:
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.counts or not self.counts[0]:
            raise DegenerateTable("table must have at least one row and column")
        width = len(self.counts[0])
        for row in self.counts:
            if len(row) != width:
                raise DegenerateTable("rows must have equal length")
            for cell in row:
                if cell < 0 or int(cell) != cell:
                    raise DegenerateTable("counts must be non-negative integers")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "ContingencyTable":
        return cls(tuple(tuple(int(c) for c in row) for row in rows))

    @property
    def r(self) -> int:
        return len(self.counts)

    @property
    def c(self) -> int:
        return len(self.counts[0])

    @property
    def n(self) -> int:
        return sum(sum(row) for row in self.counts)

    def row_sums(self) -> list[int]:
        return [sum(row) for row in self.counts]

    def col_sums(self) -> list[int]:
        return [sum(row[j] for row in self.counts) for j in range(self.c)]


def chi_square_independence(table: ContingencyTable) -> tuple[float, float]:
    """Pearson chi-square statistic and p-value for an r x c table.

    Expected counts are row*col/n; degrees of freedom (r-1)(c-1). No
    small-sample correction is applied.
    """
    if table.r < 2 or table.c < 2:
        raise DegenerateTable("independence test needs at least a 2x2 table")
    rows = table.row_sums()
    cols = table.col_sums()
    if any(s == 0 for s in rows) or any(s == 0 for s in cols):
        raise DegenerateMargins("every row and column sum must be positive")
    n = table.n
    x2 = 0.0
    for i in range(table.r):
        for j in range(table.c):
            expected = rows[i] * cols[j] / n
            diff = table.counts[i][j] - expected
            x2 += diff * diff / expected
    k = (table.r - 1) * (table.c - 1)
    return x2, chi_square_sf(x2, k)


def cramers_v(table: ContingencyTable) -> float:
    """Association strength in [0, 1] derived from the chi-square statistic."""
    if table.n <= 0:
        raise DegenerateTable("table has no observations")
    if min(table.r, table.c) < 2:
        raise DegenerateTable("Cramer's V needs at least two rows and columns")
    x2, _ = chi_square_independence(table)
    v = math.sqrt(x2 / (table.n * min(table.r - 1, table.c - 1)))
    return min(1.0, v)


def majority_correct(trials: Sequence[bool]) -> bool:
    """Strict majority vote; with five trials that is at least 3 of 5."""
    return 2 * sum(1 for t in trials if t) > len(trials)


def structure_performance_test(
    tasks: Sequence[TaskInstance],
    trials: Sequence[Sequence[bool]],
    configs: Mapping[str, SeedConfig] | Callable[[TaskInstance], SeedConfig],
) -> tuple[float, float, float]:
    """Association between task structure signatures and correctness.

    Each task's correctness is the majority vote over its trials; the
    signature x {correct, incorrect} contingency table is tested with the
    chi-square statistic and summarized by Cramer's V. When correctness is
    constant across all tasks there is no association to measure and
    (0.0, 1.0, 0.0) is returned.
    """
    if len(tasks) != len(trials):
        raise ValueError("one trial list per task required")
    if any(len(t) < 5 for t in trials):
        raise ValueError("at least 5 trials per task required")

    def cfg_for(task: TaskInstance) -> SeedConfig:
        if callable(configs):
            return configs(task)
        return configs[task.domain]

    buckets: dict[str, list[int]] = {}
    for task, outcome in zip(tasks, trials):
        sig = structure_signature(cfg_for(task), task)
        row = buckets.setdefault(sig, [0, 0])
        row[0 if majority_correct(outcome) else 1] += 1
    if len(buckets) < 2:
        raise DegenerateTable("need at least 2 distinct structure signatures")
    rows = [buckets[sig] for sig in sorted(buckets)]
    table = ContingencyTable.from_rows(rows)
    if any(s == 0 for s in table.col_sums()):
        return 0.0, 1.0, 0.0
    x2, p = chi_square_independence(table)
    return x2, p, cramers_v(table)
