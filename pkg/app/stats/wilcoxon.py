# app/stats/wilcoxon.py
import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field
from scipy.stats import norm, rankdata

from app.core import config
from app.core.errors import InvalidArgument

EXACT_MAX_N = 25


class WilcoxonMode(str, Enum):
    EXACT = "exact"
    NORMAL_APPROXIMATION = "normal_approximation"


class WilcoxonResult(BaseModel):
    w_statistic: float  # W+, the rank sum of positive differences
    n_effective: int = Field(..., ge=0)
    p_value: float = Field(..., ge=0, le=1)
    mode: WilcoxonMode
    sided: str = "two_sided"


def _exact_cdf_tails(doubled_ranks: np.ndarray, doubled_w: int) -> tuple[float, float]:
    """P(W+ <= w) and P(W+ >= w) under random signs, by subset-sum counting"""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    reach = 0
    for r in doubled_ranks.tolist():
        counts[r:reach + r + 1] += counts[:reach + 1].copy()
        reach += r
    n_assignments = 2.0 ** doubled_ranks.size
    lower = counts[: doubled_w + 1].sum() / n_assignments
    upper = counts[doubled_w:].sum() / n_assignments
    return float(lower), float(upper)


def wilcoxon_signed_rank(x, y, sided: str = "two_sided") -> WilcoxonResult:
    """
    Paired Wilcoxon signed-rank test on d = x - y. Zero differences are
    dropped; tied |d| get average ranks. Exact enumeration up to 25
    non-zero pairs, normal approximation with tie and continuity
    correction beyond.
    """
    if sided != "two_sided":
        raise InvalidArgument("only the two-sided test is supported")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidArgument(f"paired series must have equal lengths, got {x.shape} and {y.shape}")
    if x.size == 0:
        raise InvalidArgument("paired series must not be empty")
    d = x - y
    d = d[d != 0]
    n = int(d.size)
    if n == 0:
        return WilcoxonResult(w_statistic=0.0, n_effective=0, p_value=1.0, mode=WilcoxonMode.EXACT)

    ranks = rankdata(np.abs(d))  # average ranks on ties
    w_plus = float(ranks[d > 0].sum())

    if n <= EXACT_MAX_N:
        # ties make ranks half-integral; doubling makes them integers
        doubled = np.rint(2 * ranks).astype(np.int64)
        lower, upper = _exact_cdf_tails(doubled, int(round(2 * w_plus)))
        mode = WilcoxonMode.EXACT
    else:
        mean = n * (n + 1) / 4.0
        _, tie_sizes = np.unique(np.abs(d), return_counts=True)
        variance = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_sizes ** 3 - tie_sizes) / 48.0
        sd = math.sqrt(variance)
        lower = float(norm.cdf((w_plus + 0.5 - mean) / sd))
        upper = float(norm.sf((w_plus - 0.5 - mean) / sd))
        mode = WilcoxonMode.NORMAL_APPROXIMATION

    p_value = min(1.0, 2.0 * min(lower, upper))
    return WilcoxonResult(w_statistic=w_plus, n_effective=n, p_value=p_value, mode=mode, sided=sided)


def significance_stars(p_value: float, alpha: float = config.SIGNIFICANCE_ALPHA) -> bool:
    """Starred iff p <= alpha"""
    if not 0 <= p_value <= 1:
        raise InvalidArgument(f"p-value must lie in [0, 1], got {p_value}")
    return p_value <= alpha
