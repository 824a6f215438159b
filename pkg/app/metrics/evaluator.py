# app/metrics/evaluator.py
import math
from typing import List, Tuple

import numpy as np

from app.core import config
from app.core.errors import InvalidArgument, SingleClassError
from app.models.metrics import ConfusionCounts, MetricsReport, ReliabilityBin
from app.models.score_data import ScoreSet, ScoreSpace

UNDEFINED = float("nan")
NLL_EPS = 1e-12


def confusion_at(scores: ScoreSet, threshold: float) -> ConfusionCounts:
    """Counts under the rule: predict positive iff score >= threshold"""
    predicted = scores.scores >= threshold
    actual = scores.labels == 1
    return ConfusionCounts(
        tp=int(np.count_nonzero(predicted & actual)),
        fp=int(np.count_nonzero(predicted & ~actual)),
        tn=int(np.count_nonzero(~predicted & ~actual)),
        fn=int(np.count_nonzero(~predicted & actual)),
    )


def _ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else UNDEFINED


def precision(counts: ConfusionCounts) -> float:
    return _ratio(counts.tp, counts.tp + counts.fp)


def recall(counts: ConfusionCounts) -> float:
    return _ratio(counts.tp, counts.tp + counts.fn)


def fpr(counts: ConfusionCounts) -> float:
    return _ratio(counts.fp, counts.fp + counts.tn)


def is_undefined(value: float) -> bool:
    return isinstance(value, float) and math.isnan(value)


def tpr_at_fpr(scores: ScoreSet, target_fpr: float) -> Tuple[float, float]:
    """
    TPR at the most permissive observed-score threshold whose FPR stays at
    or below target_fpr. Returns (tpr, threshold). When even the highest
    score exceeds the FPR budget the threshold sits just above it and the
    TPR is 0.
    """
    if not 0 < target_fpr < 1:
        raise InvalidArgument(f"target FPR must lie in (0, 1), got {target_fpr}")
    if not scores.has_both_classes():
        raise SingleClassError("TPR at fixed FPR needs both classes")
    order = np.argsort(-scores.scores, kind="stable")
    s = scores.scores[order]
    positive = scores.labels[order] == 1
    # counts of rows with score >= s[i], evaluated at the last row of each tie group
    tp = np.cumsum(positive)
    fp = np.cumsum(~positive)
    last_of_group = np.r_[s[1:] != s[:-1], True]
    tp, fp, thresholds = tp[last_of_group], fp[last_of_group], s[last_of_group]
    n_pos, n_neg = scores.n_positive, scores.n_negative
    feasible = np.flatnonzero(fp / n_neg <= target_fpr)
    if feasible.size == 0:
        return 0.0, float(np.nextafter(s[0], np.inf))
    best = feasible[-1]  # thresholds descend, so the last feasible one is the smallest
    return float(tp[best] / n_pos), float(thresholds[best])


def _require_probabilities(scores: ScoreSet, metric: str) -> None:
    if scores.score_space != ScoreSpace.PROBABILITY:
        raise InvalidArgument(f"{metric} needs probability-space scores")


def _bin_index(p: np.ndarray, bins: int) -> np.ndarray:
    # right-closed bins ((k-1)/B, k/B]; 0 falls into the first bin and 1 into the last
    return np.clip(np.ceil(p * bins).astype(np.int64) - 1, 0, bins - 1)


def reliability_bins(scores: ScoreSet, bins: int = config.ECE_BINS) -> List[ReliabilityBin]:
    _require_probabilities(scores, "reliability binning")
    if bins < 1:
        raise InvalidArgument("bins must be >= 1")
    index = _bin_index(scores.scores, bins)
    counts = np.bincount(index, minlength=bins)
    sum_p = np.bincount(index, weights=scores.scores, minlength=bins)
    sum_y = np.bincount(index, weights=scores.labels, minlength=bins)
    result = []
    for k in range(bins):
        n = int(counts[k])
        result.append(ReliabilityBin(
            lower=k / bins,
            upper=(k + 1) / bins,
            mean_predicted=float(sum_p[k] / n) if n else UNDEFINED,
            empirical_rate=float(sum_y[k] / n) if n else UNDEFINED,
            count=n,
        ))
    return result


def ece(scores: ScoreSet, bins: int = config.ECE_BINS) -> float:
    """Expected calibration error over equal-width bins on [0, 1]"""
    n = len(scores)
    if n == 0:
        return UNDEFINED
    total = 0.0
    for b in reliability_bins(scores, bins):
        if b.count:
            total += (b.count / n) * abs(b.mean_predicted - b.empirical_rate)
    return float(total)


def brier(scores: ScoreSet) -> float:
    _require_probabilities(scores, "brier score")
    if len(scores) == 0:
        return UNDEFINED
    return float(np.mean((scores.labels - scores.scores) ** 2))


def nll(scores: ScoreSet) -> float:
    _require_probabilities(scores, "log loss")
    if len(scores) == 0:
        return UNDEFINED
    p = np.clip(scores.scores, NLL_EPS, 1.0 - NLL_EPS)
    y = scores.labels
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def evaluate(
    scores: ScoreSet,
    threshold: float,
    ece_bins: int = config.ECE_BINS,
    target_fpr: float = config.TARGET_FPR,
) -> MetricsReport:
    """All metrics at one operating point"""
    counts = confusion_at(scores, threshold)
    operating_tpr = tpr_at_fpr(scores, target_fpr)[0] if scores.has_both_classes() else UNDEFINED
    return MetricsReport(
        threshold=threshold,
        confusion=counts,
        precision=precision(counts),
        recall=recall(counts),
        fpr=fpr(counts),
        tpr_at_fpr=operating_tpr,
        target_fpr=target_fpr,
        ece=ece(scores, ece_bins),
        brier=brier(scores),
        nll=nll(scores),
        reliability_bins=reliability_bins(scores, ece_bins),
    )
