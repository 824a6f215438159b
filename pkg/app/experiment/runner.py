# app/experiment/runner.py
"""
Bootstrap protocol for threshold decoupling.

Per variant: generate the data once, split it by month, hold a fixed random
validation fraction out of the training months, then for every bootstrap
index b resample the remaining training rows with replacement, train the
baseline classifier, fit every calibration method on the validation rows
and evaluate on the test months. Thresholds are selected per method on the
first usable bootstrap and frozen for all later ones.
"""
import logging
import math
from collections import defaultdict
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from app.core import config
from app.core.errors import InvalidArgument, SingleClassError
from app.decision_engine.engine import select_threshold
from app.metrics import evaluator
from app.models.calibration import METHOD_ORDER, CalibrationMethod
from app.models.experiment import (
    HIGHER_IS_BETTER, RECORD_METRICS,
    Aggregate, ExperimentConfig, ExperimentRecord, ExperimentResult, Significance, SkippedBootstrap,
)
from app.models.policy import PolicySource, ThresholdPolicy
from app.models.score_data import FeatureDataset
from app.models.synthetic import Variant
from app.risk_engine.calibrators import calibrate_scores, fit_calibrator
from app.stats.wilcoxon import wilcoxon_signed_rank
from app.synthetic.baseline import score, train_baseline
from app.synthetic.generator import generate, variant_spec

logger = logging.getLogger(__name__)

# Independent random streams per variant
DATA_STREAM = 0
VALIDATION_STREAM = 1
BOOTSTRAP_STREAM = 2

THRESHOLD_NOTE = (
    "thresholds are selected on each method's own calibrated validation scores "
    "(identity = raw scores) and frozen after the first usable bootstrap"
)


def derive_seed(master_seed: int, *keys: int) -> int:
    """Deterministic 32-bit seed for the stream identified by (master_seed, *keys)"""
    return int(np.random.SeedSequence([master_seed, *keys]).generate_state(1)[0])


class PreparedVariant(NamedTuple):
    """Dataset of one variant with the row indices of each protocol role"""

    variant: Variant
    dataset: FeatureDataset
    pool_idx: np.ndarray  # training-month rows available to bootstraps
    val_idx: np.ndarray
    test_idx: np.ndarray


class BootstrapOutcome(NamedTuple):
    bootstrap: int
    records: List[ExperimentRecord]
    policies: Dict[CalibrationMethod, ThresholdPolicy]
    skipped: Optional[SkippedBootstrap]


def prepare_variant(cfg: ExperimentConfig, variant: Variant) -> PreparedVariant:
    """Generate the variant's data and fix the validation rows once, before any bootstrap"""
    spec = variant_spec(variant, cfg.n_rows, seed=derive_seed(cfg.master_seed, variant.index, DATA_STREAM))
    dataset = generate(spec)
    train_rows = np.flatnonzero(cfg.split.train_months.contains(dataset.month))
    test_idx = np.flatnonzero(cfg.split.test_months.contains(dataset.month))

    rng = np.random.default_rng(derive_seed(cfg.master_seed, variant.index, VALIDATION_STREAM))
    n_val = int(round(cfg.split.validation_fraction * train_rows.size))
    held_out = np.zeros(train_rows.size, dtype=bool)
    held_out[rng.permutation(train_rows.size)[:n_val]] = True
    val_idx = train_rows[held_out]
    pool_idx = train_rows[~held_out]
    if pool_idx.size == 0 or val_idx.size == 0 or test_idx.size == 0:
        raise InvalidArgument(
            f"variant {variant.value}: empty training pool, validation or test part "
            f"({pool_idx.size}/{val_idx.size}/{test_idx.size} rows)"
        )
    logger.info(
        "variant %s: %d bootstrap-pool rows, %d validation rows, %d test rows",
        variant.value, pool_idx.size, val_idx.size, test_idx.size,
    )
    return PreparedVariant(variant, dataset, pool_idx, val_idx, test_idx)


def bootstrap_sample(cfg: ExperimentConfig, prepared: PreparedVariant, b: int) -> np.ndarray:
    """Row indices of bootstrap b: len(pool) draws with replacement from the training pool"""
    rng = np.random.default_rng(derive_seed(cfg.master_seed, prepared.variant.index, BOOTSTRAP_STREAM, b))
    return prepared.pool_idx[rng.integers(0, prepared.pool_idx.size, size=prepared.pool_idx.size)]


def _evaluate_bootstrap(
    cfg: ExperimentConfig,
    prepared: PreparedVariant,
    b: int,
    frozen: Optional[Dict[CalibrationMethod, ThresholdPolicy]],
) -> BootstrapOutcome:
    variant = prepared.variant
    train = prepared.dataset.subset(bootstrap_sample(cfg, prepared, b))
    val = prepared.dataset.subset(prepared.val_idx)
    test = prepared.dataset.subset(prepared.test_idx)
    if not val.has_both_classes():
        reason = "validation rows contain a single class"
    elif not train.has_both_classes():
        reason = "bootstrap training sample contains a single class"
    else:
        reason = None
    if reason:
        logger.warning("variant %s bootstrap %d skipped: %s", variant.value, b, reason)
        return BootstrapOutcome(b, [], {}, SkippedBootstrap(variant=variant, bootstrap=b, reason=reason))

    classifier = train_baseline(train, cfg.classifier)
    val_scores = score(classifier, val)
    test_scores = score(classifier, test)

    records, policies = [], {}
    for method in cfg.methods:
        try:
            calibrator = fit_calibrator(method, val_scores, smoothing=cfg.platt_smoothing)
        except SingleClassError as e:
            reason = f"{method.value} calibration failed: {e}"
            logger.warning("variant %s bootstrap %d skipped: %s", variant.value, b, reason)
            return BootstrapOutcome(b, [], {}, SkippedBootstrap(variant=variant, bootstrap=b, reason=reason))
        calibrated_test = calibrate_scores(calibrator, test_scores)
        if frozen is None:
            policy = select_threshold(
                calibrate_scores(calibrator, val_scores),
                cfg.target_recall,
                PolicySource(bootstrap=b, method=method, variant=variant.value),
            )
        else:
            policy = frozen[method]
        policies[method] = policy
        threshold = policy.threshold

        counts = evaluator.confusion_at(calibrated_test, threshold)
        tpr = (
            evaluator.tpr_at_fpr(calibrated_test, cfg.target_fpr)[0]
            if calibrated_test.has_both_classes() else evaluator.UNDEFINED
        )
        records.append(ExperimentRecord(
            variant=variant,
            method=method,
            bootstrap=b,
            precision=evaluator.precision(counts),
            recall=evaluator.recall(counts),
            tpr_at_fpr=tpr,
            ece=evaluator.ece(calibrated_test, cfg.ece_bins),
            brier=evaluator.brier(calibrated_test),
            threshold=threshold,
        ))
    return BootstrapOutcome(b, records, policies, None)


def run_variant(
    cfg: ExperimentConfig, variant: Variant, jobs: int = 1
) -> Tuple[List[ExperimentRecord], List[SkippedBootstrap], Dict[CalibrationMethod, ThresholdPolicy]]:
    """
    Bootstraps run in index order until thresholds are frozen; the remaining
    indices are independent and may run in parallel threads.
    """
    prepared = prepare_variant(cfg, variant)
    outcomes: List[BootstrapOutcome] = []
    frozen: Optional[Dict[CalibrationMethod, ThresholdPolicy]] = None
    b = 0
    while frozen is None and b < cfg.n_bootstraps:
        outcome = _evaluate_bootstrap(cfg, prepared, b, None)
        outcomes.append(outcome)
        if outcome.skipped is None:
            frozen = outcome.policies
        b += 1

    if frozen is not None and b < cfg.n_bootstraps:
        outcomes.extend(
            Parallel(n_jobs=jobs, prefer="threads")(
                delayed(_evaluate_bootstrap)(cfg, prepared, i, frozen) for i in range(b, cfg.n_bootstraps)
            )
        )

    records = [r for o in outcomes for r in o.records]
    skipped = [o.skipped for o in outcomes if o.skipped is not None]
    return records, skipped, frozen or {}


def record_key(record: ExperimentRecord) -> Tuple[int, int, int]:
    return record.variant.index, METHOD_ORDER.index(record.method), record.bootstrap


def run(cfg: ExperimentConfig, jobs: int = config.JOBS) -> ExperimentResult:
    """Execute the bootstrap protocol over every configured variant"""
    if jobs < 1:
        raise InvalidArgument(f"jobs must be >= 1, got {jobs}")
    records: List[ExperimentRecord] = []
    skipped: List[SkippedBootstrap] = []
    thresholds: Dict[str, Dict[str, float]] = {}
    sources: Dict[str, Dict[str, PolicySource]] = {}
    for variant in cfg.variants:
        variant_records, variant_skipped, frozen = run_variant(cfg, variant, jobs)
        records.extend(variant_records)
        skipped.extend(variant_skipped)
        thresholds[variant.value] = {m.value: p.threshold for m, p in frozen.items()}
        sources[variant.value] = {m.value: p.source for m, p in frozen.items()}

    records.sort(key=record_key)
    skipped.sort(key=lambda s: (s.variant.index, s.bootstrap))
    aggregates = aggregate(records) if records else []
    result = ExperimentResult(
        config=cfg,
        records=records,
        aggregates=aggregates,
        significance=significance(records),
        skipped=skipped,
        thresholds=thresholds,
        threshold_sources=sources,
        notes=THRESHOLD_NOTE,
    )
    logger.info("experiment finished: %d records, %d skipped bootstraps", len(records), len(skipped))
    return result


def _cells(records: List[ExperimentRecord]) -> Dict[Tuple[Variant, CalibrationMethod], List[ExperimentRecord]]:
    cells: Dict[Tuple[Variant, CalibrationMethod], List[ExperimentRecord]] = defaultdict(list)
    for record in sorted(records, key=record_key):
        cells[(record.variant, record.method)].append(record)
    return cells


def aggregate(records: List[ExperimentRecord]) -> List[Aggregate]:
    """
    Mean and sample standard deviation (n - 1 denominator) per
    (variant, method, metric). Undefined values are left out of a cell; a
    cell with a single value has std 0 and one with none is undefined.
    """
    if not records:
        raise InvalidArgument("cannot aggregate an empty record set")
    result = []
    for (variant, method), cell in _cells(records).items():
        for metric in RECORD_METRICS:
            values = np.array([getattr(r, metric) for r in cell], dtype=np.float64)
            values = values[~np.isnan(values)]
            n = int(values.size)
            if n == 0:
                mean, std = evaluator.UNDEFINED, evaluator.UNDEFINED
            else:
                mean = float(np.mean(values))
                std = float(np.std(values, ddof=1)) if n > 1 else 0.0
            result.append(Aggregate(variant=variant, method=method, metric=metric, mean=mean, std=std, n=n))
    return result


def significance(records: List[ExperimentRecord]) -> List[Significance]:
    """
    Two-sided Wilcoxon p-values of every calibrated method against identity,
    paired by bootstrap index. Pairs with a skipped or undefined side are
    dropped.
    """
    cells = _cells(records)
    result = []
    for (variant, method), cell in cells.items():
        baseline = cells.get((variant, CalibrationMethod.IDENTITY))
        if method == CalibrationMethod.IDENTITY or not baseline:
            continue
        by_bootstrap = {r.bootstrap: r for r in baseline}
        for metric in RECORD_METRICS:
            pairs = [
                (getattr(r, metric), getattr(by_bootstrap[r.bootstrap], metric))
                for r in cell if r.bootstrap in by_bootstrap
            ]
            pairs = [(x, y) for x, y in pairs if not (math.isnan(x) or math.isnan(y))]
            if not pairs:
                continue
            x, y = zip(*pairs)
            test = wilcoxon_signed_rank(list(x), list(y))
            result.append(Significance(
                variant=variant,
                method=method,
                metric=metric,
                p_value=test.p_value,
                n_pairs=len(pairs),
                w_statistic=test.w_statistic,
                sided=test.sided,
            ))
    return result


def is_improvement(metric: str, method_mean: float, identity_mean: float) -> bool:
    """Whether a method's mean beats identity's in the metric's preferred direction"""
    if HIGHER_IS_BETTER[metric]:
        return method_mean > identity_mean
    return method_mean < identity_mean
