# app/synthetic/generator.py
"""
Desk-scale analogue of the bank-account-fraud base dataset and its five
variants: eight months of applications, two groups (the minority group
stands for older applicants), rare fraud with a rising monthly prevalence
and Gaussian class-conditional features.

Only the 10% minority group of variant I and the five-fold fraud rate of
variant II are fixed by the scenario descriptions; every other magnitude
below is a documented default.
"""
import logging
import math
from typing import List

import numpy as np

from app.models.score_data import FeatureDataset
from app.models.synthetic import MAJORITY, MINORITY, N_MONTHS, SyntheticSpec, Variant

logger = logging.getLogger(__name__)

PREVALENCE_FIRST_MONTH = 0.009
PREVALENCE_LAST_MONTH = 0.0145
MONTH_SHARE_FIRST = 0.095
MONTH_SHARE_LAST = 0.15
BASE_MINORITY_FRACTION = 0.3
BASE_PREVALENCE_RATIO = 1.5
BASE_SEPARABILITY = 3.0
VARIANT_III_MAJORITY_SEPARABILITY = 3.6
DISPARITY_RATIO = 5.0
DRIFT_PER_MONTH = 0.2
DISPARITY_MONTHS_IV = 6


def monthly_ramp(first: float, last: float) -> List[float]:
    return np.linspace(first, last, N_MONTHS).tolist()


def prevalence_table(overall: List[float], minority_fraction: float, ratios: List[float]) -> List[List[float]]:
    """
    Per-group prevalences whose mixture equals the overall monthly rate,
    with the minority group at ratio x the majority rate.
    """
    majority, minority = [], []
    for rate, ratio in zip(overall, ratios):
        p_major = rate / (1.0 - minority_fraction + minority_fraction * ratio)
        majority.append(p_major)
        minority.append(p_major * ratio)
    return [majority, minority]


def drift_ramp(rate: float, n_features: int) -> List[List[float]]:
    """
    Fraud-class mean moving away from the legitimate mean, along the
    separating direction, by `rate` (Euclidean) per month from month 1.
    A threshold frozen on months 1-6 over-recalls on months 7-8.
    """
    direction = np.ones(n_features) / math.sqrt(n_features)
    return [(rate * m * direction).tolist() for m in range(N_MONTHS)]


def variant_spec(variant: Variant, n_rows: int, seed: int = 0, n_features: int = 8) -> SyntheticSpec:
    """Default knobs for the base dataset and variants I-V"""
    variant = Variant.parse(variant) if not isinstance(variant, Variant) else variant
    overall = monthly_ramp(PREVALENCE_FIRST_MONTH, PREVALENCE_LAST_MONTH)
    fraction = BASE_MINORITY_FRACTION
    ratios = [BASE_PREVALENCE_RATIO] * N_MONTHS
    separability = [BASE_SEPARABILITY, BASE_SEPARABILITY]
    drift = [[0.0] * n_features for _ in range(N_MONTHS)]

    if variant == Variant.I:
        fraction = 0.1
        ratios = [1.0] * N_MONTHS
    elif variant == Variant.II:
        fraction = 0.5
        ratios = [DISPARITY_RATIO] * N_MONTHS
    elif variant == Variant.III:
        separability = [VARIANT_III_MAJORITY_SEPARABILITY, BASE_SEPARABILITY]
    elif variant == Variant.IV:
        ratios = [DISPARITY_RATIO] * DISPARITY_MONTHS_IV + [1.0] * (N_MONTHS - DISPARITY_MONTHS_IV)
    elif variant == Variant.V:
        fraction = 0.5
        ratios = [1.0] * N_MONTHS
        drift = drift_ramp(DRIFT_PER_MONTH, n_features)

    return SyntheticSpec(
        n_rows=n_rows,
        minority_fraction=fraction,
        prevalence=prevalence_table(overall, fraction, ratios),
        separability=separability,
        drift=drift,
        month_shares=monthly_ramp(MONTH_SHARE_FIRST, MONTH_SHARE_LAST),
        n_features=n_features,
        seed=seed,
    )


def generate(spec: SyntheticSpec) -> FeatureDataset:
    """
    Draw rows month by month: group ~ Bernoulli(minority_fraction), label ~
    Bernoulli(prevalence[group, month]), features ~ N(mean, I) where the
    fraud mean sits separability[group] away from the legitimate mean along
    the diagonal, plus the month's drift shift. Deterministic in the seed.
    """
    rng = np.random.default_rng(spec.seed)
    shares = np.asarray(spec.month_shares, dtype=np.float64)
    counts = rng.multinomial(spec.n_rows, shares / shares.sum())
    prevalence = np.asarray(spec.prevalence, dtype=np.float64)
    gaps = np.asarray(spec.separability, dtype=np.float64)
    drift = np.asarray(spec.drift, dtype=np.float64)
    direction = np.ones(spec.n_features) / math.sqrt(spec.n_features)

    features, labels, groups, months = [], [], [], []
    for m in range(N_MONTHS):
        k = int(counts[m])
        # fixed draw order and sizes keep the group stream independent of prevalence knobs
        u_group = rng.random(k)
        u_label = rng.random(k)
        noise = rng.standard_normal((k, spec.n_features))
        minority = u_group < spec.minority_fraction
        fraud = u_label < prevalence[minority.astype(np.int64), m]
        shift = np.outer(gaps[minority.astype(np.int64)], direction) + drift[m]
        x = noise + np.where(fraud[:, None], shift, 0.0)
        features.append(x)
        labels.append(fraud.astype(np.float64))
        groups.append(np.where(minority, MINORITY, MAJORITY).astype(object))
        months.append(np.full(k, m + 1, dtype=np.int64))

    dataset = FeatureDataset(
        features=np.vstack(features) if features else np.zeros((0, spec.n_features)),
        labels=np.concatenate(labels),
        group=np.concatenate(groups),
        month=np.concatenate(months),
    )
    logger.info(
        "generated %d rows, fraud rate %.4f, minority share %.3f",
        len(dataset), float(dataset.labels.mean()) if len(dataset) else 0.0,
        float(np.mean(dataset.group == MINORITY)) if len(dataset) else 0.0,
    )
    return dataset
