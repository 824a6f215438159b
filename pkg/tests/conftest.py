# tests/conftest.py
import numpy as np
import pytest

from app.models.calibration import CalibrationMethod
from app.models.experiment import ExperimentRecord
from app.models.score_data import ScoreSet, ScoreSpace
from app.models.synthetic import Variant


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def small_scores():
    return ScoreSet(scores=[0.9, 0.8, 0.7, 0.6, 0.5], labels=[1, 1, 0, 1, 0])


@pytest.fixture
def miscalibrated_set():
    """Overconfident probabilities: true rate sigmoid(z / 3), reported sigmoid(z)"""

    def make(seed: int, n: int = 4000) -> ScoreSet:
        gen = np.random.default_rng(seed)
        z = gen.uniform(-8, 8, n)
        labels = (gen.random(n) < 1 / (1 + np.exp(-z / 3))).astype(float)
        return ScoreSet(scores=1 / (1 + np.exp(-z)), labels=labels)

    return make


def make_record(variant, method, bootstrap, precision, **overrides) -> ExperimentRecord:
    values = dict(
        variant=variant,
        method=method,
        bootstrap=bootstrap,
        precision=precision,
        recall=0.95,
        tpr_at_fpr=0.5,
        ece=0.01,
        brier=0.02,
        threshold=0.3,
    )
    values.update(overrides)
    return ExperimentRecord(**values)


@pytest.fixture
def report_records():
    """
    Eight bootstraps, two variants, identity and isotonic. Base: isotonic
    is 2 points better on every bootstrap. V: identity wins.
    """
    records = []
    base_identity = [0.10, 0.12, 0.14, 0.16, 0.10, 0.12, 0.14, 0.16]
    v_identity = [0.20, 0.20, 0.20, 0.20, 0.30, 0.30, 0.30, 0.30]
    v_isotonic = [0.15, 0.15, 0.15, 0.15, 0.25, 0.25, 0.25, 0.25]
    for b in range(8):
        records.append(make_record(Variant.BASE, CalibrationMethod.IDENTITY, b, base_identity[b]))
        records.append(make_record(Variant.BASE, CalibrationMethod.ISOTONIC, b, base_identity[b] + 0.02))
        records.append(make_record(Variant.V, CalibrationMethod.IDENTITY, b, v_identity[b]))
        records.append(make_record(Variant.V, CalibrationMethod.ISOTONIC, b, v_isotonic[b]))
    return records


def margin_set(scores, labels) -> ScoreSet:
    return ScoreSet(scores=scores, labels=labels, score_space=ScoreSpace.MARGIN)
