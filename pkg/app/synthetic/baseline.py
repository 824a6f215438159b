# app/synthetic/baseline.py
import logging
from typing import List, Optional, Tuple

import numpy as np

from app.core.errors import DimensionMismatch, SingleClassError
from app.models.score_data import FeatureDataset, ScoreSet, ScoreSpace
from app.models.synthetic import BaselineClassifier, ClassifierSettings
from app.risk_engine.calibrators import sigmoid

logger = logging.getLogger(__name__)


def _check_dimensions(c: BaselineClassifier, d: FeatureDataset) -> None:
    if len(c.weights) != d.n_features:
        raise DimensionMismatch(
            f"classifier expects {len(c.weights)} features, dataset has {d.n_features}"
        )


def _logits(weights: np.ndarray, bias: float, features: np.ndarray) -> np.ndarray:
    return features @ weights + bias


def _loss(weights: np.ndarray, bias: float, d: FeatureDataset) -> float:
    z = _logits(weights, bias, d.features)
    return float(np.mean(np.logaddexp(0.0, z) - d.labels * z))


def _gradient(weights: np.ndarray, bias: float, d: FeatureDataset) -> Tuple[np.ndarray, float]:
    residual = sigmoid(_logits(weights, bias, d.features)) - d.labels
    n = len(d)
    return d.features.T @ residual / n, float(residual.sum() / n)


def loss(c: BaselineClassifier, d: FeatureDataset) -> float:
    """Mean log-loss of the classifier on d"""
    _check_dimensions(c, d)
    return _loss(np.asarray(c.weights, dtype=np.float64), c.bias, d)


def gradient(c: BaselineClassifier, d: FeatureDataset) -> Tuple[np.ndarray, float]:
    """Analytic gradient of the mean log-loss: (d/dw, d/dbias)"""
    _check_dimensions(c, d)
    return _gradient(np.asarray(c.weights, dtype=np.float64), c.bias, d)


def train_baseline(
    d: FeatureDataset,
    settings: Optional[ClassifierSettings] = None,
    loss_history: Optional[List[float]] = None,
) -> BaselineClassifier:
    """
    Full-batch gradient descent on the mean log-loss from a zero start.
    When loss_history is given, the loss before every epoch and after the
    last one is appended to it.
    """
    settings = settings or ClassifierSettings()
    if not d.has_both_classes():
        raise SingleClassError("baseline training needs both classes in the training data")

    weights = np.zeros(d.n_features)
    bias = 0.0
    for _ in range(settings.epochs):
        if loss_history is not None:
            loss_history.append(_loss(weights, bias, d))
        grad_w, grad_b = _gradient(weights, bias, d)
        weights = weights - settings.learning_rate * grad_w
        bias = bias - settings.learning_rate * grad_b
    if loss_history is not None:
        loss_history.append(_loss(weights, bias, d))

    logger.debug("baseline trained on %d rows, final loss %.6f", len(d), _loss(weights, bias, d))
    return BaselineClassifier(weights=weights.tolist(), bias=float(bias), settings=settings)


def score(c: BaselineClassifier, d: FeatureDataset) -> ScoreSet:
    """Probability-space scores with labels, group and month carried through"""
    _check_dimensions(c, d)
    p = sigmoid(_logits(np.asarray(c.weights, dtype=np.float64), c.bias, d.features))
    return ScoreSet(
        scores=p,
        labels=d.labels,
        group=d.group,
        month=d.month,
        score_space=ScoreSpace.PROBABILITY,
    )
