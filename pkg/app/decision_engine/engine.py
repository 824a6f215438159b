# app/decision_engine/engine.py
import math
from typing import List, Optional

import numpy as np

from app.core.errors import InvalidArgument, NonFiniteScore
from app.models.policy import Decision, DecisionOutput, PolicySource, RiskLevel, ThresholdPolicy
from app.models.score_data import ScoreSet, ScoreSpace

# Recall targets are compared with this slack so that e.g. 0.95 * 20
# evaluating to 18.999999999999996 still asks for 19 positives.
RECALL_SLACK = 1e-9


def select_threshold(
    val: ScoreSet,
    target_recall: float,
    source: Optional[PolicySource] = None,
) -> ThresholdPolicy:
    """
    Largest observed positive-class score t such that recall at ">= t"
    reaches target_recall on the (calibrated) selection set.
    """
    if not 0 < target_recall <= 1:
        raise InvalidArgument(f"target recall must lie in (0, 1], got {target_recall}")
    if val.score_space != ScoreSpace.PROBABILITY:
        raise InvalidArgument("thresholds are selected on calibrated (probability-space) scores")
    positives = np.sort(val.scores[val.labels == 1])[::-1]
    if positives.size == 0:
        raise InvalidArgument("threshold selection needs at least one positive label")
    needed = max(1, math.ceil(target_recall * positives.size - RECALL_SLACK))
    threshold = float(positives[needed - 1])
    return ThresholdPolicy(
        threshold=threshold,
        target_recall=target_recall,
        source=source or PolicySource(),
        score_space=ScoreSpace.PROBABILITY,
    )


def decide(policy: ThresholdPolicy, score: float) -> Decision:
    """Reject (flag as fraud) iff the calibrated score reaches the threshold"""
    if not math.isfinite(score):
        raise NonFiniteScore(f"cannot decide on non-finite score {score!r}")
    return Decision.REJECT if score >= policy.threshold else Decision.APPROVE


def decide_batch(policy: ThresholdPolicy, scores) -> List[Decision]:
    s = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise NonFiniteScore("cannot decide on non-finite scores")
    return [Decision.REJECT if flag else Decision.APPROVE for flag in (s >= policy.threshold)]


def risk_level(policy: ThresholdPolicy, probability: float) -> RiskLevel:
    """
    Risk band of a calibrated probability relative to the frozen threshold:
    CRITICAL at or above it, HIGH from half of it, MEDIUM from a quarter.
    """
    if probability >= policy.threshold:
        return RiskLevel.CRITICAL
    elif probability >= policy.threshold / 2:
        return RiskLevel.HIGH
    elif probability >= policy.threshold / 4:
        return RiskLevel.MEDIUM
    else:
        return RiskLevel.LOW


class DecisionEngine:
    """
    Applies one frozen threshold policy to calibrated probabilities. The
    policy never changes when the model behind the calibrator is retrained.
    """

    def __init__(self, policy: ThresholdPolicy):
        self.policy = policy

    def make_decision(self, probability: float) -> DecisionOutput:
        decision = decide(self.policy, probability)
        level = risk_level(self.policy, probability)
        return DecisionOutput(
            decision=decision,
            risk_level=level,
            probability=probability,
            threshold=self.policy.threshold,
            message=self._generate_message(decision, level, probability),
        )

    def make_decisions(self, probabilities) -> List[DecisionOutput]:
        return [self.make_decision(float(p)) for p in np.asarray(probabilities, dtype=np.float64)]

    def _generate_message(self, decision: Decision, level: RiskLevel, probability: float) -> str:
        if decision == Decision.REJECT:
            return (
                f"Application rejected: calibrated fraud probability {probability:.4f} "
                f"reaches the threshold {self.policy.threshold:.4f}."
            )
        elif level == RiskLevel.HIGH:
            return f"Application approved with elevated risk ({level.value}), probability {probability:.4f}."
        else:
            return f"Application approved. Current risk level: {level.value}."
