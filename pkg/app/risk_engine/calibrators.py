# app/risk_engine/calibrators.py
"""
Calibration transforms turning raw classifier scores into probabilities:
Platt (sigmoid) scaling, isotonic regression, binary temperature scaling,
beta calibration and the identity baseline.

Platt and temperature scaling work on logits, so probability-space inputs
go through to_logit first. Isotonic and beta consume probabilities
directly.
"""
import logging
import math

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit
from sklearn.isotonic import isotonic_regression

from app.core.errors import InvalidArgument, NonFiniteScore, SingleClassError, UnknownMethod
from app.models.calibration import (
    PLATT_PARAM_CAP, TEMPERATURE_MAX, TEMPERATURE_MIN,
    BetaParams, CalibrationMethod, Calibrator, IsotonicModel, PlattParams, TemperatureParams,
)
from app.models.score_data import ScoreSet, ScoreSpace

logger = logging.getLogger(__name__)

LOGIT_EPS = 1e-12

PLATT_MAX_ITER = 200
PLATT_GRAD_TOL = 1e-8
PLATT_MIN_STEP = 1e-10

GOLDEN_TOL = 1e-7  # on ln T
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def sigmoid(z):
    """Numerically stable logistic function for scalars and arrays"""
    out = expit(z)
    return float(out) if np.ndim(out) == 0 else out


def to_logit(p):
    """ln(p'/(1-p')) with p' clamped to [1e-12, 1 - 1e-12]"""
    clamped = np.clip(np.asarray(p, dtype=np.float64), LOGIT_EPS, 1.0 - LOGIT_EPS)
    out = np.log(clamped) - np.log1p(-clamped)
    return float(out) if np.ndim(out) == 0 else out


def _require_both_classes(scores: ScoreSet, method: CalibrationMethod) -> None:
    if not scores.has_both_classes():
        raise SingleClassError(f"{method.value} calibration needs both classes in the validation set")


def _margin(scores: ScoreSet) -> np.ndarray:
    if scores.score_space == ScoreSpace.PROBABILITY:
        return to_logit(scores.scores)
    return np.asarray(scores.scores, dtype=np.float64)


def _weighted_nll_logit(f: np.ndarray, targets: np.ndarray, weights: np.ndarray) -> float:
    """Mean weighted NLL when P(y=1) = sigmoid(f)"""
    # -log sigmoid(f) = logaddexp(0, -f); -log(1 - sigmoid(f)) = logaddexp(0, f)
    losses = targets * np.logaddexp(0.0, -f) + (1.0 - targets) * np.logaddexp(0.0, f)
    return float(np.sum(weights * losses) / np.sum(weights))


# Platt scaling

def platt_targets(labels: np.ndarray, smoothing: bool) -> np.ndarray:
    if not smoothing:
        return labels.astype(np.float64)
    n_pos = float(np.count_nonzero(labels == 1))
    n_neg = float(np.count_nonzero(labels == 0))
    return np.where(labels == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))


def platt_nll(params: PlattParams, s: np.ndarray, targets: np.ndarray, weights: np.ndarray) -> float:
    """NLL of P(y=1|s) = 1 / (1 + exp(A*s + B)), i.e. sigmoid(-(A*s + B))"""
    return _weighted_nll_logit(-(params.A * s + params.B), targets, weights)


def platt_start(labels: np.ndarray) -> PlattParams:
    """Platt's starting point: A = 0, B = ln((N- + 1) / (N+ + 1))"""
    n_pos = float(np.count_nonzero(labels == 1))
    n_neg = float(np.count_nonzero(labels == 0))
    return PlattParams(A=0.0, B=math.log((n_neg + 1.0) / (n_pos + 1.0)))


def fit_platt(val: ScoreSet, smoothing: bool = True, monotone: bool = True) -> PlattParams:
    """
    Maximum-likelihood (A, B) by damped Newton iteration with backtracking.
    Parameters are capped at |A|, |B| <= 1e3 so separable data cannot
    diverge. With monotone set, a fit with A > 0 (a decreasing map) falls
    back to A = 0 and the B matching the weighted mean target; unset, the
    unconstrained maximum-likelihood pair is returned.
    """
    _require_both_classes(val, CalibrationMethod.PLATT)
    s = _margin(val)
    t = platt_targets(val.labels, smoothing)
    w = val.weights / np.sum(val.weights)
    start = platt_start(val.labels)
    theta = np.array([start.A, start.B])

    def objective(x: np.ndarray) -> float:
        f = x[0] * s + x[1]
        return float(np.sum(w * (t * np.logaddexp(0.0, f) + (1.0 - t) * np.logaddexp(0.0, -f))))

    current = objective(theta)
    for iteration in range(PLATT_MAX_ITER):
        f = theta[0] * s + theta[1]
        # d/df of the per-row loss: sigmoid(f) - (1 - t)
        g = expit(f) - (1.0 - t)
        h = expit(f) * expit(-f)
        grad = np.array([np.sum(w * g * s), np.sum(w * g)])
        if np.max(np.abs(grad)) < PLATT_GRAD_TOL:
            break
        hess = np.array([
            [np.sum(w * h * s * s), np.sum(w * h * s)],
            [np.sum(w * h * s), np.sum(w * h)],
        ])
        # Levenberg damping keeps the system solvable when h underflows
        hess += np.eye(2) * max(1e-12, 1e-12 * np.trace(hess))
        try:
            direction = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            direction = -grad
        step = 1.0
        improved = False
        while step >= PLATT_MIN_STEP:
            candidate = np.clip(theta + step * direction, -PLATT_PARAM_CAP, PLATT_PARAM_CAP)
            value = objective(candidate)
            if value < current:
                improved = True
                break
            step *= 0.5
        if not improved or np.array_equal(candidate, theta):
            break
        theta, current = candidate, value
    else:
        logger.debug("platt fit stopped after %d Newton steps", PLATT_MAX_ITER)

    if np.any(np.abs(theta) >= PLATT_PARAM_CAP):
        logger.warning("platt parameters reached the cap |A|,|B| <= %g (separable validation data?)", PLATT_PARAM_CAP)
    if monotone and theta[0] > 0:
        # a decreasing map is not a calibration of these scores: pin A = 0, refit B
        logger.warning("platt fit gave A = %.4g > 0 (negatively oriented scores); pinning A = 0", theta[0])
        t_mean = float(np.clip(np.sum(w * t), LOGIT_EPS, 1.0 - LOGIT_EPS))
        b = float(np.clip(math.log((1.0 - t_mean) / t_mean), -PLATT_PARAM_CAP, PLATT_PARAM_CAP))
        theta = np.array([0.0, b])
    return PlattParams(A=float(theta[0]), B=float(theta[1]))


def platt_as_beta(params: PlattParams) -> BetaParams:
    """Beta parameters reproducing a Platt map on probability inputs: a = b = -A, c = e^-B"""
    if params.A > 0:
        raise InvalidArgument("a Platt map with A > 0 has no beta equivalent (a, b must be nonnegative)")
    return BetaParams(a=-params.A, b=-params.A, c=math.exp(-params.B))


# Isotonic regression

def pav_fit(scores, labels, weights) -> np.ndarray:
    """
    Pool-adjacent-violators: fitted values minimising sum w (y - p)^2 subject
    to p nondecreasing in the score. Tied scores share one value. Returns
    one fitted value per input row, in input order.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights <= 0):
        raise InvalidArgument("isotonic fitting needs positive weights")
    unique, inverse = np.unique(scores, return_inverse=True)
    point_w = np.bincount(inverse, weights=weights, minlength=unique.size)
    point_wy = np.bincount(inverse, weights=weights * labels, minlength=unique.size)
    fitted = isotonic_regression(point_wy / point_w, sample_weight=point_w, increasing=True)
    return np.asarray(fitted, dtype=np.float64)[inverse]


def fit_isotonic(val: ScoreSet) -> IsotonicModel:
    """
    Isotonic regression of labels on scores. Each pooled block (a run of
    equal fitted values) becomes one (weighted mean score, block value)
    pair; zero-weight rows are ignored.
    """
    if len(val) == 0:
        raise InvalidArgument("isotonic calibration needs at least one validation row")
    keep = val.weights > 0
    if not np.any(keep):
        raise InvalidArgument("isotonic calibration needs at least one row with positive weight")
    s, y, w = val.scores[keep], val.labels[keep], val.weights[keep]
    unique, inverse = np.unique(s, return_inverse=True)
    point_w = np.bincount(inverse, weights=w, minlength=unique.size)
    point_wy = np.bincount(inverse, weights=w * y, minlength=unique.size)

    fitted = pav_fit(unique, point_wy / point_w, point_w)
    starts = np.flatnonzero(np.r_[True, fitted[1:] != fitted[:-1]])
    ends = np.r_[starts[1:], fitted.size]
    breakpoints = np.add.reduceat(point_w * unique, starts) / np.add.reduceat(point_w, starts)
    # the weighted mean of a block always lies inside it; guard against rounding at the edges
    breakpoints = np.clip(breakpoints, unique[starts], unique[ends - 1])
    values = np.clip(fitted[starts], 0.0, 1.0)
    values = np.maximum.accumulate(values)
    return IsotonicModel(breakpoints=breakpoints.tolist(), values=values.tolist())


def apply_isotonic(model: IsotonicModel, s):
    """Linear interpolation between block points, clipped to the end values"""
    out = np.interp(np.asarray(s, dtype=np.float64), model.breakpoints, model.values)
    return float(out) if np.ndim(out) == 0 else out


# Temperature scaling

def temperature_nll(T: float, z: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> float:
    return _weighted_nll_logit(z / T, labels, weights)


def golden_section_minimize(func, lower: float, upper: float, tol: float = GOLDEN_TOL) -> float:
    """Minimiser of a unimodal function on [lower, upper]"""
    a, b = lower, upper
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = func(d)
    return (a + b) / 2.0


def fit_temperature(val: ScoreSet) -> TemperatureParams:
    """T minimising the NLL of sigmoid(z / T), searched over ln T in [ln 0.05, ln 20]"""
    _require_both_classes(val, CalibrationMethod.TEMPERATURE)
    z = _margin(val)

    def objective(log_t: float) -> float:
        return temperature_nll(math.exp(log_t), z, val.labels, val.weights)

    log_t = golden_section_minimize(objective, math.log(TEMPERATURE_MIN), math.log(TEMPERATURE_MAX))
    T = min(max(math.exp(log_t), TEMPERATURE_MIN), TEMPERATURE_MAX)
    return TemperatureParams(T=T)


# Beta calibration

def beta_features(p: np.ndarray) -> np.ndarray:
    """Columns (ln p, -ln(1 - p)) with p clamped away from 0 and 1"""
    clamped = np.clip(np.asarray(p, dtype=np.float64), LOGIT_EPS, 1.0 - LOGIT_EPS)
    return np.column_stack([np.log(clamped), -np.log1p(-clamped)])


def beta_logit(params: BetaParams, p) -> np.ndarray:
    x = beta_features(np.atleast_1d(p))
    return params.a * x[:, 0] + params.b * x[:, 1] + math.log(params.c)


def beta_nll(params: BetaParams, p: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> float:
    return _weighted_nll_logit(beta_logit(params, p), labels, weights)


def _fit_logistic(x: np.ndarray, y: np.ndarray, w: np.ndarray, start: np.ndarray) -> np.ndarray:
    """Weighted logistic regression with intercept (last coefficient)"""
    design = np.column_stack([x, np.ones(x.shape[0])])
    w = w / np.sum(w)

    def objective(theta: np.ndarray):
        f = design @ theta
        loss = float(np.sum(w * (y * np.logaddexp(0.0, -f) + (1.0 - y) * np.logaddexp(0.0, f))))
        grad = design.T @ (w * (expit(f) - y))
        return loss, grad

    result = minimize(objective, start, jac=True, method="BFGS", options={"gtol": 1e-10, "maxiter": 1000})
    if not result.success:
        logger.debug("beta logistic fit: %s", result.message)
    return result.x


def fit_beta(val: ScoreSet) -> BetaParams:
    """
    Beta calibration as a logistic fit on (ln p, -ln(1 - p)) with intercept
    ln c, started from the identity map. A negative coefficient is pinned to
    0 and the remaining parameters refitted, keeping the map monotone.
    """
    _require_both_classes(val, CalibrationMethod.BETA)
    if val.score_space != ScoreSpace.PROBABILITY:
        raise InvalidArgument("beta calibration needs probability-space scores")
    x = beta_features(val.scores)
    y, w = val.labels, val.weights

    a, b, log_c = _fit_logistic(x, y, w, np.array([1.0, 1.0, 0.0]))
    if a < 0 or b < 0:
        # drop the offending feature (the more negative one first) and refit
        drop = 0 if a < b else 1
        keep = 1 - drop
        start = np.array([max(b if keep == 1 else a, 0.0), log_c])
        coef, log_c = _fit_logistic(x[:, [keep]], y, w, start)
        if coef < 0:
            coef = 0.0
            log_c = float(_fit_logistic(np.empty((x.shape[0], 0)), y, w, np.array([log_c]))[0])
        a, b = (0.0, coef) if drop == 0 else (coef, 0.0)
        logger.debug("beta fit pinned %s = 0", "a" if drop == 0 else "b")
    return BetaParams(a=float(a), b=float(b), c=float(math.exp(log_c)))


def apply_beta(params: BetaParams, p):
    out = expit(beta_logit(params, p))
    return float(out[0]) if np.ndim(p) == 0 else out


# Dispatch

def fit_calibrator(method: CalibrationMethod, val: ScoreSet, smoothing: bool = True) -> Calibrator:
    """Fit the requested calibration method on a validation ScoreSet"""
    try:
        method = CalibrationMethod(method)
    except ValueError:
        raise UnknownMethod(f"unknown calibration method {method!r}")
    if method == CalibrationMethod.IDENTITY:
        params = None
    elif method == CalibrationMethod.PLATT:
        params = fit_platt(val, smoothing=smoothing)
    elif method == CalibrationMethod.ISOTONIC:
        params = fit_isotonic(val)
    elif method == CalibrationMethod.TEMPERATURE:
        params = fit_temperature(val)
    else:
        params = fit_beta(val)
    logger.debug("fitted %s calibrator: %s", method.value, params)
    return Calibrator(method=method, params=params, score_space=val.score_space)


def apply_batch(calibrator: Calibrator, scores) -> np.ndarray:
    """Calibrated probabilities for an array of raw scores"""
    s = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise NonFiniteScore("calibration input contains non-finite scores")
    method = calibrator.method
    probability_input = calibrator.score_space == ScoreSpace.PROBABILITY
    if method == CalibrationMethod.IDENTITY:
        out = s.copy() if probability_input else expit(s)
    elif method == CalibrationMethod.PLATT:
        z = to_logit(s) if probability_input else s
        out = expit(-(calibrator.params.A * z + calibrator.params.B))
    elif method == CalibrationMethod.ISOTONIC:
        out = np.interp(s, calibrator.params.breakpoints, calibrator.params.values)
    elif method == CalibrationMethod.TEMPERATURE:
        z = to_logit(s) if probability_input else s
        out = expit(z / calibrator.params.T)
    else:
        out = apply_beta(calibrator.params, np.atleast_1d(s)).reshape(s.shape)
    return np.clip(out, 0.0, 1.0)


def apply(calibrator: Calibrator, s: float) -> float:
    """Calibrated probability for one raw score"""
    return float(apply_batch(calibrator, np.array([s], dtype=np.float64))[0])


def calibrate_scores(calibrator: Calibrator, scores: ScoreSet) -> ScoreSet:
    """Calibrated copy of a ScoreSet (probability space, same rows and tags)"""
    return scores.with_scores(apply_batch(calibrator, scores.scores), ScoreSpace.PROBABILITY)
