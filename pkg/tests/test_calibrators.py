# tests/test_calibrators.py
import itertools
import math
import time

import numpy as np
import pytest
from scipy.optimize import minimize, minimize_scalar

from app.core.errors import InvalidArgument, NonFiniteScore, SchemaError, SingleClassError, UnknownMethod
from app.crud.artifacts import calibrator_from_document, calibrator_to_document, load_calibrator, save_calibrator
from app.models.calibration import (
    BetaParams, CalibrationMethod, Calibrator, IsotonicModel, PlattParams, TemperatureParams,
)
from app.models.score_data import ScoreSet, ScoreSpace
from app.risk_engine.calibrators import (
    apply, apply_batch, apply_beta, apply_isotonic, beta_nll, fit_beta, fit_calibrator, fit_isotonic, fit_platt,
    fit_temperature, pav_fit, platt_as_beta, platt_nll, platt_start, platt_targets, sigmoid, temperature_nll,
    to_logit,
)
from tests.conftest import margin_set


# to_logit / sigmoid

def test_to_logit_values():
    assert to_logit(0.5) == 0.0
    assert to_logit(0.0) == pytest.approx(-27.631, abs=1e-3)
    assert to_logit(1.0) == pytest.approx(27.631, abs=1e-3)


def test_to_logit_sigmoid_round_trip():
    p = np.linspace(1e-6, 1 - 1e-6, 10_000)
    np.testing.assert_allclose(sigmoid(to_logit(p)), p, atol=1e-9)
    assert np.all(np.diff(to_logit(p)) > 0)


# Platt

def test_platt_zero_params_give_half():
    c = Calibrator(method=CalibrationMethod.PLATT, params=PlattParams(A=0, B=0), score_space=ScoreSpace.MARGIN)
    np.testing.assert_array_equal(apply_batch(c, [-10.0, 0.0, 3.0]), [0.5, 0.5, 0.5])


def test_platt_symmetry_at_zero():
    c = Calibrator(method=CalibrationMethod.PLATT, params=PlattParams(A=-1, B=0), score_space=ScoreSpace.MARGIN)
    assert apply(c, 0.0) == 0.5


def test_platt_smoothing_targets():
    t = platt_targets(np.array([1.0, 1.0, 0.0]), smoothing=True)
    np.testing.assert_allclose(t, [3 / 4, 3 / 4, 1 / 3])
    np.testing.assert_array_equal(platt_targets(np.array([1.0, 0.0]), smoothing=False), [1.0, 0.0])


@pytest.mark.slow
def test_platt_parameter_recovery():
    gen = np.random.default_rng(7)
    n = 100_000
    s = gen.uniform(-5, 5, n)
    y = (gen.random(n) < 1 / (1 + np.exp(2 * s + 0.5))).astype(float)
    started = time.perf_counter()
    params = fit_platt(margin_set(s, y), smoothing=False, monotone=False)
    assert time.perf_counter() - started < 2.0
    assert params.A == pytest.approx(2.0, abs=0.05)
    assert params.B == pytest.approx(0.5, abs=0.05)

    # independent optimizer on the same NLL
    def nll(x):
        f = x[0] * s + x[1]
        return np.mean(y * np.logaddexp(0, f) + (1 - y) * np.logaddexp(0, -f))

    oracle = minimize(nll, [0.0, 0.0], method="Nelder-Mead", options={"xatol": 1e-8, "fatol": 1e-12})
    assert params.A == pytest.approx(oracle.x[0], abs=1e-3)
    assert params.B == pytest.approx(oracle.x[1], abs=1e-3)


def test_platt_separable_data_hits_cap():
    s = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])
    y = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
    params = fit_platt(margin_set(s, y), smoothing=False)
    assert math.isfinite(params.A) and math.isfinite(params.B)
    assert abs(params.A) <= 1e3 and abs(params.B) <= 1e3
    assert params.A < -10


def test_platt_nll_not_above_start(rng):
    s = rng.normal(size=300)
    y = (rng.random(300) < sigmoid(1.5 * s)).astype(float)
    val = margin_set(s, y)
    fitted = fit_platt(val, smoothing=True)
    t = platt_targets(y, True)
    assert platt_nll(fitted, s, t, val.weights) <= platt_nll(platt_start(y), s, t, val.weights) + 1e-12


def test_platt_negatively_oriented_scores_pin_slope(rng):
    s = rng.uniform(-5, 5, 2000)
    y = (rng.random(2000) < sigmoid(-2.0 * s)).astype(float)
    val = margin_set(s, y)
    assert fit_platt(val, smoothing=True, monotone=False).A > 0
    params = fit_platt(val, smoothing=True)
    assert params.A == 0.0
    t_mean = float(np.mean(platt_targets(y, True)))
    assert params.B == pytest.approx(math.log((1 - t_mean) / t_mean), abs=1e-12)
    c = Calibrator(method=CalibrationMethod.PLATT, params=params, score_space=ScoreSpace.MARGIN)
    out = apply_batch(c, np.linspace(-5, 5, 101))
    assert np.all(np.diff(out) >= 0)
    assert out[0] == pytest.approx(t_mean)
    # the pinned map is the best constant map, so its NLL is not above the start point
    assert platt_nll(params, s, platt_targets(y, True), val.weights) <= platt_nll(
        platt_start(y), s, platt_targets(y, True), val.weights
    ) + 1e-12


def test_platt_single_class_rejected():
    with pytest.raises(SingleClassError):
        fit_platt(margin_set([0.1, 0.2], [1, 1]))


# Isotonic

def brute_force_isotonic(y, w, grid):
    """Best nondecreasing sequence on a value grid by dynamic programming"""
    n = len(y)
    cost = np.full((n, grid.size), np.inf)
    cost[0] = w[0] * (y[0] - grid) ** 2
    for i in range(1, n):
        best_prefix = np.minimum.accumulate(cost[i - 1])
        cost[i] = best_prefix + w[i] * (y[i] - grid) ** 2
    return cost[-1].min()


def closed_form_isotonic(y, w):
    """p_i = max over j <= i of min over k >= i of the weighted mean of y[j..k]"""
    n = len(y)
    out = np.empty(n)
    for i in range(n):
        out[i] = max(
            min(np.dot(w[j:k + 1], y[j:k + 1]) / w[j:k + 1].sum() for k in range(i, n))
            for j in range(i + 1)
        )
    return out


def test_isotonic_examples():
    w4 = np.ones(4)
    np.testing.assert_allclose(pav_fit([0.1, 0.2, 0.3, 0.4], [0, 1, 0, 1], w4), [0, 0.5, 0.5, 1])
    np.testing.assert_allclose(pav_fit([0.1, 0.2, 0.3, 0.4], [0, 0, 1, 1], w4), [0, 0, 1, 1])
    np.testing.assert_allclose(pav_fit([0.3, 0.7], [1, 0], np.ones(2)), [0.5, 0.5])

    model = fit_isotonic(ScoreSet(scores=[0.1, 0.2, 0.3, 0.4], labels=[0, 1, 0, 1]))
    np.testing.assert_allclose(model.breakpoints, [0.1, 0.25, 0.4])
    np.testing.assert_allclose(model.values, [0.0, 0.5, 1.0])


def test_isotonic_ties_are_pooled():
    fitted = pav_fit([0.5, 0.5, 0.2], [1, 0, 0], np.ones(3))
    np.testing.assert_allclose(fitted, [0.5, 0.5, 0.0])


def test_isotonic_oracle_equivalence(rng):
    started = time.perf_counter()
    grid = np.linspace(0, 1, 2001)
    for _ in range(200):
        n = int(rng.integers(1, 11))
        s = np.sort(rng.choice(np.arange(100), size=n, replace=False) / 100.0)
        y = rng.integers(0, 2, n).astype(float)
        w = rng.uniform(0.5, 2.0, n)
        fitted = pav_fit(s, y, w)
        np.testing.assert_allclose(fitted, closed_form_isotonic(y, w), atol=1e-6)
        assert np.all(np.diff(fitted) >= -1e-12)
        objective = float(np.sum(w * (y - fitted) ** 2))
        # the grid oracle can only be worse than the exact minimiser
        assert objective <= brute_force_isotonic(y, w, grid) + 1e-9
        assert brute_force_isotonic(y, w, grid) - objective < 1e-3
        model = fit_isotonic(ScoreSet(scores=s, labels=y, weights=w))
        np.testing.assert_allclose(model.values, np.unique(fitted), atol=1e-12)
        np.testing.assert_allclose(apply_isotonic(model, model.breakpoints), model.values, atol=1e-12)
    assert time.perf_counter() - started < 10.0


def test_apply_isotonic_interpolates_and_clips():
    model = IsotonicModel(breakpoints=[0.2, 0.4], values=[0.5, 1.0])
    assert apply_isotonic(model, 0.3) == pytest.approx(0.75)
    assert apply_isotonic(model, 0.0) == 0.5
    assert apply_isotonic(model, 0.9) == 1.0


def test_isotonic_model_validation():
    with pytest.raises(SchemaError):
        IsotonicModel(breakpoints=[0.4, 0.2], values=[0.1, 0.2])
    with pytest.raises(SchemaError):
        IsotonicModel(breakpoints=[0.2, 0.4], values=[0.3, 0.1])


def test_apply_isotonic_monotone_on_random_fits(rng):
    sweep = np.linspace(-0.1, 1.1, 10_000)
    for _ in range(20):
        n = int(rng.integers(5, 200))
        val = ScoreSet(scores=rng.random(n), labels=rng.integers(0, 2, n))
        out = apply_isotonic(fit_isotonic(val), sweep)
        assert np.all(np.diff(out) >= 0)


def test_isotonic_ignores_zero_weight_rows():
    val = ScoreSet(scores=[0.1, 0.5, 0.9], labels=[0, 0, 1], weights=[1, 0, 1])
    model = fit_isotonic(val)
    assert model.breakpoints == [0.1, 0.9]


def test_pav_fit_rejects_nonpositive_weights():
    with pytest.raises(InvalidArgument):
        pav_fit([0.1, 0.5], [0, 1], [1.0, 0.0])


# Temperature

def test_temperature_formula():
    c = Calibrator(method=CalibrationMethod.TEMPERATURE, params=TemperatureParams(T=2), score_space=ScoreSpace.MARGIN)
    assert apply(c, 2.0) == pytest.approx(0.731059, abs=1e-6)


def test_temperature_one_is_identity():
    p = np.linspace(0.001, 0.999, 1000)
    c = Calibrator(method=CalibrationMethod.TEMPERATURE, params=TemperatureParams(T=1), score_space=ScoreSpace.PROBABILITY)
    np.testing.assert_allclose(apply_batch(c, p), p, atol=1e-12)


@pytest.mark.slow
def test_temperature_recovery():
    gen = np.random.default_rng(11)
    n = 100_000
    z = gen.uniform(-10, 10, n)
    y = (gen.random(n) < sigmoid(z / 3)).astype(float)
    val = ScoreSet(scores=sigmoid(z), labels=y)
    started = time.perf_counter()
    params = fit_temperature(val)
    assert time.perf_counter() - started < 2.0
    assert params.T == pytest.approx(3.0, abs=0.15)

    zz = to_logit(val.scores)
    grid = np.linspace(1.0, 6.0, 5001)
    losses = [temperature_nll(t, zz, y, val.weights) for t in grid]
    assert params.T == pytest.approx(grid[int(np.argmin(losses))], abs=2e-3)


def test_temperature_nll_not_above_identity(miscalibrated_set):
    val = miscalibrated_set(3, 2000)
    z = to_logit(val.scores)
    fitted = fit_temperature(val)
    assert temperature_nll(fitted.T, z, val.labels, val.weights) <= temperature_nll(1.0, z, val.labels, val.weights) + 1e-9
    oracle = minimize_scalar(
        lambda log_t: temperature_nll(math.exp(log_t), z, val.labels, val.weights),
        bounds=(math.log(0.05), math.log(20)), method="bounded", options={"xatol": 1e-9},
    )
    assert fitted.T == pytest.approx(math.exp(oracle.x), rel=1e-4)


# Beta

def test_beta_formula_values():
    assert apply_beta(BetaParams(a=2, b=2, c=3), 0.5) == pytest.approx(0.75)
    p = np.linspace(0.001, 0.999, 1000)
    np.testing.assert_allclose(apply_beta(BetaParams(a=1, b=1, c=1), p), p, atol=1e-12)


@pytest.mark.slow
def test_beta_recovery():
    gen = np.random.default_rng(5)
    n = 100_000
    p = gen.uniform(0.01, 0.99, n)
    true = BetaParams(a=2, b=1, c=1)
    y = (gen.random(n) < apply_beta(true, p)).astype(float)
    val = ScoreSet(scores=p, labels=y)
    started = time.perf_counter()
    params = fit_beta(val)
    assert time.perf_counter() - started < 2.0
    assert params.a == pytest.approx(2.0, abs=0.1)
    assert params.b == pytest.approx(1.0, abs=0.1)
    assert params.c == pytest.approx(1.0, abs=0.1)

    # coarse grid then local refinement over (a, b, ln c)
    def nll(x):
        return beta_nll(BetaParams(a=max(x[0], 0), b=max(x[1], 0), c=math.exp(x[2])), p, y, val.weights)

    coarse = min(itertools.product(np.linspace(0, 4, 9), np.linspace(0, 4, 9), np.linspace(-1, 1, 5)), key=nll)
    oracle = minimize(nll, coarse, method="Nelder-Mead", options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 4000})
    assert params.a == pytest.approx(oracle.x[0], abs=5e-3)
    assert params.b == pytest.approx(oracle.x[1], abs=5e-3)


def test_beta_nll_not_above_identity(miscalibrated_set):
    val = miscalibrated_set(4, 2000)
    fitted = fit_beta(val)
    identity = BetaParams(a=1, b=1, c=1)
    assert beta_nll(fitted, val.scores, val.labels, val.weights) <= beta_nll(identity, val.scores, val.labels, val.weights) + 1e-9


def test_beta_pins_negative_coefficient(rng):
    # labels fall as p rises, so an unconstrained fit wants negative coefficients
    p = rng.uniform(0.05, 0.95, 2000)
    y = (rng.random(2000) < 1 - p).astype(float)
    params = fit_beta(ScoreSet(scores=p, labels=y))
    assert params.a >= 0 and params.b >= 0
    out = apply_beta(params, np.linspace(0.01, 0.99, 500))
    assert np.all(np.diff(out) >= -1e-15)


def test_platt_as_beta_matches_platt(rng):
    p = np.linspace(0.001, 0.999, 1000)
    for _ in range(20):
        platt = PlattParams(A=-float(rng.uniform(0, 4)), B=float(rng.normal()))
        c_platt = Calibrator(method=CalibrationMethod.PLATT, params=platt, score_space=ScoreSpace.PROBABILITY)
        c_beta = Calibrator(method=CalibrationMethod.BETA, params=platt_as_beta(platt))
        np.testing.assert_allclose(apply_batch(c_beta, p), apply_batch(c_platt, p), atol=1e-9)


# Dispatch, monotonicity, range

def test_identity_calibrator():
    prob = Calibrator(method=CalibrationMethod.IDENTITY)
    assert apply(prob, 0.3) == 0.3
    margin = Calibrator(method=CalibrationMethod.IDENTITY, score_space=ScoreSpace.MARGIN)
    assert apply(margin, 0.0) == 0.5


def test_apply_rejects_non_finite():
    with pytest.raises(NonFiniteScore):
        apply(Calibrator(method=CalibrationMethod.IDENTITY), float("nan"))


@pytest.mark.parametrize("method", [m for m in CalibrationMethod])
def test_fitted_calibrators_are_monotone_and_bounded(method, rng):
    sweep = np.linspace(0.0, 1.0, 1001)
    for trial in range(25):
        n = int(rng.integers(20, 300))
        z = rng.normal(0, 2, n)
        y = (rng.random(n) < sigmoid(rng.uniform(0.3, 2.0) * z)).astype(float)
        if y.min() == y.max():
            continue
        c = fit_calibrator(method, ScoreSet(scores=sigmoid(z), labels=y))
        out = apply_batch(c, sweep)
        assert np.all((out >= 0) & (out <= 1))
        assert np.all(np.diff(out) >= -1e-15), (method, trial)


def test_unknown_method():
    with pytest.raises(UnknownMethod):
        fit_calibrator("histogram", ScoreSet(scores=[0.1, 0.9], labels=[0, 1]))


# Persistence

@pytest.mark.parametrize("method", [m for m in CalibrationMethod])
def test_calibrator_file_round_trip(method, tmp_path, miscalibrated_set):
    val = miscalibrated_set(9, 500)
    c = fit_calibrator(method, val)
    path = tmp_path / f"{method.value}.json"
    save_calibrator(c, path)
    loaded = load_calibrator(path)
    assert loaded == c
    grid = np.linspace(0, 1, 100)
    np.testing.assert_allclose(apply_batch(loaded, grid), apply_batch(c, grid), atol=1e-15, rtol=0)


def test_calibrator_document_errors():
    document = calibrator_to_document(Calibrator(method=CalibrationMethod.PLATT, params=PlattParams(A=-1, B=0)))
    with pytest.raises(UnknownMethod):
        calibrator_from_document({**document, "method": "bogus"})
    without_version = {k: v for k, v in document.items() if k != "schema_version"}
    with pytest.raises(SchemaError):
        calibrator_from_document(without_version)
    with pytest.raises(SchemaError):
        calibrator_from_document({**document, "schema_version": 99})
