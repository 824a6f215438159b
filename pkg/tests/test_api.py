# tests/test_api.py
import pytest
from fastapi.testclient import TestClient

from app.api.service import create_app
from app.crud.artifacts import calibrator_to_document
from app.models.calibration import CalibrationMethod, Calibrator, IsotonicModel, TemperatureParams
from app.models.policy import ThresholdPolicy


@pytest.fixture
def client():
    calibrator = Calibrator(
        method=CalibrationMethod.ISOTONIC,
        params=IsotonicModel(breakpoints=[0.1, 0.9], values=[0.0, 1.0]),
    )
    app = create_app(calibrator, ThresholdPolicy(threshold=0.5, target_recall=0.95))
    return TestClient(app)


def test_health(client):
    body = client.get("/health").json()
    assert body["success"] is True
    assert body["data"]["calibration_method"] == "isotonic"
    assert body["data"]["threshold"] == 0.5


def test_decisions(client):
    response = client.post("/api/decisions", json={"scores": [0.9, 0.5, 0.2]})
    assert response.status_code == 200
    decisions = response.json()["data"]["decisions"]
    assert [d["decision"] for d in decisions] == ["reject", "reject", "approve"]
    assert decisions[0]["probability"] == 1.0
    assert decisions[2]["probability"] == pytest.approx(0.125)
    assert decisions[0]["risk_level"] == "CRITICAL"


def test_policy_endpoint(client):
    body = client.get("/api/policy").json()
    assert body["data"]["policy"]["threshold"] == 0.5
    assert body["data"]["policy"]["target_recall"] == 0.95


def test_swapping_calibrator_keeps_threshold(client):
    document = calibrator_to_document(
        Calibrator(method=CalibrationMethod.TEMPERATURE, params=TemperatureParams(T=2.0))
    )
    body = client.put("/api/calibrator", json=document).json()
    assert body["data"] == {"calibration_method": "temperature", "threshold": 0.5}
    decisions = client.post("/api/decisions", json={"scores": [0.5]}).json()["data"]["decisions"]
    assert decisions[0]["probability"] == pytest.approx(0.5)
    assert decisions[0]["threshold"] == 0.5


def test_bad_calibrator_document(client):
    response = client.put("/api/calibrator", json={"schema_version": 1, "method": "svm"})
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "UNKNOWN_METHOD"


def test_validation_envelope(client):
    response = client.post("/api/decisions", json={"scores": []})
    assert response.status_code == 422
    body = response.json()
    assert body["success"] is False
    assert body["error"]["code"] == "VALIDATION_ERROR"


def test_unknown_route_envelope(client):
    response = client.get("/api/nothing")
    assert response.status_code == 404
    assert response.json()["error"]["code"] == "NOT_FOUND"


def test_non_finite_score(client):
    response = client.post(
        "/api/decisions",
        content='{"scores": [0.3, NaN]}',
        headers={"content-type": "application/json"},
    )
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "NON_FINITE_SCORE"
