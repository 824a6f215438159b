# tests/test_report.py
import os
from pathlib import Path

import pytest

from app.core.errors import InvalidArgument
from app.experiment.runner import run
from app.models.calibration import CalibrationMethod
from app.models.experiment import ExperimentConfig
from app.models.synthetic import ClassifierSettings, Variant
from app.reporting.report import build_grid, render, render_csv, render_text
from tests.conftest import make_record

GOLDEN = Path(__file__).parent / "golden"


def test_text_report_matches_golden(report_records):
    expected = (GOLDEN / "report_precision.txt").read_text(encoding="utf-8")
    assert render_text(report_records, "precision") == expected


def seeded_run_config() -> ExperimentConfig:
    return ExperimentConfig(
        variants=["base", "V"],
        methods=["identity", "isotonic"],
        n_bootstraps=3,
        n_rows=20_000,
        master_seed=5,
        classifier=ClassifierSettings(epochs=100),
    )


def test_report_of_seeded_run_matches_golden():
    rendered = render_text(run(seeded_run_config()).records, "precision")
    assert render_text(run(seeded_run_config()).records, "precision") == rendered
    golden = GOLDEN / "report_run_precision.txt"
    if os.environ.get("CALTK_UPDATE_GOLDEN") or not golden.is_file():
        golden.write_text(rendered, encoding="utf-8")
        pytest.skip(f"wrote {golden.name}")
    assert rendered == golden.read_text(encoding="utf-8")


def test_best_and_stars(report_records):
    _, variants, cells = build_grid(report_records, "precision")
    assert variants == [Variant.BASE, Variant.V]
    isotonic_base = cells[(CalibrationMethod.ISOTONIC, Variant.BASE)]
    assert isotonic_base.best and isotonic_base.starred
    # identity wins on V: the significant difference earns no star
    isotonic_v = cells[(CalibrationMethod.ISOTONIC, Variant.V)]
    assert not isotonic_v.best and not isotonic_v.starred
    assert cells[(CalibrationMethod.IDENTITY, Variant.V)].best
    assert not cells[(CalibrationMethod.IDENTITY, Variant.V)].starred


def test_stricter_alpha_removes_stars(report_records):
    _, _, cells = build_grid(report_records, "precision", alpha=0.001)
    assert not any(cell.starred for cell in cells.values())


def test_ties_are_all_bold(report_records):
    _, _, cells = build_grid(report_records, "ece")
    assert all(cell.best for cell in cells.values())
    assert cells[(CalibrationMethod.IDENTITY, Variant.BASE)].text == "**1.0 ± 0.0**"


def test_undefined_cell():
    records = [make_record(Variant.BASE, CalibrationMethod.IDENTITY, b, float("nan")) for b in range(3)]
    assert "undefined" in render_text(records, "precision")


def test_csv_report(report_records):
    lines = render_csv(report_records, "precision").splitlines()
    assert lines[0] == "method,base,V"
    assert lines[1] == "identity,13.0 ± 2.4,**25.0 ± 5.3**"
    assert lines[2] == "isotonic,**15.0 ± 2.4***,20.0 ± 5.3"


def test_render_dispatch(report_records):
    assert render(report_records, "text") == render_text(report_records)
    with pytest.raises(InvalidArgument):
        render(report_records, "html")
    with pytest.raises(InvalidArgument):
        render(report_records, "text", metric="auc")
