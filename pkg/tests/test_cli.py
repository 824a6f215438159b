# tests/test_cli.py
import json

import pytest

from app.cli.commands import main
from app.utils.audit_logger import load_manifest, manifest_path


@pytest.fixture
def scores_csv(tmp_path, rng):
    p = rng.random(400)
    labels = (rng.random(400) < p).astype(int)
    path = tmp_path / "scores.csv"
    lines = ["score,label"] + [f"{s!r},{y}" for s, y in zip(p.tolist(), labels.tolist())]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def experiment_config(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({
        "variants": ["base"],
        "methods": ["identity", "isotonic"],
        "n_bootstraps": 2,
        "n_rows": 20000,
        "master_seed": 1,
        "classifier": {"epochs": 50},
    }))
    return path


def test_gen_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["gen", "--variant", "IV", "--rows", "2000", "--seed", "9", "--out", str(a)]) == 0
    assert main(["gen", "--variant", "4", "--rows", "2000", "--seed", "9", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "f0,f1,f2,f3,f4,f5,f6,f7,label,group,month"
    manifest = load_manifest(manifest_path(a))
    assert manifest.command == "gen"
    assert manifest.seeds == {"data": 9}
    assert str(a) in manifest.outputs


def test_gen_manifest_replays(tmp_path):
    out = tmp_path / "data.csv"
    assert main(["gen", "--rows", "1500", "--seed", "4", "--out", str(out)]) == 0
    assert main(["replay", "--manifest", str(manifest_path(out))]) == 0


def test_replay_detects_changed_input(tmp_path, scores_csv):
    out = tmp_path / "platt.json"
    assert main(["fit", "--method", "platt", "--scores", str(scores_csv), "--out", str(out)]) == 0
    assert main(["replay", "--manifest", str(manifest_path(out))]) == 0
    scores_csv.write_text(scores_csv.read_text() + "0.5,1\n")
    assert main(["replay", "--manifest", str(manifest_path(out))]) == 15


def test_fit_apply_threshold_evaluate(tmp_path, scores_csv):
    calibrator = tmp_path / "iso.json"
    calibrated = tmp_path / "calibrated.csv"
    policy = tmp_path / "policy.json"
    metrics = tmp_path / "metrics.json"
    bins = tmp_path / "bins.csv"
    assert main(["fit", "--method", "isotonic", "--scores", str(scores_csv), "--out", str(calibrator)]) == 0
    assert json.loads(calibrator.read_text())["method"] == "isotonic"
    assert main([
        "apply", "--calibrator", str(calibrator), "--scores", str(scores_csv), "--out", str(calibrated),
    ]) == 0
    header = calibrated.read_text().splitlines()[0]
    assert header == "score,label,calibrated"
    assert main([
        "threshold", "--scores", str(calibrated), "--score-col", "calibrated",
        "--target-recall", "0.9", "--out", str(policy),
    ]) == 0
    assert json.loads(policy.read_text())["target_recall"] == 0.9
    assert main([
        "evaluate", "--scores", str(calibrated), "--score-col", "calibrated", "--policy", str(policy),
        "--out", str(metrics), "--bins-out", str(bins),
    ]) == 0
    report = json.loads(metrics.read_text())
    assert report["recall"] >= 0.9
    assert bins.is_file()
    assert manifest_path(bins).is_file()


def test_exit_codes(tmp_path, scores_csv):
    missing = tmp_path / "absent.csv"
    assert main(["fit", "--method", "platt", "--scores", str(missing), "--out", str(tmp_path / "c.json")]) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("score,label\n0.4,2\n")
    assert main(["fit", "--method", "platt", "--scores", str(bad), "--out", str(tmp_path / "c.json")]) == 6
    assert main(["fit", "--method", "platt", "--scores", str(scores_csv), "--score-col", "p",
                 "--out", str(tmp_path / "c.json")]) == 4
    single = tmp_path / "single.csv"
    single.write_text("score,label\n0.4,1\n0.6,1\n")
    assert main(["fit", "--method", "beta", "--scores", str(single), "--out", str(tmp_path / "c.json")]) == 10
    # argparse usage errors
    assert main(["fit", "--method", "identity", "--scores", str(scores_csv), "--out", "x.json"]) == 2
    assert main(["gen", "--variant", "VII", "--out", "x.csv"]) == 2


def test_bad_experiment_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n_bootstraps": 0}))
    assert main(["experiment", "--config", str(path), "--out-dir", str(tmp_path / "out")]) == 13


def test_experiment_report_and_replay(tmp_path, experiment_config, capsys):
    out_dir = tmp_path / "run"
    assert main(["experiment", "--config", str(experiment_config), "--out-dir", str(out_dir)]) == 0
    records, summary, report = out_dir / "records.csv", out_dir / "summary.json", out_dir / "report.txt"
    assert records.read_text().splitlines()[0] == (
        "variant,method,bootstrap,precision,recall,tpr_at_fpr,ece,brier,threshold"
    )
    assert len(records.read_text().splitlines()) == 1 + 2 * 2
    assert json.loads(summary.read_text())["schema_version"] == 1

    rendered = tmp_path / "report.txt"
    assert main(["report", "--records", str(records), "--out", str(rendered)]) == 0
    assert rendered.read_text() == report.read_text()
    capsys.readouterr()
    assert main(["report", "--records", str(records), "--format", "csv", "--metric", "recall"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "method,base"

    before = records.read_bytes()
    assert main(["replay", "--manifest", str(manifest_path(records))]) == 0
    assert records.read_bytes() == before
