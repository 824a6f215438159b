# app/cli/commands.py
"""
Command-line surface: gen, fit, apply, threshold, evaluate, experiment,
report, serve and replay. Every file written is recorded in a manifest
(<output>.manifest.json) from which the run can be replayed.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd
import uvicorn
from pydantic import ValidationError

from app import __version__
from app.api.service import create_app
from app.core import config
from app.core.errors import ConfigError, InvalidArgument, ToolkitError
from app.core.logging_config import configure_logging
from app.crud.artifacts import load_calibrator, load_policy, read_json, save_calibrator, save_policy, write_json
from app.crud.records import load_records, save_records, save_summary
from app.crud.scores import FLOAT_FORMAT, read_raw_csv, save_dataset, scores_from_frame, write_frame
from app.decision_engine.engine import select_threshold
from app.experiment.runner import run
from app.metrics.evaluator import evaluate
from app.models.audit_log import AuditAction
from app.models.calibration import CalibrationMethod
from app.models.experiment import RECORD_METRICS, ExperimentConfig
from app.models.policy import PolicySource
from app.models.score_data import ColumnMap, ScoreSpace
from app.models.synthetic import Variant
from app.reporting.report import render, render_text
from app.risk_engine.calibrators import apply_batch, fit_calibrator
from app.synthetic.generator import generate, variant_spec
from app.utils.audit_logger import RunAuditLogger, replay_manifest

logger = logging.getLogger(__name__)

FITTED_METHODS = [m.value for m in CalibrationMethod if m != CalibrationMethod.IDENTITY]


def _column_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--score-col", default="score", help="score column name")
    parent.add_argument("--label-col", default="label", help="label column name")
    parent.add_argument("--weight-col", default=None, help="optional sample-weight column")
    parent.add_argument("--group-col", default=None, help="optional group-tag column")
    parent.add_argument("--month-col", default=None, help="optional month-tag column")
    return parent


def _columns(args: argparse.Namespace) -> ColumnMap:
    return ColumnMap(
        score=args.score_col,
        label=args.label_col,
        weight=args.weight_col,
        group=args.group_col,
        month=args.month_col,
    )


def _variant(raw: str) -> Variant:
    try:
        return Variant.parse(raw)
    except InvalidArgument as e:
        raise argparse.ArgumentTypeError(str(e))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="caltk",
        description="Calibrate classifier scores and run threshold-decoupling experiments",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="override CALTK_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)
    columns = _column_options()

    gen = sub.add_parser("gen", help="generate a synthetic dataset variant")
    gen.add_argument("--variant", type=_variant, default=Variant.BASE, help="base, 1..5 or I..V")
    gen.add_argument("--rows", type=int, default=100_000)
    gen.add_argument("--seed", type=int, default=config.MASTER_SEED)
    gen.add_argument("--out", required=True)

    fit = sub.add_parser("fit", parents=[columns], help="fit a calibrator on validation scores")
    fit.add_argument("--method", choices=FITTED_METHODS, required=True)
    fit.add_argument("--scores", required=True)
    fit.add_argument("--out", required=True)
    fit.add_argument("--no-platt-smoothing", action="store_true")
    fit.add_argument("--score-space", choices=[s.value for s in ScoreSpace], default=ScoreSpace.PROBABILITY.value)

    apply = sub.add_parser("apply", parents=[columns], help="add a calibrated-score column")
    apply.add_argument("--calibrator", required=True)
    apply.add_argument("--scores", required=True)
    apply.add_argument("--out", required=True)
    apply.add_argument("--calibrated-col", default="calibrated")

    threshold = sub.add_parser("threshold", parents=[columns], help="select a frozen threshold policy")
    threshold.add_argument("--scores", required=True)
    threshold.add_argument("--target-recall", type=float, default=config.TARGET_RECALL)
    threshold.add_argument("--out", required=True)

    ev = sub.add_parser("evaluate", parents=[columns], help="metrics at the policy threshold")
    ev.add_argument("--scores", required=True)
    ev.add_argument("--policy", required=True)
    ev.add_argument("--ece-bins", type=int, default=config.ECE_BINS)
    ev.add_argument("--target-fpr", type=float, default=config.TARGET_FPR)
    ev.add_argument("--out", required=True)
    ev.add_argument("--bins-out", default=None, help="reliability-bin CSV for plotting")

    exp = sub.add_parser("experiment", help="run the bootstrap decoupling experiment")
    exp.add_argument("--config", required=True)
    exp.add_argument("--out-dir", required=True)
    exp.add_argument("--jobs", type=int, default=config.JOBS)

    report = sub.add_parser("report", help="render the method x variant grid")
    report.add_argument("--records", required=True)
    report.add_argument("--format", choices=["text", "csv"], default="text")
    report.add_argument("--metric", choices=RECORD_METRICS, default="precision")
    report.add_argument("--out", default=None, help="write to a file instead of stdout")

    serve = sub.add_parser("serve", help="HTTP decision service")
    serve.add_argument("--calibrator", required=True)
    serve.add_argument("--policy", required=True)
    serve.add_argument("--host", default=config.API_HOST)
    serve.add_argument("--port", type=int, default=config.API_PORT)

    replay = sub.add_parser("replay", help="re-run a manifest and verify its outputs")
    replay.add_argument("--manifest", required=True)
    return parser


def cmd_gen(args: argparse.Namespace, audit: RunAuditLogger) -> None:
    spec = variant_spec(args.variant, args.rows, seed=args.seed)
    audit.set_config({"variant": args.variant.value, "spec": spec.model_dump(mode="json")})
    audit.add_seed("data", args.seed)
    dataset = generate(spec)
    save_dataset(dataset, args.out)
    audit.log(AuditAction.DATASET_GENERATED, args.out, rows=len(dataset), variant=args.variant.value)
    audit.log_output(args.out)


def cmd_fit(args: argparse.Namespace, audit: RunAuditLogger) -> None:
    space = ScoreSpace(args.score_space)
    scores = scores_from_frame(read_raw_csv(args.scores), _columns(args), space)
    audit.log_input(args.scores)
    audit.set_config({"method": args.method, "score_space": space.value, "platt_smoothing": not args.no_platt_smoothing})
    calibrator = fit_calibrator(CalibrationMethod(args.method), scores, smoothing=not args.no_platt_smoothing)
    save_calibrator(calibrator, args.out)
    audit.log(AuditAction.CALIBRATOR_FITTED, args.out, method=args.method, rows=len(scores))
    audit.log_output(args.out)


def cmd_apply(args: argparse.Namespace, audit: RunAuditLogger) -> None:
    calibrator = load_calibrator(args.calibrator)
    audit.log_input(args.calibrator)
    frame = read_raw_csv(args.scores)
    audit.log_input(args.scores)
    columns = ColumnMap(score=args.score_col, label=args.label_col)
    scores = scores_from_frame(frame, columns, calibrator.score_space)
    calibrated = apply_batch(calibrator, scores.scores)
    frame[args.calibrated_col] = [FLOAT_FORMAT % p for p in calibrated]
    write_frame(frame, args.out)
    audit.log(AuditAction.CALIBRATION_APPLIED, args.out, method=calibrator.method.value, rows=len(scores))
    audit.log_output(args.out)


def cmd_threshold(args: argparse.Namespace, audit: RunAuditLogger) -> None:
    scores = scores_from_frame(read_raw_csv(args.scores), _columns(args), ScoreSpace.PROBABILITY)
    audit.log_input(args.scores)
    audit.set_config({"target_recall": args.target_recall, "score_col": args.score_col})
    policy = select_threshold(scores, args.target_recall, PolicySource())
    save_policy(policy, args.out)
    audit.log(AuditAction.THRESHOLD_SELECTED, args.out, threshold=policy.threshold)
    audit.log_output(args.out)


def cmd_evaluate(args: argparse.Namespace, audit: RunAuditLogger) -> None:
    scores = scores_from_frame(read_raw_csv(args.scores), _columns(args), ScoreSpace.PROBABILITY)
    audit.log_input(args.scores)
    policy = load_policy(args.policy)
    audit.log_input(args.policy)
    audit.set_config({"ece_bins": args.ece_bins, "target_fpr": args.target_fpr})
    report = evaluate(scores, policy.threshold, args.ece_bins, args.target_fpr)
    write_json(report.model_dump(mode="json"), args.out)
    audit.log(AuditAction.METRICS_EVALUATED, args.out, precision=report.precision, recall=report.recall)
    audit.log_output(args.out)
    if args.bins_out:
        write_frame(pd.DataFrame([b.model_dump() for b in report.reliability_bins]), args.bins_out)
        audit.log_output(args.bins_out)


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(read_json(path))
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(f"invalid experiment config {path}: {'.'.join(str(p) for p in first['loc'])}: {first['msg']}")


def cmd_experiment(args: argparse.Namespace, audit: RunAuditLogger) -> None:
    cfg = load_experiment_config(args.config)
    audit.log_input(args.config)
    audit.set_config(cfg.model_dump(mode="json"))
    audit.add_seed("master_seed", cfg.master_seed)
    result = run(cfg, jobs=args.jobs)
    for skip in result.skipped:
        audit.log(AuditAction.BOOTSTRAP_SKIPPED, f"{skip.variant.value}/{skip.bootstrap}", reason=skip.reason)
    audit.log(AuditAction.EXPERIMENT_COMPLETED, args.out_dir, records=len(result.records))

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path, summary_path, report_path = out_dir / "records.csv", out_dir / "summary.json", out_dir / "report.txt"
    save_records(result.records, records_path)
    save_summary(result, summary_path)
    if result.records:
        report_path.write_text(render_text(result.records), encoding="utf-8")
    else:
        report_path.write_text("no usable bootstraps\n", encoding="utf-8")
    for path in (records_path, summary_path, report_path):
        audit.log_output(path)


def cmd_report(args: argparse.Namespace, audit: RunAuditLogger) -> None:
    records = load_records(args.records)
    audit.log_input(args.records)
    text = render(records, args.format, args.metric)
    audit.log(AuditAction.REPORT_RENDERED, args.out, metric=args.metric, format=args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        audit.log_output(args.out)
    else:
        sys.stdout.write(text)


def cmd_serve(args: argparse.Namespace, audit: RunAuditLogger) -> None:
    app = create_app(load_calibrator(args.calibrator), load_policy(args.policy))
    uvicorn.run(app, host=args.host, port=args.port)


def cmd_replay(args: argparse.Namespace, audit: RunAuditLogger) -> None:
    replay_manifest(args.manifest, main)


COMMANDS = {
    "gen": cmd_gen,
    "fit": cmd_fit,
    "apply": cmd_apply,
    "threshold": cmd_threshold,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
    "report": cmd_report,
    "serve": cmd_serve,
    "replay": cmd_replay,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit code"""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    configure_logging(args.log_level)

    audit = RunAuditLogger(args.command, argv)
    try:
        COMMANDS[args.command](args, audit)
        audit.write_manifests()
    except ToolkitError as e:
        logger.error("%s: %s", e.code, e)
        return e.exit_code
    except Exception:
        logger.exception("unexpected failure in %s", args.command)
        return 1
    return 0


def main_entry() -> None:
    sys.exit(main())
