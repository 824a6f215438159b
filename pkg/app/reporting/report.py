# app/reporting/report.py
import io
import logging
import math
from typing import Dict, List, Optional, Tuple

import pandas as pd

from app.core import config
from app.core.errors import InvalidArgument
from app.experiment.runner import aggregate, is_improvement, significance
from app.models.calibration import METHOD_ORDER, CalibrationMethod
from app.models.experiment import HIGHER_IS_BETTER, RECORD_METRICS, Aggregate, ExperimentRecord, Significance
from app.models.synthetic import Variant
from app.stats.wilcoxon import significance_stars

logger = logging.getLogger(__name__)

METHOD_WIDTH = 14
CELL_WIDTH = 20
UNDEFINED_CELL = "undefined"


class ReportCell:
    """One (method, variant) entry of the grid"""

    def __init__(self, aggregate: Aggregate, best: bool, starred: bool):
        self.aggregate = aggregate
        self.best = best
        self.starred = starred

    @property
    def text(self) -> str:
        if math.isnan(self.aggregate.mean):
            return UNDEFINED_CELL
        body = f"{100 * self.aggregate.mean:.1f} ± {100 * self.aggregate.std:.1f}"
        if self.best:
            body = f"**{body}**"
        return body + ("*" if self.starred else "")


def build_grid(
    records: List[ExperimentRecord],
    metric: str = "precision",
    alpha: float = config.SIGNIFICANCE_ALPHA,
) -> Tuple[List[CalibrationMethod], List[Variant], Dict[Tuple[CalibrationMethod, Variant], ReportCell]]:
    """
    Cells of the method x variant grid for one metric. The best mean per
    variant is bold (ties all bold); a star marks a method that beats
    identity in the metric's direction with a two-sided Wilcoxon p <= alpha.
    """
    if metric not in RECORD_METRICS:
        raise InvalidArgument(f"unknown metric {metric!r} (choose from {', '.join(RECORD_METRICS)})")
    aggregates = {(a.method, a.variant): a for a in aggregate(records) if a.metric == metric}
    p_values: Dict[Tuple[CalibrationMethod, Variant], Significance] = {
        (s.method, s.variant): s for s in significance(records) if s.metric == metric
    }
    methods = [m for m in METHOD_ORDER if any(key[0] == m for key in aggregates)]
    variants = [v for v in Variant if any(key[1] == v for key in aggregates)]

    cells = {}
    for variant in variants:
        means = [aggregates[(m, variant)].mean for m in methods if (m, variant) in aggregates]
        means = [x for x in means if not math.isnan(x)]
        best = (max(means) if HIGHER_IS_BETTER[metric] else min(means)) if means else None
        identity = aggregates.get((CalibrationMethod.IDENTITY, variant))
        for method in methods:
            cell = aggregates.get((method, variant))
            if cell is None:
                continue
            starred = False
            test = p_values.get((method, variant))
            if test is not None and identity is not None and not math.isnan(cell.mean):
                starred = significance_stars(test.p_value, alpha) and is_improvement(metric, cell.mean, identity.mean)
            cells[(method, variant)] = ReportCell(cell, best=best is not None and cell.mean == best, starred=starred)
    return methods, variants, cells


def _header(metric: str, alpha: float) -> List[str]:
    direction = "higher" if HIGHER_IS_BETTER[metric] else "lower"
    return [
        f"Metric: {metric} (percent; mean ± sample standard deviation over bootstraps, n-1 denominator)",
        f"** marks the best method per variant ({direction} is better)",
        f"* marks a two-sided Wilcoxon signed-rank p <= {alpha:g} against identity, in the better direction",
        "Thresholds are selected on each method's own validation scores (identity = raw) and frozen",
    ]


def render_text(records: List[ExperimentRecord], metric: str = "precision", alpha: float = config.SIGNIFICANCE_ALPHA) -> str:
    methods, variants, cells = build_grid(records, metric, alpha)
    lines = _header(metric, alpha) + [""]
    lines.append(("method".ljust(METHOD_WIDTH) + "".join(v.value.ljust(CELL_WIDTH) for v in variants)).rstrip())
    for method in methods:
        row = method.value.ljust(METHOD_WIDTH)
        for variant in variants:
            cell = cells.get((method, variant))
            row += (cell.text if cell else "-").ljust(CELL_WIDTH)
        lines.append(row.rstrip())
    logger.debug("rendered %d x %d text grid for %s", len(methods), len(variants), metric)
    return "\n".join(lines) + "\n"


def render_csv(records: List[ExperimentRecord], metric: str = "precision", alpha: float = config.SIGNIFICANCE_ALPHA) -> str:
    methods, variants, cells = build_grid(records, metric, alpha)
    frame = pd.DataFrame(
        [[cells[(m, v)].text if (m, v) in cells else "" for v in variants] for m in methods],
        index=pd.Index([m.value for m in methods], name="method"),
        columns=[v.value for v in variants],
    )
    buffer = io.StringIO()
    frame.to_csv(buffer, lineterminator="\n")
    return buffer.getvalue()


def render(records: List[ExperimentRecord], fmt: str = "text", metric: str = "precision",
           alpha: Optional[float] = None) -> str:
    alpha = config.SIGNIFICANCE_ALPHA if alpha is None else alpha
    if fmt == "text":
        return render_text(records, metric, alpha)
    elif fmt == "csv":
        return render_csv(records, metric, alpha)
    raise InvalidArgument(f"unknown report format {fmt!r}")
