"""Correlation study: metric-vs-utility correlations per generator.

Each cell holds the Pearson correlation, across one generator's
(dataset, fold) points, between a fidelity score and mean TSTR recall or F1.
The Super-Metric row goes through exactly the same path as the eight
individual metrics; only the column of scores differs.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    InsufficientVariation,
    LengthMismatch,
    NoDefinedCells,
    TooFewCells,
    TooFewFamilies,
)
from .fidelity import METRIC_IDS
from .stats import five_number_summary, pearson_corr, population_std
from .supermetric import RunRecord, WeightVector, score

__all__ = [
    "BoxSummary",
    "CorrelationCell",
    "HeatmapTable",
    "METRIC_ROWS",
    "SUPER_METRIC",
    "TARGETS",
    "build_boxplot_table",
    "build_heatmap_table",
    "pearson_corr",
    "per_generator_correlations",
    "property_rows",
    "robustness_range",
    "sign_consistency",
    "stability_std",
]

log = logging.getLogger(__name__)

SUPER_METRIC = "SuperMetric"
METRIC_ROWS: tuple[str, ...] = (*(m.value for m in METRIC_IDS), SUPER_METRIC)
TARGETS: tuple[str, ...] = ("recall", "f1")
SAMPLE_AXIS = "dataset x fold"
QUARTILE_RULE = "median of halves, exclusive (middle value dropped when n is odd)"


@dataclass(frozen=True)
class CorrelationCell:
    generator_id: str
    metric: str
    target: str
    rho: float | None
    n_points: int

    @property
    def defined(self) -> bool:
        return self.rho is not None

    def to_dict(self) -> dict[str, Any]:
        return {**asdict(self), "sample_axis": SAMPLE_AXIS}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> CorrelationCell:
        rho = raw["rho"]
        return cls(
            generator_id=str(raw["generator_id"]),
            metric=str(raw["metric"]),
            target=str(raw["target"]),
            rho=None if rho is None else float(rho),
            n_points=int(raw["n_points"]),
        )


def metric_column(
    runs: Sequence[RunRecord], metric: str, weights: Mapping[str, WeightVector]
) -> np.ndarray:
    """Scores of ``metric`` for each run; the Super-Metric uses its dataset's weights."""
    if metric == SUPER_METRIC:
        return np.array([score(weights[r.dataset_id], r.fidelity) for r in runs])
    return np.array([r.fidelity[metric] for r in runs])


def per_generator_correlations(
    runs: Sequence[RunRecord], weights: Mapping[str, WeightVector]
) -> list[CorrelationCell]:
    """One cell per (generator, metric row, target); degenerate cells get ``rho=None``."""
    by_gen: dict[str, list[RunRecord]] = defaultdict(list)
    for r in runs:
        by_gen[r.generator_id].append(r)
    cells = []
    undefined = 0
    for gen in sorted(by_gen):
        pts = sorted(by_gen[gen], key=lambda r: (r.dataset_id, r.fold))
        targets = {
            "recall": np.array([r.recall for r in pts]),
            "f1": np.array([r.f1 for r in pts]),
        }
        for metric in METRIC_ROWS:
            x = metric_column(pts, metric, weights)
            for target in TARGETS:
                try:
                    rho: float | None = pearson_corr(x, targets[target])
                except (InsufficientVariation, LengthMismatch):
                    rho = None
                    undefined += 1
                cells.append(CorrelationCell(gen, metric, target, rho, len(pts)))
    if undefined:
        log.info("%d of %d correlation cells undefined", undefined, len(cells))
    return cells


def _defined_rhos(cells: Iterable[CorrelationCell]) -> list[float]:
    return [c.rho for c in cells if c.rho is not None]


def sign_consistency(cells: Iterable[CorrelationCell]) -> float:
    """Fraction of defined cells sharing the majority sign (ties -> positive).

    A zero correlation matches either sign.
    """
    rhos = _defined_rhos(cells)
    if not rhos:
        raise NoDefinedCells("no defined correlation cells")
    n_pos = sum(r > 0 for r in rhos)
    n_neg = sum(r < 0 for r in rhos)
    majority_positive = n_pos >= n_neg
    matching = sum((r >= 0) if majority_positive else (r <= 0) for r in rhos)
    return matching / len(rhos)


def stability_std(cells: Iterable[CorrelationCell]) -> float:
    """Population standard deviation of the defined correlations."""
    rhos = _defined_rhos(cells)
    if len(rhos) < 2:
        raise TooFewCells(f"need at least 2 defined cells, got {len(rhos)}")
    return population_std(rhos)


def robustness_range(cells: Iterable[CorrelationCell], families: Mapping[str, str]) -> float:
    """Spread (max - min) of the per-family mean correlation."""
    by_family: dict[str, list[float]] = defaultdict(list)
    for c in cells:
        if c.rho is not None:
            by_family[families[c.generator_id]].append(c.rho)
    if len(by_family) < 2:
        raise TooFewFamilies(f"need at least 2 generator families, got {len(by_family)}")
    means = [float(np.mean(v)) for v in by_family.values()]
    return max(means) - min(means)


def _select(cells: Iterable[CorrelationCell], metric: str, target: str | None = None):
    return [c for c in cells if c.metric == metric and (target is None or c.target == target)]


def property_rows(
    cells: Sequence[CorrelationCell], families: Mapping[str, str]
) -> list[dict[str, Any]]:
    """Consistency / stability / robustness per (metric row, target).

    Statistics that are undefined for the available cells are ``None``.
    """
    rows = []
    for metric in METRIC_ROWS:
        for target in TARGETS:
            sel = _select(cells, metric, target)
            row: dict[str, Any] = {
                "metric": metric,
                "target": target,
                "n_defined": len(_defined_rhos(sel)),
            }
            for name, fn in (
                ("consistency", sign_consistency),
                ("stability_std", stability_std),
                ("robustness_range", lambda s: robustness_range(s, families)),
            ):
                try:
                    row[name] = fn(sel)
                except (NoDefinedCells, TooFewCells, TooFewFamilies):
                    row[name] = None
            rows.append(row)
    return rows


@dataclass(frozen=True)
class HeatmapTable:
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    values: tuple[tuple[float | None, ...], ...]
    target: str = "mean"

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_labels), len(self.col_labels)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", *self.col_labels])
        for label, row in zip(self.row_labels, self.values):
            writer.writerow([label, *("" if v is None else repr(v) for v in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, target: str = "mean") -> HeatmapTable:
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        return cls(
            tuple(r[0] for r in body),
            tuple(header[1:]),
            tuple(tuple(None if v == "" else float(v) for v in r[1:]) for r in body),
            target,
        )


def build_heatmap_table(
    cells: Sequence[CorrelationCell], target: str | None = None
) -> HeatmapTable:
    """Metric rows x generator columns.

    With ``target=None`` each value is ``(rho_recall + rho_f1) / 2`` and is
    empty unless both are defined; otherwise the named target's rho.
    """
    lookup = {(c.metric, c.generator_id, c.target): c.rho for c in cells}
    gens = tuple(sorted({c.generator_id for c in cells}))
    present = {c.metric for c in cells}
    metrics = tuple(m for m in METRIC_ROWS if m in present)
    values = []
    for m in metrics:
        row = []
        for g in gens:
            if target is not None:
                row.append(lookup.get((m, g, target)))
                continue
            pair = [lookup.get((m, g, t)) for t in TARGETS]
            row.append(None if None in pair else 0.5 * (pair[0] + pair[1]))
        values.append(tuple(row))
    return HeatmapTable(metrics, gens, tuple(values), target or "mean")


@dataclass(frozen=True)
class BoxSummary:
    metric: str
    target: str
    n: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.minimum, self.q1, self.median, self.q3, self.maximum)


BOXPLOT_TARGETS: tuple[str, ...] = (*TARGETS, "pooled")


def build_boxplot_table(
    cells: Sequence[CorrelationCell], *, skip_empty: bool = False
) -> list[BoxSummary]:
    """Five-number summaries of rho across generators.

    One summary per metric row for each target and for both targets pooled.

    Raises:
        NoDefinedCells: a metric row has no defined cell (unless ``skip_empty``).
    """
    present = {c.metric for c in cells}
    out = []
    for metric in (m for m in METRIC_ROWS if m in present):
        for target in BOXPLOT_TARGETS:
            sel = _select(cells, metric, None if target == "pooled" else target)
            rhos = _defined_rhos(sel)
            if not rhos:
                if skip_empty:
                    continue
                raise NoDefinedCells(f"{metric}/{target}: no defined correlation cells")
            out.append(BoxSummary(metric, target, len(rhos), *five_number_summary(rhos)))
    return out


def boxplot_csv(summaries: Sequence[BoxSummary]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "target", "n", "min", "q1", "median", "q3", "max", "quartile_rule"])
    for s in summaries:
        writer.writerow(
            [s.metric, s.target, s.n, *(repr(v) for v in s.as_tuple()), QUARTILE_RULE]
        )
    return buf.getvalue()


def boxplot_from_csv(text: str) -> list[BoxSummary]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [
        BoxSummary(
            r["metric"],
            r["target"],
            int(r["n"]),
            float(r["min"]),
            float(r["q1"]),
            float(r["median"]),
            float(r["q3"]),
            float(r["max"]),
        )
        for r in rows
    ]


def properties_csv(rows: Sequence[Mapping[str, Any]]) -> str:
    buf = io.StringIO()
    fields = ["metric", "target", "n_defined", "consistency", "stability_std", "robustness_range"]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for r in rows:
        writer.writerow(
            [
                "" if r[f] is None else (repr(r[f]) if isinstance(r[f], float) else r[f])
                for f in fields
            ]
        )
    return buf.getvalue()
