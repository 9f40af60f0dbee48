"""Utility metrics and the train-on-synthetic / test-on-real protocol."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Sequence

import numpy as np
from scipy.stats import rankdata

from . import generators
from .classifiers import (
    ClassifierKind,
    ClassifierSpec,
    FittedClassifier,
    predict_proba,
    train,
)
from .errors import SingleClass, SynthMetricError
from .fidelity import FidelityVector, evaluate_all
from .generators import GeneratorSpec
from .rng import derive_seed
from .tabular import Dataset, FoldPlan, stratified_kfold

__all__ = [
    "ClassifierKind",
    "ClassifierSpec",
    "ConfusionCounts",
    "FittedClassifier",
    "Strategy",
    "TstrResult",
    "UtilityReport",
    "auc_roc",
    "confusion_counts",
    "confusion_metrics",
    "evaluate_classifier",
    "fold_plan_for",
    "predict_proba",
    "run_tstr",
    "train",
]

log = logging.getLogger(__name__)


class Strategy(str, Enum):
    TSTR = "TSTR"
    TRTR = "TRTR"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def confusion_metrics(counts: ConfusionCounts) -> tuple[float, float, float]:
    """Return ``(precision, recall, f1)``; every 0/0 is taken as 0.0."""
    precision = _ratio(counts.tp, counts.tp + counts.fp)
    recall = _ratio(counts.tp, counts.tp + counts.fn)
    # harmonic mean of precision and recall, written in counts so exact cases stay exact
    f1 = _ratio(2.0 * counts.tp, 2.0 * counts.tp + counts.fp + counts.fn)
    return precision, recall, f1


def confusion_counts(y_true: np.ndarray, y_pred: np.ndarray) -> ConfusionCounts:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return ConfusionCounts(
        tp=int(np.sum((y_pred == 1) & (y_true == 1))),
        fp=int(np.sum((y_pred == 1) & (y_true == 0))),
        fn=int(np.sum((y_pred == 0) & (y_true == 1))),
        tn=int(np.sum((y_pred == 0) & (y_true == 0))),
    )


def auc_roc(scores: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray) -> float:
    """Mann-Whitney AUC with average ranks for tied scores."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC-ROC needs both classes")
    ranks = rankdata(scores, method="average")
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass(frozen=True)
class UtilityReport:
    strategy: Strategy
    classifier: ClassifierKind
    fold: int
    precision: float
    recall: float
    f1: float
    auc_roc: float
    counts: ConfusionCounts
    hyperparameters: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy.value,
            "classifier": self.classifier.value,
            "fold": self.fold,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc_roc": self.auc_roc,
            "confusion": {
                "tp": self.counts.tp,
                "fp": self.counts.fp,
                "fn": self.counts.fn,
                "tn": self.counts.tn,
            },
            "hyperparameters": dict(self.hyperparameters),
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> UtilityReport:
        return cls(
            strategy=Strategy(raw["strategy"]),
            classifier=ClassifierKind(raw["classifier"]),
            fold=int(raw["fold"]),
            precision=float(raw["precision"]),
            recall=float(raw["recall"]),
            f1=float(raw["f1"]),
            auc_roc=float(raw["auc_roc"]),
            counts=ConfusionCounts(**raw["confusion"]),
            hyperparameters=dict(raw["hyperparameters"]),
        )

    def sort_key(self) -> tuple[str, str, int]:
        return (self.strategy.value, self.classifier.value, self.fold)


def evaluate_classifier(
    model: FittedClassifier, test: Dataset, strategy: Strategy, fold: int
) -> UtilityReport:
    proba = predict_proba(model, test)
    counts = confusion_counts(test.labels, (proba > 0.5).astype(np.int64))
    precision, recall, f1 = confusion_metrics(counts)
    return UtilityReport(
        strategy=strategy,
        classifier=model.spec.kind,
        fold=fold,
        precision=precision,
        recall=recall,
        f1=f1,
        auc_roc=auc_roc(proba, test.labels),
        counts=counts,
        hyperparameters=dict(model.spec.hyperparameters),
    )


@dataclass(frozen=True)
class TstrResult:
    reports: list[UtilityReport]
    fidelity: list[FidelityVector]
    plan: FoldPlan

    def tstr_means(self, fold: int) -> tuple[float, float]:
        """Mean TSTR (recall, f1) over classifiers for one fold."""
        rows = [r for r in self.reports if r.strategy is Strategy.TSTR and r.fold == fold]
        return (
            float(np.mean([r.recall for r in rows])),
            float(np.mean([r.f1 for r in rows])),
        )


def fold_plan_for(real: Dataset, k: int, seed: int) -> FoldPlan:
    """The fold plan shared by every generator evaluated on ``real``."""
    return stratified_kfold(real, k, derive_seed(seed, "folds"))


def run_tstr(
    real: Dataset,
    gen_spec: GeneratorSpec | None,
    classifiers: Sequence[ClassifierSpec],
    k: int,
    seed: int,
    *,
    generator_id: str | None = None,
    external: Dataset | None = None,
    trtr: bool = True,
) -> TstrResult:
    """Run TSTR (and the TRTR reference) over ``k`` stratified folds of ``real``.

    For each fold the generator is fitted on the real training split and
    sampled to the same (balanced) size; fidelity is measured against that
    training split and every classifier is scored on the held-out real fold.
    When ``external`` is given it replaces the generator and is reused for
    every fold.
    """
    if (gen_spec is None) == (external is None):
        raise ValueError("pass exactly one of gen_spec or external")
    gen_key = generator_id or (gen_spec.kind.value if gen_spec else "external")
    plan = fold_plan_for(real, k, seed)
    reports: list[UtilityReport] = []
    fidelity: list[FidelityVector] = []
    for fold in range(k):
        try:
            train_real = real.subset(plan.train_index(fold))
            test_real = real.subset(plan.test_index(fold))
            if external is not None:
                syn = external
            else:
                fitted = generators.fit(gen_spec, train_real)
                syn = generators.sample(
                    fitted, train_real.n // 2, derive_seed(seed, "generator", gen_key, fold)
                )
            fidelity.append(
                evaluate_all(train_real, syn, derive_seed(seed, "pmse", gen_key, fold))
            )
            for spec in classifiers:
                model_seed = derive_seed(seed, "classifier", spec.kind.value, fold)
                reports.append(
                    evaluate_classifier(train(spec, syn, model_seed), test_real, Strategy.TSTR, fold)
                )
                if trtr:
                    reports.append(
                        evaluate_classifier(
                            train(spec, train_real, model_seed), test_real, Strategy.TRTR, fold
                        )
                    )
            log.debug("fold %d of %s done", fold, gen_key)
        except SynthMetricError as exc:
            exc.fold = fold
            raise
    reports.sort(key=UtilityReport.sort_key)
    return TstrResult(reports, fidelity, plan)
