"""Confusion matrices and the accuracy / balanced accuracy / macro-F1 metrics."""

from __future__ import annotations

import csv
import enum
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import linear_sum_assignment

from .trajectory import LEFT, RIGHT, THROUGH, UNKNOWN, format_float

log = logging.getLogger(__name__)

_CANONICAL = (LEFT, THROUGH, RIGHT)


class UnknownPolicy(str, enum.Enum):
    COUNT_AS_ERROR = "count-as-error"
    EXCLUDE = "exclude"


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are actual classes, columns predicted.

    Unknown predictions are kept out of ``counts``: ``unknown_by_class`` holds
    them per actual class. Under count-as-error they act as an extra column of
    false negatives; under exclude they are only reported.
    """

    classes: tuple[str, ...]
    counts: np.ndarray
    unknown_by_class: np.ndarray
    policy: UnknownPolicy = UnknownPolicy.COUNT_AS_ERROR

    @property
    def unknown_count(self) -> int:
        return int(self.unknown_by_class.sum())

    def _row_totals(self) -> np.ndarray:
        rows = self.counts.sum(axis=1)
        if self.policy is UnknownPolicy.COUNT_AS_ERROR:
            rows = rows + self.unknown_by_class
        return rows

    @property
    def total(self) -> int:
        return int(self._row_totals().sum())

    @classmethod
    def from_counts(cls, classes: Iterable[str], counts, unknown_by_class=None,
                    policy: UnknownPolicy | str = UnknownPolicy.COUNT_AS_ERROR) -> "ConfusionMatrix":
        classes = tuple(classes)
        counts = np.asarray(counts, dtype=np.int64)
        if len(set(classes)) != len(classes):
            raise EvaluationError("class names must be unique")
        if counts.shape != (len(classes), len(classes)):
            raise EvaluationError(f"counts shape {counts.shape} does not match {len(classes)} classes")
        if np.any(counts < 0):
            raise EvaluationError("counts must be non-negative")
        if unknown_by_class is None:
            unknown_by_class = np.zeros(len(classes), dtype=np.int64)
        return cls(classes, counts, np.asarray(unknown_by_class, dtype=np.int64), UnknownPolicy(policy))


def _order_classes(labels: Iterable[str]) -> tuple[str, ...]:
    labels = set(labels) - {UNKNOWN}
    head = [c for c in _CANONICAL if c in labels]
    return tuple(head + sorted(labels - set(head)))


def build_confusion(truth: Mapping[str, str], pred: Mapping[str, str],
                    unknown_policy: UnknownPolicy | str = UnknownPolicy.COUNT_AS_ERROR,
                    classes: Iterable[str] | None = None) -> ConfusionMatrix:
    """Tally predictions against ground truth.

    ``pred`` maps vehicle ids to labels (see ``ClassificationResult.labels``).
    Predicted labels that never occur in the truth get their own all-FP column.
    """
    policy = UnknownPolicy(unknown_policy)
    missing = [vid for vid in pred if vid not in truth]
    if missing:
        raise EvaluationError(f"{len(missing)} predicted ids have no ground truth, e.g. {missing[0]!r}")
    if any(truth[vid] == UNKNOWN for vid in pred):
        raise EvaluationError("ground truth cannot contain the Unknown label")
    if classes is None:
        classes = _order_classes([truth[v] for v in pred] + list(pred.values()))
    classes = tuple(classes)
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    unknown = np.zeros(len(classes), dtype=np.int64)
    for vid, label in pred.items():
        actual = index[truth[vid]]
        if label == UNKNOWN:
            unknown[actual] += 1
        else:
            counts[actual, index[label]] += 1
    return ConfusionMatrix(classes, counts, unknown, policy)


def accuracy(cm: ConfusionMatrix) -> float:
    total = cm.total
    if total == 0:
        raise EvaluationError("confusion matrix is empty")
    return float(np.trace(cm.counts)) / total


def recalls(cm: ConfusionMatrix) -> dict[str, float]:
    """Per-class recall; classes with no actual instances are left out."""
    rows = cm._row_totals()
    out = {}
    for i, c in enumerate(cm.classes):
        if rows[i] == 0:
            log.debug("class %s has no actual instances; excluded from macro recall", c)
            continue
        out[c] = float(cm.counts[i, i]) / float(rows[i])
    return out


def balanced_accuracy(cm: ConfusionMatrix) -> float:
    r = recalls(cm)
    if not r:
        raise EvaluationError("no class has actual instances")
    return float(np.mean(list(r.values())))


def f1_scores(cm: ConfusionMatrix) -> dict[str, float]:
    """Per-class F1, taken as 0 where precision or recall is 0/0.

    Under the exclude policy a class seen only through excluded Unknown
    predictions has nothing left to score and is left out.
    """
    rows = cm._row_totals()
    cols = cm.counts.sum(axis=0)
    out = {}
    for i, c in enumerate(cm.classes):
        if (cm.policy is UnknownPolicy.EXCLUDE and rows[i] == 0 and cols[i] == 0
                and cm.unknown_by_class[i] > 0):
            continue
        tp = float(cm.counts[i, i])
        if rows[i] == 0 or cols[i] == 0:
            log.debug("class %s: precision or recall undefined, F1 set to 0", c)
            out[c] = 0.0
            continue
        p = tp / cols[i]
        r = tp / rows[i]
        out[c] = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return out


def macro_f1(cm: ConfusionMatrix) -> float:
    f = f1_scores(cm)
    if not f:
        raise EvaluationError("confusion matrix has no classes")
    return float(np.mean(list(f.values())))


def align_labels(truth: Mapping[str, str], pred: Mapping[str, str]) -> dict[str, str]:
    """Map predicted cluster names onto truth labels to maximise agreement.

    Predicted names left without a partner map to themselves.
    """
    pred_names = sorted({p for p in pred.values() if p != UNKNOWN})
    true_names = sorted({truth[v] for v in pred})
    gain = np.zeros((len(pred_names), len(true_names)))
    pi = {p: i for i, p in enumerate(pred_names)}
    ti = {t: i for i, t in enumerate(true_names)}
    for vid, p in pred.items():
        if p != UNKNOWN:
            gain[pi[p], ti[truth[vid]]] += 1
    rows, cols = linear_sum_assignment(gain, maximize=True)
    mapping = {p: p for p in pred_names}
    for r, c in zip(rows, cols):
        mapping[pred_names[r]] = true_names[c]
    mapping[UNKNOWN] = UNKNOWN
    return mapping


def relabel(pred: Mapping[str, str], mapping: Mapping[str, str]) -> dict[str, str]:
    return {vid: mapping.get(label, label) for vid, label in pred.items()}


def metrics_report(cm: ConfusionMatrix) -> dict:
    return {
        "classes": list(cm.classes),
        "policy": cm.policy.value,
        "confusion": cm.counts.tolist(),
        "unknown_by_class": cm.unknown_by_class.tolist(),
        "unknown_count": cm.unknown_count,
        "total": cm.total,
        "accuracy": accuracy(cm),
        "balanced_accuracy": balanced_accuracy(cm),
        "macro_f1": macro_f1(cm),
        "recall": recalls(cm),
        "f1": f1_scores(cm),
    }


def _round_floats(obj):
    if isinstance(obj, float):
        return float(format_float(obj))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_floats(v) for v in obj]
    return obj


def report_json(report: Mapping) -> str:
    return json.dumps(_round_floats(dict(report)), indent=2) + "\n"


def report_table(report: Mapping) -> str:
    classes = report["classes"]
    header = ["actual \\ predicted", *classes, UNKNOWN, "recall", "F1"]
    rows = []
    for i, c in enumerate(classes):
        rows.append([c, *map(str, report["confusion"][i]), str(report["unknown_by_class"][i]),
                     format_float(report["recall"][c]) if c in report["recall"] else "-",
                     format_float(report["f1"][c])])
    widths = [max(len(r[k]) for r in [header, *rows]) for k in range(len(header))]
    lines = ["  ".join(cell.rjust(w) if k else cell.ljust(w) for k, (cell, w) in enumerate(zip(r, widths)))
             for r in [header, *rows]]
    lines.append("")
    lines.append(f"unknown policy     {report['policy']}")
    lines.append(f"evaluated          {report['total']}")
    lines.append(f"accuracy           {format_float(report['accuracy'])}")
    lines.append(f"balanced accuracy  {format_float(report['balanced_accuracy'])}")
    lines.append(f"macro F1           {format_float(report['macro_f1'])}")
    return "\n".join(lines) + "\n"


def load_labels(path: str | Path) -> dict[str, str]:
    """Read a CSV with ``vehicle_id`` and ``label`` columns (extra columns ignored)."""
    out: dict[str, str] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return out
        if "vehicle_id" not in reader.fieldnames or "label" not in reader.fieldnames:
            raise EvaluationError(f"{path}: expected columns vehicle_id,label")
        for row in reader:
            vid = row["vehicle_id"].strip()
            if vid in out:
                raise EvaluationError(f"{path}: duplicate vehicle_id {vid!r} on line {reader.line_num}")
            out[vid] = row["label"].strip()
    return out
