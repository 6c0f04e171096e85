"""Agreement metrics between expert labels and model predictions.

Confusion matrix (rows = gold, columns = predicted), per-class
precision/recall/F1/accuracy, overall accuracy, Cohen's kappa, and
Pearson/Spearman correlations over ordinal label codes. Degenerate
denominators yield None ("undefined"), never a silent zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

CORRELATION_NOTE = (
    "pearson_r/spearman_rho are computed over ordinal codes assigned by the "
    "fixed label order; interval correlation over nominal codes depends on "
    "that order"
)


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple[str, ...]
    counts: np.ndarray  # k x k, rows = gold, columns = prediction

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("confusion matrix must be square")
        if counts.shape[0] != len(self.labels):
            raise ValueError("matrix size must match the label list")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": self.counts.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ConfusionMatrix":
        return cls(labels=tuple(data["labels"]), counts=np.asarray(data["counts"]))


@dataclass(frozen=True)
class AgreementReport:
    labels: tuple[str, ...]
    per_class: dict[str, dict[str, float | None]]
    overall_accuracy: float
    kappa: float | None
    pearson_r: float | None
    spearman_rho: float | None
    n: int
    note: str = CORRELATION_NOTE

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "per_class": {k: dict(v) for k, v in self.per_class.items()},
            "overall_accuracy": self.overall_accuracy,
            "kappa": self.kappa,
            "pearson_r": self.pearson_r,
            "spearman_rho": self.spearman_rho,
            "n": self.n,
            "note": self.note,
        }

    def to_text_table(self) -> str:
        """Plain-text per-category table with an overall-accuracy footer row."""
        headers = ("Persona Category", "Precision", "Recall", "F1-Score", "Accuracy")
        name_width = max(len(headers[0]), max((len(l) for l in self.labels), default=0), 16)

        def fmt(value: float | None) -> str:
            return "undefined" if value is None else f"{value:.2f}"

        lines = [
            f"{headers[0]:<{name_width}}  {headers[1]:>9}  {headers[2]:>9}  "
            f"{headers[3]:>9}  {headers[4]:>9}"
        ]
        for label in self.labels:
            row = self.per_class[label]
            lines.append(
                f"{label:<{name_width}}  {fmt(row['precision']):>9}  {fmt(row['recall']):>9}  "
                f"{fmt(row['f1']):>9}  {fmt(row['accuracy']):>9}"
            )
        lines.append(
            f"{'Overall Accuracy':<{name_width}}  {'-':>9}  {'-':>9}  {'-':>9}  "
            f"{self.overall_accuracy:>9.2f}"
        )
        return "\n".join(lines)


def confusion(
    gold: Sequence[str], pred: Sequence[str], labels: Sequence[str]
) -> ConfusionMatrix:
    if len(gold) != len(pred):
        raise ValueError(f"gold/pred length mismatch: {len(gold)} vs {len(pred)}")
    if len(gold) == 0:
        raise ValueError("cannot build a confusion matrix from empty inputs")
    index = {label: i for i, label in enumerate(labels)}
    if len(index) != len(labels):
        raise ValueError("labels must be unique")
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g, p in zip(gold, pred):
        if g not in index:
            raise ValueError(f"unknown gold label: {g!r}")
        if p not in index:
            raise ValueError(f"unknown predicted label: {p!r}")
        counts[index[g], index[p]] += 1
    return ConfusionMatrix(labels=tuple(labels), counts=counts)


def class_metrics(matrix: ConfusionMatrix) -> tuple[dict[str, dict[str, float | None]], float]:
    """Per-class precision/recall/F1 and one-vs-rest accuracy, plus overall
    accuracy (trace/n). Zero-denominator cells come back as None."""
    counts = matrix.counts
    n = matrix.total
    if n == 0:
        raise ValueError("metrics are undefined for an empty matrix")
    row_sums = counts.sum(axis=1)
    col_sums = counts.sum(axis=0)
    per_class: dict[str, dict[str, float | None]] = {}
    for j, label in enumerate(matrix.labels):
        tp = int(counts[j, j])
        precision = tp / int(col_sums[j]) if col_sums[j] > 0 else None
        recall = tp / int(row_sums[j]) if row_sums[j] > 0 else None
        if precision is None or recall is None or (precision + recall) == 0:
            f1 = None
        else:
            f1 = 2 * precision * recall / (precision + recall)
        tn = n - int(row_sums[j]) - int(col_sums[j]) + tp
        per_class[label] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "accuracy": (tp + tn) / n,
        }
    overall = float(np.trace(counts)) / n
    return per_class, overall


def cohen_kappa(matrix: ConfusionMatrix) -> float | None:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e); None when p_e = 1."""
    n = matrix.total
    if n == 0:
        raise ValueError("kappa is undefined for an empty matrix")
    counts = matrix.counts.astype(np.float64)
    p_o = float(np.trace(counts)) / n
    row_sums = counts.sum(axis=1)
    col_sums = counts.sum(axis=0)
    p_e = float(np.dot(row_sums, col_sums)) / (n * n)
    if p_e == 1.0:
        return None
    return (p_o - p_e) / (1.0 - p_e)


def pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Product-moment correlation; None when either input has zero variance."""
    if len(x) != len(y):
        raise ValueError("inputs must have equal length")
    if len(x) < 2:
        raise ValueError("correlation requires at least two observations")
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    xd = xa - xa.mean()
    yd = ya - ya.mean()
    sxx = float(np.dot(xd, xd))
    syy = float(np.dot(yd, yd))
    if sxx == 0.0 or syy == 0.0:
        return None
    return float(np.dot(xd, yd)) / np.sqrt(sxx * syy)


def _midranks(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=np.float64)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        avg_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg_rank
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Rank correlation: Pearson over mid-ranks (ties get the average rank)."""
    if len(x) != len(y):
        raise ValueError("inputs must have equal length")
    if len(x) < 2:
        raise ValueError("correlation requires at least two observations")
    return pearson(_midranks(x), _midranks(y))


def encode_labels(sequence: Sequence[str], labels: Sequence[str]) -> list[int]:
    """Map labels to their ordinal position in the fixed label order."""
    index = {label: i for i, label in enumerate(labels)}
    try:
        return [index[v] for v in sequence]
    except KeyError as exc:
        raise ValueError(f"unknown label: {exc.args[0]!r}") from None


def agreement_report(
    gold: Sequence[str], pred: Sequence[str], labels: Sequence[str]
) -> AgreementReport:
    matrix = confusion(gold, pred, labels)
    per_class, overall = class_metrics(matrix)
    gold_codes = encode_labels(gold, labels)
    pred_codes = encode_labels(pred, labels)
    return AgreementReport(
        labels=tuple(labels),
        per_class=per_class,
        overall_accuracy=overall,
        kappa=cohen_kappa(matrix),
        pearson_r=pearson(gold_codes, pred_codes),
        spearman_rho=spearman(gold_codes, pred_codes),
        n=matrix.total,
    )
