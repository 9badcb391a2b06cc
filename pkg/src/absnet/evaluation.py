"""Confusion matrix, precision/recall/accuracy, and regime comparison.

All metric arithmetic is exact (rational) on the raw counts; reports
render percentages at two decimals."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import torch

from .corpus.types import AbsLabel, ImageTextPair, Split
from .errors import EmptyMatrix, UnlabeledPair
from .training.batches import batch_tensors, encode_dataset
from .training.checkpoint import Checkpoint, rebuild_modules

# Reference row from the original experiments (full corpus, not
# reproducible at desk scale); reported alongside desk-scale results.
REFERENCE_ACCURACY = {"cl_transfer": "80.33", "cl_freeze": "77.33", "cl_scratch": "77.00"}

N_CLASSES = len(AbsLabel)


@dataclass
class ConfusionMatrix3:
    """counts[i][j] = pairs of true class i predicted as class j."""

    counts: list[list[int]] = field(
        default_factory=lambda: [[0] * N_CLASSES for _ in range(N_CLASSES)]
    )

    def add(self, true: AbsLabel, predicted: AbsLabel, n: int = 1) -> None:
        self.counts[true.index][predicted.index] += n

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def row_sum(self, i: int) -> int:
        return sum(self.counts[i])

    def column_sum(self, j: int) -> int:
        return sum(self.counts[i][j] for i in range(N_CLASSES))


def percent_string(value: Fraction) -> str:
    """Exact rendering of a fraction as a 2-decimal percentage
    (round half up)."""
    scaled = value.numerator * 10_000
    q, r = divmod(scaled, value.denominator)
    if 2 * r >= value.denominator:
        q += 1
    return f"{q // 100}.{q % 100:02d}"


@dataclass
class MetricsReport:
    regime: str
    counts: list[list[int]]
    precision: tuple[Fraction | None, ...]
    recall: tuple[Fraction | None, ...]
    accuracy: Fraction

    def precision_percent(self) -> tuple[str | None, ...]:
        return tuple(None if p is None else percent_string(p) for p in self.precision)

    def recall_percent(self) -> tuple[str | None, ...]:
        return tuple(None if r is None else percent_string(r) for r in self.recall)

    def accuracy_percent(self) -> str:
        return percent_string(self.accuracy)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "counts": self.counts,
            "class_order": [label.value for label in AbsLabel],
            "precision": [
                None if p is None else [p.numerator, p.denominator] for p in self.precision
            ],
            "recall": [
                None if r is None else [r.numerator, r.denominator] for r in self.recall
            ],
            "accuracy": [self.accuracy.numerator, self.accuracy.denominator],
            "precision_percent": list(self.precision_percent()),
            "recall_percent": list(self.recall_percent()),
            "accuracy_percent": self.accuracy_percent(),
        }


def metrics(cm: ConfusionMatrix3, regime: str = "") -> MetricsReport:
    """Exact per-class precision/recall and overall accuracy.

    A zero column (or row) makes that precision (or recall) undefined,
    reported as None rather than 0."""
    total = cm.total()
    if total == 0:
        raise EmptyMatrix("confusion matrix has zero total count")
    precision = []
    recall = []
    for k in range(N_CLASSES):
        column = cm.column_sum(k)
        row = cm.row_sum(k)
        precision.append(Fraction(cm.counts[k][k], column) if column else None)
        recall.append(Fraction(cm.counts[k][k], row) if row else None)
    trace = sum(cm.counts[k][k] for k in range(N_CLASSES))
    return MetricsReport(
        regime=regime,
        counts=[list(row) for row in cm.counts],
        precision=tuple(precision),
        recall=tuple(recall),
        accuracy=Fraction(trace, total),
    )


def evaluate(
    ckpt: Checkpoint,
    pairs: list[ImageTextPair],
    batch_size: int = 32,
) -> tuple[ConfusionMatrix3, list[dict]]:
    """Predict every labeled test pair and tally the confusion matrix.

    Returns the matrix and per-pair prediction records (pair_id,
    predicted label, three probabilities) in pair_id order."""
    test_pairs = [p for p in pairs if p.split == Split.TEST] or list(pairs)
    for pair in test_pairs:
        if pair.label is None:
            raise UnlabeledPair(f"test pair {pair.pair_id} has no label")
    test_pairs = sorted(test_pairs, key=lambda p: p.pair_id)

    modules, table = rebuild_modules(ckpt)
    if "classifier" not in modules or "encoder" not in modules:
        raise UnlabeledPair("checkpoint lacks encoder or classifier parameters")
    if ckpt.vocab is None:
        raise UnlabeledPair("checkpoint lacks a vocabulary")
    encoder, head = modules["encoder"], modules["classifier"]
    dataset = encode_dataset(test_pairs, ckpt.vocab, ckpt.run_config.encoder_config())

    cm = ConfusionMatrix3()
    records = []
    with torch.no_grad():
        for start in range(0, len(dataset), batch_size):
            indices = np.arange(start, min(start + batch_size, len(dataset)))
            images, ids, mask = batch_tensors(dataset, indices)
            logits = head(encoder(images, table[ids], mask))
            log_probs = torch.log_softmax(logits.double(), dim=-1)
            probs = torch.exp(log_probs).numpy()
            for row, i in enumerate(indices):
                predicted = AbsLabel.from_index(int(np.argmax(probs[row])))
                true = test_pairs[i].label
                cm.add(true, predicted)
                records.append(
                    {
                        "pair_id": dataset.pair_ids[i],
                        "true_label": true.value,
                        "predicted_label": predicted.value,
                        "probabilities": [float(p) for p in probs[row]],
                    }
                )
    return cm, records


def compare_regimes(reports: list[MetricsReport]) -> dict:
    """Accuracy per regime, ordered best-first (ties by regime name)."""
    if not reports:
        raise EmptyMatrix("no reports to compare")
    ordered = sorted(reports, key=lambda r: (-r.accuracy, r.regime))
    return {
        "rows": [
            {"regime": r.regime, "accuracy_percent": r.accuracy_percent()}
            for r in ordered
        ],
        "reference_accuracy_percent": dict(REFERENCE_ACCURACY),
    }


def render_report_markdown(report: MetricsReport) -> str:
    labels = [label.value for label in AbsLabel]
    lines = [
        f"# Evaluation report: {report.regime or 'classifier'}",
        "",
        "| true \\ predicted | " + " | ".join(labels) + " |",
        "|---|" + "---|" * N_CLASSES,
    ]
    for i, label in enumerate(labels):
        row = " | ".join(str(c) for c in report.counts[i])
        lines.append(f"| {label} | {row} |")
    prec = " | ".join(p if p is not None else "n/a" for p in report.precision_percent())
    rec = " | ".join(r if r is not None else "n/a" for r in report.recall_percent())
    lines += [
        f"| precision (%) | {prec} |",
        f"| recall (%) | {rec} |",
        "",
        f"Accuracy: {report.accuracy_percent()}%",
        "",
    ]
    return "\n".join(lines)


def render_comparison_markdown(comparison: dict) -> str:
    lines = [
        "# Regime comparison",
        "",
        "| regime | accuracy (%) |",
        "|---|---|",
    ]
    for row in comparison["rows"]:
        lines.append(f"| {row['regime']} | {row['accuracy_percent']} |")
    lines += [
        "",
        "Reference accuracies from the original full-corpus experiments "
        "(not reproducible at desk scale): "
        + ", ".join(f"{k} {v}%" for k, v in comparison["reference_accuracy_percent"].items()),
        "",
    ]
    return "\n".join(lines)


def write_evaluation_outputs(
    out_dir: str | Path,
    report: MetricsReport,
    records: list[dict],
) -> None:
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "report.json", "w", encoding="utf-8") as out:
        json.dump(report.to_dict(), out, indent=2, sort_keys=True)
        out.write("\n")
    (root / "report.md").write_text(render_report_markdown(report), encoding="utf-8")
    with open(root / "predictions.jsonl", "w", encoding="utf-8") as out:
        for record in records:
            out.write(json.dumps(record, sort_keys=True) + "\n")
