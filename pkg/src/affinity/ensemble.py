"""Split protocol, metrics and the ten-run evaluation harness.

The protocol mirrors the usual workflow: shuffle, hold out a quarter of the
rows, fit the hard-voting ensemble, score accuracy and per-group
precision/recall/F1 on the held-out part, and repeat with consecutive seeds
reporting the accuracy mean and per-group F1 min/max.  Wall-clock and
process-CPU timings are captured separately from the metrics so that equal
seeds reproduce metric files byte for byte.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .encoding import Dataset
from .errors import LengthMismatch, TooFewRows
from .models import VotingEnsembleClassifier


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.75
    seed: int = 0


def train_test_split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seeded uniform shuffle then split; both partitions stay non-empty."""
    n = len(ds.rows)
    if n < 2:
        raise TooFewRows(f"cannot split {n} rows")
    if not 0.0 < spec.train_fraction < 1.0:
        raise ValueError("train fraction must be strictly between 0 and 1")
    perm = np.random.default_rng(spec.seed).permutation(n)
    n_train = min(max(int(n * spec.train_fraction), 1), n - 1)
    meta = dict(ds.metadata)
    meta["split_seed"] = spec.seed
    train = Dataset(ds.dictionary, [ds.rows[i] for i in perm[:n_train]],
                    {**meta, "split_part": "train"})
    test = Dataset(ds.dictionary, [ds.rows[i] for i in perm[n_train:]],
                   {**meta, "split_part": "test"})
    return train, test


@dataclass
class EvaluationReport:
    """Metrics for one train/evaluate run."""

    accuracy: float
    labels: tuple[str, ...]  # sorted union of true and predicted labels
    confusion: np.ndarray  # rows: true, cols: predicted
    precision: dict[str, float]
    recall: dict[str, float]
    f1: dict[str, float]
    a_to_z_rate: float
    a_misrouted_rate: float
    seed: Optional[int] = None
    n_train: Optional[int] = None
    n_test: Optional[int] = None
    train_time_s: Optional[float] = None
    train_cpu_s: Optional[float] = None
    predict_time_s: Optional[float] = None
    predict_cpu_s: Optional[float] = None


def evaluate(y_true: Sequence[str], y_pred: Sequence[str]) -> EvaluationReport:
    """Accuracy, per-class precision/recall/F1 (zero-division guarded to 0),
    the confusion matrix over the label union, and the group-A error rates."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} true vs {len(y_pred)} predicted")
    if len(y_true) == 0:
        raise LengthMismatch("nothing to evaluate")
    labels = tuple(sorted(set(y_true) | set(y_pred)))
    index = {label: i for i, label in enumerate(labels)}
    k = len(labels)
    confusion = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        confusion[index[t], index[p]] += 1
    diag = np.diag(confusion).astype(float)
    col_sums = confusion.sum(axis=0)
    row_sums = confusion.sum(axis=1)
    precision = {}
    recall = {}
    f1 = {}
    for i, label in enumerate(labels):
        p = diag[i] / col_sums[i] if col_sums[i] else 0.0
        r = diag[i] / row_sums[i] if row_sums[i] else 0.0
        precision[label] = p
        recall[label] = r
        f1[label] = 2 * p * r / (p + r) if p + r > 0 else 0.0
    accuracy = float(diag.sum() / len(y_true))
    true_a = y_true == "A"
    n_a = int(true_a.sum())
    a_to_z = float((y_pred[true_a] == "Z").sum() / n_a) if n_a else 0.0
    a_misrouted = float((y_pred[true_a] != "A").sum() / n_a) if n_a else 0.0
    return EvaluationReport(accuracy, labels, confusion, precision, recall, f1,
                            a_to_z, a_misrouted)


def render_confusion_matrix(report: EvaluationReport) -> str:
    """Fixed-width table with true labels on rows, predictions on columns."""
    labels = report.labels
    cells = report.confusion
    width = max([len(f"pred:{l}") for l in labels] + [len(str(cells.max())) if cells.size else 1])
    head_width = max(len(f"true:{l}") for l in labels) if labels else 6
    lines = [" " * head_width + "  " + "  ".join(f"pred:{l}".rjust(width) for l in labels)]
    for i, label in enumerate(labels):
        row = "  ".join(str(int(cells[i, j])).rjust(width) for j in range(len(labels)))
        lines.append(f"true:{label}".ljust(head_width) + "  " + row)
    return "\n".join(lines)


def train_ensemble(train: Dataset, seed: int = 0) -> VotingEnsembleClassifier:
    """Fit the voting trio on an encoded dataset."""
    X, y, _ = train.to_matrix()
    return VotingEnsembleClassifier(seed=seed).fit(X, y)


def predict_ensemble(ensemble: VotingEnsembleClassifier, ds: Dataset) -> np.ndarray:
    X, _, _ = ds.to_matrix()
    return ensemble.predict(X)


@dataclass
class AggregateReport:
    """Ten-run style aggregate: accuracy mean, per-class F1 extremes."""

    runs: list[EvaluationReport]
    mean_accuracy: float
    f1_min: dict[str, float]
    f1_max: dict[str, float]
    mean_a_to_z_rate: float
    mean_a_misrouted_rate: float
    base_seed: int

    def metric_rows(self) -> list[tuple[str, str, float]]:
        """Deterministic (metric, class, value) triples; no timings here."""
        rows: list[tuple[str, str, float]] = [
            ("accuracy_mean", "", self.mean_accuracy),
            ("a_to_z_rate_mean", "A", self.mean_a_to_z_rate),
            ("a_misrouted_rate_mean", "A", self.mean_a_misrouted_rate),
        ]
        for label in sorted(self.f1_min):
            rows.append(("f1_min", label, self.f1_min[label]))
            rows.append(("f1_max", label, self.f1_max[label]))
        for i, run in enumerate(self.runs):
            rows.append((f"accuracy_run{i}", "", run.accuracy))
        return rows

    def timing_rows(self) -> list[tuple[str, str, float]]:
        rows = []
        for i, run in enumerate(self.runs):
            rows.append((f"train_time_s_run{i}", "", run.train_time_s))
            rows.append((f"train_cpu_s_run{i}", "", run.train_cpu_s))
            rows.append((f"predict_time_s_run{i}", "", run.predict_time_s))
            rows.append((f"predict_cpu_s_run{i}", "", run.predict_cpu_s))
        return rows

    def to_text(self) -> str:
        lines = [
            f"runs: {len(self.runs)}  base_seed: {self.base_seed}",
            f"mean accuracy: {self.mean_accuracy:.6f}",
            f"mean A->Z rate: {self.mean_a_to_z_rate:.6f}",
            f"mean A misrouted rate: {self.mean_a_misrouted_rate:.6f}",
            "per-class F1 over runs (min..max):",
        ]
        for label in sorted(self.f1_min):
            lines.append(f"  {label}: {self.f1_min[label]:.6f}..{self.f1_max[label]:.6f}")
        for i, run in enumerate(self.runs):
            lines.append("")
            lines.append(f"run {i} (seed {run.seed}): accuracy {run.accuracy:.6f}, "
                         f"train {run.n_train} rows, test {run.n_test} rows")
            lines.append(render_confusion_matrix(run))
        return "\n".join(lines) + "\n"


def run_protocol(ds: Dataset, runs: int = 10, base_seed: int = 0,
                 train_fraction: float = 0.75) -> AggregateReport:
    """Split/train/evaluate ``runs`` times with consecutive split seeds."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    reports: list[EvaluationReport] = []
    for r in range(runs):
        seed = base_seed + r
        train, test = train_test_split(ds, SplitSpec(train_fraction, seed))
        x_train, y_train, _ = train.to_matrix()
        x_test, y_test, _ = test.to_matrix()
        t_wall = time.perf_counter()
        t_cpu = time.process_time()
        ensemble = VotingEnsembleClassifier(seed=seed).fit(x_train, y_train)
        train_time = time.perf_counter() - t_wall
        train_cpu = time.process_time() - t_cpu
        t_wall = time.perf_counter()
        t_cpu = time.process_time()
        y_pred = ensemble.predict(x_test)
        predict_time = time.perf_counter() - t_wall
        predict_cpu = time.process_time() - t_cpu
        report = evaluate(y_test, y_pred)
        report.seed = seed
        report.n_train = len(train.rows)
        report.n_test = len(test.rows)
        report.train_time_s = train_time
        report.train_cpu_s = train_cpu
        report.predict_time_s = predict_time
        report.predict_cpu_s = predict_cpu
        reports.append(report)
    all_labels = sorted({label for rep in reports for label in rep.labels})
    f1_min = {}
    f1_max = {}
    for label in all_labels:
        values = [rep.f1[label] for rep in reports if label in rep.f1]
        f1_min[label] = min(values)
        f1_max[label] = max(values)
    return AggregateReport(
        runs=reports,
        mean_accuracy=float(np.mean([r.accuracy for r in reports])),
        f1_min=f1_min,
        f1_max=f1_max,
        mean_a_to_z_rate=float(np.mean([r.a_to_z_rate for r in reports])),
        mean_a_misrouted_rate=float(np.mean([r.a_misrouted_rate for r in reports])),
        base_seed=base_seed,
    )
