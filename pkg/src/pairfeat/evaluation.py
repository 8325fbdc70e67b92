"""Repeated-split evaluation protocol, confusion-matrix metrics, reports.

Each repeat reshuffles the images with its own derived seed, splits them
per class at the configured ratio (train count floored, remainder tested),
trains on all rows of the training images, and scores whole images through
majority voting. Metrics are macro-averaged over one-vs-rest reductions of
the confusion matrix. Splits are by image: rows of one image never
straddle the train/test boundary.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .classifiers import (
    LabeledDataset,
    config_kind,
    predict_image,
    train_for_config,
)

METRIC_NAMES = ("accuracy", "f1", "recall", "precision", "specificity")


@dataclass
class MetricsReport:
    """Macro-averaged metrics plus the per-class breakdown and timings."""

    accuracy: float
    f1: float
    recall: float
    precision: float
    specificity: float
    per_class: dict[str, list[float]]
    degenerate_classes: list[int] = field(default_factory=list)
    train_seconds: float = 0.0
    test_seconds: float = 0.0

    def metric(self, name: str) -> float:
        return getattr(self, name)

    def as_dict(self, canonical: bool = False) -> dict:
        d = {name: self.metric(name) for name in METRIC_NAMES}
        d["per_class"] = self.per_class
        d["degenerate_classes"] = self.degenerate_classes
        d["train_seconds"] = 0.0 if canonical else round(self.train_seconds, 2)
        d["test_seconds"] = 0.0 if canonical else round(self.test_seconds, 2)
        return d


@dataclass(frozen=True)
class ProtocolConfig:
    repeats: int = 50
    split: float = 0.5
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if not 0.0 < self.split < 1.0:
            raise ValueError("split fraction must be in (0, 1)")


class ProtocolResult(NamedTuple):
    avg: MetricsReport
    max: MetricsReport
    confusions: list[np.ndarray]


@dataclass
class ComparisonReport:
    classifier: str
    paired: ProtocolResult
    non_paired: ProtocolResult
    deltas_avg: dict[str, float]
    deltas_max: dict[str, float]


def metrics_from_confusion(cm) -> MetricsReport:
    """Apply the standard one-vs-rest metric formulas to a count grid.

    Per class: TP is the diagonal entry, FN the rest of its row, FP the
    rest of its column, TN everything else. Classes with no positives
    score recall/f1 as 0 and are flagged; specificity with no negatives
    reports 1 and is flagged.
    """
    cm = np.asarray(cm, dtype=np.int64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] == 0:
        raise ValueError("confusion matrix must be a square non-empty grid")
    if (cm < 0).any():
        raise ValueError("confusion matrix counts must be non-negative")
    total = int(cm.sum())
    if total == 0:
        raise ValueError("confusion matrix is all zeros")

    k = cm.shape[0]
    per: dict[str, list[float]] = {name: [] for name in METRIC_NAMES}
    degenerate = []
    for c in range(k):
        tp = int(cm[c, c])
        fn = int(cm[c].sum()) - tp
        fp = int(cm[:, c].sum()) - tp
        tn = total - tp - fn - fp
        flagged = False

        per["accuracy"].append((tp + tn) / total)
        if tn + fp > 0:
            per["specificity"].append(tn / (tn + fp))
        else:
            per["specificity"].append(1.0)
            flagged = True
        if tp + fn > 0:
            per["recall"].append(tp / (tp + fn))
        else:
            per["recall"].append(0.0)
            flagged = True
        if tp + fp > 0:
            per["precision"].append(tp / (tp + fp))
        else:
            per["precision"].append(0.0)
            flagged = True
        if 2 * tp + fp + fn > 0:
            per["f1"].append(2 * tp / (2 * tp + fp + fn))
        else:
            per["f1"].append(0.0)
            flagged = True
        if flagged:
            degenerate.append(c)

    macro = {name: float(np.mean(per[name])) for name in METRIC_NAMES}
    return MetricsReport(per_class=per, degenerate_classes=degenerate, **macro)


def _average_reports(reports: list[MetricsReport]) -> MetricsReport:
    k = len(reports[0].per_class["accuracy"])
    per = {
        name: [float(np.mean([r.per_class[name][c] for r in reports])) for c in range(k)]
        for name in METRIC_NAMES
    }
    macro = {name: float(np.mean([r.metric(name) for r in reports])) for name in METRIC_NAMES}
    flagged = sorted({c for r in reports for c in r.degenerate_classes})
    return MetricsReport(
        per_class=per,
        degenerate_classes=flagged,
        train_seconds=float(np.mean([r.train_seconds for r in reports])),
        test_seconds=float(np.mean([r.test_seconds for r in reports])),
        **macro,
    )


def _max_reports(reports: list[MetricsReport]) -> MetricsReport:
    k = len(reports[0].per_class["accuracy"])
    per = {
        name: [float(np.max([r.per_class[name][c] for r in reports])) for c in range(k)]
        for name in METRIC_NAMES
    }
    macro = {name: float(np.max([r.metric(name) for r in reports])) for name in METRIC_NAMES}
    flagged = sorted({c for r in reports for c in r.degenerate_classes})
    return MetricsReport(
        per_class=per,
        degenerate_classes=flagged,
        train_seconds=float(np.max([r.train_seconds for r in reports])),
        test_seconds=float(np.max([r.test_seconds for r in reports])),
        **macro,
    )


def split_images(labels: np.ndarray, proto: ProtocolConfig, repeat: int) -> tuple[np.ndarray, np.ndarray]:
    """Image indices for one repeat's train/test halves.

    The train side takes floor(count * split) images (per class when
    stratified), the remainder tests. Seeded by proto.seed + repeat.
    """
    rng = np.random.default_rng(proto.seed + repeat)
    if proto.stratified:
        train, test = [], []
        for c in np.unique(labels):
            idx = np.nonzero(labels == c)[0]
            perm = idx[rng.permutation(idx.shape[0])]
            n_train = int(np.floor(perm.shape[0] * proto.split))
            train.append(perm[:n_train])
            test.append(perm[n_train:])
        return np.concatenate(train), np.concatenate(test)
    perm = rng.permutation(labels.shape[0])
    n_train = int(np.floor(labels.shape[0] * proto.split))
    return perm[:n_train], perm[n_train:]


def _training_rows(ds: LabeledDataset, mode: str, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mats, ys = [], []
    for i in idx:
        feats, label = ds.items[i]
        m = feats.map_for(mode)
        mats.append(m.matrix())
        ys.append(np.full(len(m), label, dtype=np.intp))
    return np.vstack(mats), np.concatenate(ys)


def run_protocol(ds: LabeledDataset, mode: str, clf_cfg, proto: ProtocolConfig) -> ProtocolResult:
    """Shuffle/split/train/test `repeats` times; average and max reports.

    Deterministic for a fixed base seed: repeat r splits with seed
    proto.seed + r and feeds the same value into the classifier's own
    randomness.
    """
    labels = ds.labels
    counts = np.bincount(labels, minlength=ds.class_count)
    thin = np.nonzero((counts > 0) & (counts < 2))[0]
    if proto.stratified and thin.size:
        raise ValueError(f"classes {thin.tolist()} have fewer than 2 images")

    reports: list[MetricsReport] = []
    confusions: list[np.ndarray] = []
    for r in range(proto.repeats):
        train_idx, test_idx = split_images(labels, proto, r)
        x, y = _training_rows(ds, mode, train_idx)

        t0 = time.perf_counter()
        model = train_for_config(x, y, ds.class_count, clf_cfg, seed=proto.seed + r)
        train_seconds = time.perf_counter() - t0

        cm = np.zeros((ds.class_count, ds.class_count), dtype=np.int64)
        t0 = time.perf_counter()
        for i in test_idx:
            feats, label = ds.items[i]
            pred, _conf = predict_image(model, feats.map_for(mode))
            cm[label, pred] += 1
        test_seconds = time.perf_counter() - t0

        report = metrics_from_confusion(cm)
        report.train_seconds = train_seconds
        report.test_seconds = test_seconds
        reports.append(report)
        confusions.append(cm)
    return ProtocolResult(_average_reports(reports), _max_reports(reports), confusions)


def compare_modes(ds: LabeledDataset, clf_cfg, proto: ProtocolConfig) -> ComparisonReport:
    """Paired vs non-paired runs on identical splits, with metric deltas."""
    paired = run_protocol(ds, "paired", clf_cfg, proto)
    non_paired = run_protocol(ds, "non_paired", clf_cfg, proto)
    deltas_avg = {
        name: paired.avg.metric(name) - non_paired.avg.metric(name) for name in METRIC_NAMES
    }
    deltas_max = {
        name: paired.max.metric(name) - non_paired.max.metric(name) for name in METRIC_NAMES
    }
    return ComparisonReport(config_kind(clf_cfg), paired, non_paired, deltas_avg, deltas_max)


# --- report files -----------------------------------------------------------

def average_confusion(confusions: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Mean raw-count matrix and its row-normalized variant."""
    mean = np.mean(confusions, axis=0)
    sums = mean.sum(axis=1, keepdims=True)
    normalized = np.divide(mean, sums, out=np.zeros_like(mean), where=sums > 0)
    return mean, normalized


def protocol_as_dict(result: ProtocolResult, canonical: bool = False) -> dict:
    return {
        "avg": result.avg.as_dict(canonical),
        "max": result.max.as_dict(canonical),
        "confusions": [cm.tolist() for cm in result.confusions],
    }


def comparison_as_dict(rep: ComparisonReport, canonical: bool = False) -> dict:
    return {
        "classifier": rep.classifier,
        "paired": protocol_as_dict(rep.paired, canonical),
        "non_paired": protocol_as_dict(rep.non_paired, canonical),
        "deltas_avg": rep.deltas_avg,
        "deltas_max": rep.deltas_max,
    }


def write_json(path, obj: dict) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _seconds_cell(value: float, canonical: bool) -> str:
    # two-decimal display; positive sub-centisecond durations floor at 0.01
    if canonical:
        return "0.00"
    if value > 0.0:
        return f"{max(value, 0.01):.2f}"
    return "0.00"


def write_metrics_csv(path, rows: dict[str, MetricsReport], canonical: bool = False) -> None:
    """One CSV row per label (classifier/mode combination)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", *METRIC_NAMES, "train_seconds", "test_seconds"])
        for label, report in rows.items():
            row = [label] + [f"{report.metric(name):.6f}" for name in METRIC_NAMES]
            row += [
                _seconds_cell(report.train_seconds, canonical),
                _seconds_cell(report.test_seconds, canonical),
            ]
            writer.writerow(row)


def _cell(v) -> str:
    return str(int(v)) if float(v).is_integer() else f"{float(v):.6f}"


def write_confusion_csv(path, matrix: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(matrix):
            writer.writerow([_cell(v) for v in row])


def write_timing_csv(path, comparisons: dict[str, ComparisonReport], canonical: bool = False) -> None:
    """Training/testing seconds per classifier for both modes."""
    names = list(comparisons)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phase", "mode", *names])
        for phase, attr in (("train", "train_seconds"), ("test", "test_seconds")):
            for mode in ("non_paired", "paired"):
                row = [phase, mode]
                for name in names:
                    result = getattr(comparisons[name], mode)
                    row.append(_seconds_cell(getattr(result.avg, attr), canonical))
                writer.writerow(row)
