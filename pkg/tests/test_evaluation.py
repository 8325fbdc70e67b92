import numpy as np
import pytest

from pairfeat.classifiers import ImageFeatures, KnnConfig, LabeledDataset
from pairfeat.evaluation import (
    METRIC_NAMES,
    ProtocolConfig,
    average_confusion,
    compare_modes,
    metrics_from_confusion,
    run_protocol,
    split_images,
)
from pairfeat.pairing import JointFeatureMap, make_joint_map
from pairfeat.patch_descriptor import FeatureRecord


def oracle_metrics(cm):
    """Independent scalar reference for the one-vs-rest macro metrics."""
    cm = [[int(v) for v in row] for row in cm]
    k = len(cm)
    total = sum(sum(row) for row in cm)
    acc = f1 = rec = prec = spec = 0.0
    for c in range(k):
        tp = cm[c][c]
        fn = sum(cm[c]) - tp
        fp = sum(cm[r][c] for r in range(k)) - tp
        tn = total - tp - fn - fp
        acc += (tp + tn) / total
        spec += tn / (tn + fp) if tn + fp else 1.0
        rec += tp / (tp + fn) if tp + fn else 0.0
        prec += tp / (tp + fp) if tp + fp else 0.0
        f1 += 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
    return {
        "accuracy": acc / k,
        "f1": f1 / k,
        "recall": rec / k,
        "precision": prec / k,
        "specificity": spec / k,
    }


def toy_dataset(n_classes=3, images_per_class=6, dim=4, sep=8.0, seed=0):
    """Well-separated per-class feature clouds wrapped as a LabeledDataset."""
    rng = np.random.default_rng(seed)
    items = []
    for c in range(n_classes):
        center = np.zeros(dim)
        center[c % dim] = sep * (1 + c // dim)
        for i in range(images_per_class):
            pts = rng.uniform(0.0, 100.0, (5, 2))
            image_id = f"c{c}i{i}"
            records = [
                FeatureRecord(image_id, (float(x), float(y)), "original", rng.normal(center, 0.5, dim))
                for x, y in pts
            ]
            maps = {}
            fallback = False
            for mode in ("paired", "non_paired", "horizontal"):
                maps[mode], used = make_joint_map(records, pts, mode, horizontal_slots=5)
                fallback |= used
            items.append((ImageFeatures(image_id, pts, tuple(records), maps, fallback), c))
    return LabeledDataset(items, class_count=n_classes)


def test_metrics_hand_derived_case():
    r = metrics_from_confusion([[5, 5], [0, 10]])
    assert r.accuracy == pytest.approx(0.75, abs=1e-15)
    assert r.recall == pytest.approx(0.75, abs=1e-15)
    assert r.precision == pytest.approx(5.0 / 6.0, abs=1e-15)
    assert r.f1 == pytest.approx(11.0 / 15.0, abs=1e-15)
    assert r.specificity == pytest.approx(0.75, abs=1e-15)
    assert r.per_class["recall"] == [0.5, 1.0]
    assert r.per_class["precision"] == [1.0, pytest.approx(2.0 / 3.0)]
    assert r.degenerate_classes == []


def test_metrics_perfect_diagonal():
    r = metrics_from_confusion(np.eye(3, dtype=int) * 7)
    for name in METRIC_NAMES:
        assert r.metric(name) == 1.0


def test_metrics_single_class_flagged():
    r = metrics_from_confusion([[7]])
    assert r.accuracy == 1.0 and r.specificity == 1.0
    assert r.degenerate_classes == [0]


def test_metrics_all_zero_rejected():
    with pytest.raises(ValueError):
        metrics_from_confusion(np.zeros((3, 3), dtype=int))


def test_metrics_match_oracle_on_random_matrices():
    rng = np.random.default_rng(13)
    for _ in range(300):
        k = int(rng.integers(1, 26))
        cm = rng.integers(0, 101, (k, k))
        if cm.sum() == 0:
            cm[0, 0] = 1
        ours = metrics_from_confusion(cm)
        ref = oracle_metrics(cm)
        for name in METRIC_NAMES:
            assert abs(ours.metric(name) - ref[name]) <= 1e-12


def test_split_stratified_counts():
    labels = np.repeat(np.arange(3), 20)
    train, test = split_images(labels, ProtocolConfig(repeats=1, split=0.5, seed=4), 0)
    assert len(train) == len(test) == 30
    for c in range(3):
        assert (labels[train] == c).sum() == 10
        assert (labels[test] == c).sum() == 10
    assert not set(train) & set(test)


def test_split_floor_rule_odd_counts():
    labels = np.repeat(np.arange(2), 5)
    train, test = split_images(labels, ProtocolConfig(split=0.5, seed=0), 0)
    for c in range(2):
        assert (labels[train] == c).sum() == 2  # floor(5 * 0.5)
        assert (labels[test] == c).sum() == 3


def test_protocol_memorization_with_duplicate_images():
    # two identical images per class: the test half always has an exact twin
    rng = np.random.default_rng(14)
    items = []
    for c in range(3):
        vec = rng.standard_normal(4)
        for i in range(2):
            image_id = f"c{c}i{i}"
            rows = tuple([FeatureRecord(image_id, (0.0, 0.0), "original", vec.copy())])
            jmap = JointFeatureMap(image_id, rows, 4)
            items.append((ImageFeatures(image_id, np.zeros((1, 2)), rows, {"non_paired": jmap}), c))
    ds = LabeledDataset(items, class_count=3)
    result = run_protocol(ds, "non_paired", KnnConfig(k=1), ProtocolConfig(repeats=4, seed=1))
    for cm in result.confusions:
        assert np.trace(cm) == cm.sum()
    assert result.avg.accuracy == 1.0


def test_protocol_single_repeat_avg_equals_max():
    ds = toy_dataset()
    result = run_protocol(ds, "paired", KnnConfig(k=3), ProtocolConfig(repeats=1, seed=2))
    for name in METRIC_NAMES:
        assert result.avg.metric(name) == result.max.metric(name)


def test_protocol_avg_below_max_and_confusion_totals():
    ds = toy_dataset(images_per_class=5, sep=2.0, seed=3)
    proto = ProtocolConfig(repeats=5, seed=7)
    result = run_protocol(ds, "paired", KnnConfig(k=3), proto)
    for name in METRIC_NAMES:
        assert result.avg.metric(name) <= result.max.metric(name) + 1e-12
    _, test_idx = split_images(ds.labels, proto, 0)
    for cm in result.confusions:
        assert cm.sum() == len(test_idx)
        assert result.avg.train_seconds > 0.0 and result.avg.test_seconds > 0.0


def test_protocol_bit_reproducible():
    ds = toy_dataset(seed=4)
    proto = ProtocolConfig(repeats=3, seed=9)
    a = run_protocol(ds, "paired", KnnConfig(k=3), proto)
    b = run_protocol(ds, "paired", KnnConfig(k=3), proto)
    for cm_a, cm_b in zip(a.confusions, b.confusions):
        assert np.array_equal(cm_a, cm_b)
    for name in METRIC_NAMES:
        assert a.avg.metric(name) == b.avg.metric(name)


def test_protocol_rejects_thin_classes():
    ds = toy_dataset(images_per_class=2)
    items = [item for item in ds.items if not (item[1] == 0 and item[0].image_id.endswith("i1"))]
    thin = LabeledDataset(items, class_count=3)
    with pytest.raises(ValueError):
        run_protocol(thin, "paired", KnnConfig(), ProtocolConfig(repeats=1))


def test_compare_modes_identical_rows_zero_delta():
    # single-point images: no edges, so paired rows equal the originals
    rng = np.random.default_rng(15)
    items = []
    for c in range(2):
        for i in range(4):
            image_id = f"c{c}i{i}"
            vec = rng.normal(c * 6.0, 0.5, 4)
            records = [FeatureRecord(image_id, (1.0, 1.0), "original", vec)]
            maps = {}
            for mode in ("paired", "non_paired"):
                maps[mode], _ = make_joint_map(records, [(1.0, 1.0)], mode)
            items.append((ImageFeatures(image_id, np.ones((1, 2)), tuple(records), maps), c))
    ds = LabeledDataset(items, class_count=2)
    report = compare_modes(ds, KnnConfig(k=1), ProtocolConfig(repeats=3, seed=0))
    for name in METRIC_NAMES:
        assert report.deltas_avg[name] == 0.0
        assert report.deltas_max[name] == 0.0


def test_compare_modes_row_count_superset():
    ds = toy_dataset(seed=5)
    for feats, _ in ds.items:
        assert len(feats.map_for("paired")) >= len(feats.map_for("non_paired"))


def test_compare_modes_full_delta_table():
    ds = toy_dataset(images_per_class=4, seed=6)
    report = compare_modes(ds, KnnConfig(k=3), ProtocolConfig(repeats=2, seed=3))
    assert set(report.deltas_avg) == set(METRIC_NAMES)
    assert set(report.deltas_max) == set(METRIC_NAMES)
    assert len(report.paired.confusions) == 2


def test_average_confusion_row_normalization():
    mats = [np.array([[2, 0], [1, 1]]), np.array([[4, 0], [1, 3]])]
    mean, norm = average_confusion(mats)
    assert mean.tolist() == [[3.0, 0.0], [1.0, 2.0]]
    assert norm[0].tolist() == [1.0, 0.0]
    assert norm[1].tolist() == [pytest.approx(1.0 / 3.0), pytest.approx(2.0 / 3.0)]


def test_seconds_cell_display_floor():
    from pairfeat.evaluation import _seconds_cell

    assert _seconds_cell(0.004, canonical=False) == "0.01"  # positive stays visible
    assert _seconds_cell(1.239, canonical=False) == "1.24"
    assert _seconds_cell(0.0, canonical=False) == "0.00"
    assert _seconds_cell(5.0, canonical=True) == "0.00"
