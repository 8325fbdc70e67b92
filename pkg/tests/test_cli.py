import json

import numpy as np
import pytest

from pairfeat import cli, synthetic
from pairfeat.patch_descriptor import read_pfv1


@pytest.fixture(scope="module")
def dataset_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    synthetic.generate_dataset(root, classes=2, images_per_class=4, size=(160, 120), seed=3)
    return root


def config_dict(dataset_root, out_dir, **overrides):
    cfg = {
        "dataset_root": str(dataset_root),
        "output_dir": str(out_dir),
        "resize": [160, 120],
        "corner": {"max_points": 12, "min_points_target": 4},
        "descriptor": {"kind": "builtin", "dim": 64},
        "protocol": {"repeats": 2, "split": 0.5, "seed": 1},
        "classifiers": [{"kind": "knn", "k": 3}, {"kind": "forest", "trees": 20}],
        "run_id": "t",
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_load_config_defaults(tmp_path, dataset_root):
    path = write_config(tmp_path, {"dataset_root": str(dataset_root), "output_dir": str(tmp_path / "o")})
    cfg = cli.load_run_config(path)
    assert cfg.resize == (480, 360)
    assert cfg.mode == "paired"
    assert [cli.clf.config_kind(c) for c in cfg.classifiers] == ["knn", "svm_linear", "forest"]
    assert cfg.protocol.repeats == 50 and cfg.protocol.stratified


def test_load_config_overrides(tmp_path, dataset_root):
    path = write_config(tmp_path, config_dict(dataset_root, tmp_path / "o"))
    cfg = cli.load_run_config(path, seed=99, mode="horizontal")
    assert cfg.protocol.seed == 99 and cfg.mode == "horizontal"


def test_config_rejects_rbf_svm(tmp_path, dataset_root):
    raw = config_dict(dataset_root, tmp_path / "o", classifiers=[{"kind": "svm_rbf"}])
    path = write_config(tmp_path, raw)
    with pytest.raises(cli.ConfigError, match="svm_rbf"):
        cli.load_run_config(path)
    assert cli.main(["evaluate", "--config", str(path)]) == cli.EXIT_CONFIG


def test_config_rejects_missing_dataset(tmp_path):
    path = write_config(tmp_path, {"dataset_root": str(tmp_path / "void"), "output_dir": str(tmp_path)})
    assert cli.main(["detect", "--config", str(path)]) == cli.EXIT_CONFIG


def test_config_rejects_bad_mode(tmp_path, dataset_root):
    path = write_config(tmp_path, config_dict(dataset_root, tmp_path / "o", mode="sideways"))
    assert cli.main(["evaluate", "--config", str(path)]) == cli.EXIT_CONFIG


def test_detect_writes_csvs_and_summary(tmp_path, dataset_root):
    out = tmp_path / "out"
    path = write_config(tmp_path, config_dict(dataset_root, out))
    assert cli.main(["detect", "--config", str(path)]) == 0
    csvs = sorted(out.glob("corners/*/*.csv"))
    assert len(csvs) == 8
    summary = json.loads((out / "detect_summary.json").read_text())
    assert len(summary["images"]) == 8
    assert all(isinstance(s["flagged"], bool) for s in summary["images"])
    assert (out / "config_echo.json").exists()


def test_detect_flags_cornerless_image(tmp_path, dataset_root):
    import shutil

    root = tmp_path / "flat_ds"
    shutil.copytree(dataset_root, root)
    flat = np.full((120, 160), 100.0)
    from pairfeat.image_io import GrayImage, write_pgm

    write_pgm(GrayImage(flat), root / "class00" / "img099.pgm")
    out = tmp_path / "out_flagged"
    path = write_config(tmp_path, config_dict(root, out), name="flag.json")
    assert cli.main(["detect", "--config", str(path)]) == 0
    summary = json.loads((out / "detect_summary.json").read_text())
    flagged = {s["image_id"]: s for s in summary["images"]}["class00/img099"]
    assert flagged["n_points"] == 0 and flagged["flagged"]


def test_features_deterministic_pfv1(tmp_path, dataset_root):
    out = tmp_path / "outf"
    path = write_config(tmp_path, config_dict(dataset_root, out))
    assert cli.main(["features", "--config", str(path)]) == 0
    pfv = out / "t_features.pfv1"
    first = pfv.read_bytes()
    dim, entries = read_pfv1(pfv)
    assert dim == 64 and len(entries) > 0
    assert cli.main(["features", "--config", str(path)]) == 0
    assert pfv.read_bytes() == first


def test_features_import_round_trip(tmp_path, dataset_root):
    out = tmp_path / "outi"
    path = write_config(tmp_path, config_dict(dataset_root, out))
    assert cli.main(["features", "--config", str(path)]) == 0
    # feed the produced file back as an imported descriptor source
    raw = config_dict(
        dataset_root,
        tmp_path / "outi2",
        descriptor={"kind": "imported", "dim": 64, "import_path": str(out / "t_features.pfv1")},
    )
    path2 = write_config(tmp_path, raw, name="imp.json")
    assert cli.main(["features", "--config", str(path2)]) == 0
    assert (tmp_path / "outi2" / "t_features.pfv1").read_bytes() == (out / "t_features.pfv1").read_bytes()


def test_evaluate_reports_and_reproducibility(tmp_path, dataset_root):
    out = tmp_path / "oute"
    path = write_config(tmp_path, config_dict(dataset_root, out))
    assert cli.main(["evaluate", "--config", str(path), "--canonical"]) == 0
    report = json.loads((out / "t_report.json").read_text())
    assert set(report["classifiers"]) == {"knn", "forest"}
    for entry in report["classifiers"].values():
        assert entry["paired"]["avg"]["train_seconds"] == 0.0  # canonical zeroing
        assert set(entry["deltas_avg"]) == {"accuracy", "f1", "recall", "precision", "specificity"}
    timing = (out / "t_timing.csv").read_text().splitlines()
    assert timing[0] == "phase,mode,knn,forest"
    assert len(timing) == 5

    first = (out / "t_report.json").read_bytes()
    assert cli.main(["evaluate", "--config", str(path), "--canonical"]) == 0
    assert (out / "t_report.json").read_bytes() == first


def test_evaluate_from_echoed_config(tmp_path, dataset_root):
    out = tmp_path / "outecho"
    path = write_config(tmp_path, config_dict(dataset_root, out))
    assert cli.main(["evaluate", "--config", str(path), "--canonical"]) == 0
    echo = json.loads((out / "config_echo.json").read_text())
    echo["output_dir"] = str(tmp_path / "outecho2")
    path2 = write_config(tmp_path, echo, name="echo.json")
    assert cli.main(["evaluate", "--config", str(path2), "--canonical"]) == 0
    assert (tmp_path / "outecho2" / "t_report.json").read_bytes() == (out / "t_report.json").read_bytes()


def test_evaluate_horizontal_mode_included(tmp_path, dataset_root):
    out = tmp_path / "outh"
    cfg = config_dict(dataset_root, out, mode="horizontal", classifiers=[{"kind": "knn", "k": 3}])
    path = write_config(tmp_path, cfg)
    assert cli.main(["evaluate", "--config", str(path), "--canonical"]) == 0
    report = json.loads((out / "t_report.json").read_text())
    assert "horizontal" in report["classifiers"]["knn"]


def test_corrupt_image_is_data_error(tmp_path, dataset_root):
    import shutil

    root = tmp_path / "bad_ds"
    shutil.copytree(dataset_root, root)
    (root / "class00" / "broken.pgm").write_bytes(b"P5\n4 4\n255\n\x00")
    out = tmp_path / "outbad"
    path = write_config(tmp_path, config_dict(root, out), name="bad.json")
    assert cli.main(["detect", "--config", str(path)]) == cli.EXIT_DATA


def test_unknown_classifier_kind(tmp_path, dataset_root):
    raw = config_dict(dataset_root, tmp_path / "o", classifiers=[{"kind": "mlp"}])
    path = write_config(tmp_path, raw)
    assert cli.main(["evaluate", "--config", str(path)]) == cli.EXIT_CONFIG
