"""Batch command-line front end: detect, features, evaluate.

Runs are driven by a JSON config (schema documented in the README) with a
few flag overrides. The dataset layout is one subdirectory per class with
PGM/PNG images inside; class labels follow the sorted subdirectory names.
Exit codes: 0 success, 2 config error, 3 data error, 4 pipeline error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classifiers as clf
from . import corner_detect, evaluation, image_io, pairing, patch_descriptor

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PIPELINE = 4

IMAGE_SUFFIXES = (".pgm", ".png")


class ConfigError(Exception):
    """Bad or inconsistent run configuration."""


class DataError(Exception):
    """Dataset layout or content problems."""


@dataclass
class RunConfig:
    dataset_root: Path
    output_dir: Path
    resize: tuple[int, int] = (480, 360)
    corner: corner_detect.CornerConfig = field(default_factory=corner_detect.CornerConfig)
    descriptor: patch_descriptor.DescriptorSource = field(
        default_factory=patch_descriptor.DescriptorSource
    )
    mode: str = pairing.MODE_PAIRED
    classifiers: list = field(default_factory=lambda: [clf.KnnConfig(), clf.LinearSvmConfig(), clf.ForestConfig()])
    protocol: evaluation.ProtocolConfig = field(default_factory=evaluation.ProtocolConfig)
    run_id: str = "run"

    def to_dict(self) -> dict:
        desc = {"kind": self.descriptor.kind, "dim": self.descriptor.dim}
        if self.descriptor.import_path is not None:
            desc["import_path"] = str(self.descriptor.import_path)
        return {
            "dataset_root": str(self.dataset_root),
            "output_dir": str(self.output_dir),
            "resize": list(self.resize),
            "corner": {
                "max_points": self.corner.max_points,
                "min_points_target": self.corner.min_points_target,
                "quality_ratio": self.corner.quality_ratio,
                "min_distance": self.corner.min_distance,
                "window_radius": self.corner.window_radius,
            },
            "descriptor": desc,
            "mode": self.mode,
            "classifiers": [_classifier_dict(c) for c in self.classifiers],
            "protocol": {
                "repeats": self.protocol.repeats,
                "split": self.protocol.split,
                "seed": self.protocol.seed,
                "stratified": self.protocol.stratified,
            },
            "run_id": self.run_id,
        }


def _classifier_dict(cfg) -> dict:
    kind = clf.config_kind(cfg)
    if kind == "knn":
        return {"kind": kind, "k": cfg.k}
    if kind == "svm_linear":
        return {
            "kind": kind,
            "regularization": cfg.regularization,
            "tolerance": cfg.tolerance,
            "max_epochs": cfg.max_epochs,
        }
    return {
        "kind": kind,
        "trees": cfg.trees,
        "max_depth": cfg.max_depth,
        "features_per_split": cfg.features_per_split,
        "seed": cfg.seed,
    }


def parse_classifier(d: dict):
    kind = d.get("kind")
    try:
        if kind == "knn":
            return clf.KnnConfig(k=d.get("k", 21))
        if kind == "svm_linear":
            return clf.LinearSvmConfig(
                regularization=d.get("regularization", 1.0),
                tolerance=d.get("tolerance", 0.001),
                max_epochs=d.get("max_epochs", 200),
            )
        if kind == "forest":
            return clf.ForestConfig(
                trees=d.get("trees", 200),
                max_depth=d.get("max_depth", 21),
                features_per_split=d.get("features_per_split"),
                seed=d.get("seed", 0),
            )
    except ValueError as exc:
        raise ConfigError(f"bad {kind} classifier config: {exc}") from None
    if kind == "svm_rbf":
        raise ConfigError("svm_rbf (RBF-kernel SVM with one-vs-one decisions) is not supported")
    raise ConfigError(f"unknown classifier kind {kind!r}")


def load_run_config(path, seed: int | None = None, mode: str | None = None) -> RunConfig:
    """Parse the config file, fill defaults, apply flag overrides."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    for key in ("dataset_root", "output_dir"):
        if key not in raw:
            raise ConfigError(f"config {path} is missing {key!r}")
    try:
        corner = corner_detect.CornerConfig(**raw.get("corner", {}))
        desc_raw = dict(raw.get("descriptor", {}))
        if "import_path" in desc_raw:
            desc_raw["import_path"] = Path(desc_raw["import_path"])
        if desc_raw.get("kind") == "imported":
            desc_raw.setdefault("dim", patch_descriptor.DEFAULT_IMPORT_DIM)
        descriptor = patch_descriptor.DescriptorSource(**desc_raw)
        protocol = evaluation.ProtocolConfig(**raw.get("protocol", {}))
        classifier_cfgs = [parse_classifier(d) for d in raw.get("classifiers", [{"kind": "knn"}, {"kind": "svm_linear"}, {"kind": "forest"}])]
        resize = tuple(raw.get("resize", (480, 360)))
        cfg = RunConfig(
            dataset_root=Path(raw["dataset_root"]),
            output_dir=Path(raw["output_dir"]),
            resize=(int(resize[0]), int(resize[1])),
            corner=corner,
            descriptor=descriptor,
            mode=raw.get("mode", pairing.MODE_PAIRED),
            classifiers=classifier_cfgs,
            protocol=protocol,
            run_id=raw.get("run_id", "run"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config {path}: {exc}") from None
    if seed is not None:
        cfg.protocol = evaluation.ProtocolConfig(
            repeats=cfg.protocol.repeats,
            split=cfg.protocol.split,
            seed=seed,
            stratified=cfg.protocol.stratified,
        )
    if mode is not None:
        cfg.mode = mode
    if cfg.mode not in pairing.MODES:
        raise ConfigError(f"unknown mode {cfg.mode!r}")
    if cfg.resize[0] < 1 or cfg.resize[1] < 1:
        raise ConfigError("resize dimensions must be positive")
    if not cfg.dataset_root.is_dir():
        raise ConfigError(f"dataset_root {cfg.dataset_root} is not a directory")
    return cfg


def discover_dataset(root: Path) -> list[tuple[str, int, list[Path]]]:
    """(class name, label, image paths), labels by sorted class-dir order."""
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise DataError(f"{root} has no class subdirectories")
    out = []
    for label, class_dir in enumerate(class_dirs):
        images = sorted(p for p in class_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        if not images:
            raise DataError(f"class directory {class_dir} holds no PGM/PNG images")
        out.append((class_dir.name, label, images))
    return out


def _load_resized(path: Path, cfg: RunConfig) -> image_io.GrayImage:
    img = image_io.load_image(path)
    return image_io.resize(img, cfg.resize[0], cfg.resize[1])


def _detect_all(cfg: RunConfig):
    """(image_id, class name, label, points) per image, dataset order."""
    results = []
    for class_name, label, images in discover_dataset(cfg.dataset_root):
        for path in images:
            image_id = f"{class_name}/{path.stem}"
            img = _load_resized(path, cfg)
            points = corner_detect.detect(img, cfg.corner)
            results.append((image_id, class_name, label, path, img, points))
    return results


def _echo_config(cfg: RunConfig) -> None:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    evaluation.write_json(cfg.output_dir / "config_echo.json", cfg.to_dict())


def cmd_detect(cfg: RunConfig) -> int:
    """Per-image corner CSVs plus a summary flagging corner-poor images."""
    _echo_config(cfg)
    corners_dir = cfg.output_dir / "corners"
    summary = []
    for image_id, class_name, _label, path, _img, points in _detect_all(cfg):
        out = corners_dir / class_name / f"{path.stem}.csv"
        out.parent.mkdir(parents=True, exist_ok=True)
        corner_detect.write_points_csv(points, out)
        summary.append(
            {
                "image_id": image_id,
                "class": class_name,
                "n_points": len(points),
                "flagged": len(points) < cfg.corner.min_points_target,
            }
        )
    evaluation.write_json(
        cfg.output_dir / "detect_summary.json",
        {"min_points_target": cfg.corner.min_points_target, "images": summary},
    )
    flagged = sum(1 for s in summary if s["flagged"])
    print(f"detect: {len(summary)} images, {flagged} below the corner target")
    return EXIT_OK


def _records_for_images(cfg: RunConfig, detections) -> dict[str, list]:
    """image_id -> original FeatureRecords, in detect order."""
    if cfg.descriptor.kind == "builtin":
        return {
            image_id: patch_descriptor.compute_builtin_features(img, points, image_id, cfg.descriptor.dim)
            for image_id, _cls, _label, _path, img, points in detections
        }
    expected = [
        (image_id, idx)
        for image_id, _cls, _label, _path, _img, points in detections
        for idx in range(len(points))
    ]
    records = patch_descriptor.import_features(
        cfg.descriptor.import_path, expected, cfg.descriptor.dim
    )
    by_image: dict[str, list] = {}
    for record in records:
        by_image.setdefault(record.image_id, []).append(record)
    return by_image


def cmd_features(cfg: RunConfig) -> int:
    """One PFV1 file covering every image of the dataset."""
    _echo_config(cfg)
    detections = _detect_all(cfg)
    by_image = _records_for_images(cfg, detections)
    records = [r for image_id, _cls, _label, _path, _img, _pts in detections for r in by_image.get(image_id, [])]
    out = cfg.output_dir / f"{cfg.run_id}_features.pfv1"
    patch_descriptor.write_pfv1(out, records, dim=cfg.descriptor.dim)
    print(f"features: wrote {len(records)} records to {out}")
    return EXIT_OK


def build_dataset(cfg: RunConfig) -> clf.LabeledDataset:
    """Full feature pipeline: corners, descriptors, joint maps per mode."""
    detections = _detect_all(cfg)
    by_image = _records_for_images(cfg, detections)
    items = []
    class_names: dict[int, str] = {}
    for image_id, class_name, label, _path, _img, points in detections:
        class_names[label] = class_name
        records = by_image.get(image_id, [])
        if not records:
            raise DataError(f"image {image_id} produced no interest points; cannot classify")
        pts = [(p.x, p.y) for p in points]
        maps = {}
        fallback = False
        for mode in pairing.MODES:
            jmap, used = pairing.make_joint_map(
                records, pts, mode, horizontal_slots=cfg.corner.max_points
            )
            maps[mode] = jmap
            fallback = fallback or used
        feats = clf.ImageFeatures(image_id, np.asarray(pts, dtype=float), tuple(records), maps, fallback)
        items.append((feats, label))
    names = [class_names[i] for i in sorted(class_names)]
    return clf.LabeledDataset(items, class_count=len(names), class_names=names)


def cmd_evaluate(cfg: RunConfig, canonical: bool = False) -> int:
    """Paired-vs-non-paired comparison for every configured classifier."""
    _echo_config(cfg)
    ds = build_dataset(cfg)
    comparisons: dict[str, evaluation.ComparisonReport] = {}
    results_json: dict = {"run_id": cfg.run_id, "classifiers": {}}
    for ccfg in cfg.classifiers:
        name = clf.config_kind(ccfg)
        comparison = evaluation.compare_modes(ds, ccfg, cfg.protocol)
        comparisons[name] = comparison
        entry = evaluation.comparison_as_dict(comparison, canonical)
        if cfg.mode == pairing.MODE_HORIZONTAL:
            horizontal = evaluation.run_protocol(ds, pairing.MODE_HORIZONTAL, ccfg, cfg.protocol)
            entry["horizontal"] = evaluation.protocol_as_dict(horizontal, canonical)
        results_json["classifiers"][name] = entry

        for mode in (pairing.MODE_NON_PAIRED, pairing.MODE_PAIRED):
            result = comparison.non_paired if mode == pairing.MODE_NON_PAIRED else comparison.paired
            stem = f"{cfg.run_id}_{name}_{mode}"
            evaluation.write_metrics_csv(
                cfg.output_dir / f"{stem}_metrics.csv",
                {"avg": result.avg, "max": result.max},
                canonical,
            )
            mean_cm, norm_cm = evaluation.average_confusion(result.confusions)
            evaluation.write_confusion_csv(cfg.output_dir / f"{stem}_confusion_avg.csv", mean_cm)
            evaluation.write_confusion_csv(
                cfg.output_dir / f"{stem}_confusion_avg_rownorm.csv", norm_cm
            )
    evaluation.write_json(cfg.output_dir / f"{cfg.run_id}_report.json", results_json)
    evaluation.write_timing_csv(cfg.output_dir / f"{cfg.run_id}_timing.csv", comparisons, canonical)
    print(f"evaluate: wrote reports for {len(comparisons)} classifiers to {cfg.output_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pairfeat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("detect", "features", "evaluate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override protocol seed")
        p.add_argument("--mode", default=None, choices=pairing.MODES, help="override run mode")
        p.add_argument("--canonical", action="store_true", help="zero timing fields in outputs")
    args = parser.parse_args(argv)

    try:
        cfg = load_run_config(args.config, seed=args.seed, mode=args.mode)
    except ConfigError as exc:
        print(f"{args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "detect":
            return cmd_detect(cfg)
        if args.command == "features":
            return cmd_features(cfg)
        return cmd_evaluate(cfg, canonical=args.canonical)
    except ConfigError as exc:
        print(f"{args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, image_io.ImageIOError, patch_descriptor.FeatureFileError) as exc:
        print(f"{args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pipeline stage failure
        print(f"{args.command}: pipeline error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    raise SystemExit(main())
