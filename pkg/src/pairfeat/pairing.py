"""Synthesized features at triangulation-edge midpoints and joint maps.

A paired feature sits at the midpoint of a Delaunay edge and carries the
element-wise mean of the two endpoint descriptors. A joint feature map
stacks one image's original rows first (point order) and the paired rows
after them (edge order). When the point set cannot be triangulated the
edges fall back to a path graph along the dominant axis.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .patch_descriptor import (
    ORIGIN_ORIGINAL,
    ORIGIN_PAIRED,
    CorruptFeatureFileError,
    FeatureDimensionError,
    FeatureRecord,
    _read_record,
    _write_record,
)
from .triangulation import (
    CollinearPointsError,
    NotEnoughPointsError,
    Triangulation,
    delaunay,
)

MODE_PAIRED = "paired"
MODE_NON_PAIRED = "non_paired"
MODE_HORIZONTAL = "horizontal"
MODES = (MODE_PAIRED, MODE_NON_PAIRED, MODE_HORIZONTAL)

PFV2_MAGIC = b"PFV2"
_ORIGIN_CODE = {ORIGIN_ORIGINAL: 0, ORIGIN_PAIRED: 1}
_ORIGIN_NAME = {0: ORIGIN_ORIGINAL, 1: ORIGIN_PAIRED}


class PairingError(ValueError):
    """Mismatched inputs to a pairing operation."""


@dataclass(frozen=True)
class JointFeatureMap:
    """Per-image classifier input: original rows, then paired rows."""

    image_id: str
    rows: tuple[FeatureRecord, ...]
    dim: int

    def __post_init__(self):
        for r in self.rows:
            if r.dim != self.dim:
                raise ValueError(f"row dim {r.dim} != map dim {self.dim}")
        object.__setattr__(self, "rows", tuple(self.rows))

    def matrix(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, self.dim))
        return np.stack([r.vector for r in self.rows])

    def __len__(self) -> int:
        return len(self.rows)


def midpoint(p1, p2) -> tuple[float, float]:
    """Coordinate-wise mean of two points."""
    return ((p1[0] + p2[0]) / 2.0, (p1[1] + p2[1]) / 2.0)


def pair_features(f1: FeatureRecord, f2: FeatureRecord) -> FeatureRecord:
    """Feature at the midpoint of two records: the element-wise mean."""
    if f1.dim != f2.dim:
        raise PairingError(f"cannot pair dims {f1.dim} and {f2.dim}")
    if f1.image_id != f2.image_id:
        raise PairingError(f"cannot pair across images {f1.image_id!r} and {f2.image_id!r}")
    return FeatureRecord(
        f1.image_id,
        midpoint(f1.point, f2.point),
        ORIGIN_PAIRED,
        (f1.vector + f2.vector) / 2.0,
    )


def path_edges(points: np.ndarray) -> list[tuple[int, int]]:
    """Fallback edges for degenerate point sets: consecutive pairs along
    the axis with the larger spread (ties prefer x)."""
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if n < 2:
        return []
    spread = pts.max(axis=0) - pts.min(axis=0)
    axis = 0 if spread[0] >= spread[1] else 1
    order = sorted(range(n), key=lambda i: (pts[i, axis], pts[i, 1 - axis], i))
    edges = [(min(a, b), max(a, b)) for a, b in zip(order, order[1:])]
    return sorted(edges)


def path_triangulation(points) -> Triangulation:
    """Path-graph stand-in used when Delaunay triangulation is impossible."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return Triangulation(points=pts, triangles=[], edges=path_edges(pts))


def build_joint_map(
    records: list[FeatureRecord],
    tri: Triangulation,
    mode: str = MODE_PAIRED,
    horizontal_slots: int | None = None,
) -> JointFeatureMap:
    """Assemble one image's joint feature map.

    records must be the original features in point order matching
    tri.points. paired mode appends one averaged row per unique edge in
    lexicographic edge order; non_paired keeps the originals; horizontal
    concatenates the originals into a single wide row, zero-padded or
    truncated to horizontal_slots descriptors when given.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if len(records) != tri.points.shape[0]:
        raise PairingError(
            f"{len(records)} records vs {tri.points.shape[0]} triangulation points"
        )
    if not records:
        raise PairingError("cannot build a joint map from zero records")
    image_id = records[0].image_id
    dim = records[0].dim
    for r in records:
        if r.image_id != image_id:
            raise PairingError("records of one joint map must share an image id")
        if r.dim != dim:
            raise PairingError("records of one joint map must share a dimension")

    if mode == MODE_NON_PAIRED:
        return JointFeatureMap(image_id, tuple(records), dim)
    if mode == MODE_PAIRED:
        paired = [pair_features(records[i], records[j]) for i, j in tri.edges]
        return JointFeatureMap(image_id, tuple(records) + tuple(paired), dim)

    slots = horizontal_slots if horizontal_slots is not None else len(records)
    if slots < 1:
        raise ValueError("horizontal_slots must be positive")
    wide = np.zeros(slots * dim)
    for i, r in enumerate(records[:slots]):
        wide[i * dim : (i + 1) * dim] = r.vector
    center = tuple(np.asarray(tri.points).mean(axis=0)) if len(records) else (0.0, 0.0)
    row = FeatureRecord(image_id, (float(center[0]), float(center[1])), ORIGIN_ORIGINAL, wide)
    return JointFeatureMap(image_id, (row,), slots * dim)


def make_joint_map(
    records: list[FeatureRecord],
    points: np.ndarray,
    mode: str = MODE_PAIRED,
    horizontal_slots: int | None = None,
) -> tuple[JointFeatureMap, bool]:
    """build_joint_map with the degenerate fallback wired in.

    Returns the map and whether the path-graph fallback was used.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    try:
        tri = delaunay(pts)
        fallback = False
        if tri.points.shape[0] != pts.shape[0]:  # duplicates were dropped
            raise PairingError("duplicate points cannot be matched to records")
    except (NotEnoughPointsError, CollinearPointsError):
        tri = path_triangulation(pts)
        fallback = True
    return build_joint_map(records, tri, mode, horizontal_slots), fallback


# --- PFV2 serialization (PFV1 plus a per-record origin byte) -----------------

def write_pfv2(path, maps: list[JointFeatureMap]) -> None:
    if not maps:
        raise ValueError("need at least one joint map")
    dim = maps[0].dim
    for m in maps:
        if m.dim != dim:
            raise FeatureDimensionError(f"map dim {m.dim} != file dim {dim}")
    total = sum(len(m) for m in maps)
    with open(path, "wb") as fh:
        fh.write(PFV2_MAGIC)
        fh.write(struct.pack("<II", dim, total))
        for m in maps:
            for idx, r in enumerate(m.rows):
                _write_record(fh, m.image_id, idx, r.point[0], r.point[1], r.vector)
                fh.write(struct.pack("<B", _ORIGIN_CODE[r.origin]))


def read_pfv2(path) -> list[JointFeatureMap]:
    """Joint maps grouped by image id, rows in stored order."""
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:4] != PFV2_MAGIC:
            raise CorruptFeatureFileError(f"{path}: missing PFV2 header")
        dim, count = struct.unpack("<II", head[4:])
        grouped: dict[str, list[FeatureRecord]] = {}
        for _ in range(count):
            image_id, _idx, x, y, vector = _read_record(fh, dim, path)
            raw = fh.read(1)
            if len(raw) != 1:
                raise CorruptFeatureFileError(f"{path}: truncated feature file")
            origin = _ORIGIN_NAME.get(raw[0])
            if origin is None:
                raise CorruptFeatureFileError(f"{path}: unknown origin code {raw[0]}")
            grouped.setdefault(image_id, []).append(FeatureRecord(image_id, (x, y), origin, vector))
        if fh.read(1):
            raise CorruptFeatureFileError(f"{path}: trailing bytes after last record")
    return [JointFeatureMap(image_id, tuple(rows), dim) for image_id, rows in grouped.items()]
