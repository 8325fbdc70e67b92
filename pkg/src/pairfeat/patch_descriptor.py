"""Fixed-size patches around interest points and per-patch descriptors.

Descriptors either come from the built-in handcrafted extractor (pooled
intensities plus an orientation histogram, tiled to the requested
dimension) or are imported from a PFV1 file produced by an external
embedding tool. PFV1 is little-endian binary: magic "PFV1", u32 dim,
u32 record count, then per record a length-prefixed UTF-8 image id,
u32 point index, f64 x, f64 y and dim float32 values. Round-trips are
bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corner_detect import InterestPoint, sobel_gradients
from .image_io import GrayImage

PATCH_SIZE = 40
BUILTIN_DIMS = (64, 128, 256, 1000)
DEFAULT_BUILTIN_DIM = 128
DEFAULT_IMPORT_DIM = 1000

_POOL_CELLS = 8
_HIST_BINS = 16
_BLOCK = _POOL_CELLS * _POOL_CELLS + _HIST_BINS  # 80
_VAR_FLOOR = 1e-8

PFV1_MAGIC = b"PFV1"

ORIGIN_ORIGINAL = "original"
ORIGIN_PAIRED = "paired"


class FeatureFileError(Exception):
    """Base class for feature-file problems."""


class CorruptFeatureFileError(FeatureFileError):
    """Bad magic, truncated stream, or malformed record."""


class FeatureDimensionError(FeatureFileError):
    """Stored dimension disagrees with the pipeline dimension."""


class MissingFeatureError(FeatureFileError):
    """An expected (image id, point index) key is absent."""


class DuplicateFeatureError(FeatureFileError):
    """The same (image id, point index) key occurs twice."""


@dataclass(frozen=True)
class Patch:
    """Square intensity block centered at one interest point."""

    image_id: str
    point_index: int
    center: tuple[int, int]
    pixels: np.ndarray


@dataclass(frozen=True)
class FeatureRecord:
    """One descriptor bound to an image, a location, and an origin tag."""

    image_id: str
    point: tuple[float, float]
    origin: str
    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError("feature vector must be 1-D")
        if not np.isfinite(v).all():
            raise ValueError("feature vector entries must be finite")
        if self.origin not in (ORIGIN_ORIGINAL, ORIGIN_PAIRED):
            raise ValueError(f"unknown origin {self.origin!r}")
        object.__setattr__(self, "vector", v)

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


@dataclass(frozen=True)
class DescriptorSource:
    """Where descriptors come from: the built-in extractor or a PFV1 file."""

    kind: str = "builtin"
    dim: int = DEFAULT_BUILTIN_DIM
    import_path: Path | None = None

    def __post_init__(self):
        if self.kind not in ("builtin", "imported"):
            raise ValueError(f"descriptor kind {self.kind!r} not recognized")
        if self.kind == "imported" and self.import_path is None:
            raise ValueError("imported descriptors need import_path")
        if self.kind == "builtin" and self.dim not in BUILTIN_DIMS:
            raise ValueError(f"builtin dim {self.dim} not in {BUILTIN_DIMS}")


def mesh_patches(
    img: GrayImage,
    points: list[InterestPoint],
    image_id: str = "",
    size: int = PATCH_SIZE,
) -> list[Patch]:
    """One size x size patch per point, centered there, edge-replicated
    wherever the window leaves the image. Order follows the input points."""
    half = size // 2
    h, w = img.pixels.shape
    patches = []
    for idx, p in enumerate(points):
        if not (0 <= p.x < w and 0 <= p.y < h):
            raise ValueError(f"point ({p.x},{p.y}) outside {w}x{h} image")
        rows = np.clip(np.arange(p.y - half, p.y - half + size), 0, h - 1)
        cols = np.clip(np.arange(p.x - half, p.x - half + size), 0, w - 1)
        block = img.pixels[np.ix_(rows, cols)].copy()
        patches.append(Patch(image_id, idx, (p.x, p.y), block))
    return patches


def builtin_descriptor(patch: Patch, dim: int = DEFAULT_BUILTIN_DIM) -> FeatureRecord:
    """Deterministic handcrafted descriptor of one patch.

    The 80-value base block concatenates 8x8 mean-pooled intensities
    (zero-mean, unit-variance with a small variance floor) and a 16-bin
    gradient-orientation histogram weighted by gradient magnitude and
    L2-normalized. The base block is normalized to unit length, repeated
    whole as often as it fits, and the remainder is zero-filled; below
    one block the base is truncated. Constant patches map to all zeros.
    """
    if dim not in BUILTIN_DIMS:
        raise ValueError(f"descriptor dim {dim} not in {BUILTIN_DIMS}")
    px = patch.pixels
    side = px.shape[0]
    if px.shape != (side, side) or side % _POOL_CELLS != 0:
        raise ValueError(f"patch shape {px.shape} not square with side divisible by {_POOL_CELLS}")
    cell = side // _POOL_CELLS

    pooled = px.reshape(_POOL_CELLS, cell, _POOL_CELLS, cell).mean(axis=(1, 3)).ravel()
    centered = pooled - pooled.mean()
    intensity = centered / np.sqrt(centered.var() + _VAR_FLOOR)

    gx, gy = sobel_gradients(px)
    mag = np.hypot(gx, gy).ravel()
    theta = np.arctan2(gy, gx).ravel()
    bins = np.floor((theta + np.pi) * (_HIST_BINS / (2.0 * np.pi))).astype(np.intp) % _HIST_BINS
    hist = np.bincount(bins, weights=mag, minlength=_HIST_BINS)
    norm = np.linalg.norm(hist)
    if norm > 0.0:
        hist = hist / norm

    base = np.concatenate([intensity, hist])
    base_norm = np.linalg.norm(base)
    if base_norm > 0.0:
        base = base / base_norm

    out = np.zeros(dim)
    if dim < _BLOCK:
        out[:] = base[:dim]
    else:
        full = dim // _BLOCK
        out[: full * _BLOCK] = np.tile(base, full)
    cx, cy = patch.center
    return FeatureRecord(patch.image_id, (float(cx), float(cy)), ORIGIN_ORIGINAL, out)


def compute_builtin_features(
    img: GrayImage,
    points: list[InterestPoint],
    image_id: str,
    dim: int = DEFAULT_BUILTIN_DIM,
) -> list[FeatureRecord]:
    """Patches plus built-in descriptors for all points of one image."""
    return [builtin_descriptor(p, dim) for p in mesh_patches(img, points, image_id)]


# --- PFV1 serialization -----------------------------------------------------

def _write_record(fh, image_id: str, point_index: int, x: float, y: float, vector: np.ndarray):
    ident = image_id.encode("utf-8")
    fh.write(struct.pack("<I", len(ident)))
    fh.write(ident)
    fh.write(struct.pack("<Idd", point_index, x, y))
    fh.write(np.ascontiguousarray(vector, dtype="<f4").tobytes())


def _read_exact(fh, n: int, path) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise CorruptFeatureFileError(f"{path}: truncated feature file")
    return buf


def _read_record(fh, dim: int, path) -> tuple[str, int, float, float, np.ndarray]:
    (id_len,) = struct.unpack("<I", _read_exact(fh, 4, path))
    if id_len > 4096:
        raise CorruptFeatureFileError(f"{path}: implausible image id length {id_len}")
    try:
        image_id = _read_exact(fh, id_len, path).decode("utf-8")
    except UnicodeDecodeError:
        raise CorruptFeatureFileError(f"{path}: image id is not valid UTF-8") from None
    point_index, x, y = struct.unpack("<Idd", _read_exact(fh, 20, path))
    vector = np.frombuffer(_read_exact(fh, 4 * dim, path), dtype="<f4").astype(np.float64)
    return image_id, point_index, x, y, vector


def write_pfv1(path, records: list[FeatureRecord], dim: int | None = None) -> None:
    """Serialize records; point indices count per image in list order."""
    if not records and dim is None:
        raise ValueError("empty record list needs an explicit dim")
    d = dim if dim is not None else records[0].dim
    for r in records:
        if r.dim != d:
            raise FeatureDimensionError(f"record dim {r.dim} != file dim {d}")
    counters: dict[str, int] = {}
    with open(path, "wb") as fh:
        fh.write(PFV1_MAGIC)
        fh.write(struct.pack("<II", d, len(records)))
        for r in records:
            idx = counters.get(r.image_id, 0)
            counters[r.image_id] = idx + 1
            _write_record(fh, r.image_id, idx, r.point[0], r.point[1], r.vector)


def read_pfv1(path) -> tuple[int, list[tuple[str, int, float, float, np.ndarray]]]:
    """Raw (image_id, point_index, x, y, vector) entries plus the file dim."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:4] != PFV1_MAGIC:
            raise CorruptFeatureFileError(f"{path}: missing PFV1 header")
        d, count = struct.unpack("<II", head[4:])
        entries = [_read_record(fh, d, path) for _ in range(count)]
        if fh.read(1):
            raise CorruptFeatureFileError(f"{path}: trailing bytes after last record")
    return d, entries


def import_features(
    path,
    expected: list[tuple[str, int]],
    dim: int | None = None,
) -> list[FeatureRecord]:
    """Load stored descriptors for exactly the expected (image id, point
    index) keys, in expected order. Vectors come back bit-exact as stored;
    extra records in the file are ignored."""
    file_dim, entries = read_pfv1(path)
    if dim is not None and file_dim != dim:
        raise FeatureDimensionError(f"{path}: file dim {file_dim} != pipeline dim {dim}")
    by_key: dict[tuple[str, int], tuple[float, float, np.ndarray]] = {}
    for image_id, point_index, x, y, vector in entries:
        key = (image_id, point_index)
        if key in by_key:
            raise DuplicateFeatureError(f"{path}: duplicate record for {key}")
        by_key[key] = (x, y, vector)
    records = []
    for key in expected:
        if key not in by_key:
            raise MissingFeatureError(f"{path}: no record for image {key[0]!r} point {key[1]}")
        x, y, vector = by_key[key]
        records.append(FeatureRecord(key[0], (x, y), ORIGIN_ORIGINAL, vector))
    return records
