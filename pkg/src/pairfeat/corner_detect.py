"""Minimum-eigenvalue (Shi-Tomasi) corner scoring and interest-point selection.

The score at a pixel is the smaller eigenvalue of the 2x2 structure matrix
M = [[sum Ix^2, sum Ix*Iy], [sum Ix*Iy, sum Iy^2]], summed with uniform
weights over a square window around the pixel. Gradients are Sobel with
edge replication at the borders.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image_io import GrayImage, write_pgm


@dataclass(frozen=True)
class InterestPoint:
    """Pixel-grid corner location: x is the column, y the row."""

    x: int
    y: int
    score: float


@dataclass(frozen=True)
class StructureMatrix:
    """Windowed gradient-product matrix entries at one pixel."""

    sxx: float
    sxy: float
    syy: float

    @property
    def min_eigenvalue(self) -> float:
        half_trace = 0.5 * (self.sxx + self.syy)
        half_diff = 0.5 * (self.sxx - self.syy)
        return half_trace - np.hypot(half_diff, self.sxy)


@dataclass(frozen=True)
class CornerConfig:
    max_points: int = 15
    min_points_target: int = 10
    quality_ratio: float = 0.01
    min_distance: float = 10.0
    window_radius: int = 1

    def __post_init__(self):
        if not 0.0 < self.quality_ratio < 1.0:
            raise ValueError(f"quality_ratio {self.quality_ratio} must be in (0, 1)")
        if not self.max_points >= self.min_points_target >= 1:
            raise ValueError("need max_points >= min_points_target >= 1")
        if self.min_distance <= 0:
            raise ValueError("min_distance must be positive")
        if self.window_radius < 1:
            raise ValueError("window_radius must be at least 1")


def sobel_gradients(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sobel Ix/Iy of a 2-D array, borders edge-replicated."""
    a = np.pad(np.asarray(arr, dtype=np.float64), 1, mode="edge")
    left = a[:-2, :-2] + 2.0 * a[1:-1, :-2] + a[2:, :-2]
    right = a[:-2, 2:] + 2.0 * a[1:-1, 2:] + a[2:, 2:]
    top = a[:-2, :-2] + 2.0 * a[:-2, 1:-1] + a[:-2, 2:]
    bottom = a[2:, :-2] + 2.0 * a[2:, 1:-1] + a[2:, 2:]
    return right - left, bottom - top


def gradients(img: GrayImage) -> tuple[np.ndarray, np.ndarray]:
    """Sobel derivative fields of an image, same shape as the input."""
    if img.height < 3 or img.width < 3:
        raise ValueError(f"image {img.width}x{img.height} too small for 3x3 gradients")
    return sobel_gradients(img.pixels)


def _window_sum(a: np.ndarray, radius: int) -> np.ndarray:
    size = 2 * radius + 1
    padded = np.pad(a, radius, mode="edge")
    return sliding_window_view(padded, (size, size)).sum(axis=(-2, -1))


def structure_fields(img: GrayImage, window_radius: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel (sxx, sxy, syy) with uniform window weights."""
    ix, iy = gradients(img)
    sxx = _window_sum(ix * ix, window_radius)
    sxy = _window_sum(ix * iy, window_radius)
    syy = _window_sum(iy * iy, window_radius)
    return sxx, sxy, syy


def score_field(img: GrayImage, cfg: CornerConfig = CornerConfig()) -> np.ndarray:
    """Minimum-eigenvalue score at every pixel, clamped at zero."""
    min_side = 2 * cfg.window_radius + 3
    if img.height < min_side or img.width < min_side:
        raise ValueError(
            f"image {img.width}x{img.height} too small for window radius {cfg.window_radius}"
        )
    sxx, sxy, syy = structure_fields(img, cfg.window_radius)
    half_trace = 0.5 * (sxx + syy)
    half_diff = 0.5 * (sxx - syy)
    field = half_trace - np.sqrt(half_diff * half_diff + sxy * sxy)
    return np.maximum(field, 0.0)


def detect(img: GrayImage, cfg: CornerConfig = CornerConfig()) -> list[InterestPoint]:
    """Top corners by score with greedy min-distance suppression.

    Candidates need a strictly positive score of at least
    quality_ratio * max(score). They are visited in descending score order
    (ties by row then column), kept when at least min_distance away from
    every already-kept point, and capped at max_points.
    """
    field = score_field(img, cfg)
    smax = field.max()
    if smax <= 0.0:
        return []
    mask = field >= cfg.quality_ratio * smax
    ys, xs = np.nonzero(mask)
    scores = field[ys, xs]
    order = np.lexsort((xs, ys, -scores))
    xs, ys, scores = xs[order], ys[order], scores[order]

    alive = np.ones(xs.shape[0], dtype=bool)
    min_d2 = cfg.min_distance * cfg.min_distance
    picked: list[InterestPoint] = []
    i = 0
    while len(picked) < cfg.max_points and i < xs.shape[0]:
        if not alive[i]:
            i += 1
            continue
        x, y = int(xs[i]), int(ys[i])
        picked.append(InterestPoint(x, y, float(scores[i])))
        d2 = (xs - x) ** 2 + (ys - y) ** 2
        alive &= d2 >= min_d2
        i += 1
    return picked


def write_points_csv(points: list[InterestPoint], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "score"])
        for p in points:
            writer.writerow([p.x, p.y, repr(p.score)])


def read_points_csv(path) -> list[InterestPoint]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["x", "y", "score"]:
        raise ValueError(f"{path}: expected header x,y,score")
    return [InterestPoint(int(x), int(y), float(s)) for x, y, s in rows[1:]]


def dump_score_pgm(field: np.ndarray, path) -> None:
    """Debug view of a score field, linearly rescaled to [0, 255]."""
    top = field.max()
    scaled = field * (255.0 / top) if top > 0 else np.zeros_like(field)
    write_pgm(GrayImage(scaled), Path(path))
