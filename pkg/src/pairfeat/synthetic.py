"""Seeded synthetic benchmark images: textured convex polygons on noise.

Each class pairs a polygon family with a distinct texture so corner
detection finds structure on the object and the built-in descriptor can
separate the classes. Images are written as binary PGM into one
subdirectory per class, the layout the CLI consumes.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from .image_io import GrayImage, write_pgm

DEFAULT_SIZE = (480, 360)  # width, height


def _convex_polygon(rng, w: int, h: int, sides: int) -> np.ndarray:
    cx = rng.uniform(0.32 * w, 0.68 * w)
    cy = rng.uniform(0.35 * h, 0.65 * h)
    radius = rng.uniform(0.24, 0.32) * min(w, h)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    angles = phase + 2.0 * np.pi * np.arange(sides) / sides
    radii = radius * rng.uniform(0.8, 1.0, size=sides)
    xs = cx + radii * np.cos(angles)
    ys = cy + radii * np.sin(angles)
    return np.stack([xs, ys], axis=1)


def _polygon_mask(vertices: np.ndarray, w: int, h: int) -> np.ndarray:
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    inside = np.ones((h, w), dtype=bool)
    n = vertices.shape[0]
    for i in range(n):  # vertices are counter-clockwise: inside is left of each edge
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        inside &= (bx - ax) * (ys - ay) - (by - ay) * (xs - ax) >= 0.0
    return inside


def _texture(rng, class_idx: int, w: int, h: int) -> np.ndarray:
    xs, ys = np.meshgrid(np.arange(w), np.arange(h))
    kind = class_idx % 5
    phase = rng.integers(0, 1000)
    if kind == 0:  # horizontal stripes
        return np.where((ys + phase) // 12 % 2 == 0, 90.0, 205.0)
    if kind == 1:  # vertical stripes
        return np.where((xs + phase) // 9 % 2 == 0, 75.0, 215.0)
    if kind == 2:  # checkerboard
        return np.where(((xs + phase) // 12 + (ys + phase) // 12) % 2 == 0, 70.0, 195.0)
    if kind == 3:  # diagonal stripes
        return np.where((xs + ys + phase) // 14 % 2 == 0, 100.0, 225.0)
    dx = (xs + phase) % 18 - 9  # polka dots
    dy = (ys + phase) % 18 - 9
    return np.where(dx * dx + dy * dy <= 25, 235.0, 115.0)


def make_image(seed: int, class_idx: int, image_idx: int, size=DEFAULT_SIZE) -> GrayImage:
    """One deterministic benchmark image."""
    w, h = size
    rng = np.random.default_rng([seed, class_idx, image_idx])
    sides = 3 + (class_idx + image_idx) % 4
    vertices = _convex_polygon(rng, w, h, sides)
    mask = _polygon_mask(vertices, w, h)
    background = 38.0 + rng.normal(0.0, 6.0, size=(h, w))
    texture = _texture(rng, class_idx, w, h) + rng.normal(0.0, 4.0, size=(h, w))
    img = np.where(mask, texture, background)
    return GrayImage(np.clip(np.rint(img), 0.0, 255.0))


def generate_dataset(
    root,
    classes: int = 5,
    images_per_class: int = 20,
    size=DEFAULT_SIZE,
    seed: int = 0,
) -> Path:
    """Write the class-per-directory PGM layout; returns the root path."""
    root = Path(root)
    for c in range(classes):
        class_dir = root / f"class{c:02d}"
        class_dir.mkdir(parents=True, exist_ok=True)
        for i in range(images_per_class):
            write_pgm(make_image(seed, c, i, size), class_dir / f"img{i:03d}.pgm")
    return root


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="generate a synthetic benchmark dataset")
    parser.add_argument("--out", required=True, help="dataset root directory")
    parser.add_argument("--classes", type=int, default=5)
    parser.add_argument("--per-class", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--width", type=int, default=DEFAULT_SIZE[0])
    parser.add_argument("--height", type=int, default=DEFAULT_SIZE[1])
    args = parser.parse_args(argv)
    generate_dataset(args.out, args.classes, args.per_class, (args.width, args.height), args.seed)
    print(f"wrote {args.classes * args.per_class} images under {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
