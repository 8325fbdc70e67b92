"""Paired patch-feature pipeline: corner detection, patch descriptors,
Delaunay midpoint pairing, and a repeated-split classification harness."""

__version__ = "0.1.0"
