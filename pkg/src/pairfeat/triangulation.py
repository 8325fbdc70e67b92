"""Delaunay triangulation via incremental Bowyer-Watson insertion.

Points are inserted in input order into a huge scaffold triangle that is
stripped afterwards. A triangle is destroyed by an insertion only when the
new point lies strictly inside its circumcircle beyond a scaled tolerance,
so on cocircular ties the earlier-built triangles survive and the result
stays deterministic for a given input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

IN_CIRCLE_RTOL = 1e-9
ORIENT_RTOL = 1e-12
_SCAFFOLD_FACTOR = 1e9


class TriangulationError(Exception):
    """Base class for triangulation failures."""


class NotEnoughPointsError(TriangulationError):
    """Fewer than 3 distinct points."""


class CollinearPointsError(TriangulationError):
    """All distinct points lie on one line."""


@dataclass(frozen=True)
class Triangulation:
    """points (n, 2); triangles as CCW index triples; edges deduplicated
    with the lower index first, sorted lexicographically."""

    points: np.ndarray
    triangles: list[tuple[int, int, int]]
    edges: list[tuple[int, int]]


def orientation(a, b, c) -> float:
    """Twice the signed area of (a, b, c); positive for counter-clockwise."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def in_circle(a, b, c, d) -> float:
    """In-circle determinant; positive when d is inside the circumcircle of
    the counter-clockwise triangle (a, b, c). Terms are accumulated with
    math.fsum so the scaled tolerance stays meaningful."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    ad2 = adx * adx + ady * ady
    bd2 = bdx * bdx + bdy * bdy
    cd2 = cdx * cdx + cdy * cdy
    return math.fsum(
        (
            adx * bdy * cd2,
            -adx * cdy * bd2,
            -ady * bdx * cd2,
            ady * cdx * bd2,
            ad2 * bdx * cdy,
            -ad2 * cdx * bdy,
        )
    )


def in_circle_tolerance(a, b, c, d) -> float:
    """Degeneracy band for the determinant, scaled by coordinate magnitude."""
    m = max(
        abs(a[0] - d[0]), abs(a[1] - d[1]),
        abs(b[0] - d[0]), abs(b[1] - d[1]),
        abs(c[0] - d[0]), abs(c[1] - d[1]),
        1e-300,
    )
    return IN_CIRCLE_RTOL * m ** 4


def _dedup(points: np.ndarray) -> np.ndarray:
    seen = set()
    keep = []
    for i, (x, y) in enumerate(points):
        key = (float(x), float(y))
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return points[keep]


def _all_collinear(pts: np.ndarray) -> bool:
    base = pts[0]
    rel = pts[1:] - base
    d = rel[0]
    cross = d[0] * rel[:, 1] - d[1] * rel[:, 0]
    scale = max(float(np.abs(rel).max()), 1e-300)
    return bool(np.abs(cross).max() <= ORIENT_RTOL * scale * scale)


def _vector_in_circle(coords: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Determinants and scaled tolerances of p against triangles (T, 3, 2)."""
    t = coords - p
    adx, ady = t[:, 0, 0], t[:, 0, 1]
    bdx, bdy = t[:, 1, 0], t[:, 1, 1]
    cdx, cdy = t[:, 2, 0], t[:, 2, 1]
    ad2 = adx * adx + ady * ady
    bd2 = bdx * bdx + bdy * bdy
    cd2 = cdx * cdx + cdy * cdy
    det = (
        adx * (bdy * cd2 - cdy * bd2)
        - ady * (bdx * cd2 - cdx * bd2)
        + ad2 * (bdx * cdy - cdx * bdy)
    )
    m = np.abs(t).reshape(t.shape[0], 6).max(axis=1)
    return det, IN_CIRCLE_RTOL * m ** 4


def _boundary_edges(bad_tris: list[tuple[int, int, int]]) -> list[tuple[int, int]]:
    directed = set()
    for i, j, k in bad_tris:
        directed.update(((i, j), (j, k), (k, i)))
    return [e for e in directed if (e[1], e[0]) not in directed]


def delaunay(points) -> Triangulation:
    """Delaunay triangulation of at least 3 distinct, non-collinear points.

    Deterministic for a given input order. Raises NotEnoughPointsError or
    CollinearPointsError on degenerate input so callers can fall back.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (n, 2) array-like")
    if not np.isfinite(pts).all():
        raise ValueError("points must be finite")
    pts = _dedup(pts)
    n = pts.shape[0]
    if n < 3:
        raise NotEnoughPointsError(f"need at least 3 distinct points, got {n}")
    if _all_collinear(pts):
        raise CollinearPointsError("all points lie on one line")

    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    center = 0.5 * (lo + hi)
    span = max(float((hi - lo).max()), 1.0)
    big = _SCAFFOLD_FACTOR * span
    scaffold = np.array(
        [
            [center[0] - 3.0 * big, center[1] - big],
            [center[0] + 3.0 * big, center[1] - big],
            [center[0], center[1] + 3.0 * big],
        ]
    )
    allpts = np.vstack([pts, scaffold])
    tris: list[tuple[int, int, int]] = [(n, n + 1, n + 2)]  # CCW by construction

    for pi in range(n):
        p = allpts[pi]
        tri_arr = np.asarray(tris, dtype=np.intp)
        det, tol = _vector_in_circle(allpts[tri_arr], p)
        # scaffold-incident circles are far from degenerate: raw sign decides
        has_scaffold = (tri_arr >= n).any(axis=1)
        tol = np.where(has_scaffold, 0.0, tol)
        bad = set(np.nonzero(det > tol)[0].tolist())
        if not bad:
            bad = {_containing_triangle(allpts, tris, p)}

        while True:
            bad_tris = [tris[t] for t in bad]
            boundary = _boundary_edges(bad_tris)
            grow = _degenerate_fan_edges(allpts, p, boundary)
            if not grow:
                break
            for a, b in grow:
                t = _triangle_with_edge(tris, bad, b, a)
                bad.add(t)

        tris = [t for idx, t in enumerate(tris) if idx not in bad]
        tris.extend((pi, a, b) for a, b in boundary)

    final = sorted(_canonical(t) for t in tris if max(t) < n)
    if not final:
        raise TriangulationError("triangulation collapsed; input is degenerate")
    return Triangulation(points=pts, triangles=final, edges=_edges_of(final))


def _near_collinear(p, a, b) -> bool:
    # |cross| <= rtol * |a-p| * |b-p| bounds the sine of the angle at p,
    # so the test stays meaningful next to the huge scaffold vertices
    ua = max(abs(a[0] - p[0]), abs(a[1] - p[1]), 1e-300)
    ub = max(abs(b[0] - p[0]), abs(b[1] - p[1]), 1e-300)
    return abs(orientation(p, a, b)) <= ORIENT_RTOL * ua * ub


def _containing_triangle(allpts: np.ndarray, tris, p: np.ndarray) -> int:
    # fallback for a point whose containing circle is degenerate within tolerance
    for idx, (i, j, k) in enumerate(tris):
        a, b, c = allpts[i], allpts[j], allpts[k]
        if (
            (orientation(a, b, p) >= 0.0 or _near_collinear(p, a, b))
            and (orientation(b, c, p) >= 0.0 or _near_collinear(p, b, c))
            and (orientation(c, a, p) >= 0.0 or _near_collinear(p, c, a))
        ):
            return idx
    raise TriangulationError("insertion point not inside any triangle")


def _degenerate_fan_edges(allpts, p, boundary) -> list[tuple[int, int]]:
    return [(a, b) for a, b in boundary if _near_collinear(p, allpts[a], allpts[b])]


def _triangle_with_edge(tris, bad: set, a: int, b: int) -> int:
    for idx, (i, j, k) in enumerate(tris):
        if idx in bad:
            continue
        if (i, j) == (a, b) or (j, k) == (a, b) or (k, i) == (a, b):
            return idx
    raise TriangulationError("cavity repair failed: no neighbor across a degenerate edge")


def _canonical(tri: tuple[int, int, int]) -> tuple[int, int, int]:
    i, j, k = tri
    if i <= j and i <= k:
        return (i, j, k)
    if j <= i and j <= k:
        return (j, k, i)
    return (k, i, j)


def _edges_of(tris) -> list[tuple[int, int]]:
    edges = set()
    for i, j, k in tris:
        edges.add((min(i, j), max(i, j)))
        edges.add((min(j, k), max(j, k)))
        edges.add((min(k, i), max(k, i)))
    return sorted(edges)


def unique_edges(t: Triangulation) -> list[tuple[int, int]]:
    """Deduplicated undirected edges, lower index first, sorted."""
    return _edges_of(t.triangles)


def write_edges_csv(t: Triangulation, path) -> None:
    """Debug dump: one 'i,j,x1,y1,x2,y2' row per unique edge."""
    lines = ["i,j,x1,y1,x2,y2"]
    for i, j in t.edges:
        x1, y1 = t.points[i]
        x2, y2 = t.points[j]
        lines.append(f"{i},{j},{x1!r},{y1!r},{x2!r},{y2!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
