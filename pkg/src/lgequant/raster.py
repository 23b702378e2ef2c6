"""Polygon rasterization on pixel-center grids (even-odd rule)."""

from __future__ import annotations

import numpy as np

from .errors import ContourError


def polygon_mask(polygon, rows: int, cols: int) -> np.ndarray:
    """Boolean mask of pixel centers strictly inside a closed polygon.

    ``polygon`` is a (V, 2) array of (row, col) vertices; the closing edge
    from the last vertex back to the first is implied. Uses the even-odd
    (crossing number) rule with a ray along +col, which classifies
    edge-touching centers deterministically.
    """
    poly = np.asarray(polygon, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2 or poly.shape[0] < 3:
        raise ContourError("polygon must be a (V, 2) array with V >= 3")
    if not np.all(np.isfinite(poly)):
        raise ContourError("polygon has non-finite vertices")
    r1 = poly[:, 0]
    c1 = poly[:, 1]
    r2 = np.roll(r1, -1)
    c2 = np.roll(c1, -1)
    keep = (r1 != r2) | (c1 != c2)   # drop zero-length edges
    r1, c1, r2, c2 = r1[keep], c1[keep], r2[keep], c2[keep]
    if r1.size < 3:
        raise ContourError("polygon is degenerate")

    rr = np.arange(rows, dtype=float)[:, None, None]
    cc = np.arange(cols, dtype=float)[None, :, None]
    straddles = (r1[None, None, :] > rr) != (r2[None, None, :] > rr)
    with np.errstate(divide="ignore", invalid="ignore"):
        c_cross = c1 + (rr - r1) * (c2 - c1) / (r2 - r1)
    crossings = straddles & (cc < c_cross)
    return (crossings.sum(axis=-1) % 2).astype(bool)


def point_in_polygon(polygon, r: float, c: float) -> bool:
    """Even-odd test for a single point; same rule as :func:`polygon_mask`."""
    poly = np.asarray(polygon, dtype=float)
    inside = False
    n = poly.shape[0]
    for i in range(n):
        r1, c1 = poly[i]
        r2, c2 = poly[(i + 1) % n]
        if (r1 > r) != (r2 > r):
            c_cross = c1 + (r - r1) * (c2 - c1) / (r2 - r1)
            if c < c_cross:
                inside = not inside
    return inside


def circle_polygon(center_row: float, center_col: float, radius_px: float, n_vertices: int = 256) -> np.ndarray:
    """Closed polygon approximating a circle, in (row, col) pixel coordinates."""
    ang = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
    return np.column_stack(
        [center_row + radius_px * np.cos(ang), center_col + radius_px * np.sin(ang)]
    )
