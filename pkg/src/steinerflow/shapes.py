"""Built-in test shapes, rasterized by cell-center inclusion.

Every generator takes the cell size ``h`` and pads the shape's bounding box
by ``margin`` cells so masked cells lie strictly inside the box.
"""
from __future__ import annotations

import math

import numpy as np

from .domain import RasterDomain

__all__ = [
    "rectangle",
    "disk",
    "ellipse",
    "stadium",
    "l_shape",
    "polygon",
    "random_polygon",
    "notched",
    "two_by_one_rectangle",
    "equal_area_disk",
    "SHAPES",
]


def _box(xmin, ymin, xmax, ymax, h, margin, square=False):
    if margin < 0 or margin != int(margin):
        raise ValueError(f"margin is a whole number of cells, got {margin}")
    margin = int(margin)
    # snap outwards to the lattice h*Z so aligned shapes stay exact
    x0 = (math.floor(xmin / h + 1e-9) - margin) * h
    y0 = (math.floor(ymin / h + 1e-9) - margin) * h
    x1 = (math.ceil(xmax / h - 1e-9) + margin) * h
    y1 = (math.ceil(ymax / h - 1e-9) + margin) * h
    if square:
        side = max(x1 - x0, y1 - y0)
        cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
        n = int(math.ceil(side / h - 1e-9))
        x0 = math.floor((cx - n * h / 2) / h + 1e-9) * h
        y0 = math.floor((cy - n * h / 2) / h + 1e-9) * h
        x1, y1 = x0 + n * h, y0 + n * h
    return (x0, y0, x1, y1)


def points_in_polygon(x, y, vertices):
    """Even-odd ray casting, vectorized over the query points."""
    inside = np.zeros(np.shape(x), dtype=bool)
    v = np.asarray(vertices, dtype=float)
    for (xa, ya), (xb, yb) in zip(v, np.roll(v, -1, axis=0)):
        crosses = (ya > y) != (yb > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = xa + (y - ya) * (xb - xa) / (yb - ya)
        inside ^= crosses & (x < xi)
    return inside


def rectangle(width=2.0, height=1.0, h=1 / 32, margin=1, box=None, corner=(0.0, 0.0)):
    """Axis-aligned ``width x height`` rectangle with lower-left corner ``corner``."""
    cx, cy = corner
    box = box or _box(cx, cy, cx + width, cy + height, h, margin)
    return RasterDomain.from_predicate(
        lambda X, Y: (X > cx) & (X < cx + width) & (Y > cy) & (Y < cy + height), box, h
    )


def two_by_one_rectangle(h=1 / 32, margin=1, box=None):
    """The ``]0,2[ x ]0,1[`` rectangle."""
    return rectangle(2.0, 1.0, h, margin, box)


def ellipse(a=1.0, b=0.5, h=1 / 32, margin=1, box=None, center=(0.0, 0.0), angle=0.0):
    cx, cy = center
    r = max(a, b)
    box = box or _box(cx - r, cy - r, cx + r, cy + r, h, margin)
    c, s = math.cos(angle), math.sin(angle)

    def inside(X, Y):
        u = (X - cx) * c + (Y - cy) * s
        v = -(X - cx) * s + (Y - cy) * c
        return (u / a) ** 2 + (v / b) ** 2 < 1

    return RasterDomain.from_predicate(inside, box, h)


def disk(radius=1.0, h=1 / 32, margin=1, box=None, center=(0.0, 0.0)):
    return ellipse(radius, radius, h, margin, box, center)


def stadium(length=1.0, radius=0.5, h=1 / 32, margin=1, box=None):
    """Segment ``[-length/2, length/2] x {0}`` thickened by ``radius``."""
    half = length / 2
    box = box or _box(-half - radius, -radius, half + radius, radius, h, margin)

    def inside(X, Y):
        dx = np.maximum(np.abs(X) - half, 0.0)
        return dx**2 + Y**2 < radius**2

    return RasterDomain.from_predicate(inside, box, h)


def l_shape(size=1.0, h=1 / 32, margin=1, box=None):
    """``[0,size]^2`` minus its upper-right quarter."""
    box = box or _box(0, 0, size, size, h, margin)
    half = size / 2
    return RasterDomain.from_predicate(
        lambda X, Y: (X > 0) & (X < size) & (Y > 0) & (Y < size) & ~((X > half) & (Y > half)), box, h
    )


def polygon(vertices, h=1 / 32, margin=1, box=None):
    v = np.asarray(vertices, dtype=float)
    box = box or _box(v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max(), h, margin)
    return RasterDomain.from_predicate(lambda X, Y: points_in_polygon(X, Y, v), box, h)


def random_polygon(rng, n_vertices=None, radius=1.0, h=1 / 32, margin=1, box=None):
    """Simple polygon with vertices sorted by angle about the origin, radii in ``[0.35, 1] * radius``."""
    n = n_vertices or int(rng.integers(3, 10))
    angles = np.sort(rng.uniform(0, 2 * math.pi, n))
    radii = radius * rng.uniform(0.35, 1.0, n)
    verts = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    box = box or _box(-radius, -radius, radius, radius, h, margin)
    return polygon(verts, h, margin, box)


def notched(width=3.0, height=4.0, notch_width=1.0, notch_depth=2.0, h=1 / 32, margin=1, box=None):
    """Rectangle ``]0,width[ x ]0,height[`` with a parallel-walled notch cut from the top.

    Under horizontal-section symmetrization both arms of every notched row
    meet at the same instant, so the notch narrows to a slit and is then
    removed at once.
    """
    box = box or _box(0, 0, width, height, h, margin)
    lo, hi = (width - notch_width) / 2, (width + notch_width) / 2

    def inside(X, Y):
        body = (X > 0) & (X < width) & (Y > 0) & (Y < height)
        cut = (X > lo) & (X < hi) & (Y > height - notch_depth)
        return body & ~cut

    return RasterDomain.from_predicate(inside, box, h)


def equal_area_disk(template: RasterDomain, cells=None) -> RasterDomain:
    """Disk of the same cell count as ``template`` centered in its box.

    The cells nearest to the box center are taken, ties broken by cell index,
    so the cell count matches exactly.
    """
    n = template.cell_count if cells is None else int(cells)
    X, Y = template.cell_centers()
    cx, cy = template.center
    d2 = ((X - cx) ** 2 + (Y - cy) ** 2).ravel()
    order = np.lexsort((np.arange(d2.size), np.round(d2 / template.h**2, 9)))
    flat = np.zeros(d2.size, dtype=bool)
    flat[order[:n]] = True
    return template.with_mask(flat.reshape(template.mask.shape))


SHAPES = {
    "rectangle": rectangle,
    "rect2x1": two_by_one_rectangle,
    "disk": disk,
    "ellipse": ellipse,
    "stadium": stadium,
    "lshape": l_shape,
    "notched": notched,
}
