"""Hilbert curve indexing on a ``2^k x 2^k`` lattice of sub-squares."""
from __future__ import annotations

import numpy as np

__all__ = ["d2xy", "xy2d", "CORNERS"]

# start corner of the curve as (flip_x, flip_y)
CORNERS = ((False, False), (True, False), (False, True), (True, True))


def d2xy(order: int, d):
    """Sub-square ``(x, y)`` visited at position ``d`` (vectorized)."""
    n = 1 << order
    t = np.array(d, dtype=np.int64)
    x = np.zeros_like(t)
    y = np.zeros_like(t)
    s = 1
    while s < n:
        rx = 1 & (t // 2)
        ry = 1 & (t ^ rx)
        flip = (ry == 0) & (rx == 1)
        x = np.where(flip, s - 1 - x, x)
        y = np.where(flip, s - 1 - y, y)
        swap = ry == 0
        x, y = np.where(swap, y, x), np.where(swap, x, y)
        x = x + s * rx
        y = y + s * ry
        t = t // 4
        s *= 2
    return x, y


def xy2d(order: int, x, y):
    """Position along the curve of sub-square ``(x, y)`` (vectorized)."""
    n = 1 << order
    x = np.array(x, dtype=np.int64)
    y = np.array(y, dtype=np.int64)
    d = np.zeros_like(x)
    s = n // 2
    while s > 0:
        rx = ((x & s) > 0).astype(np.int64)
        ry = ((y & s) > 0).astype(np.int64)
        d += s * s * ((3 * rx) ^ ry)
        flip = (ry == 0) & (rx == 1)
        x = np.where(flip, n - 1 - x, x)
        y = np.where(flip, n - 1 - y, y)
        swap = ry == 0
        x, y = np.where(swap, y, x), np.where(swap, x, y)
        s //= 2
    return d
