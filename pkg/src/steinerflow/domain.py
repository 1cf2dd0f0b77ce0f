"""Raster domains: binary cell masks on a uniform grid inside a box.

Cell ``(j, i)`` is the square ``[x0 + i h, x0 + (i+1) h] x [y0 + j h, y0 + (j+1) h]``;
row ``j`` grows with ``y``.  Besides the mask a domain carries zero-measure
obstructions:

* crack faces, stored as two boolean arrays ``cut_x`` (face between cells
  ``(j, i)`` and ``(j, i+1)``, shape ``(ny, nx-1)``) and ``cut_y`` (face
  between ``(j, i)`` and ``(j+1, i)``, shape ``(ny-1, nx)``);
* pinned grid vertices, shape ``(ny+1, nx+1)``; vertex ``(vj, vi)`` sits at
  ``(x0 + vi h, y0 + vj h)`` and severs the four faces meeting there.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = ["RasterDomain", "DomainFormatError", "GridMismatchError", "common_grid", "read_domain", "write_domain"]


class DomainFormatError(ValueError):
    """Malformed domain file; carries the 1-based line and column."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class GridMismatchError(ValueError):
    pass


def _frozen(a, shape, name):
    arr = np.zeros(shape, dtype=bool) if a is None else np.array(a, dtype=bool)
    if arr.shape != shape:
        raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RasterDomain:
    mask: np.ndarray
    h: float
    origin: tuple = (0.0, 0.0)
    cut_x: np.ndarray = field(default=None)
    cut_y: np.ndarray = field(default=None)
    pins: np.ndarray = field(default=None)

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool)
        if mask.ndim != 2 or min(mask.shape) < 1:
            raise ValueError("mask must be a nonempty 2D array")
        if not self.h > 0:
            raise ValueError("cell size must be positive")
        mask.setflags(write=False)
        ny, nx = mask.shape
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        cut_x = _frozen(self.cut_x, (ny, nx - 1), "cut_x")
        cut_y = _frozen(self.cut_y, (ny - 1, nx), "cut_y")
        pins = _frozen(self.pins, (ny + 1, nx + 1), "pins")
        if np.any(cut_x & ~(mask[:, :-1] & mask[:, 1:])) or np.any(cut_y & ~(mask[:-1, :] & mask[1:, :])):
            raise ValueError("crack faces must separate two masked cells")
        if pins.any():
            padded = np.pad(mask, 1)
            near = padded[:-1, :-1] | padded[:-1, 1:] | padded[1:, :-1] | padded[1:, 1:]
            if np.any(pins & ~near):
                raise ValueError("pinned vertices must touch a masked cell")
        object.__setattr__(self, "cut_x", cut_x)
        object.__setattr__(self, "cut_y", cut_y)
        object.__setattr__(self, "pins", pins)

    # geometry -----------------------------------------------------------
    @property
    def ny(self) -> int:
        return self.mask.shape[0]

    @property
    def nx(self) -> int:
        return self.mask.shape[1]

    @property
    def box(self) -> tuple:
        x0, y0 = self.origin
        return (x0, y0, x0 + self.nx * self.h, y0 + self.ny * self.h)

    @property
    def center(self) -> tuple:
        x0, y0, x1, y1 = self.box
        return ((x0 + x1) / 2, (y0 + y1) / 2)

    @property
    def cell_count(self) -> int:
        return int(self.mask.sum())

    @property
    def measure(self) -> float:
        return self.h**2 * self.cell_count

    def cell_centers(self):
        x0, y0 = self.origin
        xs = x0 + (np.arange(self.nx) + 0.5) * self.h
        ys = y0 + (np.arange(self.ny) + 0.5) * self.h
        return np.meshgrid(xs, ys)

    def is_empty(self) -> bool:
        return not self.mask.any()

    @property
    def has_obstructions(self) -> bool:
        return bool(self.cut_x.any() or self.cut_y.any() or self.pins.any())

    def severed(self):
        """Crack faces together with the faces cut by pinned vertices."""
        p = self.pins
        sx = self.cut_x | p[:-1, 1:-1] | p[1:, 1:-1]
        sy = self.cut_y | p[1:-1, :-1] | p[1:-1, 1:]
        return sx, sy

    def links(self):
        """Active couplings between horizontally / vertically adjacent cells."""
        sx, sy = self.severed()
        m = self.mask
        return m[:, :-1] & m[:, 1:] & ~sx, m[:-1, :] & m[1:, :] & ~sy

    def same_grid(self, other: "RasterDomain") -> bool:
        return (
            self.mask.shape == other.mask.shape
            and self.h == other.h
            and np.allclose(self.origin, other.origin, rtol=0, atol=1e-12 * self.h)
        )

    def require_same_grid(self, other: "RasterDomain") -> None:
        if not self.same_grid(other):
            raise GridMismatchError(
                f"grids differ: {self.mask.shape}/h={self.h}/{self.origin} vs "
                f"{other.mask.shape}/h={other.h}/{other.origin}"
            )

    def with_mask(self, mask) -> "RasterDomain":
        """Same grid, new mask, obstructions dropped."""
        return RasterDomain(mask, self.h, self.origin)

    def cleared(self) -> "RasterDomain":
        return RasterDomain(self.mask, self.h, self.origin)

    def with_obstructions(self, cut_x=None, cut_y=None, pins=None) -> "RasterDomain":
        return replace(
            self,
            cut_x=self.cut_x if cut_x is None else cut_x,
            cut_y=self.cut_y if cut_y is None else cut_y,
            pins=self.pins if pins is None else pins,
        )

    def embedded(self, origin, shape) -> "RasterDomain":
        """The same set on the lattice-aligned box with ``origin`` and ``shape = (ny, nx)``."""
        off = (np.asarray(self.origin) - np.asarray(origin, dtype=float)) / self.h
        oi, oj = np.round(off).astype(int)
        if not np.allclose(off, (oi, oj), rtol=0, atol=1e-9):
            raise GridMismatchError(f"origin {self.origin} is not on the lattice of {tuple(origin)}")
        ny, nx = shape
        if oj < 0 or oi < 0 or oj + self.ny > ny or oi + self.nx > nx:
            raise GridMismatchError("target box does not contain the domain's box")
        mask = np.zeros((ny, nx), dtype=bool)
        cut_x = np.zeros((ny, nx - 1), dtype=bool)
        cut_y = np.zeros((ny - 1, nx), dtype=bool)
        pins = np.zeros((ny + 1, nx + 1), dtype=bool)
        mask[oj : oj + self.ny, oi : oi + self.nx] = self.mask
        cut_x[oj : oj + self.ny, oi : oi + self.nx - 1] = self.cut_x
        cut_y[oj : oj + self.ny - 1, oi : oi + self.nx] = self.cut_y
        pins[oj : oj + self.ny + 1, oi : oi + self.nx + 1] = self.pins
        return RasterDomain(mask, self.h, tuple(float(v) for v in origin), cut_x, cut_y, pins)

    def key(self) -> bytes:
        """Hashable fingerprint of mask and obstructions."""
        return b"".join(
            np.packbits(a).tobytes() for a in (self.mask, self.cut_x, self.cut_y, self.pins)
        ) + repr((self.mask.shape, self.h, self.origin)).encode()

    def __eq__(self, other):
        if not isinstance(other, RasterDomain):
            return NotImplemented
        return (
            self.same_grid(other)
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.cut_x, other.cut_x)
            and np.array_equal(self.cut_y, other.cut_y)
            and np.array_equal(self.pins, other.pins)
        )

    __hash__ = None

    @classmethod
    def from_predicate(cls, inside, box, h) -> "RasterDomain":
        """Mask the cells of ``box = (x0, y0, x1, y1)`` whose centers satisfy ``inside(x, y)``."""
        x0, y0, x1, y1 = box
        nx = int(round((x1 - x0) / h))
        ny = int(round((y1 - y0) / h))
        empty = cls(np.zeros((ny, nx), dtype=bool), h, (x0, y0))
        X, Y = empty.cell_centers()
        return cls(np.asarray(inside(X, Y), dtype=bool), h, (x0, y0))

    def __repr__(self):
        return (
            f"RasterDomain({self.nx}x{self.ny}, h={self.h:g}, origin={self.origin}, "
            f"cells={self.cell_count}, cracks={int(self.cut_x.sum() + self.cut_y.sum())}, "
            f"pins={int(self.pins.sum())})"
        )


# file format ------------------------------------------------------------
#
# text mask:  first line "nx ny h", then ny rows of 0/1 from the top row (largest y)
#             down; whitespace between digits is optional.
# sidecar:    <stem>.json with {"origin": [x0, y0], "cracks": [[[j, i], [j2, i2]], ...],
#             "pins": [[vj, vi], ...]}


def common_grid(a: RasterDomain, b: RasterDomain):
    """Embed ``a`` and ``b`` into the smallest box containing both boxes.

    Both must share ``h`` and a lattice; raises :class:`GridMismatchError` otherwise.
    """
    if a.same_grid(b):
        return a, b
    if a.h != b.h:
        raise GridMismatchError(f"cell sizes differ: {a.h} vs {b.h}")
    x0 = min(a.box[0], b.box[0])
    y0 = min(a.box[1], b.box[1])
    nx = int(round((max(a.box[2], b.box[2]) - x0) / a.h))
    ny = int(round((max(a.box[3], b.box[3]) - y0) / a.h))
    return a.embedded((x0, y0), (ny, nx)), b.embedded((x0, y0), (ny, nx))


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def format_mask(domain: RasterDomain) -> str:
    rows = [f"{domain.nx} {domain.ny} {domain.h!r}"]
    for j in range(domain.ny - 1, -1, -1):
        rows.append("".join("1" if v else "0" for v in domain.mask[j]))
    return "\n".join(rows) + "\n"


def parse_mask(text: str):
    lines = text.splitlines()
    body = [(n, ln) for n, ln in enumerate(lines, start=1) if ln.strip() and not ln.lstrip().startswith("#")]
    if not body:
        raise DomainFormatError("empty domain file", 1)
    lineno, header = body[0]
    fields = header.split()
    if len(fields) != 3:
        raise DomainFormatError(f"header must be 'nx ny h', got {header!r}", lineno, 1)
    try:
        nx, ny = int(fields[0]), int(fields[1])
        h = float(fields[2])
    except ValueError:
        raise DomainFormatError(f"header must be 'nx ny h', got {header!r}", lineno, 1) from None
    if nx < 1 or ny < 1 or not h > 0:
        raise DomainFormatError("header values must be positive", lineno, 1)
    rows = body[1:]
    if len(rows) != ny:
        raise DomainFormatError(f"expected {ny} mask rows, found {len(rows)}", rows[-1][0] if rows else lineno)
    mask = np.zeros((ny, nx), dtype=bool)
    for r, (n, line) in enumerate(rows):
        digits = []
        for col, ch in enumerate(line, start=1):
            if ch.isspace():
                continue
            if ch not in "01":
                raise DomainFormatError(f"unexpected character {ch!r}", n, col)
            digits.append(ch == "1")
        if len(digits) != nx:
            raise DomainFormatError(f"expected {nx} cells, found {len(digits)}", n, len(line))
        mask[ny - 1 - r] = digits
    return mask, h


def sidecar_dict(domain: RasterDomain) -> dict:
    cracks = [[[int(j), int(i)], [int(j), int(i) + 1]] for j, i in zip(*np.nonzero(domain.cut_x))]
    cracks += [[[int(j), int(i)], [int(j) + 1, int(i)]] for j, i in zip(*np.nonzero(domain.cut_y))]
    pins = [[int(j), int(i)] for j, i in zip(*np.nonzero(domain.pins))]
    return {"origin": list(domain.origin), "cracks": cracks, "pins": pins}


def apply_sidecar(mask, h, data: dict) -> RasterDomain:
    ny, nx = mask.shape
    cut_x = np.zeros((ny, nx - 1), dtype=bool)
    cut_y = np.zeros((ny - 1, nx), dtype=bool)
    pins = np.zeros((ny + 1, nx + 1), dtype=bool)
    try:
        for (j1, i1), (j2, i2) in data.get("cracks", []):
            (j1, i1), (j2, i2) = sorted([(j1, i1), (j2, i2)])
            if min(j1, i1, j2, i2) < 0:
                raise DomainFormatError(f"crack {[[j1, i1], [j2, i2]]} has negative indices")
            if j1 == j2 and i2 == i1 + 1:
                cut_x[j1, i1] = True
            elif i1 == i2 and j2 == j1 + 1:
                cut_y[j1, i1] = True
            else:
                raise DomainFormatError(f"crack {[[j1, i1], [j2, i2]]} does not join adjacent cells")
        for vj, vi in data.get("pins", []):
            if not (0 <= vj <= ny and 0 <= vi <= nx):
                raise DomainFormatError(f"pin {[vj, vi]} outside the vertex grid")
            pins[vj, vi] = True
        origin = tuple(data.get("origin", (0.0, 0.0)))
    except (TypeError, IndexError, ValueError) as exc:
        if isinstance(exc, DomainFormatError):
            raise
        raise DomainFormatError(f"bad sidecar entry: {exc}") from None
    try:
        return RasterDomain(mask, h, origin, cut_x, cut_y, pins)
    except ValueError as exc:
        raise DomainFormatError(str(exc)) from None


def read_domain(path) -> RasterDomain:
    path = Path(path)
    mask, h = parse_mask(path.read_text())
    side = _sidecar_path(path)
    data = {}
    if side.exists() and side != path:
        try:
            data = json.loads(side.read_text())
        except json.JSONDecodeError as exc:
            raise DomainFormatError(f"{side.name}: {exc.msg}", exc.lineno, exc.colno) from None
    return apply_sidecar(mask, h, data)


def write_domain(domain: RasterDomain, path) -> None:
    path = Path(path)
    path.write_text(format_mask(domain))
    _sidecar_path(path).write_text(json.dumps(sidecar_dict(domain)))
