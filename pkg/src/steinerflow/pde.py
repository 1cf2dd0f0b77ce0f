"""Finite-difference shape functionals on raster domains.

The Dirichlet Laplacian is the cell-centered 5-point operator.  Every cell
face is either an active link to a masked neighbour or a Dirichlet face (the
neighbour is outside the mask, outside the box, or the face is severed by a
crack or a pinned vertex).  Dirichlet faces use the mirror ghost value
``-u``, which puts the zero boundary condition on the face itself; a cell
with ``n`` active links therefore has diagonal ``(8 - n) / h^2``.

The matrix is a symmetric M-matrix, so torsion functions obey the discrete
maximum principle and grow with the domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu

from .domain import RasterDomain

__all__ = [
    "SolverConfig",
    "FieldSolution",
    "SolverError",
    "laplacian",
    "torsion",
    "eigen1",
    "gamma_dist",
    "field_distance",
    "perimeter",
]


class SolverError(RuntimeError):
    """Iterative solver did not reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolverConfig:
    cg_tol: float = 1e-10
    cg_max_iter: int = 20000
    eig_tol: float = 1e-9
    eig_max_iter: int = 500
    method: str = "cg"  # "cg" or "direct" (sparse LU for the inner solves)

    def __post_init__(self):
        for name in ("cg_tol", "eig_tol"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.cg_max_iter < 1 or self.eig_max_iter < 1:
            raise ValueError("iteration caps must be positive")
        if self.method not in ("cg", "direct"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class FieldSolution:
    values: np.ndarray
    residual_norm: float
    iterations: int
    functional_value: float
    kind: str = "torsion"
    h: float = 1.0
    origin: tuple = (0.0, 0.0)
    extra: dict = field(default_factory=dict)

    def integral(self, p: int = 1) -> float:
        return float(self.h**2 * np.sum(np.abs(self.values) ** p))

    def to_csv(self, path) -> None:
        ny, nx = self.values.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.h
        ys = self.origin[1] + (np.arange(ny) + 0.5) * self.h
        X, Y = np.meshgrid(xs, ys)
        data = np.column_stack([X.ravel(), Y.ravel(), self.values.ravel()])
        np.savetxt(path, data, delimiter=",", header="x,y,u", comments="", fmt="%.17g")

    def to_pgm(self, path) -> None:
        """8-bit grayscale image, top row first, scaled to the field maximum."""
        v = np.abs(self.values[::-1])
        top = v.max() or 1.0
        img = np.round(255 * v / top).astype(np.uint8)
        ny, nx = img.shape
        with open(path, "wb") as fh:
            fh.write(f"P5\n{nx} {ny}\n255\n".encode())
            fh.write(img.tobytes())


def laplacian(domain: RasterDomain):
    """Sparse Dirichlet Laplacian on the masked cells and the cell numbering.

    Returns ``(A, index)`` where ``index[j, i]`` is the unknown of cell
    ``(j, i)`` or ``-1`` outside the mask.
    """
    mask = domain.mask
    index = np.full(mask.shape, -1, dtype=np.int64)
    n = int(mask.sum())
    index[mask] = np.arange(n)
    lx, ly = domain.links()
    active = np.zeros(mask.shape, dtype=np.int64)
    active[:, :-1] += lx
    active[:, 1:] += lx
    active[:-1, :] += ly
    active[1:, :] += ly
    h2 = domain.h**2
    diag = (8.0 - active[mask]) / h2
    ix = (index[:, :-1][lx], index[:, 1:][lx])
    iy = (index[:-1, :][ly], index[1:, :][ly])
    rows = np.concatenate([np.arange(n), ix[0], ix[1], iy[0], iy[1]])
    cols = np.concatenate([np.arange(n), ix[1], ix[0], iy[1], iy[0]])
    off = -np.ones(2 * (ix[0].size + iy[0].size)) / h2
    vals = np.concatenate([diag, off])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n)), index


class _Solver:
    """Repeated solves with one matrix, by Jacobi-preconditioned CG or sparse LU."""

    def __init__(self, A, cfg: SolverConfig):
        self.A = A
        self.cfg = cfg
        self.iterations = 0
        if cfg.method == "direct":
            self._lu = splu(A.tocsc())
        else:
            inv_d = 1.0 / A.diagonal()
            self._M = sp.diags(inv_d)

    def __call__(self, b, x0=None):
        cfg = self.cfg
        if cfg.method == "direct":
            x = self._lu.solve(b)
            self.iterations += 1
            return x
        count = [0]

        def tick(_):
            count[0] += 1

        # CG stops on its recursive residual, which drifts from the true one;
        # restart from the iterate until the true residual meets the tolerance
        x = x0
        bnorm = np.linalg.norm(b)
        for _ in range(4):
            x, info = cg(
                self.A, b, x0=x, rtol=cfg.cg_tol, atol=0.0, maxiter=cfg.cg_max_iter - count[0],
                M=self._M, callback=tick,
            )
            res = np.linalg.norm(self.A @ x - b) / bnorm
            if info != 0 or res <= cfg.cg_tol or count[0] >= cfg.cg_max_iter:
                break
        self.iterations += count[0]
        if info != 0 or res > cfg.cg_tol:
            raise SolverError(
                f"CG stopped after {count[0]} iterations with relative residual {res:.3e} "
                f"(tolerance {cfg.cg_tol:g})",
                residual=res,
                iterations=count[0],
            )
        return x


def _scatter(domain, index, x):
    out = np.zeros(domain.mask.shape)
    out[domain.mask] = x
    return out


def _require_nonempty(domain):
    if domain.is_empty():
        raise ValueError("domain has no masked cells")


def torsion(domain: RasterDomain, cfg: SolverConfig = SolverConfig(), x0=None) -> FieldSolution:
    """Solve ``-Lap u = 1`` with zero Dirichlet data; ``T = h^2 sum u``.

    ``x0`` is an optional warm start given as a full grid array.
    """
    _require_nonempty(domain)
    A, index = laplacian(domain)
    b = np.ones(A.shape[0])
    solve = _Solver(A, cfg)
    start = None if x0 is None else np.asarray(x0)[domain.mask]
    u = solve(b, start)
    res = float(np.linalg.norm(A @ u - b) / np.linalg.norm(b))
    values = _scatter(domain, index, u)
    return FieldSolution(
        values, res, solve.iterations, float(domain.h**2 * u.sum()), "torsion", domain.h, domain.origin
    )


def eigen1(domain: RasterDomain, cfg: SolverConfig = SolverConfig(), x0=None) -> FieldSolution:
    """Smallest Dirichlet eigenvalue by inverse power iteration.

    Stops once the Rayleigh quotient changes by less than ``eig_tol``
    relatively.  The eigenfunction is positive and normalized to
    ``h^2 sum u^2 = 1``.
    """
    _require_nonempty(domain)
    A, index = laplacian(domain)
    solve = _Solver(A, cfg)
    v = np.ones(A.shape[0]) if x0 is None else np.abs(np.asarray(x0)[domain.mask]) + 1e-3
    v /= np.linalg.norm(v)
    lam = float(v @ (A @ v))
    converged = False
    outer = 0
    for outer in range(1, cfg.eig_max_iter + 1):
        w = solve(v, v / lam)
        w /= np.linalg.norm(w)
        new = float(w @ (A @ w))
        v = w
        if abs(new - lam) <= cfg.eig_tol * abs(new):
            lam = new
            converged = True
            break
        lam = new
    if not converged:
        raise SolverError(
            f"inverse iteration did not settle within {cfg.eig_max_iter} steps (last lambda {lam:.10g})",
            iterations=outer,
        )
    if v.sum() < 0:
        v = -v
    res = float(np.linalg.norm(A @ v - lam * v) / abs(lam))
    u = v / (domain.h * np.linalg.norm(v))
    sol = FieldSolution(_scatter(domain, index, u), res, solve.iterations, lam, "eigen", domain.h, domain.origin)
    sol.extra["outer_iterations"] = outer
    return sol


def field_distance(a: FieldSolution, b: FieldSolution, p: float = 2) -> float:
    """``L^p`` distance of two grid functions on the same box (zero-extended)."""
    if a.values.shape != b.values.shape or a.h != b.h:
        raise ValueError("fields live on different grids")
    diff = np.abs(a.values - b.values)
    return float((a.h**2 * np.sum(diff**p)) ** (1.0 / p))


def gamma_dist(
    a: RasterDomain, b: RasterDomain, cfg: SolverConfig = SolverConfig(), p: float = 2
) -> float:
    """Distance between the torsion functions of ``a`` and ``b`` in ``L^p(D)``."""
    a.require_same_grid(b)
    ua = torsion(a, cfg) if not a.is_empty() else None
    ub = torsion(b, cfg) if not b.is_empty() else None
    zero = np.zeros(a.mask.shape)
    va = zero if ua is None else ua.values
    vb = zero if ub is None else ub.values
    return float((a.h**2 * np.sum(np.abs(va - vb) ** p)) ** (1.0 / p))


def perimeter(domain: RasterDomain) -> float:
    """``h`` times the number of faces between a masked and an unmasked cell.

    Faces on the box boundary count; crack faces do not.
    """
    m = np.pad(domain.mask, 1)
    edges = np.count_nonzero(m[:, 1:] != m[:, :-1]) + np.count_nonzero(m[1:, :] != m[:-1, :])
    return domain.h * edges
