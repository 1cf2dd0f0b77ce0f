"""Flows of domains: sampled CSS paths, iterated symmetrization, repair paths."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .domain import RasterDomain
from .hilbert import CORNERS, xy2d
from .pde import SolverConfig, SolverError, eigen1, field_distance, perimeter, torsion
from .sections import css, rasterize, section, steiner_symmetrize, symm_difference_measure
from .shapes import equal_area_disk
from .trace import FlowTrace, Jump, Sample

__all__ = [
    "DirectionSchedule",
    "ConfigurationError",
    "css_path",
    "detect_jumps",
    "round_to_ball",
    "repair_domain",
    "repair_path",
    "remove_fractures",
]

log = logging.getLogger(__name__)


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class DirectionSchedule:
    angles: tuple

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        if not angles:
            raise ValueError("direction schedule is empty")
        if any(not 0 <= a < math.pi for a in angles):
            raise ValueError("angles must lie in [0, pi)")
        object.__setattr__(self, "angles", angles)

    @classmethod
    def uniform(cls, n: int = 8) -> "DirectionSchedule":
        return cls(tuple(k * math.pi / n for k in range(n)))


def _evaluate(domain, cfg, tau, with_eigen=True):
    """One trace sample plus the torsion field (``None`` on solver failure)."""
    sample = Sample(tau=tau, measure=domain.measure, perimeter=perimeter(domain))
    field = None
    try:
        field = torsion(domain, cfg)
        sample.torsion = field.functional_value
        if with_eigen:
            sample.lam = eigen1(domain, cfg).functional_value
    except SolverError as exc:
        sample.error = str(exc)
        log.warning("tau=%g: %s", tau, exc)
    return sample, field


def detect_jumps(taus, values, jump_factor=10.0, floor=1e-3):
    """Increments larger than ``jump_factor`` times the median increment.

    ``floor`` is an absolute lower bound on the threshold relative to the
    first value.
    """
    v = np.asarray(values, dtype=float)
    inc = np.diff(v)
    if inc.size == 0:
        return []
    finite = inc[np.isfinite(inc)]
    med = float(np.median(finite)) if finite.size else 0.0
    threshold = max(jump_factor * med, floor * abs(v[0]))
    return [
        Jump(float(taus[k]), float(taus[k + 1]), float(inc[k]))
        for k in range(inc.size)
        if np.isfinite(inc[k]) and inc[k] > threshold
    ]


def css_path(
    omega0: RasterDomain,
    theta: float,
    n_samples: int = 17,
    cfg: SolverConfig = SolverConfig(),
    jump_factor: float = 10.0,
    jump_floor: float = 1e-3,
    keep_slits: bool = True,
    keep_domains: bool = False,
) -> FlowTrace:
    """Evaluate the functionals along continuous Steiner symmetrization.

    Samples sit at ``tau_k = k / (n_samples - 1)``; ``gamma_to_target`` is the
    distance of each sample to the ``tau = 1`` sample.  With ``keep_domains``
    the rasterized samples are kept in ``trace.domains``.
    """
    if n_samples < 2:
        raise ValueError("css_path needs at least two samples")
    if omega0.is_empty():
        raise ValueError("empty initial domain")
    sec = section(omega0, theta)
    taus = [k / (n_samples - 1) for k in range(n_samples)]
    samples, fields, domains = [], [], []
    for tau in taus:
        dom = rasterize(css(sec, tau), omega0, keep_slits=keep_slits, target_cells=omega0.cell_count)
        sample, field = _evaluate(dom, cfg, tau)
        samples.append(sample)
        fields.append(field)
        if keep_domains:
            domains.append(dom)
    target = fields[-1]
    for sample, field in zip(samples, fields):
        if target is not None and field is not None:
            sample.gamma_to_target = field_distance(field, target)
    trace = FlowTrace(samples)
    trace.jumps = detect_jumps(taus, trace.column("torsion"), jump_factor, jump_floor)
    trace.report = {"theta": theta, "n_samples": n_samples, **trace.monotonicity()}
    trace.domains = domains
    return trace


def round_to_ball(
    omega0: RasterDomain,
    schedule: DirectionSchedule = DirectionSchedule.uniform(8),
    stop_tol: float = 0.05,
    max_cycles: int = 12,
    cfg: SolverConfig = SolverConfig(),
    slack: float = 0.01,
):
    """Cyclic Steiner symmetrization towards the disk of equal measure.

    Returns ``(trace, final_domain)``.  The trace holds the initial domain and
    one sample per completed cycle; ``report["steps"]`` lists ``(lambda, T)``
    after every single symmetrization and ``report["sym_diff"]`` the relative
    symmetric difference to the disk per sample.
    """
    if omega0.is_empty():
        raise ValueError("empty initial domain")
    radius = math.sqrt(omega0.measure / math.pi)
    x0, y0, x1, y1 = omega0.box
    if radius > min(x1 - x0, y1 - y0) / 2:
        raise ConfigurationError(
            f"box {omega0.box} cannot hold the disk of equal measure (radius {radius:.4g}); enlarge the margin"
        )
    ball = equal_area_disk(omega0)
    ball_field = torsion(ball, cfg)
    omega = omega0.cleared()

    def record(dom, tau):
        sample, field = _evaluate(dom, cfg, tau)
        if field is not None:
            sample.gamma_to_target = field_distance(field, ball_field)
        return sample

    samples = [record(omega, 0.0)]
    sym = [symm_difference_measure(omega, ball) / omega.measure]
    steps = [(samples[0].lam, samples[0].torsion)]
    violations = []
    converged = False
    for cycle in range(1, max_cycles + 1):
        for theta in schedule.angles:
            omega = steiner_symmetrize(omega, theta)
            sample, _ = _evaluate(omega, cfg, float(len(steps)))
            lam_prev, t_prev = steps[-1]
            if sample.lam > lam_prev * (1 + slack) or sample.torsion < t_prev * (1 - slack):
                violations.append({"cycle": cycle, "theta": theta, "lambda": sample.lam, "torsion": sample.torsion})
            steps.append((sample.lam, sample.torsion))
        samples.append(record(omega, float(cycle)))
        sym.append(symm_difference_measure(omega, ball) / omega.measure)
        if sym[-1] < stop_tol:
            converged = True
            break
    n = len(samples) - 1
    for s in samples:
        s.tau = s.tau / n if n else 0.0
    trace = FlowTrace(samples)
    trace.report = {
        "cycles": n,
        "converged": converged,
        "sym_diff": sym,
        "steps": steps,
        "step_violations": violations,
        "ball_lambda": eigen1(ball, cfg).functional_value,
        "ball_torsion": ball_field.functional_value,
        **trace.monotonicity(),
    }
    if not converged:
        trace.warnings.append(f"|Omega_n Δ B|/|Omega| = {sym[-1]:.4f} >= {stop_tol} after {n} cycles")
    if violations:
        trace.warnings.append(f"{len(violations)} symmetrization steps broke monotonicity beyond slack {slack}")
    return trace, omega


# repair path ---------------------------------------------------------------


def _vertex_entry_index(domain: RasterDomain, order: int, corner) -> tuple:
    """Hilbert entry position of every grid vertex inside the bounding square.

    The bounding square ``C`` of the mask is split into ``2^order`` squares
    per side; a vertex gets the smallest curve position among the closed
    sub-squares containing it (``-1`` outside ``C``).  Also returns the
    vertex where the curve starts.
    """
    js, is_ = np.nonzero(domain.mask)
    vi0, vj0 = is_.min(), js.min()
    side = max(is_.max() + 1 - vi0, js.max() + 1 - vj0)
    n = 1 << order
    ny, nx = domain.mask.shape
    VJ, VI = np.mgrid[0 : ny + 1, 0 : nx + 1]
    fx = (VI - vi0) * n / side
    fy = (VJ - vj0) * n / side
    inside = (fx >= 0) & (fx <= n) & (fy >= 0) & (fy <= n)
    flip_x, flip_y = corner
    best = np.full(VI.shape, np.iinfo(np.int64).max, dtype=np.int64)
    for ox in (0, 1):
        for oy in (0, 1):
            qx = np.floor(fx).astype(np.int64) - ox
            qy = np.floor(fy).astype(np.int64) - oy
            # a vertex on a sub-square edge also belongs to the square below/left of it
            on_x = (ox == 0) | (fx == np.floor(fx))
            on_y = (oy == 0) | (fy == np.floor(fy))
            ok = inside & on_x & on_y & (qx >= 0) & (qx < n) & (qy >= 0) & (qy < n)
            cx = np.where(flip_x, n - 1 - qx, qx)
            cy = np.where(flip_y, n - 1 - qy, qy)
            d = xy2d(order, np.where(ok, cx, 0), np.where(ok, cy, 0))
            best = np.where(ok, np.minimum(best, d), best)
    best = np.where(best == np.iinfo(np.int64).max, -1, best)
    start = (vj0 + (side if flip_y else 0), vi0 + (side if flip_x else 0))
    return best, start


def _touches_mask(mask, vj, vi) -> bool:
    ny, nx = mask.shape
    for j in (vj - 1, vj):
        for i in (vi - 1, vi):
            if 0 <= j < ny and 0 <= i < nx and mask[j, i]:
                return True
    return False


def _prepare_repair(omega_minus, omega_plus, curve_order, start):
    omega_minus.require_same_grid(omega_plus)
    if np.any(omega_minus.mask & ~omega_plus.mask):
        raise ConfigurationError("omega_minus must be contained in omega_plus")
    if omega_plus.has_obstructions:
        raise ConfigurationError("omega_plus must be free of cracks and pins")
    if omega_minus.is_empty():
        raise ConfigurationError("omega_minus is empty")
    if curve_order < 1:
        raise ConfigurationError("curve order must be at least 1")
    corners = CORNERS if start == "auto" else (start,)
    for corner in corners:
        entry, (vj, vi) = _vertex_entry_index(omega_plus, curve_order, corner)
        if _touches_mask(omega_minus.mask, vj, vi):
            return entry
    raise ConfigurationError("the curve must start inside omega_minus (no admissible corner)")


def repair_domain(omega_minus, omega_plus, entry, order, t) -> RasterDomain:
    """``(omega_plus minus Gamma([0, 1 - t])) union omega_minus`` on the grid.

    The curve image up to ``sigma = 1 - t`` is represented by the vertices of
    the sub-squares entered before ``sigma``.  A face stays open if it is open
    in ``omega_minus`` or if no pinned vertex touches it.
    """
    sigma = 1.0 - t
    pinned = (entry >= 0) & (entry < sigma * (1 << (2 * order)))
    probe = RasterDomain(omega_plus.mask, omega_plus.h, omega_plus.origin, pins=pinned & _near(omega_plus.mask))
    sx, sy = probe.severed()
    ax, ay = omega_minus.links()
    cut_x = sx & ~ax & omega_plus.mask[:, :-1] & omega_plus.mask[:, 1:]
    cut_y = sy & ~ay & omega_plus.mask[:-1, :] & omega_plus.mask[1:, :]
    return RasterDomain(omega_plus.mask, omega_plus.h, omega_plus.origin, cut_x=cut_x, cut_y=cut_y)


def _near(mask):
    p = np.pad(mask, 1)
    return p[:-1, :-1] | p[:-1, 1:] | p[1:, :-1] | p[1:, 1:]


def repair_path(
    omega_minus: RasterDomain,
    omega_plus: RasterDomain,
    curve_order: int,
    n_samples: int = 17,
    cfg: SolverConfig = SolverConfig(),
    start="auto",
    with_eigen: bool = False,
) -> FlowTrace:
    """Monotone path from ``omega_minus`` (t=0) to ``omega_plus`` (t=1) along a Hilbert curve."""
    if n_samples < 2:
        raise ValueError("repair_path needs at least two samples")
    entry = _prepare_repair(omega_minus, omega_plus, curve_order, start)
    taus = [k / (n_samples - 1) for k in range(n_samples)]
    samples, pinned_faces = [], []
    for t in taus:
        dom = repair_domain(omega_minus, omega_plus, entry, curve_order, t)
        sample, _ = _evaluate(dom, cfg, t, with_eigen=with_eigen)
        samples.append(sample)
        pinned_faces.append(int(dom.cut_x.sum() + dom.cut_y.sum()))
    trace = FlowTrace(samples)
    T = trace.column("torsion")
    inc = np.diff(T)
    trace.report = {
        "curve_order": curve_order,
        "max_increment": float(np.max(inc)) if inc.size else 0.0,
        "severed_faces": pinned_faces,
        **trace.monotonicity(),
    }
    return trace


def remove_fractures(omega: RasterDomain) -> RasterDomain:
    """Clear cracks and pins; the mask (hence the measure) is untouched."""
    return omega.cleared()
