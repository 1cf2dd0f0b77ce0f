"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""
import math
import time

import numpy as np

from oracles import J01, brute_flow, disk_eigenvalue, disk_torsion, rectangle_eigenvalue
from steinerflow import shapes
from steinerflow.flows import DirectionSchedule, css_path, remove_fractures, repair_path, round_to_ball
from steinerflow.interval_flow import IntervalUnion, flow_union
from steinerflow.minmov import Functional, MinMovConfig, trajectory
from steinerflow.pde import SolverConfig, eigen1, torsion
from steinerflow.sections import css, rasterize, section, steiner_symmetrize

FK_DISK = math.pi * J01**2
SV_DISK = 1 / (8 * math.pi)
DIRECT = SolverConfig(method="direct")


def random_union(rng, max_parts=6, span=10.0):
    n = int(rng.integers(1, max_parts + 1))
    while True:
        cuts = np.sort(rng.uniform(-span, span, 2 * n))
        if np.min(np.diff(cuts)) > 1e-3:
            return IntervalUnion.from_pairs(cuts.reshape(n, 2).tolist())


def nested_pair(rng):
    """``A`` inside ``B``: every part of ``A`` is a random sub-interval of a part of ``B``."""
    B = random_union(rng)
    pairs = []
    for p in B.parts:
        if rng.random() < 0.7:
            lo, hi = np.sort(rng.uniform(p.a, p.b, 2))
            if hi - lo > 1e-6:
                pairs.append((lo, hi))
    if not pairs:
        p = B.parts[0]
        pairs = [(p.a, p.b)]
    return IntervalUnion.from_pairs(pairs), B


def test_criterion_01_exact_interval_flow(criterion):
    rng = np.random.default_rng(20240101)
    cases = [(random_union(rng), float(rng.uniform(0, 1.5)), float(rng.uniform(0, 1.0))) for _ in range(1000)]
    start = time.perf_counter()
    flowed = [(flow_union(U, t1), flow_union(flow_union(U, t1), t2), flow_union(U, t1 + t2)) for U, t1, t2 in cases]
    elapsed = time.perf_counter() - start
    len_err = semi_err = brute_err = 0.0
    for (U, t1, t2), (F1, F12, F) in zip(cases, flowed):
        len_err = max(len_err, abs(F1.length - U.length), abs(F.length - U.length))
        semi_err = max(semi_err, F12.max_endpoint_distance(F))
        ref = brute_flow(U.as_pairs(), t1)
        got = F1.as_pairs()
        assert len(ref) == len(got)
        brute_err = max(brute_err, float(np.max(np.abs(np.array(ref) - np.array(got)))))
    ok = len_err <= 1e-12 and semi_err <= 1e-12 and brute_err <= 1e-4 and elapsed < 10
    criterion(
        ok,
        f"length err {len_err:.1e}, semigroup err {semi_err:.1e}, brute-force err {brute_err:.1e}, "
        f"{elapsed:.2f} s for 1000 unions",
    )
    assert ok


def test_criterion_02_interval_monotonicity(criterion):
    rng = np.random.default_rng(2)
    violations = 0
    for _ in range(1000):
        A, B = nested_pair(rng)
        assert A.issubset(B)
        t = float(rng.exponential(1.0))
        if not flow_union(A, t).issubset(flow_union(B, t), tol=1e-12):
            violations += 1
    criterion(violations == 0, f"{violations} violations in 1000 nested pairs")
    assert violations == 0


def test_criterion_03_pde_oracles(criterion):
    h = 1 / 128
    cases = [
        ("square lambda", lambda c: eigen1(shapes.rectangle(1, 1, h), c), 2 * math.pi**2),
        ("disk lambda", lambda c: eigen1(shapes.disk(1, h), c), disk_eigenvalue(1.0)),
        ("disk torsion", lambda c: torsion(shapes.disk(1, h), c), disk_torsion(1.0)),
        ("2x1 lambda", lambda c: eigen1(shapes.rectangle(2, 1, h), c), rectangle_eigenvalue(2, 1)),
    ]
    lines, ok = [], True
    for name, run, ref in cases:
        start = time.perf_counter()
        value = run(SolverConfig()).functional_value
        elapsed = time.perf_counter() - start
        rel = abs(value - ref) / ref
        ok &= rel < 0.01 and elapsed < 30
        lines.append(f"{name} {rel:.1e} ({elapsed:.1f} s)")
    criterion(ok, "relative errors: " + ", ".join(lines))
    assert ok


def test_criterion_04_faber_krahn_saint_venant(criterion):
    rng = np.random.default_rng(4)
    fk_min, sv_max = math.inf, 0.0
    for _ in range(20):
        d = shapes.random_polygon(rng, h=1 / 128)
        lam = eigen1(d, DIRECT).functional_value
        T = torsion(d, DIRECT).functional_value
        fk_min = min(fk_min, d.measure * lam / FK_DISK)
        sv_max = max(sv_max, T / d.measure**2 / SV_DISK)
    ok = fk_min >= 0.98 and sv_max <= 1.02
    criterion(ok, f"min |O|lambda / disk = {fk_min:.4f}, max |O|^-2 T / disk = {sv_max:.4f} on 20 polygons")
    assert ok


def _steiner_shapes(h):
    box = (-1.5, -1.5, 1.5, 1.5)
    rng = np.random.default_rng(5)
    return {
        "rectangle": shapes.rectangle(2, 1, h, box=box, corner=(-1, -0.5)),
        "square": shapes.rectangle(1, 1, h, box=box, corner=(-0.75, -0.25)),
        "disk": shapes.disk(0.8, h, box=box, center=(0.2, -0.1)),
        "ellipse": shapes.ellipse(1.2, 0.5, h, box=box, angle=0.6),
        "stadium": shapes.stadium(1.2, 0.4, h, box=box),
        "lshape": shapes.l_shape(1.6, h, box=(-1.0, -1.0, 2.0, 2.0)),
        "triangle": shapes.polygon([(-1, -0.8), (1.1, -0.6), (-0.3, 1.0)], h, box=box),
        "polygon1": shapes.random_polygon(rng, h=h, box=box),
        "polygon2": shapes.random_polygon(rng, h=h, box=box),
        "notched": shapes.notched(1.5, 2.0, 0.5, 1.0, h, box=(-0.75, -0.5, 2.25, 2.5)),
    }


def test_criterion_05_steiner_step_monotonicity(criterion):
    h = 1 / 32
    slack = 0.01
    worst_lam, worst_T, bad = 0.0, 0.0, []
    for name, d in _steiner_shapes(h).items():
        lam0 = eigen1(d, DIRECT).functional_value
        T0 = torsion(d, DIRECT).functional_value
        for theta in (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4):
            s = steiner_symmetrize(d, theta)
            assert s.cell_count == d.cell_count
            rise = (eigen1(s, DIRECT).functional_value - lam0) / lam0
            drop = (T0 - torsion(s, DIRECT).functional_value) / T0
            worst_lam, worst_T = max(worst_lam, rise), max(worst_T, drop)
            if rise > slack or drop > slack:
                bad.append((name, theta))
    ok = not bad
    criterion(ok, f"worst relative lambda rise {worst_lam:.2e}, worst T drop {worst_T:.2e}, failures {bad}")
    assert ok


def test_criterion_06_round_to_ball(criterion):
    d = shapes.rectangle(2, 1, 1 / 32, box=(-0.25, -0.75, 2.25, 1.75))
    trace, _ = round_to_ball(d, DirectionSchedule.uniform(8), 0.05, 12, DIRECT, slack=0.01)
    rep = trace.report
    mono = trace.monotonicity()
    ok = (
        rep["converged"]
        and rep["sym_diff"][-1] < 0.05
        and rep["cycles"] <= 12
        and not rep["step_violations"]
        and mono["torsion_drop"] <= 0.01
        and mono["lambda_rise"] <= 0.01
    )
    criterion(
        ok,
        f"|O_n sym B|/|O| = {rep['sym_diff'][-1]:.4f} after {rep['cycles']} cycles, "
        f"per-cycle lambda rise {mono['lambda_rise']:.1e}, T drop {mono['torsion_drop']:.1e}",
    )
    assert ok


def test_criterion_07_notch_jump_and_fracture_removal(criterion):
    d = shapes.notched(h=1 / 32)
    cfg = SolverConfig()
    trace = css_path(d, math.pi / 2, 17, cfg)
    jumps = trace.jumps
    sec = section(d, math.pi / 2)
    slit = rasterize(css(sec, 0.49), d, keep_slits=True)
    assert slit.has_obstructions
    before_T, after_T = torsion(slit, cfg), torsion(remove_fractures(slit), cfg)
    before_l, after_l = eigen1(slit, cfg), eigen1(remove_fractures(slit), cfg)
    dT = (after_T.functional_value - before_T.functional_value) / before_T.functional_value
    dl = (before_l.functional_value - after_l.functional_value) / before_l.functional_value
    # closure of the parallel notch happens at tau = 2w / (W + w) = 0.5
    one_jump = len(jumps) == 1 and jumps[0].tau_before < 0.5 <= jumps[0].tau_after
    ok = one_jump and dT > 3 * cfg.cg_tol and dl > 3 * cfg.eig_tol
    where = [(j.tau_before, j.tau_after) for j in jumps]
    criterion(ok, f"jumps at {where}; fracture removal: T +{dT:.3f} (relative), lambda -{dl:.3f} (relative)")
    assert ok


def test_criterion_08_nested_identity(criterion):
    rng = np.random.default_rng(8)
    cfg = SolverConfig()
    worst = 0.0
    for _ in range(20):
        B = shapes.random_polygon(rng, h=1 / 64, box=(-1.0, -1.0, 1.0, 1.0))
        keep = B.mask & (rng.random(B.mask.shape) < rng.uniform(0.6, 0.98))
        if not keep.any():
            keep = B.mask
        A = B.with_mask(keep)
        uA, uB = torsion(A, cfg), torsion(B, cfg)
        l1 = B.h**2 * np.abs(uB.values - uA.values).sum()
        gap = uB.functional_value - uA.functional_value
        worst = max(worst, abs(l1 - gap) / uB.functional_value)
    ok = worst <= 10 * cfg.cg_tol
    criterion(ok, f"max |L1 - (T(B) - T(A))| / T(B) = {worst:.1e} (bound {10 * cfg.cg_tol:.0e})")
    assert ok


def test_criterion_09_repair_path_refinement(criterion):
    d = shapes.notched(h=1 / 32)
    minus = rasterize(css(section(d, math.pi / 2), 0.49), d, keep_slits=True)
    plus = remove_fractures(minus)
    cfg = SolverConfig()
    T_minus, T_plus = torsion(minus, cfg).functional_value, torsion(plus, cfg).functional_value
    incs, end_err = [], 0.0
    for k in range(1, 6):
        tr = repair_path(minus, plus, k, 17, cfg)
        T = tr.column("torsion")
        end_err = max(end_err, abs(T[0] - T_minus) / T_minus, abs(T[-1] - T_plus) / T_plus)
        incs.append(tr.report["max_increment"])
    non_increasing = all(b <= a * (1 + 1e-9) for a, b in zip(incs, incs[1:]))
    ok = non_increasing and end_err <= 10 * cfg.cg_tol
    criterion(ok, f"max increments for k=1..5: {[round(v, 4) for v in incs]}; endpoint err {end_err:.1e}")
    assert ok


def test_criterion_10_minimizing_movement(criterion):
    seeds = {
        "rectangle": shapes.rectangle(2, 1, 1 / 8, margin=3),
        "lshape": shapes.l_shape(1.0, 1 / 8, margin=3),
        "ellipse": shapes.ellipse(1.0, 0.4, 1 / 8, margin=3, angle=0.5),
    }
    eps = {"lambda": 0.05, "neg_torsion": 2.0, "perimeter": 0.05}
    failures = []
    moved = 0
    for name, omega in seeds.items():
        for kind, e in eps.items():
            cfg = MinMovConfig(epsilon=e, n_steps=30, search="annealing", swap_budget=24, seed=11)
            tr = trajectory(omega, Functional(kind), cfg)
            F = tr.report["F"]
            if any(b > a for a, b in zip(F, F[1:])):
                failures.append((name, kind, "F increased"))
            if set(tr.report["cells"]) != {omega.cell_count}:
                failures.append((name, kind, "volume changed"))
            again = trajectory(omega, Functional(kind), cfg)
            same = again.to_csv() == tr.to_csv() and all(
                np.array_equal(a.mask, b.mask) for a, b in zip(again.domains, tr.domains)
            )
            if not same:
                failures.append((name, kind, "not reproducible"))
            moved += F[-1] < F[0]
    ok = not failures
    criterion(ok, f"9 runs of 30 steps, {moved} with strict decrease, failures {failures}")
    assert ok
