"""Command-line entry point: ``steinerflow <command> ...``.

Domains are given as a mask file or as ``shape:NAME[:key=value,...]`` for a
built-in shape.  Every command accepts ``--config FILE`` (JSON object whose
keys are option names with dashes replaced by underscores); explicit flags
override the file.

Exit codes: 0 success, 2 input error, 3 property violation, 4 solver failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import shapes
from .domain import DomainFormatError, GridMismatchError, RasterDomain, common_grid, format_mask, read_domain, write_domain
from .flows import ConfigurationError, DirectionSchedule, css_path, remove_fractures, repair_path, round_to_ball
from .minmov import Functional, MinMovConfig, trajectory
from .pde import SolverConfig, SolverError, eigen1, gamma_dist, perimeter, torsion
from .sections import ResolutionError, steiner_symmetrize
from .trace import domain_svg

log = logging.getLogger("steinerflow")

EXIT_OK, EXIT_INPUT, EXIT_PROPERTY, EXIT_SOLVER = 0, 2, 3, 4

# disk references of the scale-free quotients |Omega| lambda and |Omega|^-2 T
J01_SQ = 5.783185962946784
FK_DISK = math.pi * J01_SQ
SV_DISK = 1.0 / (8.0 * math.pi)


class InputError(ValueError):
    pass


class PropertyViolation(RuntimeError):
    pass


@dataclass
class RunConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    out: Path | None = None
    seed: int = 0
    samples: int = 17
    angles: tuple = ()
    jump_factor: float = 10.0
    slack: float = 0.01
    warn_only: bool = False

    def __post_init__(self):
        if self.samples < 2:
            raise InputError("need at least two samples")
        if self.jump_factor <= 1:
            raise InputError("jump factor must exceed 1")
        if not 0 <= self.slack < 1:
            raise InputError("slack must lie in [0, 1)")
        if self.angles:
            DirectionSchedule(self.angles)

    @classmethod
    def from_args(cls, ns) -> "RunConfig":
        try:
            solver = SolverConfig(cg_tol=ns.cg_tol, cg_max_iter=ns.cg_max_iter, eig_tol=ns.eig_tol, method=ns.method)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        return cls(
            solver=solver,
            out=Path(ns.out) if ns.out else None,
            seed=getattr(ns, "seed", 0),
            samples=getattr(ns, "samples", 17),
            jump_factor=getattr(ns, "jump_factor", 10.0),
            slack=ns.slack,
            warn_only=ns.warn_only,
        )


# domain arguments ------------------------------------------------------------


def _coerce(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    raise InputError(f"cannot read {text!r} as a number")


def load_domain(source: str) -> RasterDomain:
    """Read a mask file or build ``shape:NAME[:k=v,...]``."""
    if source.startswith("shape:"):
        _, _, rest = source.partition(":")
        name, _, args = rest.partition(":")
        if name not in shapes.SHAPES:
            raise InputError(f"unknown shape {name!r}; choose from {', '.join(sorted(shapes.SHAPES))}")
        kwargs = {}
        for item in filter(None, args.split(",")):
            key, eq, val = item.partition("=")
            if not eq:
                raise InputError(f"shape argument {item!r} is not key=value")
            kwargs[key.strip()] = _coerce(val.strip())
        try:
            return shapes.SHAPES[name](**kwargs)
        except TypeError as exc:
            raise InputError(f"shape {name}: {exc}") from None
    path = Path(source)
    if not path.exists():
        raise InputError(f"no such domain file: {source}")
    return read_domain(path)


def _solver_args(p):
    p.add_argument("--cg-tol", type=float, default=1e-10)
    p.add_argument("--eig-tol", type=float, default=1e-9)
    p.add_argument("--cg-max-iter", type=int, default=20000)
    p.add_argument("--method", choices=("cg", "direct"), default="cg")
    p.add_argument("--slack", type=float, default=0.01, help="relative slack for monotonicity checks")
    p.add_argument("--warn-only", action="store_true", help="report property violations without failing")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="JSON file with option defaults")


def _outdir(cfg: RunConfig) -> Path | None:
    if cfg.out is not None:
        cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def _write_trace(trace, cfg, stem):
    out = _outdir(cfg)
    if out is None:
        sys.stdout.write(trace.to_csv())
        return
    trace.to_csv(out / f"{stem}.csv")
    trace.to_json(out / f"{stem}.json")
    for k, dom in enumerate(trace.domains):
        (out / f"{stem}_{k:03d}.svg").write_text(domain_svg(dom))


def _check(ok: bool, message: str, cfg: RunConfig):
    if ok:
        return
    if cfg.warn_only:
        log.warning(message)
    else:
        raise PropertyViolation(message)


# commands --------------------------------------------------------------------


def cmd_functionals(ns, cfg: RunConfig) -> dict:
    dom = load_domain(ns.domain)
    lam = eigen1(dom, cfg.solver).functional_value
    T = torsion(dom, cfg.solver).functional_value
    m = dom.measure
    report = {
        "measure": m,
        "lambda": lam,
        "torsion": T,
        "perimeter": perimeter(dom),
        "faber_krahn": m * lam,
        "faber_krahn_disk": FK_DISK,
        "saint_venant": T / m**2,
        "saint_venant_disk": SV_DISK,
    }
    width = max(map(len, report))
    for key, val in report.items():
        print(f"{key:<{width}}  {val:.10g}")
    if cfg.out is not None:
        (_outdir(cfg) / "functionals.json").write_text(json.dumps(report, indent=2))
    return report


def cmd_css(ns, cfg: RunConfig):
    dom = load_domain(ns.domain)
    trace = css_path(
        dom, ns.theta, cfg.samples, cfg.solver, cfg.jump_factor, keep_slits=not ns.no_slits, keep_domains=ns.svg
    )
    _write_trace(trace, cfg, "css")
    for j in trace.jumps:
        log.info("jump between tau=%g and tau=%g: dT=%.6g", j.tau_before, j.tau_after, j.delta_T)
    mono = trace.monotonicity()
    _check(
        mono.get("torsion_drop", 0) <= cfg.slack and mono.get("lambda_rise", 0) <= cfg.slack,
        f"monotonicity violated along the flow: {mono}",
        cfg,
    )
    return trace


def cmd_symmetrize(ns, cfg: RunConfig):
    dom = load_domain(ns.domain)
    for theta in ns.theta:
        dom = steiner_symmetrize(dom, theta)
    if ns.output:
        write_domain(dom, ns.output)
    else:
        sys.stdout.write(format_mask(dom))
    if ns.svg:
        Path(ns.svg).write_text(domain_svg(dom))
    return dom


def cmd_roundtrip(ns, cfg: RunConfig):
    dom = load_domain(ns.domain)
    schedule = DirectionSchedule.uniform(ns.directions)
    trace, final = round_to_ball(dom, schedule, ns.stop_tol, ns.max_cycles, cfg.solver, cfg.slack)
    trace.domains = [final]
    _write_trace(trace, cfg, "roundtrip")
    _check(not trace.report["step_violations"], f"{len(trace.report['step_violations'])} monotonicity violations", cfg)
    _check(trace.report["converged"], trace.warnings[0] if trace.warnings else "did not converge", cfg)
    return trace


def cmd_repair(ns, cfg: RunConfig):
    minus = load_domain(ns.minus)
    plus = load_domain(ns.plus) if ns.plus else remove_fractures(minus)
    orders = ns.order
    rows = []
    for k in orders:
        trace = repair_path(minus, plus, k, cfg.samples, cfg.solver, start=ns.start)
        _write_trace(trace, cfg, f"repair_k{k}")
        rows.append((k, trace.report["max_increment"], trace.report.get("torsion_drop", 0.0)))
    for k, inc, drop in rows:
        print(f"order {k}: max increment {inc:.10g}, torsion drop {drop:.3g}")
    incs = [r[1] for r in rows]
    _check(
        all(b <= a * (1 + cfg.slack) for a, b in zip(incs, incs[1:])),
        f"max increments increase with the curve order: {incs}",
        cfg,
    )
    _check(all(r[2] <= cfg.slack for r in rows), "torsion decreased along a repair path", cfg)
    return rows


def _functional(ns) -> Functional:
    if ns.functional != "combination":
        return Functional(ns.functional)
    if not ns.weights:
        raise InputError("--weights is required for a combination")
    w = {}
    for item in ns.weights.split(","):
        key, eq, val = item.partition("=")
        if not eq:
            raise InputError(f"weight {item!r} is not name=value")
        w[key.strip()] = _coerce(val.strip())
    return Functional.combination(**w)


def cmd_minmov(ns, cfg: RunConfig):
    dom = load_domain(ns.domain)
    mcfg = MinMovConfig(
        epsilon=ns.epsilon, n_steps=ns.steps, search=ns.search, swap_budget=ns.swap_budget, seed=cfg.seed
    )
    solver = SolverConfig(cfg.solver.cg_tol, cfg.solver.cg_max_iter, cfg.solver.eig_tol, cfg.solver.eig_max_iter, "direct")
    trace = trajectory(dom, _functional(ns), mcfg, solver)
    masks = trace.domains
    trace.domains = masks if ns.svg else []
    _write_trace(trace, cfg, "minmov")
    trace.domains = masks
    if ns.dump_masks and cfg.out is not None:
        for k, d in enumerate(masks):
            write_domain(d, cfg.out / f"minmov_{k:03d}.txt")
    _check(trace.report["F_nonincreasing"], "F increased along the trajectory", cfg)
    return trace


def cmd_gamma_dist(ns, cfg: RunConfig) -> float:
    a, b = common_grid(load_domain(ns.a), load_domain(ns.b))
    d = gamma_dist(a, b, cfg.solver, ns.p)
    print(f"{d:.12g}")
    return d


def cmd_make_shape(ns, cfg: RunConfig):
    dom = load_domain(ns.shape if ns.shape.startswith("shape:") else f"shape:{ns.shape}")
    write_domain(dom, ns.output)
    if ns.svg:
        Path(ns.svg).write_text(domain_svg(dom))
    print(f"{ns.output}: {dom.nx} x {dom.ny} cells, {dom.cell_count} masked, h={dom.h:g}")
    return dom


# parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steinerflow", description="Continuous Steiner symmetrization experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("functionals", help="measure, lambda, T, P and scale-free quotients")
    p.add_argument("domain")
    _solver_args(p)
    p.set_defaults(func=cmd_functionals)

    p = sub.add_parser("css", help="sample a continuous Steiner symmetrization path")
    p.add_argument("domain")
    p.add_argument("--theta", type=float, default=0.0, help="direction angle in radians")
    p.add_argument("--samples", type=int, default=17)
    p.add_argument("--jump-factor", type=float, default=10.0)
    p.add_argument("--no-slits", action="store_true", help="merge touching parts instead of keeping slits")
    p.add_argument("--svg", action="store_true", help="write one SVG per sample")
    _solver_args(p)
    p.set_defaults(func=cmd_css)

    p = sub.add_parser("symmetrize", help="apply Steiner symmetrizations")
    p.add_argument("domain")
    p.add_argument("--theta", type=float, nargs="+", default=[0.0])
    p.add_argument("-o", "--output", help="domain file to write (stdout if omitted)")
    p.add_argument("--svg", help="SVG file to write")
    _solver_args(p)
    p.set_defaults(func=cmd_symmetrize)

    p = sub.add_parser("roundtrip", help="cyclic symmetrization towards the disk")
    p.add_argument("domain")
    p.add_argument("--directions", type=int, default=8)
    p.add_argument("--stop-tol", type=float, default=0.05)
    p.add_argument("--max-cycles", type=int, default=12)
    _solver_args(p)
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("repair", help="monotone repair path along a Hilbert curve")
    p.add_argument("minus")
    p.add_argument("plus", nargs="?", help="defaults to MINUS with its cracks and pins cleared")
    p.add_argument("--order", type=int, nargs="+", default=[2, 3])
    p.add_argument("--samples", type=int, default=17)
    p.add_argument("--start", default="auto")
    _solver_args(p)
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("minmov", help="minimizing-movement trajectory")
    p.add_argument("domain")
    p.add_argument("--functional", choices=("lambda", "neg_torsion", "perimeter", "combination"), default="lambda")
    p.add_argument("--weights", help="e.g. lambda=0.5,perimeter=0.5")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--search", choices=("greedy", "annealing"), default="greedy")
    p.add_argument("--swap-budget", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svg", action="store_true", help="write one SVG per step")
    p.add_argument("--dump-masks", action="store_true", help="write every step as a domain file")
    _solver_args(p)
    p.set_defaults(func=cmd_minmov)

    p = sub.add_parser("gamma-dist", help="L^p distance between torsion functions")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--p", type=float, default=2.0)
    _solver_args(p)
    p.set_defaults(func=cmd_gamma_dist)

    p = sub.add_parser("make-shape", help="write a built-in shape as a domain file")
    p.add_argument("shape", help="NAME[:key=value,...] or shape:NAME[:...]")
    p.add_argument("output")
    p.add_argument("--svg")
    _solver_args(p)
    p.set_defaults(func=cmd_make_shape)
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config`` so explicit flags win."""
    ns = parser.parse_args(argv)
    if not getattr(ns, "config", None):
        return ns
    path = Path(ns.config)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise InputError(f"no such config file: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    sub = parser._subparsers._group_actions[0].choices[ns.command]
    known = {a.dest for a in sub._actions}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InputError(f"{path}: unknown options {', '.join(unknown)}")
    sub.set_defaults(**data)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            ns = _apply_config(parser, argv)
        except SystemExit as exc:
            return EXIT_INPUT if exc.code else EXIT_OK
        logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
        cfg = RunConfig.from_args(ns)
        ns.func(ns, cfg)
    except (InputError, DomainFormatError, GridMismatchError, ConfigurationError, ResolutionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except PropertyViolation as exc:
        print(f"property violation: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
