"""Continuous Steiner symmetrization of raster domains and the shape functionals it moves."""
from .domain import DomainFormatError, GridMismatchError, RasterDomain, common_grid, read_domain, write_domain
from .flows import (
    ConfigurationError,
    DirectionSchedule,
    css_path,
    remove_fractures,
    repair_path,
    round_to_ball,
)
from .interval_flow import Interval, IntervalUnion, flow_union, merge_schedule
from .minmov import Functional, MinMovConfig, objective, step, trajectory
from .pde import SolverConfig, SolverError, eigen1, gamma_dist, perimeter, torsion
from .sections import SectionedDomain, css, rasterize, section, steiner_symmetrize
from .trace import FlowTrace

__version__ = "0.1.0"

__all__ = [
    "RasterDomain",
    "DomainFormatError",
    "GridMismatchError",
    "common_grid",
    "read_domain",
    "write_domain",
    "ConfigurationError",
    "DirectionSchedule",
    "css_path",
    "round_to_ball",
    "repair_path",
    "remove_fractures",
    "Interval",
    "IntervalUnion",
    "flow_union",
    "merge_schedule",
    "Functional",
    "MinMovConfig",
    "objective",
    "step",
    "trajectory",
    "SolverConfig",
    "SolverError",
    "torsion",
    "eigen1",
    "gamma_dist",
    "perimeter",
    "SectionedDomain",
    "section",
    "css",
    "rasterize",
    "steiner_symmetrize",
    "FlowTrace",
]
