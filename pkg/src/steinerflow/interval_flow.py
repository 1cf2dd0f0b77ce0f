"""Continuous Steiner symmetrization on the real line.

A single open interval ``]a, b[`` keeps its length while its center is
contracted towards the origin by the factor ``s = exp(-t)``.  A finite union
of disjoint intervals evolves part by part until two neighbours touch; the
touching pair is then replaced by its union and the evolution continues from
that state.  At ``t = inf`` every union has become the centered interval of
the same total length.

All computations are carried out in the contraction variable ``s``, where a
collision is a linear condition.  Endpoints may be floats or
:class:`fractions.Fraction`; with rational endpoints and a rational ``s`` the
result is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Iterable, Sequence

__all__ = [
    "Interval",
    "IntervalUnion",
    "FlowEvent",
    "contraction",
    "flow_interval",
    "flow_interval_at",
    "collision_time",
    "collision_factor",
    "flow_union",
    "flow_union_at",
    "merge_schedule",
    "reparametrize",
]

# relative tolerance used to group simultaneous float collisions
_SIMULTANEOUS_RTOL = 1e-12


@dataclass(frozen=True)
class Interval:
    """Open interval ``]a, b[`` with ``a < b``."""

    a: Real
    b: Real

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"interval endpoints must be finite, got ({self.a}, {self.b})")
        if not self.a < self.b:
            raise ValueError(f"empty or degenerate interval ]{self.a}, {self.b}[")

    @property
    def length(self):
        return self.b - self.a

    @property
    def center(self):
        return (self.a + self.b) / 2

    def contains(self, other: "Interval", tol: float = 0.0) -> bool:
        return self.a <= other.a + tol and other.b <= self.b + tol

    def __iter__(self):
        yield self.a
        yield self.b


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of pairwise disjoint open intervals, sorted left to right.

    Neighbouring parts must be separated by a gap of positive length; two
    intervals sharing an endpoint are one interval (up to a point) and have
    to be merged before construction, see :meth:`normalized`.
    """

    parts: tuple = ()

    def __post_init__(self):
        parts = tuple(p if isinstance(p, Interval) else Interval(*p) for p in self.parts)
        for left, right in zip(parts, parts[1:]):
            if not left.b < right.a:
                raise ValueError(
                    f"parts must be sorted with positive gaps: ]{left.a}, {left.b}[ "
                    f"followed by ]{right.a}, {right.b}["
                )
        object.__setattr__(self, "parts", parts)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[Real]]) -> "IntervalUnion":
        return cls(tuple(Interval(a, b) for a, b in pairs))

    @classmethod
    def normalized(cls, pairs: Iterable[Sequence[Real]], tol: float = 0.0) -> "IntervalUnion":
        """Build a union from arbitrary (possibly overlapping) pairs.

        Pairs with ``b - a <= tol`` are dropped, overlapping pairs and pairs
        separated by a gap ``<= tol`` are merged.
        """
        items = sorted((a, b) for a, b in pairs if b - a > tol)
        merged: list[list] = []
        for a, b in items:
            if merged and a - merged[-1][1] <= tol:
                if b > merged[-1][1]:
                    merged[-1][1] = b
            else:
                merged.append([a, b])
        return cls(tuple(Interval(a, b) for a, b in merged))

    @property
    def length(self):
        return sum((p.length for p in self.parts), 0)

    def __len__(self):
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __bool__(self):
        return bool(self.parts)

    def as_pairs(self) -> list[list]:
        return [[p.a, p.b] for p in self.parts]

    def contains_point(self, x) -> bool:
        return any(p.a < x < p.b for p in self.parts)

    def issubset(self, other: "IntervalUnion", tol: float = 0.0) -> bool:
        """Point-set inclusion, each part must lie inside a single part of ``other``."""
        j = 0
        outer = other.parts
        for p in self.parts:
            while j < len(outer) and outer[j].b + tol < p.b:
                j += 1
            if j == len(outer) or not outer[j].contains(p, tol):
                return False
        return True

    def max_endpoint_distance(self, other: "IntervalUnion") -> float:
        """Largest endpoint discrepancy, ``inf`` when the part counts differ."""
        if len(self) != len(other):
            return math.inf
        return max(
            (max(abs(p.a - q.a), abs(p.b - q.b)) for p, q in zip(self.parts, other.parts)),
            default=0.0,
        )


@dataclass(frozen=True)
class FlowEvent:
    """Two adjacent parts touching at time ``t_star`` and merging."""

    t_star: float
    left_index: int
    right_index: int

    def __post_init__(self):
        if not self.t_star > 0:
            raise ValueError("collision times are positive")
        if self.right_index != self.left_index + 1:
            raise ValueError("merging parts must be adjacent")


def _check_time(t) -> None:
    if isinstance(t, float) and math.isnan(t):
        raise ValueError("time is NaN")
    if t < 0:
        raise ValueError(f"flow time must be nonnegative, got {t}")


def contraction(t):
    """Center contraction factor ``exp(-t)``; 0 at ``t = inf``."""
    _check_time(t)
    if t == math.inf:
        return 0.0
    return math.exp(-t)


def _check_factor(s) -> None:
    if isinstance(s, float) and math.isnan(s):
        raise ValueError("contraction factor is NaN")
    if not 0 <= s <= 1:
        raise ValueError(f"contraction factor must lie in [0, 1], got {s}")


def flow_interval_at(interval: Interval, s) -> Interval:
    """Flow a single interval to contraction factor ``s``."""
    _check_factor(s)
    a, b = interval.a, interval.b
    return Interval((a - b + s * (a + b)) / 2, (b - a + s * (a + b)) / 2)


def flow_interval(interval: Interval, t) -> Interval:
    """Flow a single interval for time ``t`` (``math.inf`` allowed)."""
    return flow_interval_at(interval, contraction(t))


def collision_factor(left: Interval, right: Interval):
    """Contraction factor at which ``left`` and ``right`` touch.

    Returns ``None`` if the pair never touches for ``s`` in ``]0, 1[``,
    which cannot happen for strictly separated inputs.
    """
    if not left.b < right.a:
        raise ValueError("collision needs two strictly separated intervals, left one first")
    s_star = (left.length + right.length) / (2 * (right.center - left.center))
    if s_star >= 1:
        return None
    return s_star


def collision_time(left: Interval, right: Interval):
    """Time at which two separated intervals touch under the flow."""
    s_star = collision_factor(left, right)
    if s_star is None:
        return None
    return -math.log(s_star)


def _evolve(union: IntervalUnion, s, events: list | None = None):
    """Return ``(k, L)`` lists at factor ``s``; part ``i`` is ``]k s - L/2, k s + L/2[``."""
    ks = [p.center for p in union.parts]
    ls = [p.length for p in union.parts]
    exact = isinstance(s, Fraction) and all(
        isinstance(v, (int, Fraction)) for p in union.parts for v in (p.a, p.b)
    )
    while len(ks) > 1:
        factors = [(ls[i] + ls[i + 1]) / (2 * (ks[i + 1] - ks[i])) for i in range(len(ks) - 1)]
        s_star = max(factors)
        if s_star < s or s_star <= 0:
            break
        if exact:
            touching = [f == s_star for f in factors]
        else:
            touching = [f >= s_star * (1 - _SIMULTANEOUS_RTOL) for f in factors]
        new_k, new_l = [], []
        i = 0
        while i < len(ks):
            j = i
            while j < len(factors) and touching[j]:
                if events is not None:
                    events.append(FlowEvent(-math.log(s_star), j, j + 1))
                j += 1
            if j == i:
                new_k.append(ks[i])
                new_l.append(ls[i])
            else:
                lo = ks[i] * s_star - ls[i] / 2
                hi = ks[j] * s_star + ls[j] / 2
                length = sum(ls[i : j + 1])
                new_k.append((lo + hi) / 2 / s_star)
                new_l.append(length)
            i = j + 1
        ks, ls = new_k, new_l
    return ks, ls


def flow_union_at(union: IntervalUnion, s) -> IntervalUnion:
    """Flow a union of intervals to contraction factor ``s`` in ``[0, 1]``."""
    _check_factor(s)
    if not union.parts:
        return union
    ks, ls = _evolve(union, s)
    pairs = [[k * s - l / 2, k * s + l / 2] for k, l in zip(ks, ls)]
    # float rounding can leave a pair touching right at a collision instant
    merged = [pairs[0]]
    for a, b in pairs[1:]:
        if a <= merged[-1][1]:
            merged[-1][1] = merged[-1][0] + (merged[-1][1] - merged[-1][0]) + (b - a)
        else:
            merged.append([a, b])
    return IntervalUnion.from_pairs(merged)


def flow_union(union: IntervalUnion, t) -> IntervalUnion:
    """Continuous Steiner symmetrization of ``union`` at time ``t``."""
    return flow_union_at(union, contraction(t))


def merge_schedule(union: IntervalUnion) -> list[FlowEvent]:
    """All merge events of the flow from ``t = 0`` to ``t = inf``."""
    events: list[FlowEvent] = []
    if union.parts:
        _evolve(union, 0, events)
    return events


def reparametrize(tau):
    """Map the path parameter ``tau`` in ``[0, 1]`` to flow time ``-ln(1 - tau)``."""
    if isinstance(tau, float) and math.isnan(tau):
        raise ValueError("tau is NaN")
    if not 0 <= tau <= 1:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    if tau == 1:
        return math.inf
    return -math.log1p(-tau)
